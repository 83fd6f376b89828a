// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <vector>

#include "enhgan/audio.h"
#include "enhgan/tensor.h"

namespace enhgan {

struct SpectrogramConfig {
  int fft_size = 2048;
  int hop_size = 512;
  // Only Hann is implemented; kept as an identifier for config echo.
  std::string window = "hann";
  bool center_padding = true;
};

void validate_spectrogram_config(const SpectrogramConfig& cfg);

struct MelConfig {
  int n_mels = 80;
  double f_min_hz = 20.0;
  double f_max_hz = 8000.0;
  SpectrogramConfig spec;
  int sample_rate_hz = 16000;
};

// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

// Reflected index into [0, len): bounces repeatedly, so pad widths larger
// than the signal are allowed. len == 1 maps everything to 0.
int64_t reflect_index(int64_t i, int64_t len);

int64_t stft_frame_count(int64_t length, const SpectrogramConfig& cfg);

// Complex STFT, shape (frames x fft_size/2+1). With center padding the signal
// is reflect-padded by fft_size/2 on both sides and frame count is
// floor(len / hop) + 1.
std::vector<std::vector<std::complex<double>>> stft(const AudioBuffer& audio,
                                                    const SpectrogramConfig& cfg);

// log(|STFT| + floor_eps), shape (frames, bins).
Tensor log_spectrogram(const AudioBuffer& audio, const SpectrogramConfig& cfg, double floor_eps);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular mel filterbank, shape (n_mels, fft/2+1).
Tensor mel_filterbank(const MelConfig& cfg);
std::vector<double> mel_center_frequencies(const MelConfig& cfg);

// log(mel |STFT| + floor_eps), shape (n_mels, frames).
Tensor mel_spectrogram(const AudioBuffer& audio, const MelConfig& cfg, double floor_eps);

// Half-rate view by strided average pooling (kernel 4, stride 2, reflection
// padding 1). Matches the pooling the discriminators differentiate through.
AudioBuffer downsample_by_2(const AudioBuffer& audio);
std::vector<double> downsample_by_2(const std::vector<double>& x);

// Zero-padded linear convolution truncated to the input length.
AudioBuffer fir_filter(const AudioBuffer& audio, const std::vector<double>& taps);

// Full linear convolution, length len(a) + len(b) - 1.
std::vector<double> convolve_full(const std::vector<double>& a, const std::vector<double>& b);
AudioBuffer convolve_full(const AudioBuffer& a, const AudioBuffer& b);

}  // namespace enhgan
