// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

namespace enhgan {

// Mono waveform plus its sample rate; the signal currency of the whole
// toolkit. Samples are dimensionless amplitudes, nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  int64_t length() const { return static_cast<int64_t>(samples.size()); }
  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(length()) / sample_rate_hz : 0.0;
  }
};

// Throws std::invalid_argument if the buffer is empty, has a non-positive
// rate, or contains non-finite samples.
void validate_audio(const AudioBuffer& audio, const char* what);

double rms(const AudioBuffer& audio);
double rms(const std::vector<double>& x);

// Windowed-sinc rational resampler (Hann-windowed, 32 zero crossings).
// Used for file loading, the 10 kHz metric front end, and speed perturbation;
// also serves as the reference against which the pooled half-rate views are
// checked.
AudioBuffer resample(const AudioBuffer& audio, int new_rate_hz);

enum class WavFormat { kPcm16, kFloat32 };

// RIFF/WAVE I/O, mono only. Readers accept 16-bit PCM and 32-bit float.
AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioBuffer& audio,
               WavFormat format = WavFormat::kFloat32);

// Read and resample to the working rate when needed.
AudioBuffer load_audio(const std::string& path, int working_rate_hz);

}  // namespace enhgan
