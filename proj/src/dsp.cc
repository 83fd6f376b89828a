// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/dsp.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "enhgan/fft.h"

namespace enhgan {

void validate_spectrogram_config(const SpectrogramConfig& cfg) {
  if (cfg.fft_size <= 0 || !is_power_of_two(cfg.fft_size))
    throw std::invalid_argument("SpectrogramConfig: fft_size must be a positive power of two");
  if (cfg.hop_size <= 0 || cfg.hop_size > cfg.fft_size)
    throw std::invalid_argument("SpectrogramConfig: need 0 < hop_size <= fft_size");
  if (cfg.window != "hann")
    throw std::invalid_argument("SpectrogramConfig: unsupported window " + cfg.window);
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
  return w;
}

int64_t reflect_index(int64_t i, int64_t len) {
  if (len == 1) return 0;
  const int64_t period = 2 * (len - 1);
  int64_t m = i % period;
  if (m < 0) m += period;
  return m < len ? m : period - m;
}

int64_t stft_frame_count(int64_t length, const SpectrogramConfig& cfg) {
  if (cfg.center_padding) return length / cfg.hop_size + 1;
  if (length < cfg.fft_size) return 0;
  return (length - cfg.fft_size) / cfg.hop_size + 1;
}

std::vector<std::vector<std::complex<double>>> stft(const AudioBuffer& audio,
                                                    const SpectrogramConfig& cfg) {
  validate_audio(audio, "stft");
  validate_spectrogram_config(cfg);
  const int64_t len = audio.length();
  const int64_t frames = stft_frame_count(len, cfg);
  const int n = cfg.fft_size;
  const int64_t pad = cfg.center_padding ? n / 2 : 0;
  const std::vector<double> win = hann_window(n);

  std::vector<std::vector<std::complex<double>>> out(static_cast<size_t>(frames));
  std::vector<double> frame(static_cast<size_t>(n));
  for (int64_t t = 0; t < frames; ++t) {
    const int64_t start = t * cfg.hop_size - pad;
    for (int j = 0; j < n; ++j) {
      const int64_t idx = start + j;
      double v;
      if (idx >= 0 && idx < len) {
        v = audio.samples[static_cast<size_t>(idx)];
      } else if (cfg.center_padding) {
        v = audio.samples[static_cast<size_t>(reflect_index(idx, len))];
      } else {
        v = 0.0;
      }
      frame[static_cast<size_t>(j)] = v * win[static_cast<size_t>(j)];
    }
    out[static_cast<size_t>(t)] = rfft(frame);
  }
  return out;
}

Tensor log_spectrogram(const AudioBuffer& audio, const SpectrogramConfig& cfg, double floor_eps) {
  if (floor_eps <= 0.0) throw std::invalid_argument("log_spectrogram: floor_eps must be > 0");
  const auto spec = stft(audio, cfg);
  const int64_t frames = static_cast<int64_t>(spec.size());
  const int64_t bins = cfg.fft_size / 2 + 1;
  Tensor out({frames, bins});
  for (int64_t t = 0; t < frames; ++t)
    for (int64_t k = 0; k < bins; ++k)
      out[t * bins + k] =
          std::log(std::abs(spec[static_cast<size_t>(t)][static_cast<size_t>(k)]) + floor_eps);
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  const double mel_lo = hz_to_mel(cfg.f_min_hz);
  const double mel_hi = hz_to_mel(cfg.f_max_hz);
  std::vector<double> centers(static_cast<size_t>(cfg.n_mels));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double mel = mel_lo + (mel_hi - mel_lo) * (m + 1) / (cfg.n_mels + 1);
    centers[static_cast<size_t>(m)] = mel_to_hz(mel);
  }
  return centers;
}

Tensor mel_filterbank(const MelConfig& cfg) {
  if (cfg.n_mels <= 0) throw std::invalid_argument("mel_filterbank: n_mels must be positive");
  if (cfg.f_min_hz < 0.0 || cfg.f_min_hz >= cfg.f_max_hz)
    throw std::invalid_argument("mel_filterbank: need 0 <= f_min < f_max");
  if (cfg.f_max_hz > cfg.sample_rate_hz / 2.0 + 1e-9)
    throw std::invalid_argument("mel_filterbank: f_max above Nyquist");

  const int64_t bins = cfg.spec.fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.f_min_hz);
  const double mel_hi = hz_to_mel(cfg.f_max_hz);
  std::vector<double> edges(static_cast<size_t>(cfg.n_mels + 2));
  for (int m = 0; m < cfg.n_mels + 2; ++m)
    edges[static_cast<size_t>(m)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (cfg.n_mels + 1));

  Tensor fb({cfg.n_mels, bins});
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[static_cast<size_t>(m)];
    const double mid = edges[static_cast<size_t>(m + 1)];
    const double hi = edges[static_cast<size_t>(m + 2)];
    bool any_positive = false;
    for (int64_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate_hz / cfg.spec.fft_size;
      double w = 0.0;
      if (f > lo && f < hi) w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      fb[m * bins + k] = w;
      any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) {
      // Narrow filter that straddles no bin center: assign the nearest bin so
      // every filter row stays non-degenerate.
      const int64_t k = std::clamp<int64_t>(
          static_cast<int64_t>(std::llround(mid * cfg.spec.fft_size / cfg.sample_rate_hz)), 0,
          bins - 1);
      fb[m * bins + k] = 1.0;
    }
  }
  return fb;
}

Tensor mel_spectrogram(const AudioBuffer& audio, const MelConfig& cfg, double floor_eps) {
  if (floor_eps <= 0.0) throw std::invalid_argument("mel_spectrogram: floor_eps must be > 0");
  const Tensor fb = mel_filterbank(cfg);
  const auto spec = stft(audio, cfg.spec);
  const int64_t frames = static_cast<int64_t>(spec.size());
  const int64_t bins = cfg.spec.fft_size / 2 + 1;
  Tensor out({cfg.n_mels, frames});
  for (int64_t t = 0; t < frames; ++t) {
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      for (int64_t k = 0; k < bins; ++k)
        acc += fb[m * bins + k] *
               std::abs(spec[static_cast<size_t>(t)][static_cast<size_t>(k)]);
      out[m * frames + t] = std::log(acc + floor_eps);
    }
  }
  return out;
}

std::vector<double> downsample_by_2(const std::vector<double>& x) {
  const int64_t len = static_cast<int64_t>(x.size());
  if (len < 4) throw std::invalid_argument("downsample_by_2: need at least 4 samples");
  const int64_t out_len = len / 2;
  std::vector<double> out(static_cast<size_t>(out_len));
  for (int64_t n = 0; n < out_len; ++n) {
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      const int64_t idx = 2 * n - 1 + k;  // reflection pad 1 on each side
      acc += x[static_cast<size_t>(reflect_index(idx, len))];
    }
    out[static_cast<size_t>(n)] = 0.25 * acc;
  }
  return out;
}

AudioBuffer downsample_by_2(const AudioBuffer& audio) {
  validate_audio(audio, "downsample_by_2");
  AudioBuffer out;
  out.samples = downsample_by_2(audio.samples);
  out.sample_rate_hz = audio.sample_rate_hz / 2;
  return out;
}

AudioBuffer fir_filter(const AudioBuffer& audio, const std::vector<double>& taps) {
  validate_audio(audio, "fir_filter");
  if (taps.empty()) throw std::invalid_argument("fir_filter: empty taps");
  for (double t : taps)
    if (!std::isfinite(t)) throw std::invalid_argument("fir_filter: non-finite tap");
  const int64_t len = audio.length();
  const int64_t k = static_cast<int64_t>(taps.size());
  AudioBuffer out;
  out.sample_rate_hz = audio.sample_rate_hz;
  out.samples.assign(static_cast<size_t>(len), 0.0);
  for (int64_t n = 0; n < len; ++n) {
    double acc = 0.0;
    const int64_t j_hi = std::min<int64_t>(k - 1, n);
    for (int64_t j = 0; j <= j_hi; ++j)
      acc += taps[static_cast<size_t>(j)] * audio.samples[static_cast<size_t>(n - j)];
    out.samples[static_cast<size_t>(n)] = acc;
  }
  return out;
}

std::vector<double> convolve_full(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("convolve_full: empty input");
  const int64_t na = static_cast<int64_t>(a.size());
  const int64_t nb = static_cast<int64_t>(b.size());
  std::vector<double> out(static_cast<size_t>(na + nb - 1), 0.0);
  // FFT convolution for long signals, direct form otherwise.
  if (na * nb > 1 << 18) {
    int64_t n = 1;
    while (n < na + nb - 1) n <<= 1;
    std::vector<std::complex<double>> fa(static_cast<size_t>(n)), fb(static_cast<size_t>(n));
    for (int64_t i = 0; i < na; ++i) fa[static_cast<size_t>(i)] = a[static_cast<size_t>(i)];
    for (int64_t i = 0; i < nb; ++i) fb[static_cast<size_t>(i)] = b[static_cast<size_t>(i)];
    fft_inplace(fa, false);
    fft_inplace(fb, false);
    for (int64_t i = 0; i < n; ++i) fa[static_cast<size_t>(i)] *= fb[static_cast<size_t>(i)];
    fft_inplace(fa, true);
    for (int64_t i = 0; i < na + nb - 1; ++i)
      out[static_cast<size_t>(i)] = fa[static_cast<size_t>(i)].real();
  } else {
    for (int64_t i = 0; i < na; ++i)
      for (int64_t j = 0; j < nb; ++j)
        out[static_cast<size_t>(i + j)] += a[static_cast<size_t>(i)] * b[static_cast<size_t>(j)];
  }
  return out;
}

AudioBuffer convolve_full(const AudioBuffer& a, const AudioBuffer& b) {
  validate_audio(a, "convolve_full");
  validate_audio(b, "convolve_full");
  if (a.sample_rate_hz != b.sample_rate_hz)
    throw std::invalid_argument("convolve_full: sample rate mismatch");
  AudioBuffer out;
  out.sample_rate_hz = a.sample_rate_hz;
  out.samples = convolve_full(a.samples, b.samples);
  return out;
}

}  // namespace enhgan
