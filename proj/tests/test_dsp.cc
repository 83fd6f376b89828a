// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "enhgan/dsp.h"
#include "enhgan/rng.h"

using namespace enhgan;

namespace {

AudioBuffer sine(double freq_hz, int rate, int64_t len, double amp = 0.5) {
  AudioBuffer a;
  a.sample_rate_hz = rate;
  a.samples.resize(static_cast<size_t>(len));
  for (int64_t i = 0; i < len; ++i)
    a.samples[static_cast<size_t>(i)] = amp * std::sin(2.0 * M_PI * freq_hz * i / rate);
  return a;
}

AudioBuffer noise(int64_t len, int rate, uint64_t seed, double amp = 0.5) {
  AudioBuffer a;
  a.sample_rate_hz = rate;
  a.samples.resize(static_cast<size_t>(len));
  Rng rng(seed);
  for (auto& v : a.samples) v = rng.uniform(-amp, amp);
  return a;
}

// Independent STFT oracle: naive frame slicing + direct DFT sum.
std::vector<std::vector<std::complex<double>>> naive_stft(const AudioBuffer& x,
                                                          const SpectrogramConfig& cfg) {
  const int n = cfg.fft_size;
  const int64_t len = x.length();
  const int64_t pad = cfg.center_padding ? n / 2 : 0;
  const int64_t frames = cfg.center_padding ? len / cfg.hop_size + 1
                                            : (len - n) / cfg.hop_size + 1;
  std::vector<std::vector<std::complex<double>>> out;
  for (int64_t t = 0; t < frames; ++t) {
    std::vector<double> frame(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      int64_t idx = t * cfg.hop_size - pad + j;
      double v = 0.0;
      if (cfg.center_padding) {
        // bouncing reflection
        if (len == 1) {
          idx = 0;
        } else {
          const int64_t period = 2 * (len - 1);
          int64_t m = idx % period;
          if (m < 0) m += period;
          idx = m < len ? m : period - m;
        }
        v = x.samples[static_cast<size_t>(idx)];
      } else if (idx >= 0 && idx < len) {
        v = x.samples[static_cast<size_t>(idx)];
      }
      frame[static_cast<size_t>(j)] = v * 0.5 * (1.0 - std::cos(2.0 * M_PI * j / n));
    }
    std::vector<std::complex<double>> bins(static_cast<size_t>(n / 2 + 1));
    for (int k = 0; k <= n / 2; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (int j = 0; j < n; ++j) {
        const double ang = -2.0 * M_PI * k * j / n;
        acc += frame[static_cast<size_t>(j)] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      bins[static_cast<size_t>(k)] = acc;
    }
    out.push_back(std::move(bins));
  }
  return out;
}

}  // namespace

TEST_CASE("stft frame count and bins for the large configuration") {
  SpectrogramConfig cfg{2048, 512, "hann", true};
  const auto spec = stft(noise(32000, 16000, 1), cfg);
  CHECK(spec.size() == 63);
  CHECK(spec[0].size() == 1025);
}

TEST_CASE("stft frame-count formula matches a frame-slicing oracle exhaustively") {
  SpectrogramConfig cfg{64, 16, "hann", true};
  for (int64_t len = 1; len <= 4 * cfg.fft_size; ++len) {
    AudioBuffer a = noise(len, 16000, static_cast<uint64_t>(len));
    const auto spec = stft(a, cfg);
    CHECK(static_cast<int64_t>(spec.size()) == len / cfg.hop_size + 1);
    CHECK(static_cast<int64_t>(spec.size()) == stft_frame_count(len, cfg));
  }
}

TEST_CASE("stft of all-zero input is all zero") {
  SpectrogramConfig cfg{512, 128, "hann", true};
  AudioBuffer a;
  a.sample_rate_hz = 16000;
  a.samples.assign(5000, 0.0);
  for (const auto& frame : stft(a, cfg))
    for (const auto& z : frame) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("stft of a 1 kHz sine peaks at bin 128 in every interior frame") {
  SpectrogramConfig cfg{2048, 512, "hann", true};
  const AudioBuffer a = sine(1000.0, 16000, 16000);
  const auto spec = stft(a, cfg);
  const int64_t frames = static_cast<int64_t>(spec.size());
  // skip frames whose window touches the reflected boundary
  const int64_t guard = cfg.fft_size / cfg.hop_size;
  for (int64_t t = guard; t < frames - guard; ++t) {
    size_t argmax = 0;
    double best = -1.0;
    for (size_t k = 0; k < spec[static_cast<size_t>(t)].size(); ++k) {
      const double m = std::abs(spec[static_cast<size_t>(t)][k]);
      if (m > best) {
        best = m;
        argmax = k;
      }
    }
    CHECK(argmax == 128);  // round(1000 * 2048 / 16000)
  }
}

TEST_CASE("stft matches the naive DFT oracle") {
  SpectrogramConfig cfg{256, 64, "hann", true};
  const AudioBuffer a = noise(1000, 16000, 7);
  const auto fast = stft(a, cfg);
  const auto slow = naive_stft(a, cfg);
  REQUIRE(fast.size() == slow.size());
  for (size_t t = 0; t < fast.size(); ++t)
    for (size_t k = 0; k < fast[t].size(); ++k)
      CHECK(std::abs(fast[t][k] - slow[t][k]) < 1e-9);
}

TEST_CASE("stft is linear in input amplitude") {
  SpectrogramConfig cfg{512, 128, "hann", true};
  const AudioBuffer a = noise(4000, 16000, 3);
  AudioBuffer scaled = a;
  const double alpha = 2.75;
  for (auto& v : scaled.samples) v *= alpha;
  const auto sa = stft(a, cfg);
  const auto sb = stft(scaled, cfg);
  for (size_t t = 0; t < sa.size(); ++t)
    for (size_t k = 0; k < sa[t].size(); ++k) {
      const std::complex<double> want = alpha * sa[t][k];
      CHECK(std::abs(sb[t][k] - want) <= 1e-9 * (std::abs(want) + 1.0));
    }
}

TEST_CASE("stft rejects empty audio and bad configs") {
  AudioBuffer empty;
  empty.sample_rate_hz = 16000;
  CHECK_THROWS_AS(stft(empty, SpectrogramConfig{}), std::invalid_argument);
  AudioBuffer a = noise(100, 16000, 1);
  CHECK_THROWS_AS(stft(a, SpectrogramConfig{1000, 100}), std::invalid_argument);  // not pow2
  CHECK_THROWS_AS(stft(a, SpectrogramConfig{256, 512}), std::invalid_argument);   // hop > fft
}

TEST_CASE("log_spectrogram of silence is a constant floor") {
  SpectrogramConfig cfg{512, 128, "hann", true};
  AudioBuffer a;
  a.sample_rate_hz = 16000;
  a.samples.assign(3000, 0.0);
  const Tensor m = log_spectrogram(a, cfg, 1e-5);
  for (int64_t i = 0; i < m.numel(); ++i) CHECK(m[i] == doctest::Approx(std::log(1e-5)));
}

TEST_CASE("log_spectrogram shifts by log 2 when audio doubles") {
  SpectrogramConfig cfg{512, 128, "hann", true};
  const double eps = 1e-5;
  AudioBuffer a = noise(4000, 16000, 11, 0.5);
  AudioBuffer b = a;
  for (auto& v : b.samples) v *= 2.0;
  const auto sa = stft(a, cfg);
  const Tensor la = log_spectrogram(a, cfg, eps);
  const Tensor lb = log_spectrogram(b, cfg, eps);
  const int64_t bins = cfg.fft_size / 2 + 1;
  for (size_t t = 0; t < sa.size(); ++t)
    for (int64_t k = 0; k < bins; ++k)
      if (std::abs(sa[t][static_cast<size_t>(k)]) > 100.0 * eps)
        CHECK(lb[static_cast<int64_t>(t) * bins + k] - la[static_cast<int64_t>(t) * bins + k] ==
              doctest::Approx(std::log(2.0)).epsilon(1e-3));
}

TEST_CASE("log_spectrogram is deterministic and floored") {
  SpectrogramConfig cfg{512, 128, "hann", true};
  const AudioBuffer a = noise(2000, 16000, 13);
  const Tensor m1 = log_spectrogram(a, cfg, 1e-5);
  const Tensor m2 = log_spectrogram(a, cfg, 1e-5);
  REQUIRE(m1.numel() == m2.numel());
  for (int64_t i = 0; i < m1.numel(); ++i) {
    CHECK(m1[i] == m2[i]);  // bit-for-bit
    CHECK(m1[i] >= std::log(1e-5));
    CHECK(std::isfinite(m1[i]));
  }
  CHECK_THROWS_AS(log_spectrogram(a, cfg, 0.0), std::invalid_argument);
}

TEST_CASE("mel_spectrogram has n_mels rows and floors silence") {
  MelConfig mel;
  mel.spec = SpectrogramConfig{1024, 256, "hann", true};
  const AudioBuffer a = noise(8000, 16000, 17);
  const Tensor m = mel_spectrogram(a, mel, 1e-5);
  CHECK(m.dim(0) == 80);

  AudioBuffer z;
  z.sample_rate_hz = 16000;
  z.samples.assign(8000, 0.0);
  const Tensor mz = mel_spectrogram(z, mel, 1e-5);
  for (int64_t i = 0; i < mz.numel(); ++i) CHECK(mz[i] == doctest::Approx(std::log(1e-5)));
}

TEST_CASE("mel_spectrogram rejects f_max above Nyquist") {
  MelConfig mel;
  mel.f_max_hz = 9000.0;
  mel.sample_rate_hz = 16000;
  const AudioBuffer a = noise(4000, 16000, 19);
  CHECK_THROWS_AS(mel_spectrogram(a, mel, 1e-5), std::invalid_argument);
}

TEST_CASE("500 Hz tone lands in the mel filter nearest 500 Hz") {
  MelConfig mel;
  mel.spec = SpectrogramConfig{1024, 256, "hann", true};
  const AudioBuffer a = sine(500.0, 16000, 8000);

  // expected row: filter whose center frequency is nearest 500 Hz
  const auto centers = mel_center_frequencies(mel);
  int64_t want = 0;
  for (size_t m = 0; m < centers.size(); ++m)
    if (std::abs(centers[m] - 500.0) < std::abs(centers[static_cast<size_t>(want)] - 500.0))
      want = static_cast<int64_t>(m);

  // brute-force filterbank application on the magnitude spectrum
  const Tensor fb = mel_filterbank(mel);
  const auto spec = stft(a, mel.spec);
  const int64_t bins = mel.spec.fft_size / 2 + 1;
  const int64_t mid_frame = static_cast<int64_t>(spec.size()) / 2;
  std::vector<double> band(static_cast<size_t>(mel.n_mels), 0.0);
  for (int64_t m = 0; m < mel.n_mels; ++m)
    for (int64_t k = 0; k < bins; ++k)
      band[static_cast<size_t>(m)] +=
          fb[m * bins + k] * std::abs(spec[static_cast<size_t>(mid_frame)][static_cast<size_t>(k)]);
  int64_t brute_argmax =
      std::max_element(band.begin(), band.end()) - band.begin();
  CHECK(brute_argmax == want);

  // library output agrees with the brute-force application
  const Tensor lm = mel_spectrogram(a, mel, 1e-5);
  const int64_t frames = lm.dim(1);
  int64_t lib_argmax = 0;
  for (int64_t m = 1; m < mel.n_mels; ++m)
    if (lm[m * frames + mid_frame] > lm[lib_argmax * frames + mid_frame]) lib_argmax = m;
  CHECK(lib_argmax == want);
}

TEST_CASE("mel filterbank columns are positive inside the pass range") {
  MelConfig mel;
  const Tensor fb = mel_filterbank(mel);
  const int64_t bins = mel.spec.fft_size / 2 + 1;
  for (int64_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * mel.sample_rate_hz / mel.spec.fft_size;
    if (f <= mel.f_min_hz || f >= mel.f_max_hz) continue;
    double colsum = 0.0;
    for (int64_t m = 0; m < mel.n_mels; ++m) colsum += fb[m * bins + k];
    CHECK(colsum > 0.0);
  }
  // every filter row has at least one positive weight
  for (int64_t m = 0; m < mel.n_mels; ++m) {
    double rowmax = 0.0;
    for (int64_t k = 0; k < bins; ++k) rowmax = std::max(rowmax, fb[m * bins + k]);
    CHECK(rowmax > 0.0);
  }
}

TEST_CASE("downsample_by_2 preserves constants and halves lengths") {
  AudioBuffer c;
  c.sample_rate_hz = 16000;
  c.samples.assign(32000, 0.73);
  const AudioBuffer half = downsample_by_2(c);
  CHECK(half.length() == 16000);
  CHECK(half.sample_rate_hz == 8000);
  for (double v : half.samples) CHECK(v == doctest::Approx(0.73).epsilon(1e-12));

  const AudioBuffer quarter = downsample_by_2(half);
  CHECK(quarter.sample_rate_hz == 4000);
  CHECK(quarter.length() == 8000);

  AudioBuffer odd = noise(32001, 16000, 23);
  CHECK(downsample_by_2(odd).length() == 16000);

  AudioBuffer tiny = noise(3, 16000, 23);
  CHECK_THROWS_AS(downsample_by_2(tiny), std::invalid_argument);
}

TEST_CASE("downsample_by_2 tracks an ideally decimated sine") {
  const AudioBuffer a = sine(100.0, 16000, 16000);
  const AudioBuffer pooled = downsample_by_2(a);
  const AudioBuffer ideal = resample(a, 8000);
  const int64_t n = std::min(pooled.length(), ideal.length());
  double dot = 0.0, ea = 0.0, eb = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    dot += pooled.samples[static_cast<size_t>(i)] * ideal.samples[static_cast<size_t>(i)];
    ea += pooled.samples[static_cast<size_t>(i)] * pooled.samples[static_cast<size_t>(i)];
    eb += ideal.samples[static_cast<size_t>(i)] * ideal.samples[static_cast<size_t>(i)];
  }
  CHECK(dot / std::sqrt(ea * eb) > 0.99);
}

TEST_CASE("fir_filter identity and hand-worked cases") {
  AudioBuffer a;
  a.sample_rate_hz = 16000;
  a.samples = {1.0, 1.0, 1.0, 1.0};

  const AudioBuffer id = fir_filter(a, {1.0});
  for (size_t i = 0; i < 4; ++i) CHECK(id.samples[i] == a.samples[i]);

  const AudioBuffer avg = fir_filter(a, {0.5, 0.5});
  CHECK(avg.samples[0] == doctest::Approx(0.5));
  CHECK(avg.samples[1] == doctest::Approx(1.0));
  CHECK(avg.samples[2] == doctest::Approx(1.0));
  CHECK(avg.samples[3] == doctest::Approx(1.0));

  CHECK_THROWS_AS(fir_filter(a, {}), std::invalid_argument);
}

TEST_CASE("fir_filter matches brute-force convolution") {
  const AudioBuffer a = noise(500, 16000, 29);
  Rng rng(31);
  std::vector<double> taps(33);
  for (auto& t : taps) t = rng.uniform(-1.0, 1.0);
  const AudioBuffer out = fir_filter(a, taps);
  for (int64_t n = 0; n < a.length(); ++n) {
    double want = 0.0;
    for (int64_t j = 0; j < static_cast<int64_t>(taps.size()); ++j)
      if (n - j >= 0) want += taps[static_cast<size_t>(j)] * a.samples[static_cast<size_t>(n - j)];
    CHECK(std::abs(out.samples[static_cast<size_t>(n)] - want) < 1e-9);
  }
}

TEST_CASE("convolve_full hand cases and brute-force oracle") {
  CHECK(convolve_full(std::vector<double>{1, 2}, std::vector<double>{1, 1}) ==
        std::vector<double>{1, 3, 2});
  const AudioBuffer a = noise(100, 16000, 37);
  AudioBuffer imp;
  imp.sample_rate_hz = 16000;
  imp.samples = {1.0};
  const AudioBuffer out = convolve_full(a, imp);
  REQUIRE(out.length() == a.length());
  for (int64_t i = 0; i < a.length(); ++i) CHECK(out.samples[static_cast<size_t>(i)] ==
                                                 a.samples[static_cast<size_t>(i)]);

  // random instances, including the FFT path, against the direct double loop
  Rng rng(41);
  for (int rep = 0; rep < 8; ++rep) {
    const int64_t na = 200 + static_cast<int64_t>(rng.uniform_int(1800));
    const int64_t nb = 10 + static_cast<int64_t>(rng.uniform_int(190));
    std::vector<double> x(static_cast<size_t>(na)), h(static_cast<size_t>(nb));
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : h) v = rng.uniform(-1.0, 1.0);
    const auto fast = convolve_full(x, h);
    std::vector<double> slow(static_cast<size_t>(na + nb - 1), 0.0);
    for (int64_t i = 0; i < na; ++i)
      for (int64_t j = 0; j < nb; ++j)
        slow[static_cast<size_t>(i + j)] += x[static_cast<size_t>(i)] * h[static_cast<size_t>(j)];
    for (size_t i = 0; i < slow.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) < 1e-9);
  }

  // commutative in content
  std::vector<double> p{0.2, -0.4, 0.6}, q{1.0, 0.5, -0.25, 0.125};
  const auto pq = convolve_full(p, q);
  const auto qp = convolve_full(q, p);
  for (size_t i = 0; i < pq.size(); ++i) CHECK(pq[i] == doctest::Approx(qp[i]).epsilon(1e-12));

  AudioBuffer wrong_rate = imp;
  wrong_rate.sample_rate_hz = 8000;
  CHECK_THROWS_AS(convolve_full(a, wrong_rate), std::invalid_argument);
}
