// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "enhgan/discriminators.h"
#include "enhgan/rng.h"

using namespace enhgan;

namespace {

WaveDiscConfig tiny_wave_config() {
  WaveDiscConfig cfg;
  cfg.kernel_sizes = {5, 7, 7, 7, 7, 3, 3};
  cfg.strides = {1, 2, 2, 2, 2, 1, 1};
  cfg.channels = {4, 8, 8, 8, 8, 8, 1};
  cfg.groups = {1, 2, 2, 2, 2, 1, 1};
  return cfg;
}

SpecDiscConfig tiny_spec_config() {
  SpecDiscConfig cfg;
  cfg.channels = 4;
  return cfg;
}

MelConfig tiny_mel_config() {
  MelConfig mel;
  mel.n_mels = 16;
  mel.spec = SpectrogramConfig{256, 64, "hann", true};
  mel.sample_rate_hz = 16000;
  return mel;
}

AudioBuffer random_audio(int64_t len, uint64_t seed) {
  AudioBuffer a;
  a.sample_rate_hz = 16000;
  a.samples.resize(static_cast<size_t>(len));
  Rng rng(seed);
  for (auto& v : a.samples) v = rng.uniform(-1.0, 1.0);
  return a;
}

}  // namespace

TEST_CASE("paper-config waveform discriminator shape goldens") {
  const WaveDiscConfig cfg;  // paper defaults
  const ParamSet params = init_wave_disc_params(cfg, 1, false);
  const DiscriminatorVerdict v = wave_disc_apply(random_audio(32000, 2), params, cfg);

  REQUIRE(v.features.layers.size() == 6);  // 7 layers minus the output layer
  // same-padding keeps pre-pool length at ceil(L / 256)
  const Tensor& last = v.features.layers[5];
  CHECK(last.shape() == std::vector<int64_t>{1, 1024, 125});
  // stride trace: 32000 -> 8000 -> 2000 -> 500 -> 125
  CHECK(v.features.layers[0].shape() == std::vector<int64_t>{1, 16, 32000});
  CHECK(v.features.layers[1].shape() == std::vector<int64_t>{1, 64, 8000});
  CHECK(v.features.layers[2].shape() == std::vector<int64_t>{1, 256, 2000});
  CHECK(v.features.layers[3].shape() == std::vector<int64_t>{1, 1024, 500});
  CHECK(v.features.layers[4].shape() == std::vector<int64_t>{1, 1024, 125});
  CHECK(std::isfinite(v.score));
  for (size_t i = 0; i < 6; ++i)
    CHECK(v.features.unit_counts[i] == v.features.layers[i].numel());
}

TEST_CASE("zero input with bias-free parameters scores exactly zero") {
  const WaveDiscConfig cfg = tiny_wave_config();
  ParamSet params = init_wave_disc_params(cfg, 3, false);
  for (size_t i = 0; i < params.size(); ++i)
    if (params.item(i).first.ends_with(".b")) params.item(i).second.fill(0.0);
  AudioBuffer z;
  z.sample_rate_hz = 16000;
  z.samples.assign(1024, 0.0);
  CHECK(wave_disc_apply(z, params, cfg).score == 0.0);
}

TEST_CASE("zero-initialized output layer gives score exactly zero on any input") {
  const WaveDiscConfig cfg = tiny_wave_config();
  const ParamSet params = init_wave_disc_params(cfg, 5, true);
  CHECK(wave_disc_apply(random_audio(1024, 7), params, cfg).score == 0.0);
}

TEST_CASE("input shorter than the stride product is rejected") {
  const WaveDiscConfig cfg;  // total stride 256
  const ParamSet params = init_wave_disc_params(cfg, 9, false);
  CHECK_THROWS_AS(wave_disc_apply(random_audio(255, 11), params, cfg), std::invalid_argument);
}

TEST_CASE("multi-scale forward sees halved lengths and independent weights") {
  const WaveDiscConfig cfg = tiny_wave_config();
  ParamSet p0 = init_wave_disc_params(cfg, 13, false);
  ParamSet p1 = init_wave_disc_params(cfg, 14, false);
  ParamSet p2 = init_wave_disc_params(cfg, 15, false);
  const AudioBuffer w = random_audio(3200, 17);

  Graph g;
  BoundParams b0(g, p0, false), b1(g, p1, false), b2(g, p2, false);
  const VarId x = g.constant(Tensor({1, w.length()}, w.samples));
  const auto verdicts = multi_scale_forward(g, x, {&b0, &b1, &b2}, cfg);

  CHECK(g.value(verdicts[0].features.layers[0]).dim(2) == 3200);
  CHECK(g.value(verdicts[1].features.layers[0]).dim(2) == 1600);
  CHECK(g.value(verdicts[2].features.layers[0]).dim(2) == 800);
  const double s0 = g.value(verdicts[0].score)[0];

  // mutating the second discriminator's weights leaves verdict[0] unchanged
  p1.item(0).second.fill(123.0);
  Graph g2;
  BoundParams c0(g2, p0, false), c1(g2, p1, false), c2(g2, p2, false);
  const VarId x2 = g2.constant(Tensor({1, w.length()}, w.samples));
  const auto verdicts2 = multi_scale_forward(g2, x2, {&c0, &c1, &c2}, cfg);
  CHECK(g2.value(verdicts2[0].score)[0] == s0);
  CHECK(g2.value(verdicts2[1].score)[0] != g.value(verdicts[1].score)[0]);
}

TEST_CASE("spectrogram discriminator shape goldens") {
  SpecDiscConfig cfg;  // paper defaults, 32 channels
  MelConfig mel;
  mel.spec = SpectrogramConfig{1024, 256, "hann", true};
  const ParamSet params = init_spec_disc_params(cfg, 19, false);
  const DiscriminatorVerdict v =
      spec_disc_apply(random_audio(32000, 21), params, cfg, mel, MelNorm{});

  REQUIRE(v.features.layers.size() == 4);
  // 32000 samples at hop 256, centered: 126 frames; time halves per block
  CHECK(v.features.layers[0].shape() == std::vector<int64_t>{1, 32, 80, 63});
  CHECK(v.features.layers[1].shape() == std::vector<int64_t>{1, 32, 80, 32});
  CHECK(v.features.layers[2].shape() == std::vector<int64_t>{1, 32, 80, 16});
  CHECK(v.features.layers[3].shape() == std::vector<int64_t>{1, 32, 80, 8});  // frozen golden
  CHECK(std::isfinite(v.score));
}

TEST_CASE("spectrogram discriminator rejects too-short input") {
  const SpecDiscConfig cfg = tiny_spec_config();
  const MelConfig mel = tiny_mel_config();
  const ParamSet params = init_spec_disc_params(cfg, 23, false);
  // 512 samples at hop 64 -> 9 frames < 16
  CHECK_THROWS_AS(spec_disc_apply(random_audio(512, 25), params, cfg, mel, MelNorm{}),
                  std::invalid_argument);
}

TEST_CASE("grouped convolution parameter count matches the closed form") {
  const WaveDiscConfig cfg;  // paper config
  const ParamSet params = init_wave_disc_params(cfg, 27, false);
  // brute force: every allocated scalar
  CHECK(params.total_scalars() == wave_disc_parameter_count(cfg));

  int64_t brute = 0;
  for (int i = 0; i < 7; ++i) {
    const int64_t cin = i == 0 ? 1 : cfg.channels[i - 1];
    brute += cfg.channels[i] * (cin / cfg.groups[i]) * cfg.kernel_sizes[i] + cfg.channels[i];
  }
  CHECK(brute == wave_disc_parameter_count(cfg));
}

TEST_CASE("scores are finite for random inputs") {
  const WaveDiscConfig wcfg = tiny_wave_config();
  const SpecDiscConfig scfg = tiny_spec_config();
  const MelConfig mel = tiny_mel_config();
  const ParamSet wp = init_wave_disc_params(wcfg, 31, false);
  const ParamSet sp = init_spec_disc_params(scfg, 33, false);
  for (uint64_t seed = 0; seed < 4; ++seed) {
    const AudioBuffer a = random_audio(2048, 100 + seed);
    CHECK(std::isfinite(wave_disc_apply(a, wp, wcfg).score));
    CHECK(std::isfinite(spec_disc_apply(a, sp, scfg, mel, MelNorm{}).score));
  }
}

TEST_CASE("gradients flow from every score to the full-rate input") {
  const WaveDiscConfig cfg = tiny_wave_config();
  ParamSet p0 = init_wave_disc_params(cfg, 35, false);
  ParamSet p1 = init_wave_disc_params(cfg, 36, false);
  ParamSet p2 = init_wave_disc_params(cfg, 37, false);
  const SpecDiscConfig scfg = tiny_spec_config();
  const MelConfig mel = tiny_mel_config();
  ParamSet sp = init_spec_disc_params(scfg, 38, false);

  Tensor input({1, 2048});
  Rng rng(39);
  for (int64_t i = 0; i < input.numel(); ++i) input[i] = rng.uniform(-0.5, 0.5);

  auto score_sum = [&](const Tensor& in) {
    Graph g;
    BoundParams b0(g, p0, false), b1(g, p1, false), b2(g, p2, false), bs(g, sp, false);
    const VarId x = g.leaf(in, true);
    const auto verdicts = multi_scale_forward(g, x, {&b0, &b1, &b2}, cfg);
    const auto sv = spec_disc_forward(g, x, bs, scfg, mel, MelNorm{});
    const VarId total = g.weighted_sum(
        {verdicts[0].score, verdicts[1].score, verdicts[2].score, sv.score},
        {1.0, 1.0, 1.0, 1.0});
    return std::pair<Graph, VarId>{std::move(g), total};
  };

  Graph g;
  BoundParams b0(g, p0, false), b1(g, p1, false), b2(g, p2, false), bs(g, sp, false);
  const VarId x = g.leaf(input, true);
  const auto verdicts = multi_scale_forward(g, x, {&b0, &b1, &b2}, cfg);
  const auto sv = spec_disc_forward(g, x, bs, scfg, mel, MelNorm{});
  const VarId total = g.weighted_sum(
      {verdicts[0].score, verdicts[1].score, verdicts[2].score, sv.score}, {1.0, 1.0, 1.0, 1.0});
  g.backward(total);
  const Tensor analytic = g.grad(x);

  double grad_norm = 0.0;
  for (int64_t i = 0; i < analytic.numel(); ++i) grad_norm += std::abs(analytic[i]);
  CHECK(grad_norm > 0.0);

  Rng probe(41);
  const double h = 1e-6;
  for (int rep = 0; rep < 6; ++rep) {
    const int64_t idx = static_cast<int64_t>(probe.uniform_int(2048));
    Tensor plus = input, minus = input;
    plus[idx] += h;
    minus[idx] -= h;
    auto [gp, lp] = score_sum(plus);
    auto [gm, lm] = score_sum(minus);
    const double numeric = (gp.scalar_value(lp) - gm.scalar_value(lm)) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[idx]), std::abs(numeric), 1e-6});
    CHECK(std::abs(analytic[idx] - numeric) / denom < 1e-3);
  }
}
