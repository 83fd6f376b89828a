// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "enhgan/generator.h"
#include "enhgan/rng.h"

using namespace enhgan;

namespace {

GeneratorConfig paper_config() { return GeneratorConfig{}; }

GeneratorConfig small_config() {
  GeneratorConfig cfg;
  cfg.n_layers = 8;
  cfg.dilation_cycle = {1, 2, 4, 8};
  cfg.channels = 6;
  cfg.postnet_layers = 3;
  cfg.postnet_channels = 4;
  cfg.postnet_kernel = 8;
  return cfg;
}

void zero_biases(ParamSet& p) {
  for (size_t i = 0; i < p.size(); ++i)
    if (p.item(i).first.ends_with(".b")) p.item(i).second.fill(0.0);
}

AudioBuffer zeros(int64_t len) {
  AudioBuffer a;
  a.sample_rate_hz = 16000;
  a.samples.assign(static_cast<size_t>(len), 0.0);
  return a;
}

}  // namespace

TEST_CASE("receptive field formula") {
  CHECK(receptive_field(paper_config()) == 4093);

  GeneratorConfig one;
  one.n_layers = 1;
  one.dilation_cycle = {1};
  CHECK(receptive_field(one) == 3);

  one.dilation_cycle = {512};
  CHECK(receptive_field(one) == 1025);

  // postnet adds (kernel - 1) * layers on top
  CHECK(receptive_field_with_postnet(paper_config()) == 4093 + 31 * 12);
}

TEST_CASE("config validation") {
  GeneratorConfig bad = paper_config();
  bad.n_layers = 19;  // not a multiple of the cycle
  CHECK_THROWS_AS(receptive_field(bad), std::invalid_argument);
  bad = paper_config();
  bad.dilation_cycle = {1, 3};
  CHECK_THROWS_AS(receptive_field(bad), std::invalid_argument);
  bad = paper_config();
  bad.kernel_size = 4;
  CHECK_THROWS_AS(receptive_field(bad), std::invalid_argument);
}

TEST_CASE("parameter counts") {
  // postnet-only golden: one 1->1 layer of kernel 32 plus its bias
  GeneratorConfig tiny;
  tiny.n_layers = 1;
  tiny.dilation_cycle = {1};
  tiny.postnet_layers = 1;
  tiny.postnet_kernel = 32;
  CHECK(count_parameters(tiny).postnet == 33);

  // doubling channels multiplies the dominant conv weight count by ~4
  GeneratorConfig narrow = paper_config();
  GeneratorConfig wide = paper_config();
  wide.channels = 256;
  const double ratio = static_cast<double>(count_parameters(wide).main_net) /
                       static_cast<double>(count_parameters(narrow).main_net);
  CHECK(ratio > 3.8);
  CHECK(ratio < 4.1);

  // per-layer summation oracle for the paper config, then the frozen golden
  const GeneratorConfig cfg = paper_config();
  int64_t oracle = 0;
  const int64_t c = cfg.channels;
  oracle += c + c;  // 1x1 input conv + bias
  for (int i = 0; i < cfg.n_layers; ++i)
    oracle += (2 * c) * c * 3 + 2 * c + (c * c + c) * 2;
  oracle += c * c + c + c + 1;                   // the two output 1x1 convs
  int64_t oracle_post = 128 * 32 + 128;          // in layer
  oracle_post += 10 * (128 * 128 * 32 + 128);    // middle layers
  oracle_post += 128 * 32 + 1;                   // out layer
  const ParameterCount pc = count_parameters(cfg);
  CHECK(pc.main_net == oracle);
  CHECK(pc.postnet == oracle_post);
  CHECK(pc.total() == 7901058);  // golden

  // the allocated parameter set agrees with the closed-form count
  const ParamSet params = init_generator_params(cfg, 1);
  CHECK(params.total_scalars() == pc.total());
}

TEST_CASE("length preservation across input sizes") {
  GeneratorConfig cfg = paper_config();
  cfg.channels = 6;  // structural paper depth, slim channels
  cfg.postnet_channels = 4;
  const ParamSet params = init_generator_params(cfg, 3);
  for (int64_t len : {int64_t{1}, int64_t{100}, int64_t{4093}, int64_t{32000}}) {
    AudioBuffer x = zeros(len);
    Rng rng(static_cast<uint64_t>(len));
    for (auto& v : x.samples) v = rng.uniform(-0.5, 0.5);
    const GeneratorOutput out = generator_apply(x, params, cfg);
    CHECK(out.pre_postnet.length() == len);
    CHECK(out.post_postnet.length() == len);
    CHECK(out.pre_postnet.sample_rate_hz == 16000);
  }
}

TEST_CASE("zero input with random parameters stays finite") {
  const GeneratorConfig cfg = small_config();
  const ParamSet params = init_generator_params(cfg, 5);
  const GeneratorOutput out = generator_apply(zeros(2000), params, cfg);
  for (double v : out.post_postnet.samples) CHECK(std::isfinite(v));
}

TEST_CASE("postnet starts as the identity through the residual connection") {
  const GeneratorConfig cfg = small_config();
  const ParamSet params = init_generator_params(cfg, 7);
  AudioBuffer x = zeros(1500);
  Rng rng(9);
  for (auto& v : x.samples) v = rng.uniform(-0.5, 0.5);
  const GeneratorOutput out = generator_apply(x, params, cfg);
  for (int64_t i = 0; i < x.length(); ++i)
    CHECK(out.post_postnet.samples[static_cast<size_t>(i)] ==
          out.pre_postnet.samples[static_cast<size_t>(i)]);
}

TEST_CASE("evaluation is deterministic bit for bit") {
  const GeneratorConfig cfg = small_config();
  const ParamSet params = init_generator_params(cfg, 11);
  AudioBuffer x = zeros(3000);
  Rng rng(13);
  for (auto& v : x.samples) v = rng.uniform(-0.5, 0.5);
  const GeneratorOutput a = generator_apply(x, params, cfg);
  const GeneratorOutput b = generator_apply(x, params, cfg);
  for (int64_t i = 0; i < x.length(); ++i)
    CHECK(a.post_postnet.samples[static_cast<size_t>(i)] ==
          b.post_postnet.samples[static_cast<size_t>(i)]);
}

TEST_CASE("impulse perturbation support matches the analytic receptive field exactly") {
  GeneratorConfig cfg;
  cfg.n_layers = 8;
  cfg.dilation_cycle = {1, 2, 4, 8};
  cfg.channels = 12;
  cfg.postnet_layers = 2;
  cfg.postnet_channels = 4;
  const int64_t rf = receptive_field(cfg);  // 1 + 2*2*15 = 61
  CHECK(rf == 61);

  ParamSet params = init_generator_params(cfg, 17);
  zero_biases(params);

  const int64_t len = 301, p = 150;
  AudioBuffer x = zeros(len);
  x.samples[static_cast<size_t>(p)] = 1.0;
  // zero input with zero biases gives an exactly zero baseline
  const GeneratorOutput base = generator_apply(zeros(len), params, cfg);
  for (double v : base.pre_postnet.samples) CHECK(v == 0.0);

  const GeneratorOutput out = generator_apply(x, params, cfg);
  int64_t lo = len, hi = -1;
  for (int64_t i = 0; i < len; ++i) {
    if (out.pre_postnet.samples[static_cast<size_t>(i)] != 0.0) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
  }
  CHECK(lo == p - rf / 2);
  CHECK(hi == p + rf / 2);
}

TEST_CASE("analytic gradients match finite differences on a tiny config") {
  GeneratorConfig cfg;
  cfg.n_layers = 2;
  cfg.dilation_cycle = {1, 2};
  cfg.channels = 4;
  cfg.postnet_layers = 2;
  cfg.postnet_channels = 3;
  cfg.postnet_kernel = 4;
  const ParamSet params = init_generator_params(cfg, 19);

  Tensor input({1, 64});
  Rng rng(21);
  for (int64_t i = 0; i < input.numel(); ++i) input[i] = rng.uniform(-0.5, 0.5);

  auto loss_with = [&](const ParamSet& p) {
    Graph g;
    BoundParams bound(g, p, false);
    const VarId x = g.constant(input);
    const auto out = generator_forward(g, x, bound, cfg, true);
    return g.scalar_value(g.mean_sq(out.post_postnet));
  };

  Graph g;
  BoundParams bound(g, params, true);
  const VarId x = g.constant(input);
  const auto out = generator_forward(g, x, bound, cfg, true);
  const VarId loss = g.mean_sq(out.post_postnet);
  g.backward(loss);

  Rng probe_rng(23);
  const double h = 1e-5;
  int checked = 0;
  for (int probe = 0; probe < 24; ++probe) {
    const size_t slot = probe_rng.uniform_int(params.size());
    const Tensor& t = params.item(slot).second;
    const int64_t idx = static_cast<int64_t>(probe_rng.uniform_int(
        static_cast<uint64_t>(t.numel())));
    ParamSet plus = params, minus = params;
    plus.item(slot).second[idx] += h;
    minus.item(slot).second[idx] -= h;
    const double numeric = (loss_with(plus) - loss_with(minus)) / (2.0 * h);
    const double analytic = g.grad(bound.var(slot))[idx];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    CHECK(std::abs(analytic - numeric) / denom < 1e-3);
    ++checked;
  }
  CHECK(checked == 24);
}

TEST_CASE("shape mismatch between parameters and config is a configuration error") {
  const GeneratorConfig cfg = small_config();
  GeneratorConfig other = cfg;
  other.channels = cfg.channels * 2;
  const ParamSet wrong = init_generator_params(other, 29);
  AudioBuffer x = zeros(600);
  CHECK_THROWS(generator_apply(x, wrong, cfg));
}
