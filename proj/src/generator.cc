// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/generator.h"

#include <cmath>
#include <stdexcept>

#include "enhgan/fft.h"
#include "enhgan/rng.h"

namespace enhgan {

void validate_generator_config(const GeneratorConfig& cfg) {
  if (cfg.dilation_cycle.empty())
    throw std::invalid_argument("GeneratorConfig: empty dilation cycle");
  if (cfg.n_layers <= 0 || cfg.n_layers % static_cast<int>(cfg.dilation_cycle.size()) != 0)
    throw std::invalid_argument("GeneratorConfig: n_layers must be stacks * cycle length");
  for (size_t i = 0; i < cfg.dilation_cycle.size(); ++i) {
    if (!is_power_of_two(cfg.dilation_cycle[i]))
      throw std::invalid_argument("GeneratorConfig: dilations must be powers of two");
    if (i > 0 && cfg.dilation_cycle[i] != 2 * cfg.dilation_cycle[i - 1])
      throw std::invalid_argument("GeneratorConfig: dilations must double within a stack");
  }
  if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0)
    throw std::invalid_argument("GeneratorConfig: main kernel must be odd");
  if (cfg.channels < 1 || cfg.postnet_layers < 1 || cfg.postnet_channels < 1 ||
      cfg.postnet_kernel < 1)
    throw std::invalid_argument("GeneratorConfig: sizes must be positive");
}

int layer_dilation(const GeneratorConfig& cfg, int layer) {
  return cfg.dilation_cycle[static_cast<size_t>(layer) % cfg.dilation_cycle.size()];
}

int64_t receptive_field(const GeneratorConfig& cfg) {
  validate_generator_config(cfg);
  int64_t rf = 1;
  for (int i = 0; i < cfg.n_layers; ++i)
    rf += static_cast<int64_t>(cfg.kernel_size - 1) * layer_dilation(cfg, i);
  return rf;
}

int64_t receptive_field_with_postnet(const GeneratorConfig& cfg) {
  return receptive_field(cfg) +
         static_cast<int64_t>(cfg.postnet_kernel - 1) * cfg.postnet_layers;
}

namespace {

struct ConvShape {
  int64_t cout, cin, k;
  int64_t weights() const { return cout * cin * k; }
  int64_t total() const { return weights() + cout; }  // + bias
};

ConvShape postnet_layer_shape(const GeneratorConfig& cfg, int j) {
  const int64_t cp = cfg.postnet_channels;
  const int64_t last = cfg.postnet_layers - 1;
  const int64_t cin = j == 0 ? 1 : cp;
  const int64_t cout = j == last ? 1 : cp;
  if (cfg.postnet_layers == 1) return {1, 1, cfg.postnet_kernel};
  return {cout, cin, cfg.postnet_kernel};
}

}  // namespace

ParameterCount count_parameters(const GeneratorConfig& cfg) {
  validate_generator_config(cfg);
  const int64_t c = cfg.channels;
  ParameterCount pc;
  pc.main_net += c * 1 * 1 + c;  // input 1x1
  for (int i = 0; i < cfg.n_layers; ++i) {
    pc.main_net += 2 * c * c * cfg.kernel_size + 2 * c;  // gated conv
    pc.main_net += c * c + c;                            // residual 1x1
    pc.main_net += c * c + c;                            // skip 1x1
  }
  pc.main_net += c * c + c;  // out1 1x1
  pc.main_net += 1 * c + 1;  // out2 1x1
  for (int j = 0; j < cfg.postnet_layers; ++j) pc.postnet += postnet_layer_shape(cfg, j).total();
  return pc;
}

ParamSet init_generator_params(const GeneratorConfig& cfg, uint64_t seed) {
  validate_generator_config(cfg);
  const int64_t c = cfg.channels;

  ParamSet p;
  auto add_conv = [&](const std::string& name, int64_t cout, int64_t cin, int64_t k,
                      bool zero_init = false) {
    Tensor w({cout, cin, k});
    if (!zero_init) {
      Rng rng = derive_rng(seed, "init:" + name);
      const double std = 1.0 / std::sqrt(static_cast<double>(cin * k));
      for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.normal(0.0, std);
    }
    p.add(name + ".w", std::move(w));
    p.add(name + ".b", Tensor({cout}));
  };

  add_conv("input", c, 1, 1);
  for (int i = 0; i < cfg.n_layers; ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    add_conv(prefix + ".gate", 2 * c, c, cfg.kernel_size);
    add_conv(prefix + ".res", c, c, 1);
    add_conv(prefix + ".skip", c, c, 1);
  }
  add_conv("out1", c, c, 1);
  add_conv("out2", 1, c, 1);
  for (int j = 0; j < cfg.postnet_layers; ++j) {
    const ConvShape s = postnet_layer_shape(cfg, j);
    add_conv("postnet" + std::to_string(j), s.cout, s.cin, s.k,
             /*zero_init=*/j == cfg.postnet_layers - 1);
  }
  return p;
}

GeneratorOutputVars generator_forward(Graph& g, VarId x, const BoundParams& params,
                                      const GeneratorConfig& cfg, bool use_postnet) {
  validate_generator_config(cfg);
  const Tensor& tx = g.value(x);
  if (tx.ndim() != 2) throw std::invalid_argument("generator_forward: expect (N, L)");
  const int64_t batch = tx.dim(0);
  const int64_t len = tx.dim(1);

  auto conv = [&](VarId in, const std::string& name, int dilation, int kernel) {
    Conv1dOpt opt;
    opt.dilation = dilation;
    opt.pad_mode = PadMode::kZero;
    const int span = (kernel - 1) * dilation;
    opt.pad_left = span / 2;
    opt.pad_right = span - span / 2;
    return g.conv1d(in, params[name + ".w"], params[name + ".b"], opt);
  };

  VarId h = conv(g.reshape(x, {batch, 1, len}), "input", 1, 1);
  VarId skip_sum = Graph::kNoVar;
  for (int i = 0; i < cfg.n_layers; ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    const VarId z = conv(h, prefix + ".gate", layer_dilation(cfg, i), cfg.kernel_size);
    const VarId gated = g.gated_tanh(z);
    g.drop_value(z);
    const VarId res = conv(gated, prefix + ".res", 1, 1);
    const VarId skip = conv(gated, prefix + ".skip", 1, 1);
    g.drop_value(gated);
    const VarId h_next = g.add(h, res);
    g.drop_value(h);
    g.drop_value(res);
    h = h_next;
    if (skip_sum == Graph::kNoVar) {
      skip_sum = skip;
    } else {
      const VarId s = g.add(skip_sum, skip);
      g.drop_value(skip_sum);
      g.drop_value(skip);
      skip_sum = s;
    }
  }
  g.drop_value(h);
  VarId s = g.relu(skip_sum);
  s = conv(s, "out1", 1, 1);
  s = g.relu(s);
  const VarId pre = g.reshape(conv(s, "out2", 1, 1), {batch, len});

  if (!use_postnet) return {pre, pre};

  VarId pp = g.reshape(pre, {batch, 1, len});
  for (int j = 0; j < cfg.postnet_layers; ++j) {
    Conv1dOpt opt;
    opt.pad_left = cfg.postnet_kernel / 2;
    opt.pad_right = cfg.postnet_kernel - 1 - cfg.postnet_kernel / 2;
    const std::string name = "postnet" + std::to_string(j);
    const VarId next = g.conv1d(pp, params[name + ".w"], params[name + ".b"], opt);
    g.drop_value(pp);
    pp = j + 1 < cfg.postnet_layers ? g.tanh_op(next) : next;
    if (pp != next) g.drop_value(next);
  }
  const VarId post = g.add(pre, g.reshape(pp, {batch, len}));
  return {pre, post};
}

GeneratorOutput generator_apply(const AudioBuffer& x, const ParamSet& params,
                                const GeneratorConfig& cfg, bool use_postnet) {
  validate_audio(x, "generator_apply");
  Graph g;
  g.set_inference(true);
  BoundParams bound(g, params, /*requires_grad=*/false);
  const VarId in = g.constant(Tensor({1, x.length()}, x.samples));
  const GeneratorOutputVars out = generator_forward(g, in, bound, cfg, use_postnet);
  GeneratorOutput result;
  result.pre_postnet.sample_rate_hz = x.sample_rate_hz;
  result.pre_postnet.samples = g.value(out.pre_postnet).vec();
  result.post_postnet.sample_rate_hz = x.sample_rate_hz;
  result.post_postnet.samples = g.value(out.post_postnet).vec();
  return result;
}

}  // namespace enhgan
