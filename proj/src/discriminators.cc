// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/discriminators.h"

#include <cmath>
#include <stdexcept>

#include "enhgan/rng.h"

namespace enhgan {

void validate_wave_disc_config(const WaveDiscConfig& cfg) {
  for (int i = 0; i < 7; ++i) {
    if (cfg.kernel_sizes[i] < 1 || cfg.strides[i] < 1 || cfg.channels[i] < 1 || cfg.groups[i] < 1)
      throw std::invalid_argument("WaveDiscConfig: sizes must be positive");
    const int cin = i == 0 ? 1 : cfg.channels[i - 1];
    if (cin % cfg.groups[i] != 0 || cfg.channels[i] % cfg.groups[i] != 0)
      throw std::invalid_argument("WaveDiscConfig: channels not divisible by groups");
  }
  if (cfg.channels[6] != 1)
    throw std::invalid_argument("WaveDiscConfig: output layer must have 1 channel");
}

void validate_spec_disc_config(const SpecDiscConfig& cfg) {
  if (cfg.n_blocks != 4) throw std::invalid_argument("SpecDiscConfig: expect 4 blocks");
  if (cfg.channels < 1 || cfg.head_kernel < 1)
    throw std::invalid_argument("SpecDiscConfig: sizes must be positive");
  for (const auto& [kh, kw] : cfg.kernel_sizes)
    if (kh < 1 || kw < 1) throw std::invalid_argument("SpecDiscConfig: bad kernel");
}

int64_t wave_disc_parameter_count(const WaveDiscConfig& cfg) {
  validate_wave_disc_config(cfg);
  int64_t n = 0;
  for (int i = 0; i < 7; ++i) {
    const int64_t cin = i == 0 ? 1 : cfg.channels[i - 1];
    n += cin * cfg.channels[i] * cfg.kernel_sizes[i] / cfg.groups[i] + cfg.channels[i];
  }
  return n;
}

namespace {

void fill_fan_in(Tensor& w, int64_t fan_in, Rng& rng) {
  const double std = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.normal(0.0, std);
}

}  // namespace

ParamSet init_wave_disc_params(const WaveDiscConfig& cfg, uint64_t seed, bool zero_output_layer) {
  validate_wave_disc_config(cfg);
  ParamSet p;
  for (int i = 0; i < 7; ++i) {
    const int64_t cin = i == 0 ? 1 : cfg.channels[i - 1];
    const int64_t cin_pg = cin / cfg.groups[i];
    const std::string name = "conv" + std::to_string(i);
    Tensor w({cfg.channels[i], cin_pg, cfg.kernel_sizes[i]});
    if (!(zero_output_layer && i == 6)) {
      Rng rng = derive_rng(seed, "init:" + name);
      fill_fan_in(w, cin_pg * cfg.kernel_sizes[i], rng);
    }
    p.add(name + ".w", std::move(w));
    p.add(name + ".b", Tensor({cfg.channels[i]}));
  }
  return p;
}

ParamSet init_spec_disc_params(const SpecDiscConfig& cfg, uint64_t seed, bool zero_output_layer) {
  validate_spec_disc_config(cfg);
  ParamSet p;
  for (int i = 0; i < cfg.n_blocks; ++i) {
    const int64_t cin = i == 0 ? 1 : cfg.channels;
    const auto [kh, kw] = cfg.kernel_sizes[static_cast<size_t>(i)];
    const std::string name = "block" + std::to_string(i);
    Tensor w({2 * cfg.channels, cin, kh, kw});
    Rng rng = derive_rng(seed, "init:" + name);
    fill_fan_in(w, cin * kh * kw, rng);
    p.add(name + ".conv.w", std::move(w));
    p.add(name + ".conv.b", Tensor({2 * cfg.channels}));
    Tensor gamma({2 * cfg.channels});
    gamma.fill(1.0);
    p.add(name + ".bn.gamma", std::move(gamma));
    p.add(name + ".bn.beta", Tensor({2 * cfg.channels}));
  }
  Tensor hw({1, cfg.channels, cfg.head_kernel, cfg.head_kernel});
  if (!zero_output_layer) {
    Rng rng = derive_rng(seed, "init:head");
    fill_fan_in(hw, cfg.channels * cfg.head_kernel * cfg.head_kernel, rng);
  }
  p.add("head.w", std::move(hw));
  p.add("head.b", Tensor({1}));
  return p;
}

VerdictVars wave_disc_forward(Graph& g, VarId w, const BoundParams& params,
                              const WaveDiscConfig& cfg) {
  validate_wave_disc_config(cfg);
  const Tensor& tw = g.value(w);
  if (tw.ndim() != 2) throw std::invalid_argument("wave_disc_forward: expect (N, L)");
  if (tw.dim(1) < cfg.total_stride())
    throw std::invalid_argument("wave_disc_forward: input shorter than " +
                                std::to_string(cfg.total_stride()) + " samples");

  VarId h = g.reshape(w, {tw.dim(0), 1, tw.dim(1)});
  VerdictVars out;
  for (int i = 0; i < 7; ++i) {
    const int64_t len = g.value(h).dim(2);
    const int k = cfg.kernel_sizes[i];
    const int s = cfg.strides[i];
    const int64_t lout = (len + s - 1) / s;  // same padding: ceil(L / stride)
    const int64_t pad_total = std::max<int64_t>(0, (lout - 1) * s + k - len);
    Conv1dOpt opt;
    opt.stride = s;
    opt.groups = cfg.groups[i];
    opt.pad_mode = PadMode::kReflect;
    opt.pad_left = static_cast<int>(pad_total / 2);
    opt.pad_right = static_cast<int>(pad_total - pad_total / 2);
    const std::string name = "conv" + std::to_string(i);
    VarId z = g.conv1d(h, params[name + ".w"], params[name + ".b"], opt);
    if (i < 6) {
      h = g.leaky_relu(z, cfg.leaky_slope);
      g.drop_value(z);  // z is not exposed as a feature map
      out.features.layers.push_back(h);
      out.features.unit_counts.push_back(g.value(h).numel() / g.value(h).dim(0));
    } else {
      h = z;  // score path stays linear
    }
  }
  out.score = g.global_mean_pool(h);
  return out;
}

std::array<VerdictVars, 3> multi_scale_forward(Graph& g, VarId w16k,
                                               const std::array<const BoundParams*, 3>& params,
                                               const WaveDiscConfig& cfg) {
  const Tensor& tw = g.value(w16k);
  if (tw.ndim() != 2) throw std::invalid_argument("multi_scale_forward: expect (N, L)");
  const int64_t batch = tw.dim(0), len = tw.dim(1);

  std::array<VerdictVars, 3> out;
  out[0] = wave_disc_forward(g, w16k, *params[0], cfg);
  VarId half3 = g.avg_pool_half(g.reshape(w16k, {batch, 1, len}));
  VarId half = g.reshape(half3, {batch, len / 2});
  out[1] = wave_disc_forward(g, half, *params[1], cfg);
  VarId quarter3 = g.avg_pool_half(half3);
  VarId quarter = g.reshape(quarter3, {batch, len / 2 / 2});
  out[2] = wave_disc_forward(g, quarter, *params[2], cfg);
  return out;
}

VerdictVars spec_disc_forward(Graph& g, VarId x, const BoundParams& params,
                              const SpecDiscConfig& cfg, const MelConfig& mel,
                              const MelNorm& norm, double floor_eps) {
  validate_spec_disc_config(cfg);
  const Tensor& tx = g.value(x);
  if (tx.ndim() != 2) throw std::invalid_argument("spec_disc_forward: expect (N, L)");
  const int64_t frames = stft_frame_count(tx.dim(1), mel.spec);
  if (frames < 16)
    throw std::invalid_argument("spec_disc_forward: input yields fewer than 16 frames");
  if (norm.stddev <= 0.0) throw std::invalid_argument("spec_disc_forward: bad normalization");

  VarId h = g.log_mel_op(x, mel, floor_eps);               // (N, 1, mels, T)
  h = g.affine(h, 1.0 / norm.stddev, -norm.mean / norm.stddev);

  VerdictVars out;
  for (int i = 0; i < cfg.n_blocks; ++i) {
    const auto [kh, kw] = cfg.kernel_sizes[static_cast<size_t>(i)];
    const auto [sh, sw] = cfg.strides[static_cast<size_t>(i)];
    const Tensor& th = g.value(h);
    const int64_t hh = th.dim(2), ww = th.dim(3);
    const int64_t hout = (hh + sh - 1) / sh;
    const int64_t wout = (ww + sw - 1) / sw;
    Conv2dOpt opt;
    opt.stride_h = sh;
    opt.stride_w = sw;
    const int64_t pad_h = std::max<int64_t>(0, (hout - 1) * sh + kh - hh);
    const int64_t pad_w = std::max<int64_t>(0, (wout - 1) * sw + kw - ww);
    opt.pad_top = static_cast<int>(pad_h / 2);
    opt.pad_bottom = static_cast<int>(pad_h - pad_h / 2);
    opt.pad_left = static_cast<int>(pad_w / 2);
    opt.pad_right = static_cast<int>(pad_w - pad_w / 2);
    const std::string name = "block" + std::to_string(i);
    VarId z = g.conv2d(h, params[name + ".conv.w"], params[name + ".conv.b"], opt);
    z = g.batchnorm2d(z, params[name + ".bn.gamma"], params[name + ".bn.beta"], cfg.bn_eps);
    h = g.glu(z);
    out.features.layers.push_back(h);
    out.features.unit_counts.push_back(g.value(h).numel() / g.value(h).dim(0));
  }
  Conv2dOpt head;
  const int hk = cfg.head_kernel;
  head.pad_top = (hk - 1) / 2;
  head.pad_bottom = hk - 1 - head.pad_top;
  head.pad_left = head.pad_top;
  head.pad_right = head.pad_bottom;
  const VarId score_map = g.conv2d(h, params["head.w"], params["head.b"], head);
  out.score = g.global_mean_pool(score_map);
  return out;
}

namespace {

DiscriminatorVerdict resolve_verdict(Graph& g, const VerdictVars& v) {
  DiscriminatorVerdict out;
  out.score = g.value(v.score)[0];
  for (size_t i = 0; i < v.features.layers.size(); ++i) {
    out.features.layers.push_back(g.value(v.features.layers[i]));
    out.features.unit_counts.push_back(v.features.unit_counts[i]);
  }
  return out;
}

}  // namespace

DiscriminatorVerdict wave_disc_apply(const AudioBuffer& w, const ParamSet& params,
                                     const WaveDiscConfig& cfg) {
  validate_audio(w, "wave_disc_apply");
  Graph g;
  BoundParams bound(g, params, /*requires_grad=*/false);
  const VarId in = g.constant(Tensor({1, w.length()}, w.samples));
  return resolve_verdict(g, wave_disc_forward(g, in, bound, cfg));
}

DiscriminatorVerdict spec_disc_apply(const AudioBuffer& x, const ParamSet& params,
                                     const SpecDiscConfig& cfg, const MelConfig& mel,
                                     const MelNorm& norm) {
  validate_audio(x, "spec_disc_apply");
  Graph g;
  BoundParams bound(g, params, /*requires_grad=*/false);
  const VarId in = g.constant(Tensor({1, x.length()}, x.samples));
  return resolve_verdict(g, spec_disc_forward(g, in, bound, cfg, mel, norm));
}

}  // namespace enhgan
