// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/losses.h"

#include <cmath>
#include <stdexcept>

namespace enhgan {

void validate_loss_weights(const LossWeights& w) {
  const double vals[] = {w.w_l1, w.w_spec, w.w_adv, w.w_fm};
  bool any_positive = false;
  for (double v : vals) {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("LossWeights: weights must be finite and >= 0");
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) throw std::invalid_argument("LossWeights: at least one weight must be > 0");
}

double l1_sample_loss(const AudioBuffer& y, const AudioBuffer& t) {
  if (y.length() != t.length())
    throw std::invalid_argument("l1_sample_loss: length mismatch");
  if (y.length() == 0) throw std::invalid_argument("l1_sample_loss: empty input");
  double acc = 0.0;
  for (int64_t i = 0; i < y.length(); ++i)
    acc += std::abs(y.samples[static_cast<size_t>(i)] - t.samples[static_cast<size_t>(i)]);
  return acc / static_cast<double>(y.length());
}

namespace {

double log_spec_mse(const AudioBuffer& y, const AudioBuffer& t, const SpectrogramConfig& cfg,
                    double eps) {
  const Tensor a = log_spectrogram(y, cfg, eps);
  const Tensor b = log_spectrogram(t, cfg, eps);
  double acc = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.numel());
}

}  // namespace

double multires_spec_loss(const AudioBuffer& y, const AudioBuffer& t,
                          const MultiresSpecConfig& cfg) {
  if (y.length() != t.length())
    throw std::invalid_argument("multires_spec_loss: length mismatch");
  if (y.length() < 512)
    throw std::invalid_argument("multires_spec_loss: need at least 512 samples");
  return 0.5 * log_spec_mse(y, t, cfg.large, cfg.floor_eps) +
         0.5 * log_spec_mse(y, t, cfg.small, cfg.floor_eps);
}

double hinge_g(double score_fake) {
  if (!std::isfinite(score_fake)) throw std::invalid_argument("hinge_g: non-finite score");
  return std::max(1.0 - score_fake, 0.0);
}

double hinge_d(double score_fake, double score_real) {
  if (!std::isfinite(score_fake) || !std::isfinite(score_real))
    throw std::invalid_argument("hinge_d: non-finite score");
  return std::max(1.0 + score_fake, 0.0) + std::max(1.0 - score_real, 0.0);
}

double feature_match(const FeatureMapStack& f_fake, const FeatureMapStack& f_real) {
  if (f_fake.layers.size() != f_real.layers.size() || f_fake.layers.empty())
    throw std::invalid_argument("feature_match: layer count mismatch");
  double total = 0.0;
  for (size_t i = 0; i < f_fake.layers.size(); ++i) {
    const Tensor& a = f_fake.layers[i];
    const Tensor& b = f_real.layers[i];
    if (!a.same_shape(b)) throw std::invalid_argument("feature_match: shape mismatch");
    const int64_t units = f_fake.unit_counts[i];
    const int64_t batch = a.numel() / units;
    if (units <= 0 || batch * units != a.numel())
      throw std::invalid_argument("feature_match: inconsistent unit count");
    double acc = 0.0;
    for (int64_t j = 0; j < a.numel(); ++j) acc += std::abs(a[j] - b[j]);
    total += acc / static_cast<double>(batch * units);
  }
  return total;
}

// ---------------------------------------------------------------------------
// graph builders

VarId l1_loss_op(Graph& g, VarId y, VarId t) { return g.mean_abs(g.sub(y, t)); }

VarId multires_spec_loss_op(Graph& g, VarId y, VarId t, const MultiresSpecConfig& cfg) {
  if (g.value(y).dim(1) < 512)
    throw std::invalid_argument("multires_spec_loss_op: need at least 512 samples");
  const VarId large =
      g.mean_sq(g.sub(g.log_spectrogram_op(y, cfg.large, cfg.floor_eps),
                      g.log_spectrogram_op(t, cfg.large, cfg.floor_eps)));
  const VarId small =
      g.mean_sq(g.sub(g.log_spectrogram_op(y, cfg.small, cfg.floor_eps),
                      g.log_spectrogram_op(t, cfg.small, cfg.floor_eps)));
  return g.weighted_sum({large, small}, {0.5, 0.5});
}

VarId hinge_g_op(Graph& g, VarId score_fake) {
  return g.mean_all(g.relu(g.affine(score_fake, -1.0, 1.0)));
}

VarId hinge_d_op(Graph& g, VarId score_fake, VarId score_real) {
  const VarId fake_term = g.mean_all(g.relu(g.affine(score_fake, 1.0, 1.0)));
  const VarId real_term = g.mean_all(g.relu(g.affine(score_real, -1.0, 1.0)));
  return g.add(fake_term, real_term);
}

VarId feature_match_op(Graph& g, const FeatureStackVars& f_fake, const FeatureStackVars& f_real) {
  if (f_fake.layers.size() != f_real.layers.size() || f_fake.layers.empty())
    throw std::invalid_argument("feature_match_op: layer count mismatch");
  std::vector<VarId> terms;
  terms.reserve(f_fake.layers.size());
  for (size_t i = 0; i < f_fake.layers.size(); ++i)
    terms.push_back(g.mean_abs(g.sub(f_fake.layers[i], f_real.layers[i])));
  return g.weighted_sum(terms, std::vector<double>(terms.size(), 1.0));
}

LossReport GenObjective::report(Graph& g) const {
  LossReport r;
  r.l1_pre = g.scalar_value(l1_pre);
  r.l1_post = g.scalar_value(l1_post);
  r.spec_pre = g.scalar_value(spec_pre);
  r.spec_post = g.scalar_value(spec_post);
  for (int k = 0; k < 4; ++k) {
    r.adv_per_disc[static_cast<size_t>(k)] = g.scalar_value(adv[static_cast<size_t>(k)]);
    r.fm_per_disc[static_cast<size_t>(k)] = g.scalar_value(fm[static_cast<size_t>(k)]);
  }
  r.total_g = g.scalar_value(total);
  return r;
}

GenObjective build_generator_objective(Graph& g, VarId x, VarId target, const GanModules& mods,
                                       const LossWeights& weights,
                                       const MultiresSpecConfig& spec_cfg, bool use_postnet,
                                       bool use_adversarial) {
  validate_loss_weights(weights);
  GenObjective obj;
  obj.gen_out = generator_forward(g, x, *mods.gen, *mods.gen_cfg, use_postnet);

  obj.l1_pre = l1_loss_op(g, obj.gen_out.pre_postnet, target);
  obj.l1_post = use_postnet ? l1_loss_op(g, obj.gen_out.post_postnet, target) : obj.l1_pre;
  obj.spec_pre = multires_spec_loss_op(g, obj.gen_out.pre_postnet, target, spec_cfg);
  obj.spec_post =
      use_postnet ? multires_spec_loss_op(g, obj.gen_out.post_postnet, target, spec_cfg)
                  : obj.spec_pre;

  if (use_adversarial) {
    const auto fake_w = multi_scale_forward(g, obj.gen_out.post_postnet, mods.wave_discs,
                                            *mods.wave_cfg);
    const auto real_w = multi_scale_forward(g, target, mods.wave_discs, *mods.wave_cfg);
    const auto fake_s = spec_disc_forward(g, obj.gen_out.post_postnet, *mods.spec_disc,
                                          *mods.spec_cfg, *mods.mel, mods.mel_norm);
    const auto real_s = spec_disc_forward(g, target, *mods.spec_disc, *mods.spec_cfg, *mods.mel,
                                          mods.mel_norm);
    for (int k = 0; k < 3; ++k) {
      obj.adv[static_cast<size_t>(k)] = hinge_g_op(g, fake_w[static_cast<size_t>(k)].score);
      obj.fm[static_cast<size_t>(k)] = feature_match_op(g, fake_w[static_cast<size_t>(k)].features,
                                                        real_w[static_cast<size_t>(k)].features);
      obj.fake_scores[static_cast<size_t>(k)] = fake_w[static_cast<size_t>(k)].score;
      obj.fake_features[static_cast<size_t>(k)] = fake_w[static_cast<size_t>(k)].features;
      obj.real_features[static_cast<size_t>(k)] = real_w[static_cast<size_t>(k)].features;
    }
    obj.adv[3] = hinge_g_op(g, fake_s.score);
    obj.fm[3] = feature_match_op(g, fake_s.features, real_s.features);
    obj.fake_scores[3] = fake_s.score;
    obj.fake_features[3] = fake_s.features;
    obj.real_features[3] = real_s.features;
  } else {
    for (int k = 0; k < 4; ++k) {
      obj.adv[static_cast<size_t>(k)] = g.constant(Tensor::scalar(0.0));
      obj.fm[static_cast<size_t>(k)] = g.constant(Tensor::scalar(0.0));
    }
  }

  std::vector<VarId> terms = {obj.l1_pre, obj.l1_post, obj.spec_pre, obj.spec_post};
  std::vector<double> ws = {weights.w_l1, weights.w_l1, weights.w_spec, weights.w_spec};
  for (int k = 0; k < 4; ++k) {
    terms.push_back(obj.adv[static_cast<size_t>(k)]);
    ws.push_back(weights.w_adv);
  }
  for (int k = 0; k < 4; ++k) {
    terms.push_back(obj.fm[static_cast<size_t>(k)]);
    ws.push_back(weights.w_fm);
  }
  obj.total = g.weighted_sum(terms, ws);
  return obj;
}

DiscObjective build_discriminator_objective(Graph& g, VarId x, VarId target,
                                            const GanModules& mods, bool use_postnet) {
  // The generator output is detached: discriminator losses never push
  // gradient into generator parameters.
  const GeneratorOutputVars out = generator_forward(g, x, *mods.gen, *mods.gen_cfg, use_postnet);
  const VarId fake = g.constant(g.value(out.post_postnet));

  const auto fake_w = multi_scale_forward(g, fake, mods.wave_discs, *mods.wave_cfg);
  const auto real_w = multi_scale_forward(g, target, mods.wave_discs, *mods.wave_cfg);
  const auto fake_s =
      spec_disc_forward(g, fake, *mods.spec_disc, *mods.spec_cfg, *mods.mel, mods.mel_norm);
  const auto real_s =
      spec_disc_forward(g, target, *mods.spec_disc, *mods.spec_cfg, *mods.mel, mods.mel_norm);

  DiscObjective obj;
  for (int k = 0; k < 3; ++k) {
    obj.score_fake[static_cast<size_t>(k)] = fake_w[static_cast<size_t>(k)].score;
    obj.score_real[static_cast<size_t>(k)] = real_w[static_cast<size_t>(k)].score;
    obj.losses[static_cast<size_t>(k)] = hinge_d_op(g, fake_w[static_cast<size_t>(k)].score,
                                                    real_w[static_cast<size_t>(k)].score);
  }
  obj.score_fake[3] = fake_s.score;
  obj.score_real[3] = real_s.score;
  obj.losses[3] = hinge_d_op(g, fake_s.score, real_s.score);
  return obj;
}

}  // namespace enhgan
