// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <string>

#include "enhgan/discriminators.h"
#include "enhgan/generator.h"
#include "enhgan/graph.h"

namespace enhgan {

struct LossWeights {
  double w_l1 = 100.0;
  double w_spec = 1.0;
  double w_adv = 1.0;
  double w_fm = 10.0;
};

void validate_loss_weights(const LossWeights& w);

// Dual-resolution log-spectrogram loss configuration: an equally weighted
// pair of L2 losses on log magnitudes, one high-frequency-resolution and one
// high-time-resolution.
struct MultiresSpecConfig {
  SpectrogramConfig large{2048, 512, "hann", true};
  SpectrogramConfig small{512, 128, "hann", true};
  double floor_eps = 1e-5;
};

// Discriminator order used by every 4-element array in the toolkit:
// [wave 16k, wave 8k, wave 4k, spectrogram].
struct LossReport {
  double l1_pre = 0.0, l1_post = 0.0;
  double spec_pre = 0.0, spec_post = 0.0;
  std::array<double, 4> adv_per_disc{};
  std::array<double, 4> fm_per_disc{};
  std::array<double, 4> d_losses{};
  double total_g = 0.0;
};

// ---- plain (value-level) losses; the graph builders compute the same math ----

double l1_sample_loss(const AudioBuffer& y, const AudioBuffer& t);
double multires_spec_loss(const AudioBuffer& y, const AudioBuffer& t,
                          const MultiresSpecConfig& cfg = {});
// Eq-style hinge pair: generator term max(1 - score, 0); discriminator term
// max(1 + score_fake, 0) + max(1 - score_real, 0).
double hinge_g(double score_fake);
double hinge_d(double score_fake, double score_real);
// Sum over layers of per-unit-normalized L1 feature distance; batched stacks
// average over the batch dimension.
double feature_match(const FeatureMapStack& f_fake, const FeatureMapStack& f_real);

// ---- graph builders ----

VarId l1_loss_op(Graph& g, VarId y, VarId t);
VarId multires_spec_loss_op(Graph& g, VarId y, VarId t, const MultiresSpecConfig& cfg = {});
VarId hinge_g_op(Graph& g, VarId score_fake);
VarId hinge_d_op(Graph& g, VarId score_fake, VarId score_real);
VarId feature_match_op(Graph& g, const FeatureStackVars& f_fake, const FeatureStackVars& f_real);

// Everything bound for one training step.
struct GanModules {
  const GeneratorConfig* gen_cfg = nullptr;
  const BoundParams* gen = nullptr;
  const WaveDiscConfig* wave_cfg = nullptr;
  std::array<const BoundParams*, 3> wave_discs = {nullptr, nullptr, nullptr};
  const SpecDiscConfig* spec_cfg = nullptr;
  const BoundParams* spec_disc = nullptr;
  const MelConfig* mel = nullptr;
  MelNorm mel_norm;
};

struct GenObjective {
  GeneratorOutputVars gen_out{Graph::kNoVar, Graph::kNoVar};
  VarId l1_pre = Graph::kNoVar, l1_post = Graph::kNoVar;
  VarId spec_pre = Graph::kNoVar, spec_post = Graph::kNoVar;
  std::array<VarId, 4> adv{};
  std::array<VarId, 4> fm{};
  VarId total = Graph::kNoVar;
  // Raw verdicts (populated only when adversarial terms are active).
  std::array<VarId, 4> fake_scores{Graph::kNoVar, Graph::kNoVar, Graph::kNoVar, Graph::kNoVar};
  std::array<FeatureStackVars, 4> fake_features{};
  std::array<FeatureStackVars, 4> real_features{};

  LossReport report(Graph& g) const;
};

// Full generator objective:
//   total = w_l1 (l1_pre + l1_post) + w_spec (spec_pre + spec_post)
//         + w_adv sum_k adv_k + w_fm sum_k fm_k
// Adversarial and feature-matching terms attach to the post-postnet output
// only. With use_adversarial false the discriminators are not evaluated and
// those terms are exact zeros.
GenObjective build_generator_objective(Graph& g, VarId x, VarId target, const GanModules& mods,
                                       const LossWeights& weights,
                                       const MultiresSpecConfig& spec_cfg, bool use_postnet,
                                       bool use_adversarial);

struct DiscObjective {
  std::array<VarId, 4> losses{};
  std::array<VarId, 4> score_fake{};
  std::array<VarId, 4> score_real{};
};

// Per-discriminator hinge objective. The generator runs inside with
// gradients disabled, so no gradient reaches generator parameters.
DiscObjective build_discriminator_objective(Graph& g, VarId x, VarId target,
                                            const GanModules& mods, bool use_postnet);

}  // namespace enhgan
