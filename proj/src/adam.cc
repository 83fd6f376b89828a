// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/adam.h"

#include <cmath>
#include <stdexcept>

namespace enhgan {

AdamState::AdamState(const ParamSet& params) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params.item(i).second.shape());
    v_.emplace_back(params.item(i).second.shape());
  }
}

void AdamState::step(ParamSet& params, const std::vector<Tensor>& grads, const AdamConfig& cfg) {
  if (grads.size() != m_.size())
    throw std::invalid_argument("AdamState::step: gradient slot count mismatch");

  double norm_sq = 0.0;
  for (const Tensor& g : grads)
    for (int64_t i = 0; i < g.numel(); ++i) norm_sq += g[i] * g[i];
  const double norm = std::sqrt(norm_sq);
  const double scale = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (size_t s = 0; s < m_.size(); ++s) {
    Tensor& p = params.item(s).second;
    const Tensor& g = grads[s];
    if (!p.same_shape(g))
      throw std::invalid_argument("AdamState::step: gradient shape mismatch at slot " +
                                  params.item(s).first);
    Tensor& m = m_[s];
    Tensor& v = v_[s];
    for (int64_t i = 0; i < p.numel(); ++i) {
      const double gi = g[i] * scale;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace enhgan
