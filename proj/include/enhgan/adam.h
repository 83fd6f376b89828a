// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "enhgan/params.h"
#include "enhgan/tensor.h"

namespace enhgan {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 10.0;  // global-norm clip per parameter group; <= 0 disables
};

// Adam moments for one ParamSet; slot order mirrors the set's definition
// order. Serialized alongside the parameters so resume is bit-exact.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const ParamSet& params);

  void step(ParamSet& params, const std::vector<Tensor>& grads, const AdamConfig& cfg);

  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }
  size_t slots() const { return m_.size(); }
  Tensor& m(size_t i) { return m_[i]; }
  Tensor& v(size_t i) { return v_[i]; }
  const Tensor& m(size_t i) const { return m_[i]; }
  const Tensor& v(size_t i) const { return v_[i]; }

 private:
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

}  // namespace enhgan
