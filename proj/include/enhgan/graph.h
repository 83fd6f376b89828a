// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <vector>

#include "enhgan/dsp.h"
#include "enhgan/tensor.h"

namespace enhgan {

// Reverse-mode autodiff over a per-step tape. Graphs are built fresh for each
// training step and discarded afterwards; node values live on the tape, so a
// forward pass followed by backward() yields gradients for every grad-enabled
// leaf. All ops are deterministic (fixed loop order, single thread).
using VarId = int32_t;

enum class PadMode { kZero, kReflect };

struct Conv1dOpt {
  int stride = 1;
  int dilation = 1;
  int groups = 1;
  PadMode pad_mode = PadMode::kZero;
  int pad_left = 0;
  int pad_right = 0;
};

struct Conv2dOpt {
  int stride_h = 1;
  int stride_w = 1;
  int pad_top = 0;
  int pad_bottom = 0;
  int pad_left = 0;
  int pad_right = 0;
};

class Graph {
 public:
  static constexpr VarId kNoVar = -1;

  VarId leaf(const Tensor& value, bool requires_grad);
  VarId constant(const Tensor& value) { return leaf(value, false); }

  const Tensor& value(VarId id) const { return nodes_[static_cast<size_t>(id)].value; }
  double scalar_value(VarId id) const;
  bool requires_grad(VarId id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
  // Gradient of the last backward() root w.r.t. this node (zeros if unused).
  const Tensor& grad(VarId id);

  // Accumulates into leaf gradients; root must be scalar.
  void backward(VarId root);

  size_t size() const { return nodes_.size(); }

  // Inference mode: callers may drop_value() nodes they know are dead so long
  // forwards do not hold the whole tape. No-op when gradients are required.
  void set_inference(bool on) { inference_ = on; }
  bool inference() const { return inference_; }
  void drop_value(VarId id);

  // ---- elementwise / scalar ----
  VarId add(VarId a, VarId b);
  VarId sub(VarId a, VarId b);
  VarId mul(VarId a, VarId b);
  VarId affine(VarId x, double scale, double shift);
  VarId tanh_op(VarId x);
  VarId sigmoid_op(VarId x);
  VarId relu(VarId x);
  VarId leaky_relu(VarId x, double negative_slope);
  VarId reshape(VarId x, std::vector<int64_t> shape);

  // ---- reductions (scalar results) ----
  VarId mean_all(VarId x);
  VarId mean_abs(VarId x);
  VarId mean_sq(VarId x);
  VarId weighted_sum(const std::vector<VarId>& xs, const std::vector<double>& ws);

  // ---- structured ----
  // x: (N, Cin, L), w: (Cout, Cin/groups, K), b: (Cout) or kNoVar.
  VarId conv1d(VarId x, VarId w, VarId b, const Conv1dOpt& opt);
  // x: (N, Cin, H, W), w: (Cout, Cin, KH, KW), zero padding.
  VarId conv2d(VarId x, VarId w, VarId b, const Conv2dOpt& opt);
  // Per-channel batch statistics over (N, H, W); training mode only.
  VarId batchnorm2d(VarId x, VarId gamma, VarId beta, double eps = 1e-5);
  // Split dim 1 in half: value * sigmoid(gate).
  VarId glu(VarId x);
  // Split dim 1 in half: tanh(filter) * sigmoid(gate).
  VarId gated_tanh(VarId x);
  // (N, C, L) -> (N, C, floor(L/2)); kernel 4, stride 2, reflection pad 1.
  VarId avg_pool_half(VarId x);
  // (N, C, ...) -> (N,): mean over every non-batch dim.
  VarId global_mean_pool(VarId x);

  // ---- differentiable spectrogram front ends ----
  // wave: (N, L) -> (N, bins, frames) of log(|STFT| + eps).
  VarId log_spectrogram_op(VarId wave, const SpectrogramConfig& cfg, double floor_eps);
  // wave: (N, L) -> (N, 1, n_mels, frames) of log(mel |STFT| + eps).
  VarId log_mel_op(VarId wave, const MelConfig& cfg, double floor_eps);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_alloc = false;
    std::function<void(Graph&)> backfn;
  };

  VarId push(Tensor value, bool requires_grad, std::function<void(Graph&)> backfn);
  Tensor& grad_buf(VarId id);
  bool any_grad(std::initializer_list<VarId> ids) const;

  std::vector<Node> nodes_;
  bool inference_ = false;
};

}  // namespace enhgan
