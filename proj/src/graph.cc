// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/graph.h"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>

#include "enhgan/fft.h"

namespace enhgan {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

// Padded-position -> source index; -1 means zero fill.
std::vector<int64_t> pad_map(int64_t len, int pad_left, int pad_right, PadMode mode) {
  std::vector<int64_t> map(static_cast<size_t>(len + pad_left + pad_right));
  for (int64_t i = 0; i < static_cast<int64_t>(map.size()); ++i) {
    const int64_t src = i - pad_left;
    if (src >= 0 && src < len)
      map[static_cast<size_t>(i)] = src;
    else
      map[static_cast<size_t>(i)] = mode == PadMode::kReflect ? reflect_index(src, len) : -1;
  }
  return map;
}

}  // namespace

VarId Graph::push(Tensor value, bool requires_grad, std::function<void(Graph&)> backfn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backfn = requires_grad ? std::move(backfn) : nullptr;
  nodes_.push_back(std::move(n));
  return static_cast<VarId>(nodes_.size() - 1);
}

VarId Graph::leaf(const Tensor& value, bool requires_grad) {
  return push(value, requires_grad, nullptr);
}

double Graph::scalar_value(VarId id) const {
  const Tensor& t = value(id);
  if (t.numel() != 1) throw std::invalid_argument("scalar_value: node is not scalar");
  return t[0];
}

Tensor& Graph::grad_buf(VarId id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.grad_alloc) {
    n.grad = Tensor(n.value.shape());
    n.grad_alloc = true;
  }
  return n.grad;
}

const Tensor& Graph::grad(VarId id) { return grad_buf(id); }

void Graph::drop_value(VarId id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (inference_ && !n.requires_grad) n.value = Tensor();
}

bool Graph::any_grad(std::initializer_list<VarId> ids) const {
  for (VarId id : ids)
    if (id != kNoVar && nodes_[static_cast<size_t>(id)].requires_grad) return true;
  return false;
}

void Graph::backward(VarId root) {
  if (value(root).numel() != 1) throw std::invalid_argument("backward: root must be scalar");
  if (!nodes_[static_cast<size_t>(root)].requires_grad) return;
  grad_buf(root)[0] += 1.0;
  for (VarId i = root; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.grad_alloc && n.backfn) n.backfn(*this);
  }
}

// ---------------------------------------------------------------------------
// elementwise

VarId Graph::add(VarId a, VarId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw std::invalid_argument("add: shape mismatch");
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.numel(); ++i) out[i] = ta[i] + tb[i];
  VarId id = push(std::move(out), any_grad({a, b}), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, a, b](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    if (g.requires_grad(a)) {
      Tensor& ga = g.grad_buf(a);
      for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
    }
    if (g.requires_grad(b)) {
      Tensor& gb = g.grad_buf(b);
      for (int64_t i = 0; i < go.numel(); ++i) gb[i] += go[i];
    }
  };
  return id;
}

VarId Graph::sub(VarId a, VarId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw std::invalid_argument("sub: shape mismatch");
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.numel(); ++i) out[i] = ta[i] - tb[i];
  VarId id = push(std::move(out), any_grad({a, b}), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, a, b](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    if (g.requires_grad(a)) {
      Tensor& ga = g.grad_buf(a);
      for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
    }
    if (g.requires_grad(b)) {
      Tensor& gb = g.grad_buf(b);
      for (int64_t i = 0; i < go.numel(); ++i) gb[i] -= go[i];
    }
  };
  return id;
}

VarId Graph::mul(VarId a, VarId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw std::invalid_argument("mul: shape mismatch");
  Tensor out(ta.shape());
  for (int64_t i = 0; i < ta.numel(); ++i) out[i] = ta[i] * tb[i];
  VarId id = push(std::move(out), any_grad({a, b}), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, a, b](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    const Tensor& va = g.value(a);
    const Tensor& vb = g.value(b);
    if (g.requires_grad(a)) {
      Tensor& ga = g.grad_buf(a);
      for (int64_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * vb[i];
    }
    if (g.requires_grad(b)) {
      Tensor& gb = g.grad_buf(b);
      for (int64_t i = 0; i < go.numel(); ++i) gb[i] += go[i] * va[i];
    }
  };
  return id;
}

VarId Graph::affine(VarId x, double scale, double shift) {
  const Tensor& tx = value(x);
  Tensor out(tx.shape());
  for (int64_t i = 0; i < tx.numel(); ++i) out[i] = scale * tx[i] + shift;
  VarId id = push(std::move(out), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, scale](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    Tensor& gx = g.grad_buf(x);
    for (int64_t i = 0; i < go.numel(); ++i) gx[i] += scale * go[i];
  };
  return id;
}

VarId Graph::tanh_op(VarId x) {
  const Tensor& tx = value(x);
  Tensor out(tx.shape());
  for (int64_t i = 0; i < tx.numel(); ++i) out[i] = std::tanh(tx[i]);
  VarId id = push(std::move(out), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    const Tensor& vo = g.value(id);
    Tensor& gx = g.grad_buf(x);
    for (int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i] * (1.0 - vo[i] * vo[i]);
  };
  return id;
}

VarId Graph::sigmoid_op(VarId x) {
  const Tensor& tx = value(x);
  Tensor out(tx.shape());
  for (int64_t i = 0; i < tx.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-tx[i]));
  VarId id = push(std::move(out), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    const Tensor& vo = g.value(id);
    Tensor& gx = g.grad_buf(x);
    for (int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i] * vo[i] * (1.0 - vo[i]);
  };
  return id;
}

VarId Graph::relu(VarId x) { return leaky_relu(x, 0.0); }

VarId Graph::leaky_relu(VarId x, double negative_slope) {
  const Tensor& tx = value(x);
  Tensor out(tx.shape());
  for (int64_t i = 0; i < tx.numel(); ++i)
    out[i] = tx[i] > 0.0 ? tx[i] : negative_slope * tx[i];
  VarId id = push(std::move(out), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, negative_slope](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    const Tensor& vx = g.value(x);
    Tensor& gx = g.grad_buf(x);
    for (int64_t i = 0; i < go.numel(); ++i)
      gx[i] += go[i] * (vx[i] > 0.0 ? 1.0 : negative_slope);
  };
  return id;
}

VarId Graph::reshape(VarId x, std::vector<int64_t> shape) {
  const Tensor& tx = value(x);
  if (Tensor::numel_of(shape) != tx.numel()) throw std::invalid_argument("reshape: numel mismatch");
  Tensor out(std::move(shape), tx.vec());
  VarId id = push(std::move(out), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    Tensor& gx = g.grad_buf(x);
    for (int64_t i = 0; i < go.numel(); ++i) gx[i] += go[i];
  };
  return id;
}

// ---------------------------------------------------------------------------
// reductions

VarId Graph::mean_all(VarId x) {
  const Tensor& tx = value(x);
  double acc = 0.0;
  for (int64_t i = 0; i < tx.numel(); ++i) acc += tx[i];
  const double inv = 1.0 / static_cast<double>(tx.numel());
  VarId id = push(Tensor::scalar(acc * inv), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, inv](Graph& g) {
    const double go = g.grad_buf(id)[0];
    Tensor& gx = g.grad_buf(x);
    for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += go * inv;
  };
  return id;
}

VarId Graph::mean_abs(VarId x) {
  const Tensor& tx = value(x);
  double acc = 0.0;
  for (int64_t i = 0; i < tx.numel(); ++i) acc += std::abs(tx[i]);
  const double inv = 1.0 / static_cast<double>(tx.numel());
  VarId id = push(Tensor::scalar(acc * inv), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, inv](Graph& g) {
    const double go = g.grad_buf(id)[0];
    const Tensor& vx = g.value(x);
    Tensor& gx = g.grad_buf(x);
    for (int64_t i = 0; i < gx.numel(); ++i)
      gx[i] += go * inv * (vx[i] > 0.0 ? 1.0 : (vx[i] < 0.0 ? -1.0 : 0.0));
  };
  return id;
}

VarId Graph::mean_sq(VarId x) {
  const Tensor& tx = value(x);
  double acc = 0.0;
  for (int64_t i = 0; i < tx.numel(); ++i) acc += tx[i] * tx[i];
  const double inv = 1.0 / static_cast<double>(tx.numel());
  VarId id = push(Tensor::scalar(acc * inv), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, inv](Graph& g) {
    const double go = g.grad_buf(id)[0];
    const Tensor& vx = g.value(x);
    Tensor& gx = g.grad_buf(x);
    for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += go * inv * 2.0 * vx[i];
  };
  return id;
}

VarId Graph::weighted_sum(const std::vector<VarId>& xs, const std::vector<double>& ws) {
  if (xs.size() != ws.size() || xs.empty())
    throw std::invalid_argument("weighted_sum: size mismatch or empty");
  double acc = 0.0;
  bool rg = false;
  for (size_t i = 0; i < xs.size(); ++i) {
    acc += ws[i] * scalar_value(xs[i]);
    rg = rg || requires_grad(xs[i]);
  }
  VarId id = push(Tensor::scalar(acc), rg, nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, xs, ws](Graph& g) {
    const double go = g.grad_buf(id)[0];
    for (size_t i = 0; i < xs.size(); ++i)
      if (g.requires_grad(xs[i])) g.grad_buf(xs[i])[0] += go * ws[i];
  };
  return id;
}

// ---------------------------------------------------------------------------
// conv1d

VarId Graph::conv1d(VarId x, VarId w, VarId b, const Conv1dOpt& opt) {
  const Tensor& tx = value(x);
  const Tensor& tw = value(w);
  if (tx.ndim() != 3 || tw.ndim() != 3) throw std::invalid_argument("conv1d: expect 3-d tensors");
  const int64_t batch = tx.dim(0), cin = tx.dim(1), len = tx.dim(2);
  const int64_t cout = tw.dim(0), cin_pg = tw.dim(1), k = tw.dim(2);
  const int64_t groups = opt.groups;
  if (cin % groups != 0 || cout % groups != 0 || cin / groups != cin_pg)
    throw std::invalid_argument("conv1d: channel/group mismatch");
  if (b != kNoVar && value(b).numel() != cout)
    throw std::invalid_argument("conv1d: bias size mismatch");
  const int64_t span = (k - 1) * opt.dilation + 1;
  const int64_t padded = len + opt.pad_left + opt.pad_right;
  if (padded < span) throw std::invalid_argument("conv1d: input shorter than kernel span");
  const int64_t lout = (padded - span) / opt.stride + 1;
  const int64_t cout_pg = cout / groups;

  auto map = std::make_shared<std::vector<int64_t>>(
      pad_map(len, opt.pad_left, opt.pad_right, opt.pad_mode));

  Tensor out({batch, cout, lout});
  std::vector<double> col(static_cast<size_t>(cin_pg * k * lout));
  for (int64_t n = 0; n < batch; ++n) {
    for (int64_t g = 0; g < groups; ++g) {
      // col is (cin_pg*k) x lout, row-major
      for (int64_t c = 0; c < cin_pg; ++c) {
        const double* xrow = tx.data() + ((n * cin) + g * cin_pg + c) * len;
        for (int64_t j = 0; j < k; ++j) {
          double* crow = col.data() + (c * k + j) * lout;
          for (int64_t t = 0; t < lout; ++t) {
            const int64_t src = (*map)[static_cast<size_t>(t * opt.stride + j * opt.dilation)];
            crow[t] = src >= 0 ? xrow[src] : 0.0;
          }
        }
      }
      CMapRM wm(tw.data() + g * cout_pg * cin_pg * k, cout_pg, cin_pg * k);
      CMapRM cm(col.data(), cin_pg * k, lout);
      MapRM om(out.data() + ((n * cout) + g * cout_pg) * lout, cout_pg, lout);
      om.noalias() = wm * cm;
    }
    if (b != kNoVar) {
      const Tensor& tb = value(b);
      for (int64_t c = 0; c < cout; ++c) {
        double* orow = out.data() + ((n * cout) + c) * lout;
        for (int64_t t = 0; t < lout; ++t) orow[t] += tb[c];
      }
    }
  }

  Conv1dOpt o = opt;
  VarId id = push(std::move(out), any_grad({x, w, b}), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, w, b, o, map, batch, cin, len, cout, cin_pg, k,
                                            lout, groups, cout_pg](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    const Tensor& tx = g.value(x);
    const Tensor& tw = g.value(w);
    const bool need_x = g.requires_grad(x);
    const bool need_w = g.requires_grad(w);
    const bool need_b = b != Graph::kNoVar && g.requires_grad(b);

    std::vector<double> col(static_cast<size_t>(cin_pg * k * lout));
    std::vector<double> dcol(static_cast<size_t>(cin_pg * k * lout));
    for (int64_t n = 0; n < batch; ++n) {
      for (int64_t grp = 0; grp < groups; ++grp) {
        CMapRM gom(go.data() + ((n * cout) + grp * cout_pg) * lout, cout_pg, lout);
        if (need_w) {
          for (int64_t c = 0; c < cin_pg; ++c) {
            const double* xrow = tx.data() + ((n * cin) + grp * cin_pg + c) * len;
            for (int64_t j = 0; j < k; ++j) {
              double* crow = col.data() + (c * k + j) * lout;
              for (int64_t t = 0; t < lout; ++t) {
                const int64_t src = (*map)[static_cast<size_t>(t * o.stride + j * o.dilation)];
                crow[t] = src >= 0 ? xrow[src] : 0.0;
              }
            }
          }
          CMapRM cm(col.data(), cin_pg * k, lout);
          MapRM gwm(g.grad_buf(w).data() + grp * cout_pg * cin_pg * k, cout_pg, cin_pg * k);
          gwm.noalias() += gom * cm.transpose();
        }
        if (need_x) {
          CMapRM wm(tw.data() + grp * cout_pg * cin_pg * k, cout_pg, cin_pg * k);
          MapRM dcm(dcol.data(), cin_pg * k, lout);
          dcm.noalias() = wm.transpose() * gom;
          Tensor& gx = g.grad_buf(x);
          for (int64_t c = 0; c < cin_pg; ++c) {
            double* gxrow = gx.data() + ((n * cin) + grp * cin_pg + c) * len;
            for (int64_t j = 0; j < k; ++j) {
              const double* drow = dcol.data() + (c * k + j) * lout;
              for (int64_t t = 0; t < lout; ++t) {
                const int64_t src = (*map)[static_cast<size_t>(t * o.stride + j * o.dilation)];
                if (src >= 0) gxrow[src] += drow[t];
              }
            }
          }
        }
      }
      if (need_b) {
        Tensor& gb = g.grad_buf(b);
        for (int64_t c = 0; c < cout; ++c) {
          const double* gorow = go.data() + ((n * cout) + c) * lout;
          double acc = 0.0;
          for (int64_t t = 0; t < lout; ++t) acc += gorow[t];
          gb[c] += acc;
        }
      }
    }
  };
  return id;
}

// ---------------------------------------------------------------------------
// conv2d (zero padding)

VarId Graph::conv2d(VarId x, VarId w, VarId b, const Conv2dOpt& opt) {
  const Tensor& tx = value(x);
  const Tensor& tw = value(w);
  if (tx.ndim() != 4 || tw.ndim() != 4) throw std::invalid_argument("conv2d: expect 4-d tensors");
  const int64_t batch = tx.dim(0), cin = tx.dim(1), h = tx.dim(2), wdt = tx.dim(3);
  const int64_t cout = tw.dim(0), kh = tw.dim(2), kw = tw.dim(3);
  if (tw.dim(1) != cin) throw std::invalid_argument("conv2d: channel mismatch");
  if (b != kNoVar && value(b).numel() != cout)
    throw std::invalid_argument("conv2d: bias size mismatch");
  const int64_t hp = h + opt.pad_top + opt.pad_bottom;
  const int64_t wp = wdt + opt.pad_left + opt.pad_right;
  if (hp < kh || wp < kw) throw std::invalid_argument("conv2d: input smaller than kernel");
  const int64_t hout = (hp - kh) / opt.stride_h + 1;
  const int64_t wout = (wp - kw) / opt.stride_w + 1;

  const int64_t rows = cin * kh * kw;
  const int64_t cols = hout * wout;

  auto fill_col = [=](const double* xn, std::vector<double>& col) {
    for (int64_t c = 0; c < cin; ++c) {
      const double* xc = xn + c * h * wdt;
      for (int64_t i = 0; i < kh; ++i) {
        for (int64_t j = 0; j < kw; ++j) {
          double* crow = col.data() + ((c * kh + i) * kw + j) * cols;
          for (int64_t oh = 0; oh < hout; ++oh) {
            const int64_t ih = oh * opt.stride_h + i - opt.pad_top;
            const bool hok = ih >= 0 && ih < h;
            for (int64_t ow = 0; ow < wout; ++ow) {
              const int64_t iw = ow * opt.stride_w + j - opt.pad_left;
              crow[oh * wout + ow] =
                  (hok && iw >= 0 && iw < wdt) ? xc[ih * wdt + iw] : 0.0;
            }
          }
        }
      }
    }
  };

  Tensor out({batch, cout, hout, wout});
  std::vector<double> col(static_cast<size_t>(rows * cols));
  for (int64_t n = 0; n < batch; ++n) {
    fill_col(tx.data() + n * cin * h * wdt, col);
    CMapRM wm(tw.data(), cout, rows);
    CMapRM cm(col.data(), rows, cols);
    MapRM om(out.data() + n * cout * cols, cout, cols);
    om.noalias() = wm * cm;
    if (b != kNoVar) {
      const Tensor& tb = value(b);
      for (int64_t c = 0; c < cout; ++c) {
        double* orow = out.data() + (n * cout + c) * cols;
        for (int64_t t = 0; t < cols; ++t) orow[t] += tb[c];
      }
    }
  }

  Conv2dOpt o = opt;
  VarId id = push(std::move(out), any_grad({x, w, b}), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, w, b, o, batch, cin, h, wdt, cout, kh, kw, hout,
                                            wout, rows, cols, fill_col](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    const Tensor& tx = g.value(x);
    const Tensor& tw = g.value(w);
    const bool need_x = g.requires_grad(x);
    const bool need_w = g.requires_grad(w);
    const bool need_b = b != Graph::kNoVar && g.requires_grad(b);

    std::vector<double> col(static_cast<size_t>(rows * cols));
    std::vector<double> dcol(static_cast<size_t>(rows * cols));
    for (int64_t n = 0; n < batch; ++n) {
      CMapRM gom(go.data() + n * cout * cols, cout, cols);
      if (need_w) {
        fill_col(tx.data() + n * cin * h * wdt, col);
        CMapRM cm(col.data(), rows, cols);
        MapRM gwm(g.grad_buf(w).data(), cout, rows);
        gwm.noalias() += gom * cm.transpose();
      }
      if (need_x) {
        CMapRM wm(tw.data(), cout, rows);
        MapRM dcm(dcol.data(), rows, cols);
        dcm.noalias() = wm.transpose() * gom;
        double* gxn = g.grad_buf(x).data() + n * cin * h * wdt;
        for (int64_t c = 0; c < cin; ++c) {
          double* gxc = gxn + c * h * wdt;
          for (int64_t i = 0; i < kh; ++i) {
            for (int64_t j = 0; j < kw; ++j) {
              const double* drow = dcol.data() + ((c * kh + i) * kw + j) * cols;
              for (int64_t oh = 0; oh < hout; ++oh) {
                const int64_t ih = oh * o.stride_h + i - o.pad_top;
                if (ih < 0 || ih >= h) continue;
                for (int64_t ow = 0; ow < wout; ++ow) {
                  const int64_t iw = ow * o.stride_w + j - o.pad_left;
                  if (iw >= 0 && iw < wdt) gxc[ih * wdt + iw] += drow[oh * wout + ow];
                }
              }
            }
          }
        }
      }
      if (need_b) {
        Tensor& gb = g.grad_buf(b);
        for (int64_t c = 0; c < cout; ++c) {
          const double* gorow = go.data() + (n * cout + c) * cols;
          double acc = 0.0;
          for (int64_t t = 0; t < cols; ++t) acc += gorow[t];
          gb[c] += acc;
        }
      }
    }
  };
  return id;
}

// ---------------------------------------------------------------------------
// batchnorm2d

VarId Graph::batchnorm2d(VarId x, VarId gamma, VarId beta, double eps) {
  const Tensor& tx = value(x);
  if (tx.ndim() != 4) throw std::invalid_argument("batchnorm2d: expect 4-d tensor");
  const int64_t batch = tx.dim(0), ch = tx.dim(1), spatial = tx.dim(2) * tx.dim(3);
  if (value(gamma).numel() != ch || value(beta).numel() != ch)
    throw std::invalid_argument("batchnorm2d: gamma/beta size mismatch");
  const int64_t m = batch * spatial;

  auto xhat = std::make_shared<Tensor>(tx.shape());
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(ch));
  Tensor out(tx.shape());
  const Tensor& tg = value(gamma);
  const Tensor& tb = value(beta);
  for (int64_t c = 0; c < ch; ++c) {
    double mean = 0.0;
    for (int64_t n = 0; n < batch; ++n) {
      const double* p = tx.data() + (n * ch + c) * spatial;
      for (int64_t s = 0; s < spatial; ++s) mean += p[s];
    }
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (int64_t n = 0; n < batch; ++n) {
      const double* p = tx.data() + (n * ch + c) * spatial;
      for (int64_t s = 0; s < spatial; ++s) var += (p[s] - mean) * (p[s] - mean);
    }
    var /= static_cast<double>(m);
    const double istd = 1.0 / std::sqrt(var + eps);
    (*inv_std)[static_cast<size_t>(c)] = istd;
    for (int64_t n = 0; n < batch; ++n) {
      const double* p = tx.data() + (n * ch + c) * spatial;
      double* ph = xhat->data() + (n * ch + c) * spatial;
      double* po = out.data() + (n * ch + c) * spatial;
      for (int64_t s = 0; s < spatial; ++s) {
        ph[s] = (p[s] - mean) * istd;
        po[s] = tg[c] * ph[s] + tb[c];
      }
    }
  }

  VarId id = push(std::move(out), any_grad({x, gamma, beta}), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, gamma, beta, xhat, inv_std, batch, ch, spatial,
                                            m](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    const Tensor& tg = g.value(gamma);
    const bool need_x = g.requires_grad(x);
    for (int64_t c = 0; c < ch; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int64_t n = 0; n < batch; ++n) {
        const double* pgo = go.data() + (n * ch + c) * spatial;
        const double* ph = xhat->data() + (n * ch + c) * spatial;
        for (int64_t s = 0; s < spatial; ++s) {
          sum_dy += pgo[s];
          sum_dy_xhat += pgo[s] * ph[s];
        }
      }
      if (g.requires_grad(beta)) g.grad_buf(beta)[c] += sum_dy;
      if (g.requires_grad(gamma)) g.grad_buf(gamma)[c] += sum_dy_xhat;
      if (need_x) {
        const double istd = (*inv_std)[static_cast<size_t>(c)];
        const double k1 = sum_dy / static_cast<double>(m);
        const double k2 = sum_dy_xhat / static_cast<double>(m);
        Tensor& gx = g.grad_buf(x);
        for (int64_t n = 0; n < batch; ++n) {
          const double* pgo = go.data() + (n * ch + c) * spatial;
          const double* ph = xhat->data() + (n * ch + c) * spatial;
          double* pgx = gx.data() + (n * ch + c) * spatial;
          for (int64_t s = 0; s < spatial; ++s)
            pgx[s] += tg[c] * istd * (pgo[s] - k1 - ph[s] * k2);
        }
      }
    }
  };
  return id;
}

// ---------------------------------------------------------------------------
// glu / pooling

VarId Graph::glu(VarId x) {
  const Tensor& tx = value(x);
  if (tx.ndim() < 2 || tx.dim(1) % 2 != 0)
    throw std::invalid_argument("glu: dim 1 must be even");
  const int64_t batch = tx.dim(0), ch = tx.dim(1), half = ch / 2;
  int64_t spatial = 1;
  for (int d = 2; d < tx.ndim(); ++d) spatial *= tx.dim(d);

  std::vector<int64_t> oshape = tx.shape();
  oshape[1] = half;
  Tensor out(oshape);
  for (int64_t n = 0; n < batch; ++n) {
    for (int64_t c = 0; c < half; ++c) {
      const double* pa = tx.data() + (n * ch + c) * spatial;
      const double* pb = tx.data() + (n * ch + half + c) * spatial;
      double* po = out.data() + (n * half + c) * spatial;
      for (int64_t s = 0; s < spatial; ++s) po[s] = pa[s] / (1.0 + std::exp(-pb[s]));
    }
  }
  VarId id = push(std::move(out), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, batch, ch, half, spatial](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    const Tensor& vx = g.value(x);
    Tensor& gx = g.grad_buf(x);
    for (int64_t n = 0; n < batch; ++n) {
      for (int64_t c = 0; c < half; ++c) {
        const double* pa = vx.data() + (n * ch + c) * spatial;
        const double* pb = vx.data() + (n * ch + half + c) * spatial;
        const double* pgo = go.data() + (n * half + c) * spatial;
        double* pga = gx.data() + (n * ch + c) * spatial;
        double* pgb = gx.data() + (n * ch + half + c) * spatial;
        for (int64_t s = 0; s < spatial; ++s) {
          const double sig = 1.0 / (1.0 + std::exp(-pb[s]));
          pga[s] += pgo[s] * sig;
          pgb[s] += pgo[s] * pa[s] * sig * (1.0 - sig);
        }
      }
    }
  };
  return id;
}

VarId Graph::gated_tanh(VarId x) {
  const Tensor& tx = value(x);
  if (tx.ndim() < 2 || tx.dim(1) % 2 != 0)
    throw std::invalid_argument("gated_tanh: dim 1 must be even");
  const int64_t batch = tx.dim(0), ch = tx.dim(1), half = ch / 2;
  int64_t spatial = 1;
  for (int d = 2; d < tx.ndim(); ++d) spatial *= tx.dim(d);

  std::vector<int64_t> oshape = tx.shape();
  oshape[1] = half;
  Tensor out(oshape);
  for (int64_t n = 0; n < batch; ++n) {
    for (int64_t c = 0; c < half; ++c) {
      const double* pf = tx.data() + (n * ch + c) * spatial;
      const double* pg = tx.data() + (n * ch + half + c) * spatial;
      double* po = out.data() + (n * half + c) * spatial;
      for (int64_t s = 0; s < spatial; ++s)
        po[s] = std::tanh(pf[s]) / (1.0 + std::exp(-pg[s]));
    }
  }
  VarId id = push(std::move(out), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, batch, ch, half, spatial](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    const Tensor& vx = g.value(x);
    Tensor& gx = g.grad_buf(x);
    for (int64_t n = 0; n < batch; ++n) {
      for (int64_t c = 0; c < half; ++c) {
        const double* pf = vx.data() + (n * ch + c) * spatial;
        const double* pg = vx.data() + (n * ch + half + c) * spatial;
        const double* pgo = go.data() + (n * half + c) * spatial;
        double* pgf = gx.data() + (n * ch + c) * spatial;
        double* pgg = gx.data() + (n * ch + half + c) * spatial;
        for (int64_t s = 0; s < spatial; ++s) {
          const double th = std::tanh(pf[s]);
          const double sig = 1.0 / (1.0 + std::exp(-pg[s]));
          pgf[s] += pgo[s] * (1.0 - th * th) * sig;
          pgg[s] += pgo[s] * th * sig * (1.0 - sig);
        }
      }
    }
  };
  return id;
}

VarId Graph::avg_pool_half(VarId x) {
  const Tensor& tx = value(x);
  if (tx.ndim() != 3) throw std::invalid_argument("avg_pool_half: expect (N, C, L)");
  const int64_t batch = tx.dim(0), ch = tx.dim(1), len = tx.dim(2);
  if (len < 4) throw std::invalid_argument("avg_pool_half: need at least 4 samples");
  const int64_t lout = len / 2;
  Tensor out({batch, ch, lout});
  for (int64_t n = 0; n < batch; ++n) {
    for (int64_t c = 0; c < ch; ++c) {
      const double* p = tx.data() + (n * ch + c) * len;
      double* po = out.data() + (n * ch + c) * lout;
      for (int64_t t = 0; t < lout; ++t) {
        double acc = 0.0;
        for (int kk = 0; kk < 4; ++kk) acc += p[reflect_index(2 * t - 1 + kk, len)];
        po[t] = 0.25 * acc;
      }
    }
  }
  VarId id = push(std::move(out), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, batch, ch, len, lout](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    Tensor& gx = g.grad_buf(x);
    for (int64_t n = 0; n < batch; ++n) {
      for (int64_t c = 0; c < ch; ++c) {
        const double* pgo = go.data() + (n * ch + c) * lout;
        double* pgx = gx.data() + (n * ch + c) * len;
        for (int64_t t = 0; t < lout; ++t)
          for (int kk = 0; kk < 4; ++kk)
            pgx[reflect_index(2 * t - 1 + kk, len)] += 0.25 * pgo[t];
      }
    }
  };
  return id;
}

VarId Graph::global_mean_pool(VarId x) {
  const Tensor& tx = value(x);
  if (tx.ndim() < 2) throw std::invalid_argument("global_mean_pool: expect batch dim");
  const int64_t batch = tx.dim(0);
  const int64_t per = tx.numel() / batch;
  Tensor out({batch});
  for (int64_t n = 0; n < batch; ++n) {
    double acc = 0.0;
    const double* p = tx.data() + n * per;
    for (int64_t i = 0; i < per; ++i) acc += p[i];
    out[n] = acc / static_cast<double>(per);
  }
  VarId id = push(std::move(out), requires_grad(x), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, x, batch, per](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    Tensor& gx = g.grad_buf(x);
    const double inv = 1.0 / static_cast<double>(per);
    for (int64_t n = 0; n < batch; ++n) {
      double* p = gx.data() + n * per;
      for (int64_t i = 0; i < per; ++i) p[i] += go[n] * inv;
    }
  };
  return id;
}

// ---------------------------------------------------------------------------
// spectrogram front ends

namespace {

struct SpecCache {
  // Per batch item, per frame: complex bins. Kept for the magnitude backward.
  std::vector<std::vector<std::vector<std::complex<double>>>> spec;
};

// Shared forward core: compute complex STFT of each batch row.
std::shared_ptr<SpecCache> stft_batch(const Tensor& wave, const SpectrogramConfig& cfg) {
  const int64_t batch = wave.dim(0);
  const int64_t len = wave.dim(1);
  auto cache = std::make_shared<SpecCache>();
  cache->spec.resize(static_cast<size_t>(batch));
  AudioBuffer tmp;
  tmp.sample_rate_hz = 1;  // rate is irrelevant here
  for (int64_t n = 0; n < batch; ++n) {
    tmp.samples.assign(wave.data() + n * len, wave.data() + (n + 1) * len);
    cache->spec[static_cast<size_t>(n)] = stft(tmp, cfg);
  }
  return cache;
}

// Accumulate frame-domain gradients back to the waveform.
void stft_backward_frames(
    const std::vector<std::vector<std::complex<double>>>& dspec,  // per frame, per bin
    const SpectrogramConfig& cfg, int64_t len, double* gx) {
  const int n = cfg.fft_size;
  const int64_t pad = cfg.center_padding ? n / 2 : 0;
  const std::vector<double> win = hann_window(n);
  for (size_t t = 0; t < dspec.size(); ++t) {
    const std::vector<double> dframe = rfft_adjoint(dspec[t], n);
    const int64_t start = static_cast<int64_t>(t) * cfg.hop_size - pad;
    for (int j = 0; j < n; ++j) {
      const int64_t idx = start + j;
      const double v = dframe[static_cast<size_t>(j)] * win[static_cast<size_t>(j)];
      if (idx >= 0 && idx < len)
        gx[idx] += v;
      else if (cfg.center_padding)
        gx[reflect_index(idx, len)] += v;
    }
  }
}

}  // namespace

VarId Graph::log_spectrogram_op(VarId wave, const SpectrogramConfig& cfg, double floor_eps) {
  if (floor_eps <= 0.0) throw std::invalid_argument("log_spectrogram_op: floor_eps must be > 0");
  const Tensor& tw = value(wave);
  if (tw.ndim() != 2) throw std::invalid_argument("log_spectrogram_op: expect (N, L)");
  const int64_t batch = tw.dim(0), len = tw.dim(1);
  auto cache = stft_batch(tw, cfg);
  const int64_t frames = static_cast<int64_t>(cache->spec[0].size());
  const int64_t bins = cfg.fft_size / 2 + 1;

  Tensor out({batch, bins, frames});
  for (int64_t n = 0; n < batch; ++n)
    for (int64_t t = 0; t < frames; ++t)
      for (int64_t k = 0; k < bins; ++k)
        out[(n * bins + k) * frames + t] = std::log(
            std::abs(cache->spec[static_cast<size_t>(n)][static_cast<size_t>(t)]
                                [static_cast<size_t>(k)]) +
            floor_eps);

  SpectrogramConfig c = cfg;
  VarId id = push(std::move(out), requires_grad(wave), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, wave, c, floor_eps, cache, batch, len, frames,
                                            bins](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    Tensor& gx = g.grad_buf(wave);
    std::vector<std::vector<std::complex<double>>> dspec(
        static_cast<size_t>(frames),
        std::vector<std::complex<double>>(static_cast<size_t>(bins)));
    for (int64_t n = 0; n < batch; ++n) {
      for (int64_t t = 0; t < frames; ++t) {
        for (int64_t k = 0; k < bins; ++k) {
          const std::complex<double> z =
              cache->spec[static_cast<size_t>(n)][static_cast<size_t>(t)][static_cast<size_t>(k)];
          const double mag = std::abs(z);
          const double dmag = go[(n * bins + k) * frames + t] / (mag + floor_eps);
          dspec[static_cast<size_t>(t)][static_cast<size_t>(k)] =
              mag > 1e-300 ? z * (dmag / mag) : std::complex<double>(0.0, 0.0);
        }
      }
      stft_backward_frames(dspec, c, len, gx.data() + n * len);
    }
  };
  return id;
}

VarId Graph::log_mel_op(VarId wave, const MelConfig& cfg, double floor_eps) {
  if (floor_eps <= 0.0) throw std::invalid_argument("log_mel_op: floor_eps must be > 0");
  const Tensor& tw = value(wave);
  if (tw.ndim() != 2) throw std::invalid_argument("log_mel_op: expect (N, L)");
  const int64_t batch = tw.dim(0), len = tw.dim(1);
  auto fb = std::make_shared<Tensor>(mel_filterbank(cfg));
  auto cache = stft_batch(tw, cfg.spec);
  const int64_t frames = static_cast<int64_t>(cache->spec[0].size());
  const int64_t bins = cfg.spec.fft_size / 2 + 1;
  const int64_t mels = cfg.n_mels;

  auto melmag = std::make_shared<Tensor>(Tensor({batch, mels, frames}));
  Tensor out({batch, 1, mels, frames});
  for (int64_t n = 0; n < batch; ++n) {
    for (int64_t t = 0; t < frames; ++t) {
      for (int64_t m = 0; m < mels; ++m) {
        double acc = 0.0;
        for (int64_t k = 0; k < bins; ++k)
          acc += (*fb)[m * bins + k] *
                 std::abs(cache->spec[static_cast<size_t>(n)][static_cast<size_t>(t)]
                                     [static_cast<size_t>(k)]);
        (*melmag)[(n * mels + m) * frames + t] = acc;
        out[(n * mels + m) * frames + t] = std::log(acc + floor_eps);
      }
    }
  }

  MelConfig c = cfg;
  VarId id = push(std::move(out), requires_grad(wave), nullptr);
  nodes_[static_cast<size_t>(id)].backfn = [id, wave, c, floor_eps, cache, fb, melmag, batch, len,
                                            frames, bins, mels](Graph& g) {
    const Tensor& go = g.grad_buf(id);
    Tensor& gx = g.grad_buf(wave);
    std::vector<std::vector<std::complex<double>>> dspec(
        static_cast<size_t>(frames),
        std::vector<std::complex<double>>(static_cast<size_t>(bins)));
    for (int64_t n = 0; n < batch; ++n) {
      for (int64_t t = 0; t < frames; ++t) {
        for (int64_t k = 0; k < bins; ++k) {
          const std::complex<double> z =
              cache->spec[static_cast<size_t>(n)][static_cast<size_t>(t)][static_cast<size_t>(k)];
          const double mag = std::abs(z);
          if (mag <= 1e-300) {
            dspec[static_cast<size_t>(t)][static_cast<size_t>(k)] = {0.0, 0.0};
            continue;
          }
          double dmag = 0.0;
          for (int64_t m = 0; m < mels; ++m) {
            const double w = (*fb)[m * bins + k];
            if (w != 0.0)
              dmag += w * go[(n * mels + m) * frames + t] /
                      ((*melmag)[(n * mels + m) * frames + t] + floor_eps);
          }
          dspec[static_cast<size_t>(t)][static_cast<size_t>(k)] = z * (dmag / mag);
        }
      }
      stft_backward_frames(dspec, c.spec, len, gx.data() + n * len);
    }
  };
  return id;
}

}  // namespace enhgan
