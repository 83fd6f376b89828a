// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "enhgan/graph.h"
#include "enhgan/rng.h"

using namespace enhgan;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, uint64_t seed, double scale = 1.0) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, scale);
  return t;
}

// Builds the graph from leaf tensors, returns the scalar loss id. The same
// builder is re-run under perturbation for the central-difference probe.
using BuildFn = std::function<VarId(Graph&, const std::vector<VarId>&)>;

double eval_loss(const BuildFn& build, const std::vector<Tensor>& leaves) {
  Graph g;
  std::vector<VarId> ids;
  for (const auto& t : leaves) ids.push_back(g.constant(t));
  return g.scalar_value(build(g, ids));
}

// Max relative error between analytic gradients and central differences over
// a sample of entries of every leaf.
double max_fd_error(const BuildFn& build, std::vector<Tensor> leaves, uint64_t seed,
                    double h = 1e-6, int probes_per_leaf = 6) {
  Graph g;
  std::vector<VarId> ids;
  for (const auto& t : leaves) ids.push_back(g.leaf(t, true));
  const VarId loss = build(g, ids);
  g.backward(loss);
  std::vector<Tensor> analytic;
  for (VarId id : ids) analytic.push_back(g.grad(id));

  Rng rng(seed);
  double worst = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    const int64_t n = leaves[li].numel();
    for (int p = 0; p < probes_per_leaf; ++p) {
      const int64_t idx = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n)));
      std::vector<Tensor> plus = leaves, minus = leaves;
      plus[li][idx] += h;
      minus[li][idx] -= h;
      const double numeric = (eval_loss(build, plus) - eval_loss(build, minus)) / (2.0 * h);
      const double a = analytic[li][idx];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

// Scalar probe loss: mean of out * fixed random mask (linear in out).
VarId probe(Graph& g, VarId out, uint64_t seed) {
  const VarId mask = g.constant(random_tensor(g.value(out).shape(), seed));
  return g.mean_all(g.mul(out, mask));
}

}  // namespace

TEST_CASE("elementwise op gradients") {
  const Tensor a = random_tensor({2, 3, 5}, 1);
  const Tensor b = random_tensor({2, 3, 5}, 2);

  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.add(v[0], v[1]), 10);
        }, {a, b}, 100) < 1e-6);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.sub(v[0], v[1]), 11);
        }, {a, b}, 101) < 1e-6);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.mul(v[0], v[1]), 12);
        }, {a, b}, 102) < 1e-6);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.affine(v[0], -2.5, 0.3), 13);
        }, {a}, 103) < 1e-6);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.tanh_op(v[0]), 14);
        }, {a}, 104) < 1e-5);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.sigmoid_op(v[0]), 15);
        }, {a}, 105) < 1e-5);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.leaky_relu(v[0], 0.2), 16);
        }, {a}, 106) < 1e-5);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.reshape(v[0], {6, 5}), 17);
        }, {a}, 107) < 1e-6);
}

TEST_CASE("reduction gradients") {
  const Tensor a = random_tensor({3, 7}, 3);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) { return g.mean_all(v[0]); },
                     {a}, 110) < 1e-6);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) { return g.mean_abs(v[0]); },
                     {a}, 111) < 1e-5);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) { return g.mean_sq(v[0]); },
                     {a}, 112) < 1e-5);
  CHECK(max_fd_error(
            [](Graph& g, const std::vector<VarId>& v) {
              return g.weighted_sum({g.mean_sq(v[0]), g.mean_abs(v[0])}, {2.0, -0.5});
            },
            {a}, 113) < 1e-5);
}

TEST_CASE("conv1d gradients across stride, dilation, groups and padding modes") {
  struct Case {
    int64_t cin, cout, k;
    Conv1dOpt opt;
  };
  std::vector<Case> cases;
  {
    Conv1dOpt o;
    o.dilation = 4;
    o.pad_left = 4;
    o.pad_right = 4;
    cases.push_back({3, 5, 3, o});
  }
  {
    Conv1dOpt o;
    o.stride = 4;
    o.pad_mode = PadMode::kReflect;
    o.pad_left = 20;
    o.pad_right = 19;
    o.groups = 2;
    cases.push_back({4, 6, 41, o});
  }
  {
    Conv1dOpt o;
    o.stride = 2;
    o.pad_left = 0;
    o.pad_right = 0;
    cases.push_back({1, 2, 5, o});
  }
  uint64_t seed = 200;
  for (const auto& c : cases) {
    const Tensor x = random_tensor({2, c.cin, 30}, seed++);
    const Tensor w = random_tensor({c.cout, c.cin / c.opt.groups, c.k}, seed++, 0.5);
    const Tensor b = random_tensor({c.cout}, seed++, 0.1);
    const auto opt = c.opt;
    CHECK(max_fd_error(
              [opt, s = seed](Graph& g, const std::vector<VarId>& v) {
                return probe(g, g.conv1d(v[0], v[1], v[2], opt), s);
              },
              {x, w, b}, seed) < 1e-5);
    ++seed;
  }
}

TEST_CASE("conv1d shape arithmetic") {
  Graph g;
  const VarId x = g.constant(random_tensor({1, 2, 100}, 5));
  const VarId w = g.constant(random_tensor({4, 2, 3}, 6));
  Conv1dOpt o;
  o.dilation = 8;
  o.pad_left = 8;
  o.pad_right = 8;
  const VarId y = g.conv1d(x, w, Graph::kNoVar, o);
  CHECK(g.value(y).shape() == std::vector<int64_t>{1, 4, 100});

  Conv1dOpt s;
  s.stride = 4;
  s.pad_left = 2;
  s.pad_right = 2;
  const VarId z = g.conv1d(x, w, Graph::kNoVar, s);
  CHECK(g.value(z).shape() == std::vector<int64_t>{1, 4, (100 + 4 - 3) / 4 + 1});
}

TEST_CASE("conv2d gradients") {
  const Tensor x = random_tensor({2, 2, 9, 12}, 300);
  const Tensor w = random_tensor({3, 2, 3, 4}, 301, 0.5);
  const Tensor b = random_tensor({3}, 302, 0.1);
  Conv2dOpt o;
  o.stride_w = 2;
  o.pad_top = 1;
  o.pad_bottom = 1;
  o.pad_left = 1;
  o.pad_right = 2;
  CHECK(max_fd_error(
            [o](Graph& g, const std::vector<VarId>& v) {
              return probe(g, g.conv2d(v[0], v[1], v[2], o), 303);
            },
            {x, w, b}, 304) < 1e-5);
}

TEST_CASE("batchnorm2d gradients and normalization") {
  const Tensor x = random_tensor({3, 2, 4, 5}, 310, 2.0);
  const Tensor gamma = random_tensor({2}, 311, 0.5);
  const Tensor beta = random_tensor({2}, 312, 0.5);
  CHECK(max_fd_error(
            [](Graph& g, const std::vector<VarId>& v) {
              return probe(g, g.batchnorm2d(v[0], v[1], v[2]), 313);
            },
            {x, gamma, beta}, 314) < 1e-4);

  Graph g;
  const VarId xn = g.constant(x);
  const VarId gn = g.constant(Tensor({2}, {1.0, 1.0}));
  const VarId bn = g.constant(Tensor({2}, {0.0, 0.0}));
  const Tensor& y = g.value(g.batchnorm2d(xn, gn, bn));
  // per-channel mean ~0, var ~1
  for (int c = 0; c < 2; ++c) {
    double mean = 0.0, var = 0.0;
    int64_t cnt = 0;
    for (int64_t n = 0; n < 3; ++n)
      for (int64_t s = 0; s < 20; ++s) {
        mean += y[(n * 2 + c) * 20 + s];
        ++cnt;
      }
    mean /= static_cast<double>(cnt);
    for (int64_t n = 0; n < 3; ++n)
      for (int64_t s = 0; s < 20; ++s) {
        const double d = y[(n * 2 + c) * 20 + s] - mean;
        var += d * d;
      }
    var /= static_cast<double>(cnt);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("glu and gated_tanh gradients") {
  const Tensor x = random_tensor({2, 6, 4, 3}, 320);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.glu(v[0]), 321);
        }, {x}, 322) < 1e-5);
  const Tensor x1 = random_tensor({2, 8, 11}, 323);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.gated_tanh(v[0]), 324);
        }, {x1}, 325) < 1e-5);
}

TEST_CASE("pooling gradients") {
  const Tensor x = random_tensor({2, 3, 20}, 330);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.avg_pool_half(v[0]), 331);
        }, {x}, 332) < 1e-6);
  CHECK(max_fd_error([](Graph& g, const std::vector<VarId>& v) {
          return probe(g, g.global_mean_pool(v[0]), 333);
        }, {x}, 334) < 1e-6);
}

TEST_CASE("avg_pool_half matches downsample_by_2") {
  const Tensor x = random_tensor({1, 1, 51}, 340);
  Graph g;
  const Tensor& pooled = g.value(g.avg_pool_half(g.constant(x)));
  const std::vector<double> direct =
      downsample_by_2(std::vector<double>(x.vec().begin(), x.vec().end()));
  REQUIRE(pooled.numel() == static_cast<int64_t>(direct.size()));
  for (int64_t i = 0; i < pooled.numel(); ++i)
    CHECK(pooled[i] == doctest::Approx(direct[static_cast<size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("log spectrogram op value matches dsp and gradients check out") {
  SpectrogramConfig cfg{64, 16, "hann", true};
  const Tensor wave = random_tensor({2, 120}, 350, 0.3);

  Graph g;
  const VarId w = g.constant(wave);
  const Tensor& out = g.value(g.log_spectrogram_op(w, cfg, 1e-5));
  AudioBuffer a;
  a.sample_rate_hz = 16000;
  a.samples.assign(wave.data() + 120, wave.data() + 240);
  const Tensor ref = log_spectrogram(a, cfg, 1e-5);  // (frames, bins)
  const int64_t frames = ref.dim(0), bins = ref.dim(1);
  CHECK(out.shape() == std::vector<int64_t>{2, bins, frames});
  for (int64_t t = 0; t < frames; ++t)
    for (int64_t k = 0; k < bins; ++k)
      CHECK(out[(1 * bins + k) * frames + t] == doctest::Approx(ref[t * bins + k]).epsilon(1e-12));

  CHECK(max_fd_error(
            [cfg](Graph& g2, const std::vector<VarId>& v) {
              return probe(g2, g2.log_spectrogram_op(v[0], cfg, 1e-5), 351);
            },
            {wave}, 352, 1e-7) < 1e-4);
}

TEST_CASE("log mel op gradients") {
  MelConfig mel;
  mel.n_mels = 12;
  mel.spec = SpectrogramConfig{64, 16, "hann", true};
  mel.f_min_hz = 20.0;
  mel.f_max_hz = 8000.0;
  const Tensor wave = random_tensor({1, 100}, 360, 0.3);
  CHECK(max_fd_error(
            [mel](Graph& g, const std::vector<VarId>& v) {
              return probe(g, g.log_mel_op(v[0], mel, 1e-5), 361);
            },
            {wave}, 362, 1e-7) < 1e-4);
}

TEST_CASE("backward accumulates only into grad-enabled leaves") {
  Graph g;
  const Tensor a = random_tensor({4}, 370);
  const VarId x = g.leaf(a, true);
  const VarId c = g.constant(a);
  const VarId loss = g.mean_sq(g.mul(x, c));
  g.backward(loss);
  CHECK(g.grad(x).numel() == 4);
  const Tensor& gc = g.grad(c);
  for (int64_t i = 0; i < gc.numel(); ++i) CHECK(gc[i] == 0.0);
}
