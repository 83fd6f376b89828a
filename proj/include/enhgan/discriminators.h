// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "enhgan/dsp.h"
#include "enhgan/graph.h"
#include "enhgan/params.h"

namespace enhgan {

// Waveform discriminator: 1D conv, four strided grouped-conv blocks, two more
// 1D convs, global average pooling to a real score. Leaky ReLU between layers.
struct WaveDiscConfig {
  std::array<int, 7> kernel_sizes = {15, 41, 41, 41, 41, 5, 3};
  std::array<int, 7> strides = {1, 4, 4, 4, 4, 1, 1};
  std::array<int, 7> channels = {16, 64, 256, 1024, 1024, 1024, 1};
  std::array<int, 7> groups = {1, 4, 16, 64, 256, 1, 1};
  double leaky_slope = 0.2;

  int total_stride() const {
    int s = 1;
    for (int v : strides) s *= v;
    return s;
  }
};

// Mel-spectrogram discriminator: four blocks of 2D conv + batch norm + GLU,
// then a 1-channel conv head and global average pooling. Axis 1 is mel
// frequency (stride 1), axis 2 is time (stride 2).
struct SpecDiscConfig {
  int n_blocks = 4;
  std::array<std::pair<int, int>, 4> kernel_sizes = {{{3, 9}, {3, 8}, {3, 8}, {3, 6}}};
  std::array<std::pair<int, int>, 4> strides = {{{1, 2}, {1, 2}, {1, 2}, {1, 2}}};
  int channels = 32;
  int head_kernel = 3;
  double bn_eps = 1e-5;
};

void validate_wave_disc_config(const WaveDiscConfig& cfg);
void validate_spec_disc_config(const SpecDiscConfig& cfg);

// Per-layer activations feeding the feature-matching loss; the score layer is
// excluded. unit_counts[i] is the number of scalar activations per example.
struct FeatureStackVars {
  std::vector<VarId> layers;
  std::vector<int64_t> unit_counts;
};

struct FeatureMapStack {
  std::vector<Tensor> layers;
  std::vector<int64_t> unit_counts;
};

struct VerdictVars {
  VarId score;  // (N,)
  FeatureStackVars features;
};

struct DiscriminatorVerdict {
  double score = 0.0;
  FeatureMapStack features;
};

// Fan-in scaled init. With zero_output_layer the score conv starts at zero,
// so a freshly initialized discriminator scores exactly 0 everywhere.
ParamSet init_wave_disc_params(const WaveDiscConfig& cfg, uint64_t seed,
                               bool zero_output_layer = true);
ParamSet init_spec_disc_params(const SpecDiscConfig& cfg, uint64_t seed,
                               bool zero_output_layer = true);

// w: (N, L) waveform at the view's rate. Same-padding (reflection), so the
// pre-pool length is ceil(L / 256) for the default strides.
VerdictVars wave_disc_forward(Graph& g, VarId w, const BoundParams& params,
                              const WaveDiscConfig& cfg);

// Three independent parameter sets applied to the 16 kHz input and its
// pooled half/quarter-rate views; all verdicts stay gradient-connected to w.
std::array<VerdictVars, 3> multi_scale_forward(Graph& g, VarId w16k,
                                               const std::array<const BoundParams*, 3>& params,
                                               const WaveDiscConfig& cfg);

// Normalization applied to the log-mel input: (x - mean) / std.
struct MelNorm {
  double mean = 0.0;
  double stddev = 1.0;
};

VerdictVars spec_disc_forward(Graph& g, VarId x, const BoundParams& params,
                              const SpecDiscConfig& cfg, const MelConfig& mel,
                              const MelNorm& norm, double floor_eps = 1e-5);

// Plain (no-graph) single-waveform evaluation used by tests.
DiscriminatorVerdict wave_disc_apply(const AudioBuffer& w, const ParamSet& params,
                                     const WaveDiscConfig& cfg);
DiscriminatorVerdict spec_disc_apply(const AudioBuffer& x, const ParamSet& params,
                                     const SpecDiscConfig& cfg, const MelConfig& mel,
                                     const MelNorm& norm);

// Trainable-parameter count of one waveform discriminator layer:
// channels_in * channels_out * kernel / groups weights plus channels_out biases.
int64_t wave_disc_parameter_count(const WaveDiscConfig& cfg);

}  // namespace enhgan
