// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

#include "enhgan/audio.h"
#include "enhgan/graph.h"
#include "enhgan/params.h"

namespace enhgan {

// Enhancement network: a non-causal feed-forward dilated-convolution stack
// (gated units with residual and skip connections) followed by a
// convolutional postnet whose output is added residually.
struct GeneratorConfig {
  int n_layers = 20;
  std::vector<int> dilation_cycle = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512};
  int kernel_size = 3;
  int channels = 128;
  int postnet_layers = 12;
  int postnet_channels = 128;
  int postnet_kernel = 32;
};

void validate_generator_config(const GeneratorConfig& cfg);

// Dilation of layer i: the cycle repeated across stacks.
int layer_dilation(const GeneratorConfig& cfg, int layer);

// Main-network receptive field in samples: 1 + sum (kernel-1) * dilation.
int64_t receptive_field(const GeneratorConfig& cfg);
// Receptive field including the postnet's (kernel-1) * layers on top.
int64_t receptive_field_with_postnet(const GeneratorConfig& cfg);

struct ParameterCount {
  int64_t main_net = 0;
  int64_t postnet = 0;
  int64_t total() const { return main_net + postnet; }
};
ParameterCount count_parameters(const GeneratorConfig& cfg);

// Fan-in scaled normal init; the postnet's last layer starts at zero so the
// residual connection makes the postnet an identity at stage-2 onset.
ParamSet init_generator_params(const GeneratorConfig& cfg, uint64_t seed);

struct GeneratorOutputVars {
  VarId pre_postnet;   // (N, L)
  VarId post_postnet;  // (N, L)
};

// Forward pass on the tape. x: (N, L). When use_postnet is false the postnet
// is bypassed and post_postnet aliases pre_postnet.
GeneratorOutputVars generator_forward(Graph& graph, VarId x, const BoundParams& params,
                                      const GeneratorConfig& cfg, bool use_postnet = true);

// Convenience plain forward (evaluation): single waveform in, outputs out.
struct GeneratorOutput {
  AudioBuffer pre_postnet;
  AudioBuffer post_postnet;
};
GeneratorOutput generator_apply(const AudioBuffer& x, const ParamSet& params,
                                const GeneratorConfig& cfg, bool use_postnet = true);

}  // namespace enhgan
