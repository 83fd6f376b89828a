// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "enhgan/generator.h"

namespace enhgan {

struct EnhanceOptions {
  int64_t window = 32000;
  int64_t overlap = 4096;  // must stay >= the receptive field for seamless windows
  bool use_postnet = true;
  bool clip_output = true;
};

// Runs the generator over the waveform; long inputs are processed in
// overlapping windows joined by a linear cross-fade. Output length equals
// input length.
AudioBuffer enhance_waveform(const AudioBuffer& x, const ParamSet& params,
                             const GeneratorConfig& cfg, const EnhanceOptions& opts = {});

}  // namespace enhgan
