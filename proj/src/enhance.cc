// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/enhance.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace enhgan {

AudioBuffer enhance_waveform(const AudioBuffer& x, const ParamSet& params,
                             const GeneratorConfig& cfg, const EnhanceOptions& opts) {
  validate_audio(x, "enhance_waveform");
  if (opts.window < 2 || opts.overlap < 1 || opts.overlap >= opts.window)
    throw std::invalid_argument("enhance_waveform: need 1 <= overlap < window");

  const int64_t len = x.length();
  AudioBuffer out;
  out.sample_rate_hz = x.sample_rate_hz;

  if (len <= opts.window) {
    out.samples = generator_apply(x, params, cfg, opts.use_postnet).post_postnet.samples;
  } else {
    const int64_t hop = opts.window - opts.overlap;
    std::vector<int64_t> starts;
    for (int64_t s = 0; s + opts.window < len; s += hop) starts.push_back(s);
    starts.push_back(len - opts.window);  // final window flush against the end

    std::vector<double> acc(static_cast<size_t>(len), 0.0);
    std::vector<double> wsum(static_cast<size_t>(len), 0.0);
    AudioBuffer chunk;
    chunk.sample_rate_hz = x.sample_rate_hz;
    for (size_t ci = 0; ci < starts.size(); ++ci) {
      const int64_t s = starts[ci];
      chunk.samples.assign(x.samples.begin() + s, x.samples.begin() + s + opts.window);
      const AudioBuffer y = generator_apply(chunk, params, cfg, opts.use_postnet).post_postnet;
      for (int64_t j = 0; j < opts.window; ++j) {
        // linear fade-in/out only where neighbours overlap
        double w = 1.0;
        if (ci > 0 && j < opts.overlap)
          w = static_cast<double>(j + 1) / static_cast<double>(opts.overlap + 1);
        if (ci + 1 < starts.size()) {
          const int64_t next_overlap_start = starts[ci + 1] - s;
          if (j >= next_overlap_start)
            w = std::min(w, static_cast<double>(opts.window - j) /
                                static_cast<double>(opts.window - next_overlap_start + 1));
        }
        acc[static_cast<size_t>(s + j)] += w * y.samples[static_cast<size_t>(j)];
        wsum[static_cast<size_t>(s + j)] += w;
      }
    }
    out.samples.resize(static_cast<size_t>(len));
    for (int64_t i = 0; i < len; ++i)
      out.samples[static_cast<size_t>(i)] =
          acc[static_cast<size_t>(i)] / std::max(wsum[static_cast<size_t>(i)], 1e-12);
  }

  if (opts.clip_output)
    for (auto& v : out.samples) v = std::clamp(v, -1.0, 1.0);
  return out;
}

}  // namespace enhgan
