// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>

#include "enhgan/metrics.h"
#include "enhgan/train.h"

namespace enhgan {

// One declarative document drives every module; unknown keys are rejected so
// typos fail loudly. The canonical echo is archived next to run outputs and
// embedded in checkpoints for resume matching.
struct RunConfig {
  TrainerConfig trainer;
  std::string manifest_path;
  EvalOptions eval;
  uint64_t seed = 0;
};

RunConfig default_run_config();

// Parses and validates a config file. Relative paths (manifest) resolve
// against the config file's directory. Missing keys keep their defaults.
RunConfig load_run_config(const std::string& path);

// Same, from an in-memory JSON document (e.g. a checkpoint's config echo).
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir);

// Canonical JSON echo of the effective configuration.
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace enhgan
