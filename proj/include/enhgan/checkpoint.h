// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>

#include "enhgan/adam.h"
#include "enhgan/params.h"

namespace enhgan {

// Raw little-endian tensor blob with a small shape header. Checkpoints are a
// directory: metadata.json plus one blob per named parameter, namespaced per
// network, plus optimizer moments under optim/.
void write_tensor_blob(const std::string& path, const Tensor& t);
Tensor read_tensor_blob(const std::string& path);

void save_params(const std::string& ckpt_dir, const std::string& ns, const ParamSet& params);
// Loads blobs into an already laid-out ParamSet; shape or missing-file
// mismatches throw with the offending name.
void load_params(const std::string& ckpt_dir, const std::string& ns, ParamSet& params);

void save_adam(const std::string& ckpt_dir, const std::string& ns, const ParamSet& layout,
               const AdamState& state);
void load_adam(const std::string& ckpt_dir, const std::string& ns, const ParamSet& layout,
               AdamState& state);

constexpr int kCheckpointFormatVersion = 1;

}  // namespace enhgan
