// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "enhgan/adam.h"
#include "enhgan/datasim.h"
#include "enhgan/discriminators.h"
#include "enhgan/generator.h"
#include "enhgan/losses.h"

namespace enhgan {

struct StageConfig {
  int stage_id = 1;
  int64_t steps = 0;
  double lr_generator = 1e-3;
  double lr_discriminators = 1e-3;  // used in stage 3 only
  bool use_postnet = false;
  bool use_augmentation = false;
  bool use_adversarial = false;
  int disc_updates_per_gen_step = 0;
};

// The three-stage schedule: main network alone, then postnet + augmentation,
// then adversarial fine-tuning with freshly initialized discriminators that
// are updated twice per generator step.
std::vector<StageConfig> default_stages();

struct DataConfig {
  int working_rate_hz = 16000;
  int64_t crop_samples = 32000;
  int batch_size = 6;
  // Deterministic (non-augmented) simulation used by stage 1, validation and
  // evaluation: the manifest's own RIR/noise pairing at a fixed SNR.
  bool fixed_use_rir = true;
  bool fixed_use_noise = true;
  double fixed_snr_db = 20.0;
  AugmentConfig augment;
};

struct TrainerConfig {
  GeneratorConfig generator;
  WaveDiscConfig wave_disc;
  SpecDiscConfig spec_disc;
  MelConfig mel;  // spectrogram-discriminator input geometry
  LossWeights weights;
  MultiresSpecConfig spec_loss;
  DataConfig data;
  std::vector<StageConfig> stages = default_stages();
  AdamConfig adam_gen{1e-3, 0.9, 0.999, 1e-8, 10.0};
  AdamConfig adam_disc{1e-3, 0.5, 0.9, 1e-8, 10.0};
  uint64_t seed = 0;
  int64_t checkpoint_every = 0;  // 0: stage boundaries and the end only
  int64_t validate_every = 0;    // 0: never
  int workers = 1;
  std::string config_echo;  // verbatim run config, archived and match-checked
};

struct TrainLogEntry {
  int64_t step = 0;
  int stage = 0;
  LossReport losses;
  double lr_g = 0.0, lr_d = 0.0;
  std::optional<double> val_spec, val_l1;
  double wall_ms = 0.0;
  std::string to_json() const;
};

// One (degraded, target) training pair cropped to the configured window.
struct Batch {
  Tensor x;       // (B, crop)
  Tensor target;  // (B, crop)
  std::vector<uint64_t> pair_seeds;  // diagnostics for NaN aborts
};

class Trainer {
 public:
  Trainer(TrainerConfig cfg, Manifest manifest);

  // One generator update on a freshly drawn batch (discriminators untouched).
  LossReport train_step_generator();
  // One update of each of the four discriminators (generator untouched).
  std::array<double, 4> train_step_discriminators();

  // Runs the full staged schedule with logging, validation and periodic
  // checkpoints; returns the final checkpoint path.
  std::string run_schedule(const std::string& out_dir);

  void save_checkpoint(const std::string& dir) const;
  void load_checkpoint(const std::string& dir);

  // ---- introspection (tests, evaluation) ----
  int64_t step() const { return step_; }
  int64_t total_disc_updates() const { return total_disc_updates_; }
  const StageConfig& current_stage() const;
  int64_t total_steps() const;
  const ParamSet& generator_params() const { return gen_params_; }
  ParamSet& generator_params() { return gen_params_; }
  const ParamSet& wave_disc_params(int k) const { return wave_params_[static_cast<size_t>(k)]; }
  const ParamSet& spec_disc_params() const { return spec_params_; }
  const MelNorm& mel_norm() const { return mel_norm_; }
  const TrainerConfig& config() const { return cfg_; }
  const std::deque<double>& loss_history() const { return loss_history_; }
  Batch make_batch(int64_t step_index, const char* tag) const;
  // Mean generator validation losses on the fixed held-out pairs.
  std::pair<double, double> validate();  // (spec, l1)
  // (Re)initialize discriminators + mel normalization, as at stage-3 entry.
  void init_discriminators();
  // Mean discriminator scores over the first `batches` deterministic train
  // batches: (mean real, mean fake). Used by separability checks.
  std::pair<double, double> mean_scores(int batches);

 private:
  Batch assemble(const std::vector<std::pair<uint64_t, const ManifestEntry*>>& picks) const;
  SimulationSpec fixed_spec(const ManifestEntry& e) const;
  GanModules bind_modules(Graph& g, std::vector<BoundParams>& storage, bool gen_grad,
                          bool disc_grad) const;
  void append_loss_history(double v);

  TrainerConfig cfg_;
  Manifest manifest_;
  std::vector<ManifestEntry> train_entries_, val_entries_;
  mutable AssetStore assets_;

  ParamSet gen_params_;
  AdamState gen_opt_;
  std::array<ParamSet, 3> wave_params_;
  std::array<AdamState, 3> wave_opt_;
  ParamSet spec_params_;
  AdamState spec_opt_;
  MelNorm mel_norm_;

  int64_t step_ = 0;
  int64_t total_disc_updates_ = 0;
  std::array<double, 4> last_d_losses_{};
  std::deque<double> loss_history_;
};

}  // namespace enhgan
