// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/train.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "enhgan/checkpoint.h"
#include "enhgan/parallel.h"

namespace enhgan {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<StageConfig> default_stages() {
  StageConfig s1{1, 500000, 1e-3, 0.0, false, false, false, 0};
  StageConfig s2{2, 500000, 1e-4, 0.0, true, true, false, 0};
  StageConfig s3{3, 50000, 1e-5, 1e-3, true, true, true, 2};
  return {s1, s2, s3};
}

std::string TrainLogEntry::to_json() const {
  json j;
  j["step"] = step;
  j["stage"] = stage;
  j["l1_pre"] = losses.l1_pre;
  j["l1_post"] = losses.l1_post;
  j["spec_pre"] = losses.spec_pre;
  j["spec_post"] = losses.spec_post;
  for (int k = 0; k < 4; ++k) {
    j["adv_" + std::to_string(k)] = losses.adv_per_disc[static_cast<size_t>(k)];
    j["fm_" + std::to_string(k)] = losses.fm_per_disc[static_cast<size_t>(k)];
    j["d_" + std::to_string(k)] = losses.d_losses[static_cast<size_t>(k)];
  }
  j["total_g"] = losses.total_g;
  j["lr_g"] = lr_g;
  j["lr_d"] = lr_d;
  if (val_spec) j["val_spec"] = *val_spec;
  if (val_l1) j["val_l1"] = *val_l1;
  j["wall_ms"] = wall_ms;
  return j.dump();
}

namespace {

void validate_stages(const std::vector<StageConfig>& stages) {
  if (stages.empty()) throw std::runtime_error("TrainerConfig: no stages");
  for (size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].stage_id != static_cast<int>(i) + 1)
      throw std::runtime_error("TrainerConfig: stages must be ordered 1, 2, 3");
    if (stages[i].steps < 0) throw std::runtime_error("TrainerConfig: negative step count");
    if (stages[i].use_adversarial && stages[i].disc_updates_per_gen_step < 1)
      throw std::runtime_error("TrainerConfig: adversarial stage needs disc updates per step");
  }
}

}  // namespace

Trainer::Trainer(TrainerConfig cfg, Manifest manifest)
    : cfg_(std::move(cfg)),
      manifest_(std::move(manifest)),
      assets_(cfg_.data.working_rate_hz) {
  validate_stages(cfg_.stages);
  validate_generator_config(cfg_.generator);
  validate_wave_disc_config(cfg_.wave_disc);
  validate_spec_disc_config(cfg_.spec_disc);
  validate_loss_weights(cfg_.weights);

  train_entries_ = manifest_.split("train");
  val_entries_ = manifest_.split("val");
  if (train_entries_.empty()) throw std::runtime_error("Trainer: manifest has no train split");

  // Augmentation pools default to the train entries' own assets.
  if (cfg_.data.augment.rir_ids.empty()) {
    for (const auto& e : train_entries_)
      if (!e.rir_path.empty()) cfg_.data.augment.rir_ids.push_back(e.rir_path);
    std::sort(cfg_.data.augment.rir_ids.begin(), cfg_.data.augment.rir_ids.end());
    cfg_.data.augment.rir_ids.erase(
        std::unique(cfg_.data.augment.rir_ids.begin(), cfg_.data.augment.rir_ids.end()),
        cfg_.data.augment.rir_ids.end());
  }
  if (cfg_.data.augment.noise_ids.empty()) {
    for (const auto& e : train_entries_)
      if (!e.noise_path.empty()) cfg_.data.augment.noise_ids.push_back(e.noise_path);
    std::sort(cfg_.data.augment.noise_ids.begin(), cfg_.data.augment.noise_ids.end());
    cfg_.data.augment.noise_ids.erase(
        std::unique(cfg_.data.augment.noise_ids.begin(), cfg_.data.augment.noise_ids.end()),
        cfg_.data.augment.noise_ids.end());
  }
  cfg_.data.augment.sample_rate_hz = cfg_.data.working_rate_hz;

  gen_params_ = init_generator_params(cfg_.generator, hash_combine(cfg_.seed, hash_str("gen")));
  gen_opt_ = AdamState(gen_params_);
  init_discriminators();
}

void Trainer::init_discriminators() {
  static const char* kNames[3] = {"wave16k", "wave8k", "wave4k"};
  for (int k = 0; k < 3; ++k) {
    wave_params_[static_cast<size_t>(k)] = init_wave_disc_params(
        cfg_.wave_disc, hash_combine(cfg_.seed, hash_str(kNames[k])), true);
    wave_opt_[static_cast<size_t>(k)] = AdamState(wave_params_[static_cast<size_t>(k)]);
  }
  spec_params_ =
      init_spec_disc_params(cfg_.spec_disc, hash_combine(cfg_.seed, hash_str("spec")), true);
  spec_opt_ = AdamState(spec_params_);

  // Per-corpus log-mel statistics from a warm-up sample of clean targets.
  double sum = 0.0, sum_sq = 0.0;
  int64_t count = 0;
  const size_t warmup = std::min<size_t>(train_entries_.size(), 8);
  for (size_t i = 0; i < warmup; ++i) {
    const AudioBuffer& clean = assets_.get(train_entries_[i].clean_path);
    const Tensor lm = mel_spectrogram(clean, cfg_.mel, 1e-5);
    for (int64_t j = 0; j < lm.numel(); ++j) {
      sum += lm[j];
      sum_sq += lm[j] * lm[j];
    }
    count += lm.numel();
  }
  mel_norm_.mean = sum / static_cast<double>(count);
  const double var = sum_sq / static_cast<double>(count) - mel_norm_.mean * mel_norm_.mean;
  mel_norm_.stddev = std::sqrt(std::max(var, 1e-12));
}

const StageConfig& Trainer::current_stage() const {
  int64_t acc = 0;
  for (const auto& s : cfg_.stages) {
    acc += s.steps;
    if (step_ < acc) return s;
  }
  return cfg_.stages.back();
}

int64_t Trainer::total_steps() const {
  int64_t acc = 0;
  for (const auto& s : cfg_.stages) acc += s.steps;
  return acc;
}

SimulationSpec Trainer::fixed_spec(const ManifestEntry& e) const {
  SimulationSpec spec;
  if (cfg_.data.fixed_use_rir) spec.rir_id = e.rir_path;
  if (cfg_.data.fixed_use_noise) spec.noise_id = e.noise_path;
  spec.snr_db = cfg_.data.fixed_snr_db;
  spec.seed = hash_combine(hash_combine(cfg_.seed, hash_str("fixed")), hash_str(e.clean_path));
  return spec;
}

Batch Trainer::assemble(
    const std::vector<std::pair<uint64_t, const ManifestEntry*>>& picks) const {
  const int64_t crop = cfg_.data.crop_samples;
  const int64_t batch = static_cast<int64_t>(picks.size());
  Batch out;
  out.x = Tensor({batch, crop});
  out.target = Tensor({batch, crop});
  out.pair_seeds.resize(picks.size());

  const bool augment = current_stage().use_augmentation;
  parallel_for(cfg_.workers, batch, [&](int64_t i) {
    Rng rng(picks[static_cast<size_t>(i)].first);
    const ManifestEntry& entry = *picks[static_cast<size_t>(i)].second;
    SimulationSpec spec;
    if (augment) {
      Rng aug_rng(rng.next_u64());
      spec = sample_spec(aug_rng, cfg_.data.augment);
    } else {
      rng.next_u64();  // keep draw alignment between modes
      spec = fixed_spec(entry);
    }
    out.pair_seeds[static_cast<size_t>(i)] = spec.seed;
    const auto [deg, tgt] = simulate_pair(assets_.get(entry.clean_path), spec, assets_);

    const int64_t len = tgt.length();
    int64_t src_off = 0, dst_off = 0, n = crop;
    if (len >= crop) {
      src_off = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(len - crop + 1)));
    } else {
      dst_off = (crop - len) / 2;  // zero-pad both sides identically
      n = len;
    }
    for (int64_t j = 0; j < n; ++j) {
      out.x[i * crop + dst_off + j] = deg.samples[static_cast<size_t>(src_off + j)];
      out.target[i * crop + dst_off + j] = tgt.samples[static_cast<size_t>(src_off + j)];
    }
  });
  return out;
}

Batch Trainer::make_batch(int64_t step_index, const char* tag) const {
  std::vector<std::pair<uint64_t, const ManifestEntry*>> picks;
  for (int i = 0; i < cfg_.data.batch_size; ++i) {
    Rng rng = derive_rng(cfg_.seed, tag, static_cast<uint64_t>(step_index),
                         static_cast<uint64_t>(i));
    const uint64_t pair_seed = rng.next_u64();
    const size_t idx = rng.uniform_int(train_entries_.size());
    picks.emplace_back(pair_seed, &train_entries_[idx]);
  }
  return assemble(picks);
}

GanModules Trainer::bind_modules(Graph& g, std::vector<BoundParams>& storage, bool gen_grad,
                                 bool disc_grad) const {
  storage.reserve(5);
  storage.emplace_back(g, gen_params_, gen_grad);
  for (int k = 0; k < 3; ++k) storage.emplace_back(g, wave_params_[static_cast<size_t>(k)], disc_grad);
  storage.emplace_back(g, spec_params_, disc_grad);

  GanModules mods;
  mods.gen_cfg = &cfg_.generator;
  mods.gen = &storage[0];
  mods.wave_cfg = &cfg_.wave_disc;
  mods.wave_discs = {&storage[1], &storage[2], &storage[3]};
  mods.spec_cfg = &cfg_.spec_disc;
  mods.spec_disc = &storage[4];
  mods.mel = &cfg_.mel;
  mods.mel_norm = mel_norm_;
  return mods;
}

void Trainer::append_loss_history(double v) {
  loss_history_.push_back(v);
  while (loss_history_.size() > 256) loss_history_.pop_front();
}

LossReport Trainer::train_step_generator() {
  const StageConfig stage = current_stage();
  const Batch batch = make_batch(step_, "batch-g");

  Graph g;
  std::vector<BoundParams> bound;
  const GanModules mods = bind_modules(g, bound, /*gen_grad=*/true,
                                       /*disc_grad=*/false);
  const VarId x = g.constant(batch.x);
  const VarId target = g.constant(batch.target);

  LossWeights w = cfg_.weights;
  if (!stage.use_adversarial) {
    w.w_adv = 0.0;
    w.w_fm = 0.0;
  }
  const GenObjective obj = build_generator_objective(g, x, target, mods, w, cfg_.spec_loss,
                                                     stage.use_postnet, stage.use_adversarial);
  LossReport report = obj.report(g);
  report.d_losses = last_d_losses_;
  if (!std::isfinite(report.total_g)) {
    std::string seeds;
    for (uint64_t s : batch.pair_seeds) seeds += std::to_string(s) + " ";
    throw std::runtime_error("train_step_generator: non-finite loss at step " +
                             std::to_string(step_) + "; batch pair seeds: " + seeds);
  }

  g.backward(obj.total);
  AdamConfig opt = cfg_.adam_gen;
  opt.lr = stage.lr_generator;
  gen_opt_.step(gen_params_, bound[0].gradients(), opt);

  ++step_;
  append_loss_history(report.total_g);
  return report;
}

std::array<double, 4> Trainer::train_step_discriminators() {
  const StageConfig stage = current_stage();
  if (!stage.use_adversarial)
    throw std::runtime_error("train_step_discriminators: adversarial stage not active");
  const Batch batch = make_batch(total_disc_updates_, "batch-d");

  Graph g;
  std::vector<BoundParams> bound;
  const GanModules mods = bind_modules(g, bound, /*gen_grad=*/false, /*disc_grad=*/true);
  const VarId x = g.constant(batch.x);
  const VarId target = g.constant(batch.target);

  const DiscObjective obj = build_discriminator_objective(g, x, target, mods, stage.use_postnet);
  std::array<double, 4> losses{};
  for (int k = 0; k < 4; ++k) {
    losses[static_cast<size_t>(k)] = g.scalar_value(obj.losses[static_cast<size_t>(k)]);
    if (!std::isfinite(losses[static_cast<size_t>(k)]))
      throw std::runtime_error("train_step_discriminators: non-finite loss at step " +
                               std::to_string(step_));
  }
  // Disjoint parameter groups: one backward of the sum yields each
  // discriminator's own gradient.
  const VarId sum = g.weighted_sum(
      {obj.losses[0], obj.losses[1], obj.losses[2], obj.losses[3]}, {1.0, 1.0, 1.0, 1.0});
  g.backward(sum);

  AdamConfig opt = cfg_.adam_disc;
  opt.lr = stage.lr_discriminators;
  for (int k = 0; k < 3; ++k)
    wave_opt_[static_cast<size_t>(k)].step(wave_params_[static_cast<size_t>(k)],
                                           bound[static_cast<size_t>(k + 1)].gradients(), opt);
  spec_opt_.step(spec_params_, bound[4].gradients(), opt);

  ++total_disc_updates_;
  last_d_losses_ = losses;
  return losses;
}

std::pair<double, double> Trainer::validate() {
  if (val_entries_.empty()) return {0.0, 0.0};
  const StageConfig stage = current_stage();
  double spec_sum = 0.0, l1_sum = 0.0;
  for (const auto& e : val_entries_) {
    const SimulationSpec spec = fixed_spec(e);
    const auto [deg, tgt] = simulate_pair(assets_.get(e.clean_path), spec, assets_);
    // center crop to the training window
    const int64_t crop = std::min<int64_t>(cfg_.data.crop_samples, tgt.length());
    const int64_t off = (tgt.length() - crop) / 2;
    AudioBuffer dx, tx;
    dx.sample_rate_hz = tx.sample_rate_hz = cfg_.data.working_rate_hz;
    dx.samples.assign(deg.samples.begin() + off, deg.samples.begin() + off + crop);
    tx.samples.assign(tgt.samples.begin() + off, tgt.samples.begin() + off + crop);
    const GeneratorOutput out =
        generator_apply(dx, gen_params_, cfg_.generator, stage.use_postnet);
    spec_sum += multires_spec_loss(out.post_postnet, tx, cfg_.spec_loss);
    l1_sum += l1_sample_loss(out.post_postnet, tx);
  }
  const double n = static_cast<double>(val_entries_.size());
  return {spec_sum / n, l1_sum / n};
}

std::pair<double, double> Trainer::mean_scores(int batches) {
  double real_sum = 0.0, fake_sum = 0.0;
  int64_t count = 0;
  for (int b = 0; b < batches; ++b) {
    const Batch batch = make_batch(b, "score-probe");
    Graph g;
    std::vector<BoundParams> bound;
    const GanModules mods = bind_modules(g, bound, false, false);
    const VarId x = g.constant(batch.x);
    const VarId target = g.constant(batch.target);
    const DiscObjective obj = build_discriminator_objective(g, x, target, mods, true);
    for (int k = 0; k < 4; ++k) {
      const Tensor& sf = g.value(obj.score_fake[static_cast<size_t>(k)]);
      const Tensor& sr = g.value(obj.score_real[static_cast<size_t>(k)]);
      for (int64_t i = 0; i < sf.numel(); ++i) {
        fake_sum += sf[i];
        real_sum += sr[i];
        ++count;
      }
    }
  }
  return {real_sum / static_cast<double>(count), fake_sum / static_cast<double>(count)};
}

// ---------------------------------------------------------------------------
// checkpointing

void Trainer::save_checkpoint(const std::string& dir) const {
  fs::create_directories(dir);
  save_params(dir, "generator", gen_params_);
  static const char* kNs[3] = {"wave_disc_16k", "wave_disc_8k", "wave_disc_4k"};
  for (int k = 0; k < 3; ++k) save_params(dir, kNs[k], wave_params_[static_cast<size_t>(k)]);
  save_params(dir, "spec_disc", spec_params_);
  save_adam(dir, "generator", gen_params_, gen_opt_);
  for (int k = 0; k < 3; ++k)
    save_adam(dir, kNs[k], wave_params_[static_cast<size_t>(k)], wave_opt_[static_cast<size_t>(k)]);
  save_adam(dir, "spec_disc", spec_params_, spec_opt_);

  json meta;
  meta["format_version"] = kCheckpointFormatVersion;
  meta["step"] = step_;
  meta["stage_id"] = current_stage().stage_id;
  meta["total_disc_updates"] = total_disc_updates_;
  meta["mel_norm"] = {{"mean", mel_norm_.mean}, {"stddev", mel_norm_.stddev}};
  meta["adam_steps"] = {gen_opt_.step_count(), wave_opt_[0].step_count(),
                        wave_opt_[1].step_count(), wave_opt_[2].step_count(),
                        spec_opt_.step_count()};
  meta["last_d_losses"] = last_d_losses_;
  meta["loss_history"] = std::vector<double>(loss_history_.begin(), loss_history_.end());
  meta["config"] = cfg_.config_echo;
  std::ofstream f(fs::path(dir) / "metadata.json");
  if (!f) throw std::runtime_error("save_checkpoint: cannot write metadata in " + dir);
  f << meta.dump(2) << "\n";
}

void Trainer::load_checkpoint(const std::string& dir) {
  std::ifstream f(fs::path(dir) / "metadata.json");
  if (!f) throw std::runtime_error("load_checkpoint: missing metadata.json in " + dir);
  json meta = json::parse(f);
  if (meta.at("format_version").get<int>() != kCheckpointFormatVersion)
    throw std::runtime_error("load_checkpoint: unsupported format version");
  const std::string saved_cfg = meta.at("config").get<std::string>();
  if (!cfg_.config_echo.empty() && !saved_cfg.empty() && saved_cfg != cfg_.config_echo)
    throw std::runtime_error(
        "load_checkpoint: checkpoint was produced with a different configuration");

  load_params(dir, "generator", gen_params_);
  static const char* kNs[3] = {"wave_disc_16k", "wave_disc_8k", "wave_disc_4k"};
  for (int k = 0; k < 3; ++k) load_params(dir, kNs[k], wave_params_[static_cast<size_t>(k)]);
  load_params(dir, "spec_disc", spec_params_);
  load_adam(dir, "generator", gen_params_, gen_opt_);
  for (int k = 0; k < 3; ++k)
    load_adam(dir, kNs[k], wave_params_[static_cast<size_t>(k)], wave_opt_[static_cast<size_t>(k)]);
  load_adam(dir, "spec_disc", spec_params_, spec_opt_);

  step_ = meta.at("step").get<int64_t>();
  total_disc_updates_ = meta.at("total_disc_updates").get<int64_t>();
  const auto adam_steps = meta.at("adam_steps").get<std::vector<int64_t>>();
  gen_opt_.set_step_count(adam_steps.at(0));
  for (int k = 0; k < 3; ++k)
    wave_opt_[static_cast<size_t>(k)].set_step_count(adam_steps.at(static_cast<size_t>(k + 1)));
  spec_opt_.set_step_count(adam_steps.at(4));
  mel_norm_.mean = meta.at("mel_norm").at("mean").get<double>();
  mel_norm_.stddev = meta.at("mel_norm").at("stddev").get<double>();
  const auto dl = meta.at("last_d_losses").get<std::vector<double>>();
  for (int k = 0; k < 4; ++k) last_d_losses_[static_cast<size_t>(k)] = dl.at(static_cast<size_t>(k));
  loss_history_.clear();
  for (double v : meta.at("loss_history").get<std::vector<double>>()) loss_history_.push_back(v);
}

// ---------------------------------------------------------------------------
// schedule

std::string Trainer::run_schedule(const std::string& out_dir) {
  fs::create_directories(out_dir);
  if (!cfg_.config_echo.empty()) {
    std::ofstream cf(fs::path(out_dir) / "effective_config.json");
    cf << cfg_.config_echo << "\n";
  }
  std::ofstream log(fs::path(out_dir) / "train_log.jsonl", std::ios::app);
  if (!log) throw std::runtime_error("run_schedule: cannot open training log");

  // Stage start offsets, for the stage-3 discriminator reset.
  std::vector<int64_t> stage_start;
  int64_t acc = 0;
  for (const auto& s : cfg_.stages) {
    stage_start.push_back(acc);
    acc += s.steps;
  }

  double best_val = std::numeric_limits<double>::infinity();
  int last_stage = step_ == 0 ? 0 : current_stage().stage_id;
  const int64_t total = total_steps();
  while (step_ < total) {
    const StageConfig stage = current_stage();
    if (stage.stage_id != last_stage) {
      log << json{{"event", "stage_start"}, {"stage", stage.stage_id}, {"step", step_}}.dump()
          << "\n";
      last_stage = stage.stage_id;
    }
    // Entering the adversarial stage at its first step: fresh discriminators.
    if (stage.use_adversarial &&
        step_ == stage_start[static_cast<size_t>(stage.stage_id - 1)]) {
      init_discriminators();
      log << json{{"event", "discriminators_initialized"}, {"step", step_}}.dump() << "\n";
    }

    const auto t0 = std::chrono::steady_clock::now();
    TrainLogEntry entry;
    if (stage.use_adversarial) {
      for (int u = 0; u < stage.disc_updates_per_gen_step; ++u) train_step_discriminators();
    }
    entry.losses = train_step_generator();
    entry.step = step_;
    entry.stage = stage.stage_id;
    entry.lr_g = stage.lr_generator;
    entry.lr_d = stage.use_adversarial ? stage.lr_discriminators : 0.0;

    if (cfg_.validate_every > 0 && step_ % cfg_.validate_every == 0 && !val_entries_.empty()) {
      const auto [vs, vl] = validate();
      entry.val_spec = vs;
      entry.val_l1 = vl;
      if (vs < best_val) {
        best_val = vs;
        save_checkpoint((fs::path(out_dir) / "ckpt_best").string());
      }
    }
    entry.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0).count();
    log << entry.to_json() << "\n";
    log.flush();

    const int64_t stage_end = stage_start[static_cast<size_t>(stage.stage_id - 1)] + stage.steps;
    const bool boundary = step_ == stage_end && step_ < total;
    if ((cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0) || boundary)
      save_checkpoint((fs::path(out_dir) / ("ckpt_step_" + std::to_string(step_))).string());
  }

  const std::string final_path = (fs::path(out_dir) / "ckpt_final").string();
  save_checkpoint(final_path);
  return final_path;
}

}  // namespace enhgan
