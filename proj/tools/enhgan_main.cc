// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Command-line entry points: toy dataset synthesis, pair simulation, staged
// training, waveform enhancement, objective evaluation and chart emission.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "enhgan/checkpoint.h"
#include "enhgan/config.h"
#include "enhgan/datasim.h"
#include "enhgan/enhance.h"
#include "enhgan/metrics.h"
#include "enhgan/plot.h"
#include "enhgan/train.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace enhgan;

namespace {

struct GlobalArgs {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;
  int workers = 1;
  std::string out_dir;
};

RunConfig resolve_config(const GlobalArgs& g) {
  RunConfig cfg = g.config_path.empty() ? default_run_config() : load_run_config(g.config_path);
  if (g.seed_set) {
    cfg.seed = g.seed;
    cfg.trainer.seed = g.seed;
    cfg.eval.seed = g.seed;
  }
  cfg.trainer.workers = g.workers;
  cfg.eval.workers = g.workers;
  return cfg;
}

void archive_config(const RunConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream f(fs::path(dir) / "effective_config.json");
  f << run_config_to_json(cfg) << "\n";
}

// Generator parameters + config recovered from a checkpoint directory.
struct LoadedGenerator {
  RunConfig run;
  ParamSet params;
};

LoadedGenerator load_generator_checkpoint(const std::string& ckpt_dir) {
  std::ifstream f(fs::path(ckpt_dir) / "metadata.json");
  if (!f) throw std::runtime_error("checkpoint: missing metadata.json in " + ckpt_dir);
  json meta;
  try {
    meta = json::parse(f);
  } catch (const json::exception& ex) {
    throw std::runtime_error("checkpoint: corrupt metadata.json in " + ckpt_dir + ": " +
                             ex.what());
  }
  const std::string echo = meta.value("config", "");
  if (echo.empty())
    throw std::runtime_error("checkpoint: metadata carries no config echo: " + ckpt_dir);
  LoadedGenerator out{parse_run_config(echo, ckpt_dir), ParamSet{}};
  out.params = init_generator_params(out.run.trainer.generator, 0);
  load_params(ckpt_dir, "generator", out.params);
  return out;
}

int cmd_make_toy_dataset(const GlobalArgs& g, int n, int rate) {
  if (g.out_dir.empty()) throw std::runtime_error("make-toy-dataset: --out is required");
  const std::string manifest = make_toy_dataset(g.out_dir, g.seed_set ? g.seed : 7, n, rate);
  std::printf("%s\n", manifest.c_str());
  return 0;
}

int cmd_simulate(const GlobalArgs& g, const std::string& manifest_opt, const std::string& split,
                 bool augmented) {
  RunConfig cfg = resolve_config(g);
  if (!manifest_opt.empty()) cfg.manifest_path = manifest_opt;
  if (cfg.manifest_path.empty())
    throw std::runtime_error("simulate: no manifest (pass --manifest or set data.manifest)");
  if (g.out_dir.empty()) throw std::runtime_error("simulate: --out is required");
  fs::create_directories(g.out_dir);
  archive_config(cfg, g.out_dir);

  const Manifest manifest = load_manifest(cfg.manifest_path);
  const auto entries = manifest.split(split);
  if (entries.empty()) throw std::runtime_error("simulate: split has no entries: " + split);

  AssetStore assets(cfg.trainer.data.working_rate_hz);
  AugmentConfig aug = cfg.trainer.data.augment;
  aug.sample_rate_hz = cfg.trainer.data.working_rate_hz;
  if (aug.rir_ids.empty())
    for (const auto& e : entries)
      if (!e.rir_path.empty()) aug.rir_ids.push_back(e.rir_path);
  if (aug.noise_ids.empty())
    for (const auto& e : entries)
      if (!e.noise_path.empty()) aug.noise_ids.push_back(e.noise_path);

  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    SimulationSpec spec;
    if (augmented) {
      Rng rng = derive_rng(cfg.seed, "simulate", i);
      spec = sample_spec(rng, aug);
    } else {
      if (cfg.trainer.data.fixed_use_rir) spec.rir_id = e.rir_path;
      if (cfg.trainer.data.fixed_use_noise) spec.noise_id = e.noise_path;
      spec.snr_db = cfg.trainer.data.fixed_snr_db;
      spec.seed = hash_combine(hash_combine(cfg.seed, hash_str("fixed")), hash_str(e.clean_path));
    }
    const auto [deg, tgt] = simulate_pair(assets.get(e.clean_path), spec, assets);
    const std::string stem = fs::path(e.clean_path).stem().string();
    write_wav((fs::path(g.out_dir) / (stem + "_degraded.wav")).string(), deg);
    write_wav((fs::path(g.out_dir) / (stem + "_target.wav")).string(), tgt);
  }
  std::printf("simulated %zu pairs into %s\n", entries.size(), g.out_dir.c_str());
  return 0;
}

int cmd_train(const GlobalArgs& g, double stage_scale, const std::string& resume) {
  RunConfig cfg = resolve_config(g);
  if (cfg.manifest_path.empty())
    throw std::runtime_error("train: config must set data.manifest");
  if (g.out_dir.empty()) throw std::runtime_error("train: --out is required");
  if (stage_scale <= 0.0) throw std::runtime_error("train: --stage-scale must be > 0");
  for (auto& s : cfg.trainer.stages)
    if (s.steps > 0)
      s.steps = std::max<int64_t>(1, static_cast<int64_t>(std::llround(
                                         static_cast<double>(s.steps) * stage_scale)));
  cfg.trainer.config_echo = run_config_to_json(cfg);

  Trainer trainer(cfg.trainer, load_manifest(cfg.manifest_path));
  if (!resume.empty()) trainer.load_checkpoint(resume);
  const std::string final_ckpt = trainer.run_schedule(g.out_dir);
  std::printf("%s\n", final_ckpt.c_str());
  return 0;
}

int cmd_enhance(const std::string& ckpt, const std::string& in_path, const std::string& out_path,
                bool pcm16, int64_t window, int64_t overlap) {
  const LoadedGenerator gen = load_generator_checkpoint(ckpt);
  const int rate = gen.run.trainer.data.working_rate_hz;
  const AudioBuffer input = load_audio(in_path, rate);
  EnhanceOptions opts;
  opts.window = window;
  opts.overlap = overlap;
  const AudioBuffer enhanced = enhance_waveform(input, gen.params, gen.run.trainer.generator, opts);
  write_wav(out_path, enhanced, pcm16 ? WavFormat::kPcm16 : WavFormat::kFloat32);
  return 0;
}

int cmd_evaluate(const GlobalArgs& g, const std::string& ckpt, const std::string& manifest_opt,
                 const std::string& split) {
  RunConfig cfg = resolve_config(g);
  if (!manifest_opt.empty()) cfg.manifest_path = manifest_opt;
  if (cfg.manifest_path.empty())
    throw std::runtime_error("evaluate: no manifest (pass --manifest or set data.manifest)");
  if (g.out_dir.empty()) throw std::runtime_error("evaluate: --out is required");
  fs::create_directories(g.out_dir);
  archive_config(cfg, g.out_dir);

  Enhancer enhancer;
  if (ckpt.empty()) {
    enhancer = [](const AudioBuffer& a) { return a; };
  } else {
    auto gen = std::make_shared<LoadedGenerator>(load_generator_checkpoint(ckpt));
    enhancer = [gen](const AudioBuffer& a) {
      return enhance_waveform(a, gen->params, gen->run.trainer.generator);
    };
  }

  const Manifest manifest = load_manifest(cfg.manifest_path);
  const auto entries = manifest.split(split);
  if (entries.empty()) throw std::runtime_error("evaluate: split has no entries: " + split);
  const MetricTable table = evaluate_dataset(entries, enhancer, cfg.eval);
  write_metric_table((fs::path(g.out_dir) / "metrics.tsv").string(), table);
  write_metric_summary((fs::path(g.out_dir) / "summary.json").string(), table);
  for (const auto& [name, s] : table.summary)
    std::printf("%-10s mean %.4f  std %.4f  n %lld\n", name.c_str(), s.mean, s.stddev,
                static_cast<long long>(s.n));
  return 0;
}

int cmd_plot(const GlobalArgs& g, const std::vector<std::string>& inputs) {
  if (g.out_dir.empty()) throw std::runtime_error("plot: --out is required");
  fs::create_directories(g.out_dir);
  // inputs: label=path/to/summary.json
  std::map<std::string, std::vector<std::pair<std::string, double>>> per_metric;
  for (const auto& item : inputs) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("plot: inputs must be label=summary.json, got " + item);
    const std::string label = item.substr(0, eq);
    std::ifstream f(item.substr(eq + 1));
    if (!f) throw std::runtime_error("plot: cannot open " + item.substr(eq + 1));
    const json j = json::parse(f);
    for (const auto& [metric, stats] : j.items())
      per_metric[metric].emplace_back(label, stats.at("mean").get<double>());
  }
  for (const auto& [metric, bars] : per_metric) {
    const std::string path = (fs::path(g.out_dir) / (metric + ".svg")).string();
    write_bar_chart_svg(path, metric, bars);
    std::printf("%s\n", path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"enhgan: speech enhancement GAN toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "Run configuration file (JSON)")
      ->envname("ENHGAN_CONFIG");
  app.add_option("--seed", g.seed, "Global random seed")->each([&](const std::string&) {
    g.seed_set = true;
  });
  app.add_option("--workers", g.workers, "Parallel workers for data and evaluation")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out_dir, "Output directory");

  auto* mk = app.add_subcommand("make-toy-dataset", "Synthesize a small self-contained corpus");
  int toy_n = 50, toy_rate = 16000;
  mk->add_option("--n", toy_n, "Number of utterances")->check(CLI::PositiveNumber);
  mk->add_option("--rate", toy_rate, "Sample rate in Hz")->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "Render degraded/target pairs for a manifest split");
  std::string sim_manifest, sim_split = "train";
  bool sim_augmented = false;
  sim->add_option("--manifest", sim_manifest, "Manifest path (overrides config)");
  sim->add_option("--split", sim_split, "Manifest split")
      ->check(CLI::IsMember({"train", "val", "test"}));
  sim->add_flag("--augmented", sim_augmented, "Sample a random augmentation per pair");

  auto* tr = app.add_subcommand("train", "Run the staged training schedule");
  double stage_scale = 1.0;
  std::string resume;
  tr->add_option("--stage-scale", stage_scale, "Multiplier on every stage's step count");
  tr->add_option("--resume", resume, "Checkpoint directory to resume from");

  auto* enh = app.add_subcommand("enhance", "Enhance a waveform with a trained checkpoint");
  std::string enh_ckpt, enh_in, enh_out;
  bool pcm16 = false;
  int64_t enh_window = 32000, enh_overlap = 4096;
  enh->add_option("--checkpoint", enh_ckpt, "Checkpoint directory")->required();
  enh->add_option("--in", enh_in, "Input WAV file")->required();
  enh->add_option("--out-wav", enh_out, "Output WAV file")->required();
  enh->add_flag("--pcm16", pcm16, "Write 16-bit PCM instead of 32-bit float");
  enh->add_option("--window", enh_window, "Chunk window in samples");
  enh->add_option("--overlap", enh_overlap, "Chunk overlap in samples");

  auto* ev = app.add_subcommand("evaluate", "Objective metrics over a manifest split");
  std::string ev_ckpt, ev_manifest, ev_split = "test";
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint directory (omit for identity enhancer)");
  ev->add_option("--manifest", ev_manifest, "Manifest path (overrides config)");
  ev->add_option("--split", ev_split, "Manifest split")
      ->check(CLI::IsMember({"train", "val", "test"}));

  auto* pl = app.add_subcommand("plot", "Bar charts from evaluation summaries");
  std::vector<std::string> plot_inputs;
  pl->add_option("inputs", plot_inputs, "label=summary.json pairs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (mk->parsed()) return cmd_make_toy_dataset(g, toy_n, toy_rate);
    if (sim->parsed()) return cmd_simulate(g, sim_manifest, sim_split, sim_augmented);
    if (tr->parsed()) return cmd_train(g, stage_scale, resume);
    if (enh->parsed()) return cmd_enhance(enh_ckpt, enh_in, enh_out, pcm16, enh_window, enh_overlap);
    if (ev->parsed()) return cmd_evaluate(g, ev_ckpt, ev_manifest, ev_split);
    if (pl->parsed()) return cmd_plot(g, plot_inputs);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
