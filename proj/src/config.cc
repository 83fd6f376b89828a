// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/config.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace enhgan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::runtime_error("config: section " + section + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!ok.count(key))
      throw std::runtime_error("config: unknown key \"" + key + "\" in section " + section);
  }
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

template <typename T, size_t N>
void get_array(const json& j, const char* key, std::array<T, N>& out, const std::string& section) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<T>>();
  if (v.size() != N)
    throw std::runtime_error("config: " + section + "." + key + " must have " +
                             std::to_string(N) + " entries");
  std::copy(v.begin(), v.end(), out.begin());
}

void parse_generator(const json& j, GeneratorConfig& g) {
  check_keys(j, "generator",
             {"n_layers", "dilation_cycle", "kernel_size", "channels", "postnet_layers",
              "postnet_channels", "postnet_kernel"});
  get_to(j, "n_layers", g.n_layers);
  get_to(j, "dilation_cycle", g.dilation_cycle);
  get_to(j, "kernel_size", g.kernel_size);
  get_to(j, "channels", g.channels);
  get_to(j, "postnet_layers", g.postnet_layers);
  get_to(j, "postnet_channels", g.postnet_channels);
  get_to(j, "postnet_kernel", g.postnet_kernel);
}

void parse_discriminators(const json& j, TrainerConfig& t) {
  check_keys(j, "discriminators", {"wave", "spec", "mel"});
  if (j.contains("wave")) {
    const json& w = j.at("wave");
    check_keys(w, "discriminators.wave",
               {"kernel_sizes", "strides", "channels", "groups", "leaky_slope"});
    get_array(w, "kernel_sizes", t.wave_disc.kernel_sizes, "discriminators.wave");
    get_array(w, "strides", t.wave_disc.strides, "discriminators.wave");
    get_array(w, "channels", t.wave_disc.channels, "discriminators.wave");
    get_array(w, "groups", t.wave_disc.groups, "discriminators.wave");
    get_to(w, "leaky_slope", t.wave_disc.leaky_slope);
  }
  if (j.contains("spec")) {
    const json& s = j.at("spec");
    check_keys(s, "discriminators.spec", {"channels", "head_kernel"});
    get_to(s, "channels", t.spec_disc.channels);
    get_to(s, "head_kernel", t.spec_disc.head_kernel);
  }
  if (j.contains("mel")) {
    const json& m = j.at("mel");
    check_keys(m, "discriminators.mel", {"n_mels", "f_min_hz", "f_max_hz", "fft_size", "hop_size"});
    get_to(m, "n_mels", t.mel.n_mels);
    get_to(m, "f_min_hz", t.mel.f_min_hz);
    get_to(m, "f_max_hz", t.mel.f_max_hz);
    get_to(m, "fft_size", t.mel.spec.fft_size);
    get_to(m, "hop_size", t.mel.spec.hop_size);
  }
}

void parse_augment(const json& j, AugmentConfig& a) {
  check_keys(j, "data.augment",
             {"use_reverb", "use_noise", "use_eq", "use_speed", "use_gain", "use_rir_reshape",
              "snr_min_db", "snr_max_db", "speed_min", "speed_max", "gain_min", "gain_max",
              "drr_offset_max_db", "rt60_scale_min", "rt60_scale_max", "eq_bands",
              "eq_max_gain_db"});
  get_to(j, "use_reverb", a.use_reverb);
  get_to(j, "use_noise", a.use_noise);
  get_to(j, "use_eq", a.use_eq);
  get_to(j, "use_speed", a.use_speed);
  get_to(j, "use_gain", a.use_gain);
  get_to(j, "use_rir_reshape", a.use_rir_reshape);
  get_to(j, "snr_min_db", a.snr_min_db);
  get_to(j, "snr_max_db", a.snr_max_db);
  get_to(j, "speed_min", a.speed_min);
  get_to(j, "speed_max", a.speed_max);
  get_to(j, "gain_min", a.gain_min);
  get_to(j, "gain_max", a.gain_max);
  get_to(j, "drr_offset_max_db", a.drr_offset_max_db);
  get_to(j, "rt60_scale_min", a.rt60_scale_min);
  get_to(j, "rt60_scale_max", a.rt60_scale_max);
  get_to(j, "eq_bands", a.eq_bands);
  get_to(j, "eq_max_gain_db", a.eq_max_gain_db);
}

void parse_data(const json& j, const fs::path& base, RunConfig& cfg) {
  check_keys(j, "data",
             {"manifest", "working_rate_hz", "crop_samples", "batch_size", "fixed_use_rir",
              "fixed_use_noise", "fixed_snr_db", "augment"});
  if (j.contains("manifest")) {
    fs::path p = j.at("manifest").get<std::string>();
    cfg.manifest_path = p.is_absolute() ? p.string() : (base / p).string();
  }
  DataConfig& d = cfg.trainer.data;
  get_to(j, "working_rate_hz", d.working_rate_hz);
  get_to(j, "crop_samples", d.crop_samples);
  get_to(j, "batch_size", d.batch_size);
  get_to(j, "fixed_use_rir", d.fixed_use_rir);
  get_to(j, "fixed_use_noise", d.fixed_use_noise);
  get_to(j, "fixed_snr_db", d.fixed_snr_db);
  if (j.contains("augment")) parse_augment(j.at("augment"), d.augment);
}

void parse_stages(const json& j, std::vector<StageConfig>& stages) {
  if (!j.is_array()) throw std::runtime_error("config: stages must be an array");
  stages.clear();
  int id = 1;
  for (const json& s : j) {
    check_keys(s, "stages[" + std::to_string(id) + "]",
               {"stage_id", "steps", "lr_generator", "lr_discriminators", "use_postnet",
                "use_augmentation", "use_adversarial", "disc_updates_per_gen_step"});
    StageConfig sc;
    sc.stage_id = id++;
    get_to(s, "stage_id", sc.stage_id);
    get_to(s, "steps", sc.steps);
    get_to(s, "lr_generator", sc.lr_generator);
    get_to(s, "lr_discriminators", sc.lr_discriminators);
    get_to(s, "use_postnet", sc.use_postnet);
    get_to(s, "use_augmentation", sc.use_augmentation);
    get_to(s, "use_adversarial", sc.use_adversarial);
    get_to(s, "disc_updates_per_gen_step", sc.disc_updates_per_gen_step);
    stages.push_back(sc);
  }
}

void parse_train(const json& j, TrainerConfig& t) {
  check_keys(j, "train",
             {"checkpoint_every", "validate_every", "grad_clip_norm", "adam_gen", "adam_disc"});
  get_to(j, "checkpoint_every", t.checkpoint_every);
  get_to(j, "validate_every", t.validate_every);
  double clip = t.adam_gen.clip_norm;
  get_to(j, "grad_clip_norm", clip);
  t.adam_gen.clip_norm = clip;
  t.adam_disc.clip_norm = clip;
  for (const char* key : {"adam_gen", "adam_disc"}) {
    if (!j.contains(key)) continue;
    const json& a = j.at(key);
    check_keys(a, std::string("train.") + key, {"beta1", "beta2", "eps"});
    AdamConfig& cfg = std::string(key) == "adam_gen" ? t.adam_gen : t.adam_disc;
    get_to(a, "beta1", cfg.beta1);
    get_to(a, "beta2", cfg.beta2);
    get_to(a, "eps", cfg.eps);
  }
}

void parse_eval(const json& j, EvalOptions& e) {
  check_keys(j, "eval", {"pairs", "fixed_snr_db", "fixed_use_rir", "fixed_use_noise",
                         "pesq_command"});
  if (j.contains("pairs")) {
    const std::string pairs = j.at("pairs").get<std::string>();
    if (pairs != "clean" && pairs != "degraded")
      throw std::runtime_error("config: eval.pairs must be \"clean\" or \"degraded\"");
    e.use_degraded_input = pairs == "degraded";
  }
  get_to(j, "fixed_snr_db", e.fixed_snr_db);
  get_to(j, "fixed_use_rir", e.fixed_use_rir);
  get_to(j, "fixed_use_noise", e.fixed_use_noise);
  get_to(j, "pesq_command", e.pesq_command);
}

}  // namespace

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.trainer.mel.spec = SpectrogramConfig{1024, 256, "hann", true};
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return parse_run_config(text, fs::path(path).parent_path().string());
  } catch (const std::runtime_error& ex) {
    throw std::runtime_error(std::string(ex.what()) + " (config file " + path + ")");
  }
}

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& ex) {
    throw std::runtime_error(std::string("config: parse error: ") + ex.what());
  }
  check_keys(j, "<top level>",
             {"seed", "dsp", "generator", "discriminators", "losses", "data", "stages", "train",
              "eval"});

  RunConfig cfg = default_run_config();
  const fs::path base = base_dir;
  get_to(j, "seed", cfg.seed);
  if (j.contains("dsp")) {
    const json& d = j.at("dsp");
    check_keys(d, "dsp", {"spec_loss_floor_eps"});
    get_to(d, "spec_loss_floor_eps", cfg.trainer.spec_loss.floor_eps);
  }
  if (j.contains("generator")) parse_generator(j.at("generator"), cfg.trainer.generator);
  if (j.contains("discriminators")) parse_discriminators(j.at("discriminators"), cfg.trainer);
  if (j.contains("losses")) {
    const json& l = j.at("losses");
    check_keys(l, "losses", {"w_l1", "w_spec", "w_adv", "w_fm"});
    get_to(l, "w_l1", cfg.trainer.weights.w_l1);
    get_to(l, "w_spec", cfg.trainer.weights.w_spec);
    get_to(l, "w_adv", cfg.trainer.weights.w_adv);
    get_to(l, "w_fm", cfg.trainer.weights.w_fm);
  }
  if (j.contains("data")) parse_data(j.at("data"), base, cfg);
  if (j.contains("stages")) parse_stages(j.at("stages"), cfg.trainer.stages);
  if (j.contains("train")) parse_train(j.at("train"), cfg.trainer);
  if (j.contains("eval")) parse_eval(j.at("eval"), cfg.eval);

  cfg.trainer.seed = cfg.seed;
  cfg.trainer.mel.sample_rate_hz = cfg.trainer.data.working_rate_hz;
  cfg.eval.working_rate_hz = cfg.trainer.data.working_rate_hz;
  cfg.eval.seed = cfg.seed;
  // Evaluation's deterministic pairs mirror training's fixed simulation.
  cfg.eval.fixed_use_rir = cfg.trainer.data.fixed_use_rir;
  cfg.eval.fixed_use_noise = cfg.trainer.data.fixed_use_noise;
  cfg.eval.fixed_snr_db = cfg.trainer.data.fixed_snr_db;
  if (j.contains("eval")) parse_eval(j.at("eval"), cfg.eval);  // eval keys win
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  const TrainerConfig& t = cfg.trainer;
  json j;
  j["seed"] = cfg.seed;
  j["dsp"] = {{"spec_loss_floor_eps", t.spec_loss.floor_eps}};
  j["generator"] = {{"n_layers", t.generator.n_layers},
                    {"dilation_cycle", t.generator.dilation_cycle},
                    {"kernel_size", t.generator.kernel_size},
                    {"channels", t.generator.channels},
                    {"postnet_layers", t.generator.postnet_layers},
                    {"postnet_channels", t.generator.postnet_channels},
                    {"postnet_kernel", t.generator.postnet_kernel}};
  j["discriminators"] = {
      {"wave",
       {{"kernel_sizes", t.wave_disc.kernel_sizes},
        {"strides", t.wave_disc.strides},
        {"channels", t.wave_disc.channels},
        {"groups", t.wave_disc.groups},
        {"leaky_slope", t.wave_disc.leaky_slope}}},
      {"spec", {{"channels", t.spec_disc.channels}, {"head_kernel", t.spec_disc.head_kernel}}},
      {"mel",
       {{"n_mels", t.mel.n_mels},
        {"f_min_hz", t.mel.f_min_hz},
        {"f_max_hz", t.mel.f_max_hz},
        {"fft_size", t.mel.spec.fft_size},
        {"hop_size", t.mel.spec.hop_size}}}};
  j["losses"] = {{"w_l1", t.weights.w_l1},
                 {"w_spec", t.weights.w_spec},
                 {"w_adv", t.weights.w_adv},
                 {"w_fm", t.weights.w_fm}};
  const AugmentConfig& a = t.data.augment;
  j["data"] = {{"manifest", cfg.manifest_path},
               {"working_rate_hz", t.data.working_rate_hz},
               {"crop_samples", t.data.crop_samples},
               {"batch_size", t.data.batch_size},
               {"fixed_use_rir", t.data.fixed_use_rir},
               {"fixed_use_noise", t.data.fixed_use_noise},
               {"fixed_snr_db", t.data.fixed_snr_db},
               {"augment",
                {{"use_reverb", a.use_reverb},
                 {"use_noise", a.use_noise},
                 {"use_eq", a.use_eq},
                 {"use_speed", a.use_speed},
                 {"use_gain", a.use_gain},
                 {"use_rir_reshape", a.use_rir_reshape},
                 {"snr_min_db", a.snr_min_db},
                 {"snr_max_db", a.snr_max_db},
                 {"speed_min", a.speed_min},
                 {"speed_max", a.speed_max},
                 {"gain_min", a.gain_min},
                 {"gain_max", a.gain_max},
                 {"drr_offset_max_db", a.drr_offset_max_db},
                 {"rt60_scale_min", a.rt60_scale_min},
                 {"rt60_scale_max", a.rt60_scale_max},
                 {"eq_bands", a.eq_bands},
                 {"eq_max_gain_db", a.eq_max_gain_db}}}};
  j["stages"] = json::array();
  for (const StageConfig& s : t.stages)
    j["stages"].push_back({{"stage_id", s.stage_id},
                           {"steps", s.steps},
                           {"lr_generator", s.lr_generator},
                           {"lr_discriminators", s.lr_discriminators},
                           {"use_postnet", s.use_postnet},
                           {"use_augmentation", s.use_augmentation},
                           {"use_adversarial", s.use_adversarial},
                           {"disc_updates_per_gen_step", s.disc_updates_per_gen_step}});
  j["train"] = {{"checkpoint_every", t.checkpoint_every},
                {"validate_every", t.validate_every},
                {"grad_clip_norm", t.adam_gen.clip_norm},
                {"adam_gen",
                 {{"beta1", t.adam_gen.beta1}, {"beta2", t.adam_gen.beta2}, {"eps", t.adam_gen.eps}}},
                {"adam_disc",
                 {{"beta1", t.adam_disc.beta1},
                  {"beta2", t.adam_disc.beta2},
                  {"eps", t.adam_disc.eps}}}};
  j["eval"] = {{"pairs", cfg.eval.use_degraded_input ? "degraded" : "clean"},
               {"fixed_snr_db", cfg.eval.fixed_snr_db},
               {"fixed_use_rir", cfg.eval.fixed_use_rir},
               {"fixed_use_noise", cfg.eval.fixed_use_noise},
               {"pesq_command", cfg.eval.pesq_command}};
  return j.dump(2);
}

}  // namespace enhgan
