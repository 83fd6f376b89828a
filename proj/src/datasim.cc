// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/datasim.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "enhgan/dsp.h"
#include "enhgan/fft.h"

namespace enhgan {

namespace fs = std::filesystem;
using nlohmann::json;

const AudioBuffer& AssetStore::get(const std::string& path) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(path);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(path, load_audio(path, working_rate_)).first->second;
}

AudioBuffer mix_at_snr(const AudioBuffer& clean, const AudioBuffer& noise, double snr_db) {
  validate_audio(clean, "mix_at_snr");
  validate_audio(noise, "mix_at_snr");
  if (clean.length() != noise.length())
    throw std::invalid_argument("mix_at_snr: length mismatch");
  const double rc = rms(clean);
  const double rn = rms(noise);
  if (rc <= 0.0) throw std::invalid_argument("mix_at_snr: clean has zero energy");
  if (rn <= 0.0) throw std::invalid_argument("mix_at_snr: noise has zero energy");
  const double g = (rc / rn) * std::pow(10.0, -snr_db / 20.0);
  AudioBuffer out = clean;
  for (int64_t i = 0; i < out.length(); ++i)
    out.samples[static_cast<size_t>(i)] += g * noise.samples[static_cast<size_t>(i)];
  return out;
}

namespace {

int64_t peak_index(const AudioBuffer& rir) {
  int64_t best = 0;
  double best_abs = -1.0;
  for (int64_t i = 0; i < rir.length(); ++i) {
    const double a = std::abs(rir.samples[static_cast<size_t>(i)]);
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (best_abs <= 0.0) throw std::invalid_argument("rir: all-zero impulse response");
  return best;
}

}  // namespace

AudioBuffer apply_rir(const AudioBuffer& clean, const AudioBuffer& rir) {
  validate_audio(clean, "apply_rir");
  validate_audio(rir, "apply_rir");
  if (clean.sample_rate_hz != rir.sample_rate_hz)
    throw std::invalid_argument("apply_rir: sample rate mismatch");
  const int64_t d = peak_index(rir);
  const std::vector<double> full = convolve_full(clean.samples, rir.samples);
  AudioBuffer out;
  out.sample_rate_hz = clean.sample_rate_hz;
  out.samples.resize(static_cast<size_t>(clean.length()));
  for (int64_t i = 0; i < clean.length(); ++i) {
    const int64_t j = i + d;
    out.samples[static_cast<size_t>(i)] =
        j < static_cast<int64_t>(full.size()) ? full[static_cast<size_t>(j)] : 0.0;
  }
  return out;
}

double measure_drr_db(const AudioBuffer& rir, double window_ms) {
  validate_audio(rir, "measure_drr_db");
  const int64_t p = peak_index(rir);
  const int64_t w = static_cast<int64_t>(std::llround(window_ms * 1e-3 * rir.sample_rate_hz));
  const int64_t lo = std::max<int64_t>(0, p - w);
  const int64_t hi = std::min<int64_t>(rir.length() - 1, p + w);
  double direct = 0.0, rest = 0.0;
  for (int64_t i = 0; i < rir.length(); ++i) {
    const double e = rir.samples[static_cast<size_t>(i)] * rir.samples[static_cast<size_t>(i)];
    if (i >= lo && i <= hi)
      direct += e;
    else
      rest += e;
  }
  if (rest <= 0.0) throw std::invalid_argument("measure_drr_db: no reverberant energy");
  return 10.0 * std::log10(direct / rest);
}

double estimate_t60_schroeder(const AudioBuffer& rir) {
  validate_audio(rir, "estimate_t60_schroeder");
  const int64_t n = rir.length();
  std::vector<double> edc(static_cast<size_t>(n));
  double acc = 0.0;
  for (int64_t i = n - 1; i >= 0; --i) {
    acc += rir.samples[static_cast<size_t>(i)] * rir.samples[static_cast<size_t>(i)];
    edc[static_cast<size_t>(i)] = acc;
  }
  if (acc <= 0.0) throw std::invalid_argument("estimate_t60_schroeder: zero energy");
  // Least-squares fit of the decay curve between -5 dB and -25 dB.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int64_t count = 0;
  for (int64_t i = 0; i < n; ++i) {
    const double db = 10.0 * std::log10(edc[static_cast<size_t>(i)] / acc + 1e-300);
    if (db > -5.0 || db < -25.0) continue;
    const double t = static_cast<double>(i) / rir.sample_rate_hz;
    sx += t;
    sy += db;
    sxx += t * t;
    sxy += t * db;
    ++count;
  }
  if (count < 8)
    throw std::invalid_argument("estimate_t60_schroeder: decay range too short to fit");
  const double denom = count * sxx - sx * sx;
  if (std::abs(denom) < 1e-30)
    throw std::invalid_argument("estimate_t60_schroeder: degenerate fit");
  const double slope = (count * sxy - sx * sy) / denom;  // dB per second
  if (slope >= 0.0) throw std::invalid_argument("estimate_t60_schroeder: no decay");
  return -60.0 / slope;
}

AudioBuffer reshape_rir(const AudioBuffer& rir, double drr_offset_db, double rt60_scale) {
  validate_audio(rir, "reshape_rir");
  if (rt60_scale <= 0.0) throw std::invalid_argument("reshape_rir: rt60_scale must be > 0");
  const int64_t p = peak_index(rir);
  const int64_t w = static_cast<int64_t>(std::llround(2.5e-3 * rir.sample_rate_hz));
  AudioBuffer out = rir;
  if (drr_offset_db != 0.0) {
    const double a = std::pow(10.0, drr_offset_db / 20.0);
    const int64_t lo = std::max<int64_t>(0, p - w);
    const int64_t hi = std::min<int64_t>(rir.length() - 1, p + w);
    for (int64_t i = lo; i <= hi; ++i) out.samples[static_cast<size_t>(i)] *= a;
  }
  if (rt60_scale != 1.0) {
    const double t60 = estimate_t60_schroeder(rir);
    // amplitude decay rate ln(1000)/T60; add the delta that rescales T60
    const double alpha = std::log(1000.0) * (1.0 / (rt60_scale * t60) - 1.0 / t60);
    const int64_t start = std::min<int64_t>(rir.length(), p + w + 1);
    for (int64_t i = start; i < rir.length(); ++i) {
      const double t = static_cast<double>(i - start) / rir.sample_rate_hz;
      out.samples[static_cast<size_t>(i)] *= std::exp(-alpha * t);
    }
  }
  return out;
}

std::vector<double> multiband_eq_centers(int n_bands, int sample_rate_hz) {
  if (n_bands < 2) throw std::invalid_argument("multiband_eq: need at least 2 bands");
  const double f_lo = 60.0;
  const double f_hi = 0.45 * sample_rate_hz;
  std::vector<double> centers(static_cast<size_t>(n_bands));
  for (int i = 0; i < n_bands; ++i)
    centers[static_cast<size_t>(i)] =
        f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / (n_bands - 1));
  return centers;
}

std::vector<double> random_multiband_eq(Rng& rng, int n_bands, double max_gain_db,
                                        int sample_rate_hz, int n_taps) {
  const std::vector<double> centers = multiband_eq_centers(n_bands, sample_rate_hz);
  std::vector<double> gains_db(static_cast<size_t>(n_bands));
  for (auto& g : gains_db) g = rng.uniform(-max_gain_db, max_gain_db);

  // Desired magnitude on a dense grid: linear interpolation in (log f, dB),
  // flat extension beyond the outer band centers.
  const int nfft = 2048;
  auto desired_db = [&](double f) {
    if (f <= centers.front()) return gains_db.front();
    if (f >= centers.back()) return gains_db.back();
    for (size_t i = 1; i < centers.size(); ++i) {
      if (f <= centers[i]) {
        const double u =
            (std::log(f) - std::log(centers[i - 1])) / (std::log(centers[i]) - std::log(centers[i - 1]));
        return gains_db[i - 1] + u * (gains_db[i] - gains_db[i - 1]);
      }
    }
    return gains_db.back();
  };

  // Frequency sampling: real even spectrum -> inverse FFT -> center, window.
  std::vector<std::complex<double>> spec(nfft);
  for (int k = 0; k <= nfft / 2; ++k) {
    const double f = static_cast<double>(k) * sample_rate_hz / nfft;
    const double mag = std::pow(10.0, desired_db(f) / 20.0);
    spec[static_cast<size_t>(k)] = mag;
    if (k > 0 && k < nfft / 2) spec[static_cast<size_t>(nfft - k)] = mag;
  }
  fft_inplace(spec, true);

  const int center = (n_taps - 1) / 2;
  std::vector<double> taps(static_cast<size_t>(n_taps));
  for (int n = 0; n < n_taps; ++n) {
    int idx = n - center;
    if (idx < 0) idx += nfft;
    // symmetric Hann over the tap span
    const double win = 0.5 * (1.0 - std::cos(2.0 * M_PI * n / (n_taps - 1)));
    taps[static_cast<size_t>(n)] = spec[static_cast<size_t>(idx)].real() * win;
  }
  return taps;
}

SimulationSpec sample_spec(Rng& rng, const AugmentConfig& cfg) {
  if (cfg.use_reverb && cfg.rir_ids.empty())
    throw std::runtime_error("sample_spec: reverberation enabled but the RIR pool is empty");
  if (cfg.use_noise && cfg.noise_ids.empty())
    throw std::runtime_error("sample_spec: noise enabled but the noise pool is empty");

  SimulationSpec spec;
  if (cfg.use_reverb) spec.rir_id = cfg.rir_ids[rng.uniform_int(cfg.rir_ids.size())];
  if (cfg.use_noise) spec.noise_id = cfg.noise_ids[rng.uniform_int(cfg.noise_ids.size())];
  spec.snr_db = rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
  if (cfg.use_eq) {
    spec.eq_taps_noise =
        random_multiband_eq(rng, cfg.eq_bands, cfg.eq_max_gain_db, cfg.sample_rate_hz);
    spec.eq_taps_rir =
        random_multiband_eq(rng, cfg.eq_bands, cfg.eq_max_gain_db, cfg.sample_rate_hz);
  }
  spec.speed_factor = cfg.use_speed ? rng.uniform(cfg.speed_min, cfg.speed_max) : 1.0;
  spec.gain = cfg.use_gain ? rng.uniform(cfg.gain_min, cfg.gain_max) : 1.0;
  if (cfg.use_rir_reshape) {
    spec.drr_offset_db = rng.uniform(-cfg.drr_offset_max_db, cfg.drr_offset_max_db);
    spec.rt60_scale = rng.uniform(cfg.rt60_scale_min, cfg.rt60_scale_max);
  }
  spec.seed = rng.next_u64();
  return spec;
}

std::pair<AudioBuffer, AudioBuffer> simulate_pair(const AudioBuffer& clean,
                                                  const SimulationSpec& spec, AssetStore& assets) {
  validate_audio(clean, "simulate_pair");
  if (spec.speed_factor <= 0.0 || spec.gain <= 0.0)
    throw std::invalid_argument("simulate_pair: speed and gain must be > 0");

  // Ground-truth perturbations, applied to both sides.
  AudioBuffer target = clean;
  if (spec.speed_factor != 1.0) {
    const int rate2 = static_cast<int>(std::llround(clean.sample_rate_hz / spec.speed_factor));
    target = resample(clean, rate2);
    target.sample_rate_hz = clean.sample_rate_hz;  // relabel: play-rate change
  }
  if (spec.gain != 1.0)
    for (auto& v : target.samples) v *= spec.gain;

  // Degradations, applied to one side only.
  AudioBuffer degraded = target;
  if (!spec.rir_id.empty()) {
    AudioBuffer rir = assets.get(spec.rir_id);
    if (spec.drr_offset_db != 0.0 || spec.rt60_scale != 1.0)
      rir = reshape_rir(rir, spec.drr_offset_db, spec.rt60_scale);
    if (!spec.eq_taps_rir.empty()) rir = fir_filter(rir, spec.eq_taps_rir);
    degraded = apply_rir(target, rir);
  }
  if (!spec.noise_id.empty()) {
    const AudioBuffer& src = assets.get(spec.noise_id);
    Rng rng(spec.seed);
    const int64_t offset = static_cast<int64_t>(rng.uniform_int(
        static_cast<uint64_t>(src.length())));
    AudioBuffer noise;
    noise.sample_rate_hz = src.sample_rate_hz;
    noise.samples.resize(static_cast<size_t>(target.length()));
    for (int64_t i = 0; i < target.length(); ++i)
      noise.samples[static_cast<size_t>(i)] =
          src.samples[static_cast<size_t>((offset + i) % src.length())];
    if (!spec.eq_taps_noise.empty()) noise = fir_filter(noise, spec.eq_taps_noise);
    degraded = mix_at_snr(degraded, noise, spec.snr_db);
  }
  return {degraded, target};
}

// ---------------------------------------------------------------------------
// manifests

std::vector<ManifestEntry> Manifest::split(const std::string& name) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == name) out.push_back(e);
  return out;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_manifest: cannot open " + path);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    fs::path q(p);
    return q.is_absolute() ? q.string() : (base / q).string();
  };

  Manifest m;
  std::map<std::string, std::string> split_of;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line);
    ManifestEntry e;
    e.clean_path = resolve(j.at("clean_path").get<std::string>());
    e.rir_path = resolve(j.value("rir_path", ""));
    e.noise_path = resolve(j.value("noise_path", ""));
    e.split = j.at("split").get<std::string>();
    if (e.split != "train" && e.split != "val" && e.split != "test")
      throw std::runtime_error("load_manifest: bad split at line " + std::to_string(line_no));
    for (const std::string& p : {e.clean_path, e.rir_path, e.noise_path})
      if (!p.empty() && !fs::exists(p))
        throw std::runtime_error("load_manifest: missing file " + p);
    auto it = split_of.find(e.clean_path);
    if (it != split_of.end() && it->second != e.split)
      throw std::runtime_error("load_manifest: " + e.clean_path + " appears in multiple splits");
    split_of[e.clean_path] = e.split;
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw std::runtime_error("load_manifest: empty manifest " + path);
  return m;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_manifest: cannot open " + path);
  for (const auto& e : manifest.entries) {
    json j;
    j["clean_path"] = e.clean_path;
    if (!e.rir_path.empty()) j["rir_path"] = e.rir_path;
    if (!e.noise_path.empty()) j["noise_path"] = e.noise_path;
    j["split"] = e.split;
    f << j.dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// toy corpus

namespace {

AudioBuffer synth_speech_like(Rng& rng, int rate) {
  const double dur = rng.uniform(2.0, 3.0);
  const int64_t len = static_cast<int64_t>(dur * rate);
  const double f0 = rng.uniform(110.0, 280.0);
  const int n_harm = 12;

  // two formant-style resonances shape the harmonic amplitudes
  const double r1 = rng.uniform(300.0, 800.0), r2 = rng.uniform(1200.0, 2400.0);
  std::vector<double> amp(n_harm), phase(n_harm);
  for (int h = 0; h < n_harm; ++h) {
    const double f = f0 * (h + 1);
    const double g1 = std::exp(-0.5 * std::pow((f - r1) / 250.0, 2));
    const double g2 = 0.6 * std::exp(-0.5 * std::pow((f - r2) / 400.0, 2));
    amp[static_cast<size_t>(h)] = (0.2 + g1 + g2) / (h + 1);
    phase[static_cast<size_t>(h)] = rng.uniform(0.0, 2.0 * M_PI);
  }

  // syllabic amplitude modulation with pauses
  const double m1 = rng.uniform(1.5, 3.5), m2 = rng.uniform(3.5, 6.0);
  const double p1 = rng.uniform(0.0, 2.0 * M_PI), p2 = rng.uniform(0.0, 2.0 * M_PI);

  AudioBuffer a;
  a.sample_rate_hz = rate;
  a.samples.resize(static_cast<size_t>(len));
  double peak = 0.0;
  for (int64_t i = 0; i < len; ++i) {
    const double t = static_cast<double>(i) / rate;
    double env = 0.55 * std::sin(2.0 * M_PI * m1 * t + p1) +
                 0.45 * std::sin(2.0 * M_PI * m2 * t + p2);
    env = std::max(0.0, env);
    env *= env;  // sharpen: creates silent gaps between "syllables"
    double v = 0.0;
    for (int h = 0; h < n_harm; ++h) {
      const double f = f0 * (h + 1);
      if (f > 3600.0) break;
      v += amp[static_cast<size_t>(h)] *
           std::sin(2.0 * M_PI * f * t + phase[static_cast<size_t>(h)]);
    }
    a.samples[static_cast<size_t>(i)] = env * v;
    peak = std::max(peak, std::abs(a.samples[static_cast<size_t>(i)]));
  }
  for (auto& v : a.samples) v *= 0.5 / std::max(peak, 1e-9);
  return a;
}

AudioBuffer synth_rir(Rng& rng, int rate) {
  const double t60 = rng.uniform(0.15, 0.6);
  const int64_t len = static_cast<int64_t>(1.4 * t60 * rate);
  const int64_t direct = static_cast<int64_t>(0.002 * rate);

  AudioBuffer h;
  h.sample_rate_hz = rate;
  h.samples.assign(static_cast<size_t>(len), 0.0);
  h.samples[static_cast<size_t>(direct)] = 1.0;
  // sparse early reflections inside 40 ms
  const int n_early = 4 + static_cast<int>(rng.uniform_int(5));
  for (int i = 0; i < n_early; ++i) {
    const int64_t at = direct + 1 +
                       static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(0.04 * rate)));
    if (at < len)
      h.samples[static_cast<size_t>(at)] += rng.uniform(-0.4, 0.4);
  }
  // stochastic exponential tail
  const double tail_gain = rng.uniform(0.15, 0.4);
  const double k = std::log(1000.0) / t60;
  for (int64_t i = direct + 1; i < len; ++i) {
    const double t = static_cast<double>(i - direct) / rate;
    h.samples[static_cast<size_t>(i)] += tail_gain * rng.normal() * std::exp(-k * t);
  }
  // keep the direct path the global peak
  double tail_peak = 0.0;
  for (int64_t i = 0; i < len; ++i)
    if (i != direct)
      tail_peak = std::max(tail_peak, std::abs(h.samples[static_cast<size_t>(i)]));
  if (tail_peak >= 0.95) {
    for (int64_t i = 0; i < len; ++i)
      if (i != direct) h.samples[static_cast<size_t>(i)] *= 0.9 / tail_peak;
  }
  return h;
}

AudioBuffer synth_noise(Rng& rng, int rate) {
  const double dur = rng.uniform(3.0, 5.0);
  const int64_t len = static_cast<int64_t>(dur * rate);
  AudioBuffer a;
  a.sample_rate_hz = rate;
  a.samples.resize(static_cast<size_t>(len));
  // white noise through a random one-pole, mixed with a broadband floor
  const double cutoff = rng.uniform(800.0, 6000.0);
  const double alpha = std::exp(-2.0 * M_PI * cutoff / rate);
  const double broadband = rng.uniform(0.2, 0.6);
  double state = 0.0;
  for (auto& v : a.samples) {
    const double w = rng.normal();
    state = alpha * state + (1.0 - alpha) * w;
    v = broadband * w + (1.0 - broadband) * state * 4.0;
  }
  const double r = rms(a);
  for (auto& v : a.samples) v *= 0.1 / std::max(r, 1e-9);
  return a;
}

}  // namespace

std::string make_toy_dataset(const std::string& out_dir, uint64_t seed, int n_utterances,
                             int working_rate_hz) {
  if (n_utterances < 1) throw std::invalid_argument("make_toy_dataset: need n >= 1");
  fs::create_directories(fs::path(out_dir) / "clean");
  fs::create_directories(fs::path(out_dir) / "rir");
  fs::create_directories(fs::path(out_dir) / "noise");

  const int n_rirs = std::max(3, n_utterances / 10);
  const int n_noises = std::max(3, n_utterances / 10);

  char name[64];
  std::vector<std::string> rir_rel(static_cast<size_t>(n_rirs));
  for (int j = 0; j < n_rirs; ++j) {
    Rng rng = derive_rng(seed, "rir", static_cast<uint64_t>(j));
    std::snprintf(name, sizeof(name), "rir/rir_%03d.wav", j);
    rir_rel[static_cast<size_t>(j)] = name;
    write_wav((fs::path(out_dir) / name).string(), synth_rir(rng, working_rate_hz));
  }
  std::vector<std::string> noise_rel(static_cast<size_t>(n_noises));
  for (int j = 0; j < n_noises; ++j) {
    Rng rng = derive_rng(seed, "noise", static_cast<uint64_t>(j));
    std::snprintf(name, sizeof(name), "noise/noise_%03d.wav", j);
    noise_rel[static_cast<size_t>(j)] = name;
    write_wav((fs::path(out_dir) / name).string(), synth_noise(rng, working_rate_hz));
  }

  Manifest m;
  const int n_train = std::max(1, (n_utterances * 8) / 10);
  const int n_val = std::max(n_utterances >= 10 ? 1 : 0, (n_utterances - n_train) / 2);
  for (int i = 0; i < n_utterances; ++i) {
    Rng rng = derive_rng(seed, "clean", static_cast<uint64_t>(i));
    std::snprintf(name, sizeof(name), "clean/utt_%04d.wav", i);
    write_wav((fs::path(out_dir) / name).string(), synth_speech_like(rng, working_rate_hz));
    ManifestEntry e;
    e.clean_path = name;
    e.rir_path = rir_rel[static_cast<size_t>(i % n_rirs)];
    e.noise_path = noise_rel[static_cast<size_t>(i % n_noises)];
    e.split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
    m.entries.push_back(std::move(e));
  }
  const std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
  save_manifest(manifest_path, m);
  return manifest_path;
}

}  // namespace enhgan
