// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include <mutex>

#include "enhgan/dsp.h"
#include "enhgan/fft.h"
#include "enhgan/parallel.h"

namespace enhgan {

using nlohmann::json;

// ---------------------------------------------------------------------------
// STOI

namespace {

constexpr int kStoiRate = 10000;
constexpr int kStoiFrame = 256;
constexpr int kStoiHop = 128;
constexpr int kStoiFft = 512;
constexpr int kStoiBands = 15;
constexpr int kStoiSegment = 30;        // 30 frames * 12.8 ms = 384 ms
constexpr double kStoiDynRange = 40.0;  // silent-frame threshold, dB
constexpr double kStoiBeta = 0.31622776601683794;  // 10^(-15/20), SDR clip

std::vector<std::vector<double>> frame_signal(const std::vector<double>& x, int frame, int hop) {
  std::vector<std::vector<double>> frames;
  // MATLAB-convention Hann (no zero endpoints)
  std::vector<double> win(static_cast<size_t>(frame));
  for (int i = 0; i < frame; ++i)
    win[static_cast<size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * (i + 1) / (frame + 1)));
  for (size_t start = 0; start + static_cast<size_t>(frame) <= x.size();
       start += static_cast<size_t>(hop)) {
    std::vector<double> f(static_cast<size_t>(frame));
    for (int i = 0; i < frame; ++i)
      f[static_cast<size_t>(i)] = x[start + static_cast<size_t>(i)] * win[static_cast<size_t>(i)];
    frames.push_back(std::move(f));
  }
  return frames;
}

double frame_energy_db(const std::vector<double>& f) {
  double e = 0.0;
  for (double v : f) e += v * v;
  return 10.0 * std::log10(e + 1e-300);
}

// One-third-octave band power aggregation of an FFT frame.
std::vector<std::array<int, 2>> third_octave_bins() {
  std::vector<std::array<int, 2>> bands;
  for (int j = 0; j < kStoiBands; ++j) {
    const double cf = 150.0 * std::pow(2.0, j / 3.0);
    const double lo = cf / std::pow(2.0, 1.0 / 6.0);
    const double hi = cf * std::pow(2.0, 1.0 / 6.0);
    const int klo = static_cast<int>(std::ceil(lo * kStoiFft / kStoiRate));
    const int khi = std::min(kStoiFft / 2,
                             static_cast<int>(std::floor(hi * kStoiFft / kStoiRate)));
    bands.push_back({klo, khi});
  }
  return bands;
}

}  // namespace

double stoi(const AudioBuffer& enhanced, const AudioBuffer& reference) {
  validate_audio(enhanced, "stoi");
  validate_audio(reference, "stoi");
  if (enhanced.length() != reference.length() ||
      enhanced.sample_rate_hz != reference.sample_rate_hz)
    throw std::invalid_argument("stoi: signals must share length and rate");

  const AudioBuffer ref10 = resample(reference, kStoiRate);
  const AudioBuffer enh10 = resample(enhanced, kStoiRate);

  auto ref_frames = frame_signal(ref10.samples, kStoiFrame, kStoiHop);
  auto enh_frames = frame_signal(enh10.samples, kStoiFrame, kStoiHop);
  const size_t n_frames = std::min(ref_frames.size(), enh_frames.size());
  if (n_frames < kStoiSegment) throw std::invalid_argument("stoi: input too short");

  // Silent-frame removal keyed on the reference.
  double max_db = -1e300;
  for (size_t m = 0; m < n_frames; ++m) max_db = std::max(max_db, frame_energy_db(ref_frames[m]));
  std::vector<size_t> keep;
  for (size_t m = 0; m < n_frames; ++m)
    if (frame_energy_db(ref_frames[m]) > max_db - kStoiDynRange) keep.push_back(m);
  if (keep.size() < kStoiSegment)
    throw std::invalid_argument("stoi: too few active frames after silence removal");

  // Band envelopes.
  const auto bands = third_octave_bins();
  const size_t m_act = keep.size();
  std::vector<std::vector<double>> xb(kStoiBands, std::vector<double>(m_act));
  std::vector<std::vector<double>> yb(kStoiBands, std::vector<double>(m_act));
  std::vector<double> padded(kStoiFft);
  for (size_t mi = 0; mi < m_act; ++mi) {
    for (int pass = 0; pass < 2; ++pass) {
      const auto& frame = pass == 0 ? ref_frames[keep[mi]] : enh_frames[keep[mi]];
      std::fill(padded.begin(), padded.end(), 0.0);
      std::copy(frame.begin(), frame.end(), padded.begin());
      const auto spec = rfft(padded);
      for (int j = 0; j < kStoiBands; ++j) {
        double e = 0.0;
        for (int k = bands[static_cast<size_t>(j)][0]; k <= bands[static_cast<size_t>(j)][1]; ++k)
          e += std::norm(spec[static_cast<size_t>(k)]);
        (pass == 0 ? xb : yb)[static_cast<size_t>(j)][mi] = std::sqrt(e);
      }
    }
  }

  // Segment correlations with normalization and SDR clipping.
  double sum = 0.0;
  int64_t count = 0;
  for (size_t m = kStoiSegment; m <= m_act; ++m) {
    for (int j = 0; j < kStoiBands; ++j) {
      const double* x = xb[static_cast<size_t>(j)].data() + (m - kStoiSegment);
      const double* y = yb[static_cast<size_t>(j)].data() + (m - kStoiSegment);
      double ex = 0.0, ey = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) {
        ex += x[i] * x[i];
        ey += y[i] * y[i];
      }
      const double alpha = std::sqrt(ex / std::max(ey, 1e-300));
      double xm = 0.0, ym = 0.0;
      std::array<double, kStoiSegment> yc;
      for (int i = 0; i < kStoiSegment; ++i) {
        yc[static_cast<size_t>(i)] = std::min(alpha * y[i], (1.0 + kStoiBeta) * x[i]);
        xm += x[i];
        ym += yc[static_cast<size_t>(i)];
      }
      xm /= kStoiSegment;
      ym /= kStoiSegment;
      double num = 0.0, dx = 0.0, dy = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) {
        const double a = x[i] - xm;
        const double b = yc[static_cast<size_t>(i)] - ym;
        num += a * b;
        dx += a * a;
        dy += b * b;
      }
      if (dx > 1e-300 && dy > 1e-300) {
        sum += num / std::sqrt(dx * dy);
        ++count;
      }
      // degenerate flat segments contribute nothing
    }
  }
  if (count == 0) throw std::invalid_argument("stoi: no valid segments");
  return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// FW-SSNR

namespace {

constexpr int kFwBands = 25;
constexpr double kFwGamma = 0.2;
constexpr double kFwFloorDb = -10.0;
constexpr double kFwCeilDb = 35.0;

// 25 mel-spaced triangular filters between 50 Hz and Nyquist on the
// magnitude spectrum.
Tensor fw_filterbank(int fft_size, int rate) {
  MelConfig cfg;
  cfg.n_mels = kFwBands;
  cfg.f_min_hz = 50.0;
  cfg.f_max_hz = rate / 2.0;
  cfg.sample_rate_hz = rate;
  cfg.spec.fft_size = fft_size;
  cfg.spec.hop_size = fft_size;
  return mel_filterbank(cfg);
}

}  // namespace

double fw_ssnr(const AudioBuffer& enhanced, const AudioBuffer& reference) {
  validate_audio(enhanced, "fw_ssnr");
  validate_audio(reference, "fw_ssnr");
  if (enhanced.length() != reference.length() ||
      enhanced.sample_rate_hz != reference.sample_rate_hz)
    throw std::invalid_argument("fw_ssnr: signals must share length and rate");
  if (rms(reference) <= 0.0) throw std::invalid_argument("fw_ssnr: zero-energy reference");

  const int rate = reference.sample_rate_hz;
  const int frame = static_cast<int>(std::llround(0.032 * rate));
  const int hop = frame / 4;  // 75% overlap
  if (reference.length() < frame) throw std::invalid_argument("fw_ssnr: input shorter than a frame");
  int fft_size = 1;
  while (fft_size < frame) fft_size <<= 1;
  const int64_t bins = fft_size / 2 + 1;
  const Tensor fb = fw_filterbank(fft_size, rate);

  std::vector<double> win = hann_window(frame);
  std::vector<double> padded(static_cast<size_t>(fft_size));
  std::vector<double> bref(kFwBands), benh(kFwBands);

  double total = 0.0;
  int64_t frames_used = 0;
  for (int64_t start = 0; start + frame <= reference.length(); start += hop) {
    std::array<const AudioBuffer*, 2> sigs = {&reference, &enhanced};
    std::array<std::vector<double>*, 2> out = {&bref, &benh};
    for (int p = 0; p < 2; ++p) {
      std::fill(padded.begin(), padded.end(), 0.0);
      for (int i = 0; i < frame; ++i)
        padded[static_cast<size_t>(i)] =
            sigs[static_cast<size_t>(p)]->samples[static_cast<size_t>(start + i)] *
            win[static_cast<size_t>(i)];
      const auto spec = rfft(padded);
      for (int b = 0; b < kFwBands; ++b) {
        double acc = 0.0;
        for (int64_t k = 0; k < bins; ++k)
          acc += fb[b * bins + k] * std::abs(spec[static_cast<size_t>(k)]);
        (*out[static_cast<size_t>(p)])[static_cast<size_t>(b)] = acc;
      }
    }
    double wsum = 0.0, acc = 0.0;
    for (int b = 0; b < kFwBands; ++b) {
      const double x = bref[static_cast<size_t>(b)];
      if (x <= 1e-12) continue;  // empty reference band carries no weight
      const double d = x - benh[static_cast<size_t>(b)];
      const double snr = 10.0 * std::log10((x * x) / std::max(d * d, 1e-300));
      const double w = std::pow(x, kFwGamma);
      acc += w * std::clamp(snr, kFwFloorDb, kFwCeilDb);
      wsum += w;
    }
    if (wsum <= 0.0) continue;  // silent reference frame
    total += acc / wsum;
    ++frames_used;
  }
  if (frames_used == 0) throw std::invalid_argument("fw_ssnr: no usable frames");
  return total / static_cast<double>(frames_used);
}

// ---------------------------------------------------------------------------
// simplified SRMR

double srmr_simplified(const AudioBuffer& audio) {
  validate_audio(audio, "srmr_simplified");
  const int rate = audio.sample_rate_hz;
  if (audio.length() < rate) throw std::invalid_argument("srmr_simplified: need >= 1 s of audio");

  // Band envelopes from a mel filterbank over STFT magnitudes.
  MelConfig cfg;
  cfg.n_mels = 20;
  cfg.f_min_hz = 125.0;
  cfg.f_max_hz = rate / 2.0;
  cfg.sample_rate_hz = rate;
  cfg.spec.fft_size = 256;
  cfg.spec.hop_size = 128;
  cfg.spec.center_padding = true;
  const Tensor fb = mel_filterbank(cfg);
  const auto spec = stft(audio, cfg.spec);
  const int64_t frames = static_cast<int64_t>(spec.size());
  const int64_t bins = cfg.spec.fft_size / 2 + 1;
  const double env_rate = static_cast<double>(rate) / cfg.spec.hop_size;

  int64_t mod_fft = 1;
  while (mod_fft < frames) mod_fft <<= 1;

  const double split_hz = 20.0;
  const double lo_hz = 2.0;
  double low = 0.0, high = 0.0;
  std::vector<double> env(static_cast<size_t>(mod_fft));
  for (int64_t b = 0; b < cfg.n_mels; ++b) {
    std::fill(env.begin(), env.end(), 0.0);
    double mean = 0.0;
    for (int64_t t = 0; t < frames; ++t) {
      double acc = 0.0;
      for (int64_t k = 0; k < bins; ++k)
        acc += fb[b * bins + k] * std::abs(spec[static_cast<size_t>(t)][static_cast<size_t>(k)]);
      env[static_cast<size_t>(t)] = acc;
      mean += acc;
    }
    mean /= static_cast<double>(frames);
    if (mean <= 1e-12) continue;
    // normalized, windowed modulation spectrum
    for (int64_t t = 0; t < frames; ++t) {
      const double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * t / frames));
      env[static_cast<size_t>(t)] = (env[static_cast<size_t>(t)] / mean - 1.0) * w;
    }
    const auto mod = rfft(env);
    for (size_t k = 1; k < mod.size(); ++k) {
      const double f = static_cast<double>(k) * env_rate / static_cast<double>(mod_fft);
      if (f < lo_hz) continue;
      const double e = std::norm(mod[k]);
      if (f <= split_hz)
        low += e;
      else
        high += e;
    }
  }
  return low / (high + 1e-12);
}

// ---------------------------------------------------------------------------
// dataset evaluation

namespace {

double run_pesq_command(const std::string& command_template, const AudioBuffer& ref,
                        const AudioBuffer& deg, size_t index) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path();
  const std::string tag = std::to_string(index);
  const std::string ref_path = (dir / ("enhgan_pesq_ref_" + tag + ".wav")).string();
  const std::string deg_path = (dir / ("enhgan_pesq_deg_" + tag + ".wav")).string();
  write_wav(ref_path, ref, WavFormat::kPcm16);
  write_wav(deg_path, deg, WavFormat::kPcm16);

  std::string cmd = command_template;
  auto replace = [&cmd](const std::string& key, const std::string& value) {
    const auto pos = cmd.find(key);
    if (pos != std::string::npos) cmd.replace(pos, key.size(), value);
  };
  replace("{ref}", ref_path);
  replace("{deg}", deg_path);

  std::FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("pesq: cannot run command: " + cmd);
  std::string output;
  char buf[256];
  while (std::fgets(buf, sizeof(buf), pipe)) output += buf;
  const int status = pclose(pipe);
  std::remove(ref_path.c_str());
  std::remove(deg_path.c_str());
  if (status != 0) throw std::runtime_error("pesq: command failed: " + cmd);

  // last parseable real in the output
  double value = 0.0;
  bool found = false;
  size_t pos = 0;
  while (pos < output.size()) {
    char* end = nullptr;
    const double v = std::strtod(output.c_str() + pos, &end);
    if (end == output.c_str() + pos) {
      ++pos;
    } else {
      value = v;
      found = true;
      pos = static_cast<size_t>(end - output.c_str());
    }
  }
  if (!found) throw std::runtime_error("pesq: no numeric value in command output");
  return value;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.n = static_cast<int64_t>(values.size());
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  for (double v : values) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(s.n));
  return s;
}

}  // namespace

MetricTable evaluate_dataset(const std::vector<ManifestEntry>& entries, const Enhancer& enhancer,
                             const EvalOptions& opts) {
  if (entries.empty()) throw std::invalid_argument("evaluate_dataset: no entries");
  AssetStore assets(opts.working_rate_hz);
  MetricTable table;
  table.rows.resize(entries.size());
  std::vector<std::string> errors;
  std::mutex err_mu;

  parallel_for(opts.workers, static_cast<int64_t>(entries.size()), [&](int64_t idx) {
    const size_t i = static_cast<size_t>(idx);
    const ManifestEntry& e = entries[i];
    try {
      const AudioBuffer& clean = assets.get(e.clean_path);
      AudioBuffer input = clean;
      AudioBuffer reference = clean;
      if (opts.use_degraded_input) {
        SimulationSpec spec;
        if (opts.fixed_use_rir) spec.rir_id = e.rir_path;
        if (opts.fixed_use_noise) spec.noise_id = e.noise_path;
        spec.snr_db = opts.fixed_snr_db;
        spec.seed = hash_combine(hash_combine(opts.seed, hash_str("fixed")),
                                 hash_str(e.clean_path));
        auto [deg, tgt] = simulate_pair(clean, spec, assets);
        input = std::move(deg);
        reference = std::move(tgt);
      }
      const AudioBuffer enhanced = enhancer(input);
      MetricRow row;
      row.utterance_id = std::filesystem::path(e.clean_path).stem().string();
      row.stoi = stoi(enhanced, reference);
      row.fwssnr_db = fw_ssnr(enhanced, reference);
      row.srmr = srmr_simplified(enhanced);
      if (!opts.pesq_command.empty())
        row.pesq = run_pesq_command(opts.pesq_command, reference, enhanced, i);
      table.rows[i] = std::move(row);
    } catch (const std::exception& ex) {
      std::lock_guard<std::mutex> lock(err_mu);
      errors.push_back(e.clean_path + ": " + ex.what());
    }
  });
  std::sort(errors.begin(), errors.end());
  if (!errors.empty()) {
    std::string msg = "evaluate_dataset: " + std::to_string(errors.size()) + " utterances failed:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::runtime_error(msg);
  }

  std::vector<double> stois, fws, srmrs, pesqs;
  for (const auto& r : table.rows) {
    stois.push_back(r.stoi);
    fws.push_back(r.fwssnr_db);
    srmrs.push_back(r.srmr);
    if (r.pesq) pesqs.push_back(*r.pesq);
  }
  table.summary["stoi"] = summarize(stois);
  table.summary["fwssnr_db"] = summarize(fws);
  table.summary["srmr"] = summarize(srmrs);
  if (!pesqs.empty()) table.summary["pesq"] = summarize(pesqs);
  return table;
}

void write_metric_table(const std::string& path, const MetricTable& table) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_metric_table: cannot open " + path);
  const bool has_pesq = table.summary.count("pesq") > 0;
  f << "utterance_id\tstoi\tfwssnr_db\tsrmr";
  if (has_pesq) f << "\tpesq";
  f << "\n";
  char buf[256];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.4f\t%.4f", r.utterance_id.c_str(), r.stoi,
                  r.fwssnr_db, r.srmr);
    f << buf;
    if (has_pesq) {
      std::snprintf(buf, sizeof(buf), "\t%.4f", r.pesq.value_or(0.0));
      f << buf;
    }
    f << "\n";
  }
  std::snprintf(buf, sizeof(buf), "mean\t%.6f\t%.4f\t%.4f", table.summary.at("stoi").mean,
                table.summary.at("fwssnr_db").mean, table.summary.at("srmr").mean);
  f << buf;
  if (has_pesq) {
    std::snprintf(buf, sizeof(buf), "\t%.4f", table.summary.at("pesq").mean);
    f << buf;
  }
  f << "\n";
}

void write_metric_summary(const std::string& path, const MetricTable& table) {
  json j;
  for (const auto& [name, s] : table.summary)
    j[name] = {{"mean", s.mean}, {"std", s.stddev}, {"n", s.n}};
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_metric_summary: cannot open " + path);
  f << j.dump(2) << "\n";
}

}  // namespace enhgan
