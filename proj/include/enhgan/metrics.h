// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "enhgan/audio.h"
#include "enhgan/datasim.h"

namespace enhgan {

// Short-time objective intelligibility: one-third-octave band temporal
// envelope correlation over 384 ms segments at a 10 kHz internal rate,
// with silent-frame removal driven by the reference.
double stoi(const AudioBuffer& enhanced, const AudioBuffer& reference);

// Frequency-weighted segmental SNR in dB: per frame and critical band,
// 10 log10(B_ref^2 / (B_ref - B_enh)^2), band-clamped to [-10, 35] and
// weighted by B_ref^0.2; 32 ms frames with 75% overlap, 25 mel-spaced bands.
double fw_ssnr(const AudioBuffer& enhanced, const AudioBuffer& reference);

// Non-intrusive reverberation indicator: ratio of low (2-20 Hz) to high
// (20 Hz-Nyquist of the envelope rate) modulation energy of mel-band
// envelopes. A documented simplified variant; not comparable with published
// SRMR implementations, hence the explicit name.
double srmr_simplified(const AudioBuffer& audio);

struct MetricRow {
  std::string utterance_id;
  double stoi = 0.0;
  double fwssnr_db = 0.0;
  double srmr = 0.0;
  std::optional<double> pesq;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
  int64_t n = 0;
};

struct MetricTable {
  std::vector<MetricRow> rows;
  std::map<std::string, MetricSummary> summary;  // stoi, fwssnr_db, srmr[, pesq]
};

using Enhancer = std::function<AudioBuffer(const AudioBuffer&)>;

struct EvalOptions {
  int working_rate_hz = 16000;
  // clean: reference = input = the clean recording (the "Clean" table row).
  // degraded: input = deterministic simulation of the manifest pairing.
  bool use_degraded_input = true;
  bool fixed_use_rir = true;
  bool fixed_use_noise = true;
  double fixed_snr_db = 20.0;
  uint64_t seed = 0;
  int workers = 1;
  // Optional external PESQ command; "{ref}" and "{deg}" placeholders are
  // replaced by file paths and a single real is parsed from its output.
  std::string pesq_command;
};

MetricTable evaluate_dataset(const std::vector<ManifestEntry>& entries, const Enhancer& enhancer,
                             const EvalOptions& opts);

// Tab-separated per-utterance table with a trailing mean row.
void write_metric_table(const std::string& path, const MetricTable& table);
// {metric: {mean, std, n}} as JSON.
void write_metric_summary(const std::string& path, const MetricTable& table);

}  // namespace enhgan
