// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "enhgan/audio.h"
#include "enhgan/rng.h"

namespace enhgan {

// One sampled degradation recipe. Fully reproducible: every data-dependent
// draw inside simulate_pair derives from `seed`.
struct SimulationSpec {
  std::string rir_id;    // empty: no reverberation
  std::string noise_id;  // empty: no additive noise
  double snr_db = 20.0;
  std::vector<double> eq_taps_noise;  // empty: flat
  std::vector<double> eq_taps_rir;    // empty: flat
  double speed_factor = 1.0;
  double gain = 1.0;
  double drr_offset_db = 0.0;
  double rt60_scale = 1.0;
  uint64_t seed = 0;
};

struct AugmentConfig {
  std::vector<std::string> rir_ids;
  std::vector<std::string> noise_ids;
  bool use_reverb = true;
  bool use_noise = true;
  bool use_eq = true;
  bool use_speed = true;
  bool use_gain = true;
  bool use_rir_reshape = true;
  double snr_min_db = 10.0;
  double snr_max_db = 30.0;
  double speed_min = 0.9;
  double speed_max = 1.1;
  double gain_min = 0.25;
  double gain_max = 1.0;
  double drr_offset_max_db = 6.0;  // offsets drawn in [-max, +max]
  double rt60_scale_min = 0.5;
  double rt60_scale_max = 1.5;
  int eq_bands = 8;
  double eq_max_gain_db = 6.0;
  int sample_rate_hz = 16000;
};

// Loads and caches audio assets (RIRs, noises) by path at the working rate.
class AssetStore {
 public:
  explicit AssetStore(int working_rate_hz) : working_rate_(working_rate_hz) {}
  const AudioBuffer& get(const std::string& path);
  int working_rate() const { return working_rate_; }

 private:
  int working_rate_;
  std::mutex mu_;
  std::map<std::string, AudioBuffer> cache_;
};

// output = clean + g * noise with g chosen so the energy ratio hits snr_db
// exactly. Lengths must already match.
AudioBuffer mix_at_snr(const AudioBuffer& clean, const AudioBuffer& noise, double snr_db);

// Full convolution truncated to the clean length, shifted by the RIR peak so
// the direct sound stays sample-aligned with the clean target.
AudioBuffer apply_rir(const AudioBuffer& clean, const AudioBuffer& rir);

// Direct-window (+-2.5 ms around the peak) energy over the remaining energy,
// in dB.
double measure_drr_db(const AudioBuffer& rir, double window_ms = 2.5);

// Schroeder backward-integration T60 estimate from the -5 dB..-25 dB span of
// the energy-decay curve.
double estimate_t60_schroeder(const AudioBuffer& rir);

// Scales the direct window to shift DRR by drr_offset_db and applies an
// exponential envelope to the tail so the -60 dB decay time scales by
// rt60_scale. (0 dB, 1.0) is the exact identity.
AudioBuffer reshape_rir(const AudioBuffer& rir, double drr_offset_db, double rt60_scale);

// Linear-phase FIR whose magnitude response interpolates per-band gains drawn
// uniformly in [-max_gain_db, +max_gain_db] over log-spaced band centers.
std::vector<double> random_multiband_eq(Rng& rng, int n_bands, double max_gain_db,
                                        int sample_rate_hz, int n_taps = 511);
// Band centers used by random_multiband_eq (for response probes).
std::vector<double> multiband_eq_centers(int n_bands, int sample_rate_hz);

SimulationSpec sample_spec(Rng& rng, const AugmentConfig& cfg);

// Deterministic degraded/clean pair. Speed and gain perturb both sides; the
// RIR and noise chain degrades only one.
std::pair<AudioBuffer, AudioBuffer> simulate_pair(const AudioBuffer& clean,
                                                  const SimulationSpec& spec, AssetStore& assets);

// ---- manifests ----

struct ManifestEntry {
  std::string clean_path;
  std::string rir_path;    // optional, empty if absent
  std::string noise_path;  // optional
  std::string split;       // train | val | test
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<ManifestEntry> split(const std::string& name) const;
};

// JSONL, one entry per line. Relative paths resolve against the manifest's
// directory; load verifies every referenced file exists and that no clean
// recording appears in more than one split.
Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& manifest);

// Synthesizes a tiny self-contained corpus (amplitude-modulated tone
// complexes, exponential-tail RIRs, filtered noises) and writes a manifest
// with disjoint train/val/test splits. Returns the manifest path.
std::string make_toy_dataset(const std::string& out_dir, uint64_t seed, int n_utterances,
                             int working_rate_hz = 16000);

}  // namespace enhgan
