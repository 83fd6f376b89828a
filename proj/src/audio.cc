// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace enhgan {

void validate_audio(const AudioBuffer& audio, const char* what) {
  if (audio.samples.empty())
    throw std::invalid_argument(std::string(what) + ": empty audio");
  if (audio.sample_rate_hz <= 0)
    throw std::invalid_argument(std::string(what) + ": non-positive sample rate");
  for (double v : audio.samples) {
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string(what) + ": non-finite sample");
  }
}

double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double e = 0.0;
  for (double v : x) e += v * v;
  return std::sqrt(e / static_cast<double>(x.size()));
}

double rms(const AudioBuffer& audio) { return rms(audio.samples); }

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

}  // namespace

AudioBuffer resample(const AudioBuffer& audio, int new_rate_hz) {
  validate_audio(audio, "resample");
  if (new_rate_hz <= 0) throw std::invalid_argument("resample: non-positive target rate");
  if (new_rate_hz == audio.sample_rate_hz) return audio;

  const double ratio = static_cast<double>(new_rate_hz) / audio.sample_rate_hz;
  const int64_t in_len = audio.length();
  const int64_t out_len = std::max<int64_t>(1, static_cast<int64_t>(std::floor(in_len * ratio)));

  // When downsampling, the kernel is widened and its cutoff lowered so the
  // stopband sits below the new Nyquist.
  const double scale = std::min(1.0, ratio);
  const double cutoff = 0.45 * scale;          // relative to input Nyquist 0.5
  const int half_width = static_cast<int>(std::ceil(32.0 / scale));

  AudioBuffer out;
  out.sample_rate_hz = new_rate_hz;
  out.samples.resize(static_cast<size_t>(out_len));
  for (int64_t n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) / ratio;
    const int64_t j0 = static_cast<int64_t>(std::ceil(t)) - half_width;
    const int64_t j1 = static_cast<int64_t>(std::floor(t)) + half_width;
    double acc = 0.0;
    for (int64_t j = std::max<int64_t>(0, j0); j <= std::min(in_len - 1, j1); ++j) {
      const double u = t - static_cast<double>(j);
      const double win = 0.5 * (1.0 + std::cos(M_PI * u / half_width));
      acc += audio.samples[static_cast<size_t>(j)] * 2.0 * cutoff * sinc(2.0 * cutoff * u) * win;
    }
    out.samples[static_cast<size_t>(n)] = acc;
  }
  return out;
}

namespace {

struct RiffReader {
  std::ifstream f;
  explicit RiffReader(const std::string& path) : f(path, std::ios::binary) {}

  template <typename T>
  T read() {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw std::runtime_error("read_wav: truncated file");
    return v;
  }
  std::string read_tag() {
    char c[4];
    f.read(c, 4);
    if (!f) throw std::runtime_error("read_wav: truncated file");
    return std::string(c, 4);
  }
};

void put_u32(std::ofstream& f, uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); }
void put_u16(std::ofstream& f, uint16_t v) { f.write(reinterpret_cast<char*>(&v), 2); }

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  RiffReader r(path);
  if (!r.f) throw std::runtime_error("read_wav: cannot open " + path);
  if (r.read_tag() != "RIFF") throw std::runtime_error("read_wav: not a RIFF file: " + path);
  r.read<uint32_t>();  // riff size
  if (r.read_tag() != "WAVE") throw std::runtime_error("read_wav: not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<char> data;
  bool have_fmt = false, have_data = false;
  while (r.f.peek() != EOF) {
    const std::string tag = r.read_tag();
    const uint32_t size = r.read<uint32_t>();
    if (tag == "fmt ") {
      format = r.read<uint16_t>();
      channels = r.read<uint16_t>();
      rate = r.read<uint32_t>();
      r.read<uint32_t>();  // byte rate
      r.read<uint16_t>();  // block align
      bits = r.read<uint16_t>();
      if (size > 16) r.f.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (tag == "data") {
      data.resize(size);
      r.f.read(data.data(), size);
      if (!r.f) throw std::runtime_error("read_wav: truncated data chunk: " + path);
      have_data = true;
    } else {
      r.f.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!have_fmt || !have_data) throw std::runtime_error("read_wav: missing fmt/data chunk: " + path);
  if (channels != 1)
    throw std::invalid_argument("read_wav: only mono supported, got " + std::to_string(channels) +
                                " channels: " + path);

  AudioBuffer out;
  out.sample_rate_hz = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    const size_t n = data.size() / 2;
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      int16_t v;
      std::memcpy(&v, data.data() + 2 * i, 2);
      out.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const size_t n = data.size() / 4;
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, data.data() + 4 * i, 4);
      out.samples[i] = static_cast<double>(v);
    }
  } else {
    throw std::runtime_error("read_wav: unsupported format (code " + std::to_string(format) +
                             ", " + std::to_string(bits) + " bit): " + path);
  }
  validate_audio(out, "read_wav");
  return out;
}

void write_wav(const std::string& path, const AudioBuffer& audio, WavFormat format) {
  validate_audio(audio, "write_wav");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_wav: cannot open " + path);

  const uint32_t n = static_cast<uint32_t>(audio.length());
  const uint16_t bytes_per = format == WavFormat::kPcm16 ? 2 : 4;
  const uint32_t data_size = n * bytes_per;

  f.write("RIFF", 4);
  put_u32(f, 36 + data_size);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(f, 16);
  put_u16(f, format == WavFormat::kPcm16 ? 1 : 3);
  put_u16(f, 1);
  put_u32(f, static_cast<uint32_t>(audio.sample_rate_hz));
  put_u32(f, static_cast<uint32_t>(audio.sample_rate_hz) * bytes_per);
  put_u16(f, bytes_per);
  put_u16(f, static_cast<uint16_t>(bytes_per * 8));
  f.write("data", 4);
  put_u32(f, data_size);

  if (format == WavFormat::kPcm16) {
    for (double v : audio.samples) {
      const double c = std::clamp(v, -1.0, 1.0);
      const int16_t q = static_cast<int16_t>(std::lrint(c * 32767.0));
      f.write(reinterpret_cast<const char*>(&q), 2);
    }
  } else {
    for (double v : audio.samples) {
      const float q = static_cast<float>(v);
      f.write(reinterpret_cast<const char*>(&q), 4);
    }
  }
  if (!f) throw std::runtime_error("write_wav: write failed: " + path);
}

AudioBuffer load_audio(const std::string& path, int working_rate_hz) {
  AudioBuffer a = read_wav(path);
  if (a.sample_rate_hz != working_rate_hz) a = resample(a, working_rate_hz);
  return a;
}

}  // namespace enhgan
