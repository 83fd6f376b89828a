// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "enhgan/audio.h"
#include "enhgan/rng.h"

using namespace enhgan;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

AudioBuffer tone(double freq, int rate, int64_t len) {
  AudioBuffer a;
  a.sample_rate_hz = rate;
  a.samples.resize(static_cast<size_t>(len));
  for (int64_t i = 0; i < len; ++i)
    a.samples[static_cast<size_t>(i)] = 0.5 * std::sin(2.0 * M_PI * freq * i / rate);
  return a;
}

}  // namespace

TEST_CASE("float32 wav round trip") {
  const AudioBuffer a = tone(440.0, 16000, 8000);
  const std::string path = temp_path("enhgan_test_f32.wav");
  write_wav(path, a, WavFormat::kFloat32);
  const AudioBuffer b = read_wav(path);
  REQUIRE(b.length() == a.length());
  CHECK(b.sample_rate_hz == 16000);
  for (int64_t i = 0; i < a.length(); ++i)
    CHECK(b.samples[static_cast<size_t>(i)] ==
          doctest::Approx(a.samples[static_cast<size_t>(i)]).epsilon(1e-7));
  std::remove(path.c_str());
}

TEST_CASE("pcm16 wav round trip quantizes to 16 bits") {
  const AudioBuffer a = tone(440.0, 22050, 4000);
  const std::string path = temp_path("enhgan_test_p16.wav");
  write_wav(path, a, WavFormat::kPcm16);
  const AudioBuffer b = read_wav(path);
  REQUIRE(b.length() == a.length());
  CHECK(b.sample_rate_hz == 22050);
  for (int64_t i = 0; i < a.length(); ++i)
    CHECK(std::abs(b.samples[static_cast<size_t>(i)] - a.samples[static_cast<size_t>(i)]) <
          1.0 / 32000.0);
  std::remove(path.c_str());
}

TEST_CASE("load_audio resamples to the working rate") {
  const AudioBuffer a = tone(440.0, 48000, 48000);
  const std::string path = temp_path("enhgan_test_48k.wav");
  write_wav(path, a);
  const AudioBuffer b = load_audio(path, 16000);
  CHECK(b.sample_rate_hz == 16000);
  CHECK(std::abs(b.length() - 16000) <= 1);
  std::remove(path.c_str());
}

TEST_CASE("resample preserves a tone") {
  const AudioBuffer a = tone(440.0, 16000, 16000);
  const AudioBuffer b = resample(a, 8000);
  CHECK(b.sample_rate_hz == 8000);
  CHECK(b.length() == 8000);
  // compare against the ideal 440 Hz tone at 8 kHz away from the edges
  double err = 0.0;
  int64_t count = 0;
  for (int64_t i = 200; i < b.length() - 200; ++i) {
    const double want = 0.5 * std::sin(2.0 * M_PI * 440.0 * i / 8000.0);
    err += std::abs(b.samples[static_cast<size_t>(i)] - want);
    ++count;
  }
  CHECK(err / static_cast<double>(count) < 1e-3);
}

TEST_CASE("read_wav rejects missing and malformed files") {
  CHECK_THROWS_AS(read_wav(temp_path("enhgan_does_not_exist.wav")), std::runtime_error);
  const std::string path = temp_path("enhgan_garbage.wav");
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not a wav at all", f);
    std::fclose(f);
  }
  CHECK_THROWS(read_wav(path));
  std::remove(path.c_str());
}

TEST_CASE("validate_audio flags bad buffers") {
  AudioBuffer empty;
  empty.sample_rate_hz = 16000;
  CHECK_THROWS_AS(validate_audio(empty, "t"), std::invalid_argument);
  AudioBuffer nan;
  nan.sample_rate_hz = 16000;
  nan.samples = {0.0, std::nan("")};
  CHECK_THROWS_AS(validate_audio(nan, "t"), std::invalid_argument);
}
