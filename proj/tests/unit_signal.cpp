// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>

#include "adlb/mel.hpp"
#include "adlb/stft.hpp"
#include "adlb/wav.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace adlb;
namespace fs = std::filesystem;

namespace {

MultichannelWaveform random_wave(Rng& rng, int channels, int64_t samples,
                                 int sr = 16000) {
  MultichannelWaveform w;
  w.sample_rate = sr;
  w.channels.resize(channels);
  for (auto& ch : w.channels) {
    ch.resize(samples);
    for (auto& v : ch) v = rng.uniform(-0.9, 0.9);
  }
  return w;
}

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("float32 wav write/read round trip is bit identical") {
  Rng rng(1);
  MultichannelWaveform w = random_wave(rng, 3, 1000);
  // quantize to float32 grid first so the round trip is exact
  for (auto& ch : w.channels)
    for (auto& v : ch) v = static_cast<double>(static_cast<float>(v));
  std::string path = tmp_path("adlb_rt.wav");
  write_wav(w, path);
  MultichannelWaveform r = read_wav(path);
  REQUIRE(r.num_channels() == 3);
  REQUIRE(r.num_samples() == 1000);
  CHECK(r.sample_rate == 16000);
  for (int c = 0; c < 3; ++c)
    for (int64_t i = 0; i < 1000; ++i) CHECK(r.channels[c][i] == w.channels[c][i]);
  fs::remove(path);
}

TEST_CASE("pcm16 scaling: -32768 maps to -1.0") {
  MultichannelWaveform w;
  w.sample_rate = 8000;
  w.channels = {{-1.0, 1.0, 0.0, -0.5}};
  std::string path = tmp_path("adlb_pcm.wav");
  write_wav(w, path, WavCodec::kPcm16);
  MultichannelWaveform r = read_wav(path);
  CHECK(r.channels[0][0] == -1.0);
  CHECK(r.channels[0][1] == doctest::Approx(32767.0 / 32768.0));
  CHECK(r.channels[0][2] == 0.0);
  CHECK(r.channels[0][3] == doctest::Approx(-0.5).epsilon(1e-4));
  fs::remove(path);
}

TEST_CASE("7-channel files preserve channel count and order") {
  Rng rng(2);
  MultichannelWaveform w = random_wave(rng, 7, 64);
  for (auto& ch : w.channels)
    for (auto& v : ch) v = static_cast<double>(static_cast<float>(v));
  std::string path = tmp_path("adlb_7ch.wav");
  write_wav(w, path);
  MultichannelWaveform r = read_wav(path);
  REQUIRE(r.num_channels() == 7);
  for (int c = 0; c < 7; ++c) CHECK(r.channels[c][5] == w.channels[c][5]);
  fs::remove(path);
}

TEST_CASE("malformed and unsupported wav files raise descriptive errors") {
  std::string path = tmp_path("adlb_bad.wav");
  write_text_file(path, "this is not a riff file at all............");
  CHECK_THROWS_WITH_AS(read_wav(path), doctest::Contains("RIFF"), Error);
  CHECK_THROWS_AS(read_wav(tmp_path("adlb_missing_nope.wav")), Error);
  fs::remove(path);
}

// ---- stft -----------------------------------------------------------------

TEST_CASE("stft round trip below 1e-10 everywhere") {
  Rng rng(3);
  Stft stft(StftConfig{});
  for (int trial = 0; trial < 3; ++trial) {
    MultichannelWaveform w = random_wave(rng, 2, 16000 + trial * 517);
    ComplexSpectrogram spec = stft.forward(w);
    MultichannelWaveform back = stft.inverse(spec);
    REQUIRE(back.num_samples() == w.num_samples());
    double worst = 0;
    for (int c = 0; c < 2; ++c)
      for (int64_t i = 0; i < w.num_samples(); ++i)
        worst = std::max(worst, std::abs(back.channels[c][i] - w.channels[c][i]));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("bin-centered sinusoid stays within one bin of its center") {
  StftConfig cfg;
  Stft stft(cfg);
  const int bin = 32;
  const double freq = bin * 16000.0 / cfg.fft_size;
  MultichannelWaveform w;
  w.sample_rate = 16000;
  w.channels.resize(1);
  w.channels[0].resize(16000);
  for (int64_t i = 0; i < 16000; ++i)
    w.channels[0][i] = std::sin(2.0 * M_PI * freq * i / 16000.0);
  ComplexSpectrogram spec = stft.forward(w);
  const int64_t t = spec.frames / 2;  // interior frame, fully inside the signal
  double total = 0, near = 0;
  for (int64_t f = 0; f < spec.bins; ++f) {
    double e = std::norm(spec.at(0, t, f));
    total += e;
    if (std::abs(f - bin) <= 1) near += e;
  }
  CHECK(near / total > 0.99);
}

TEST_CASE("parseval: windowed frame energy equals spectrum energy / fft_size") {
  Rng rng(4);
  StftConfig cfg;
  Stft stft(cfg);
  MultichannelWaveform w = random_wave(rng, 1, 4096);
  ComplexSpectrogram spec = stft.forward(w);

  // oracle: direct windowed-frame energy from the raw samples
  const int64_t t = 6;  // an interior frame
  const int64_t start = t * cfg.hop - cfg.fft_size;  // centered padding offset
  std::vector<double> win(cfg.fft_size);
  for (int i = 0; i < cfg.fft_size; ++i)
    win[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * M_PI * i / cfg.fft_size));
  double frame_e = 0;
  for (int i = 0; i < cfg.fft_size; ++i) {
    int64_t idx = start + i;
    double v = (idx >= 0 && idx < w.num_samples()) ? w.channels[0][idx] : 0.0;
    v *= win[i];
    frame_e += v * v;
  }
  // one-sided spectrum energy: interior bins count twice
  double spec_e = std::norm(spec.at(0, t, 0)) + std::norm(spec.at(0, t, spec.bins - 1));
  for (int64_t f = 1; f < spec.bins - 1; ++f) spec_e += 2.0 * std::norm(spec.at(0, t, f));
  CHECK(frame_e == doctest::Approx(spec_e / cfg.fft_size).epsilon(1e-10));
}

TEST_CASE("stft linearity within 1e-12") {
  Rng rng(5);
  Stft stft(StftConfig{});
  MultichannelWaveform x = random_wave(rng, 1, 3000);
  MultichannelWaveform y = random_wave(rng, 1, 3000);
  const double a = 0.7, b = -1.3;
  MultichannelWaveform z = x;
  for (int64_t i = 0; i < 3000; ++i)
    z.channels[0][i] = a * x.channels[0][i] + b * y.channels[0][i];
  auto sx = stft.forward(x), sy = stft.forward(y), sz = stft.forward(z);
  double worst = 0;
  for (size_t i = 0; i < sz.data.size(); ++i)
    worst = std::max(worst, std::abs(sz.data[i] - (a * sx.data[i] + b * sy.data[i])));
  CHECK(worst < 1e-12);
}

TEST_CASE("non-COLA window/hop configurations are rejected at construction") {
  StftConfig bad;
  bad.fft_size = 512;
  bad.hop = 200;  // sqrt-hann does not overlap-add flat at this hop
  CHECK_THROWS_WITH_AS(Stft{bad}, doctest::Contains("COLA"), Error);
  StftConfig rect;
  rect.window = "rect";
  rect.hop = 512;  // rect at hop == win is COLA
  CHECK_NOTHROW(Stft{rect});
}

// ---- mel --------------------------------------------------------------------

TEST_CASE("log-mel of zero input is log(floor) everywhere") {
  MelFilterbank mel(80, 257, 16000, 512);
  std::vector<double> zeros(3 * 257, 0.0);
  auto out = mel.log_mel(zeros, 3);
  for (double v : out) CHECK(v == doctest::Approx(std::log(1e-10)));
}

TEST_CASE("scaling input by 10 shifts log-mel by 2 log 10") {
  Rng rng(6);
  MelFilterbank mel(80, 257, 16000, 512);
  std::vector<double> mag(2 * 257);
  for (auto& v : mag) v = rng.uniform(0.5, 2.0);
  std::vector<double> mag10 = mag;
  for (auto& v : mag10) v *= 10.0;
  auto a = mel.log_mel(mag, 2);
  auto b = mel.log_mel(mag10, 2);
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(b[i] - a[i] == doctest::Approx(2.0 * std::log(10.0)).epsilon(1e-9));
}

TEST_CASE("single-bin impulse reads back the filterbank column") {
  MelFilterbank mel(80, 257, 16000, 512);
  const int bin = 100;
  std::vector<double> mag(257, 0.0);
  mag[bin] = 2.0;  // power 4
  auto out = mel.log_mel(mag, 1);
  for (int b = 0; b < 80; ++b) {
    double expect = std::log(std::max(mel.weight(b, bin) * 4.0, 1e-10));
    CHECK(out[b] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("mel filter rows have positive mass and cover the band") {
  for (int bins : {257, 129}) {
    MelFilterbank mel(80, bins, 16000, (bins - 1) * 2);
    for (int b = 0; b < 80; ++b) {
      double mass = 0;
      for (int k = 0; k < bins; ++k) {
        CHECK(mel.weight(b, k) >= 0.0);
        mass += mel.weight(b, k);
      }
      CHECK(mass > 0.0);
    }
  }
}

TEST_CASE("mel transform is monotone in per-bin power") {
  Rng rng(8);
  MelFilterbank mel(80, 257, 16000, 512);
  std::vector<double> lo(257), hi(257);
  for (int k = 0; k < 257; ++k) {
    lo[k] = rng.uniform(0.1, 1.0);
    hi[k] = lo[k] + rng.uniform(0.01, 0.5);
  }
  auto a = mel.log_mel(lo, 1);
  auto b = mel.log_mel(hi, 1);
  for (int i = 0; i < 80; ++i) CHECK(b[i] >= a[i]);
}
