// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "adlb/stft.hpp"
#include "json.hpp"

namespace adlb {

double energy(const std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

double energy(const MultichannelWaveform& w) {
  double e = 0.0;
  for (const auto& ch : w.channels) e += energy(ch);
  return e;
}

namespace {

void scale_in_place(MultichannelWaveform& w, double g) {
  for (auto& ch : w.channels)
    for (double& v : ch) v *= g;
}

MultichannelWaveform zeros_like(int channels, int64_t samples, int sr) {
  MultichannelWaveform w;
  w.sample_rate = sr;
  w.channels.assign(static_cast<size_t>(channels),
                    std::vector<double>(static_cast<size_t>(samples), 0.0));
  return w;
}

void add_in_place(MultichannelWaveform& acc, const MultichannelWaveform& x) {
  for (size_t c = 0; c < acc.channels.size(); ++c)
    for (size_t i = 0; i < acc.channels[c].size(); ++i)
      acc.channels[c][i] += x.channels[c][i];
}

// 16-tap windowed-sinc fractional delay; the extra fixed lead keeps taps causal
constexpr int kFracTaps = 16;

void add_delayed(std::vector<double>& acc, const std::vector<double>& x,
                 double delay_samples, double gain) {
  const int64_t n = static_cast<int64_t>(acc.size());
  const auto di = static_cast<int64_t>(std::floor(delay_samples));
  const double frac = delay_samples - static_cast<double>(di);
  double h[kFracTaps];
  const int half = kFracTaps / 2;
  for (int k = 0; k < kFracTaps; ++k) {
    double t = (k - half + 1) - frac;
    double sinc = t == 0.0 ? 1.0 : std::sin(M_PI * t) / (M_PI * t);
    double win = 0.5 - 0.5 * std::cos(2.0 * M_PI * (k + 0.5) / kFracTaps);
    h[k] = sinc * win;
  }
  for (int64_t i = 0; i < n; ++i) {
    for (int k = 0; k < kFracTaps; ++k) {
      int64_t j = i - di - (k - half + 1);
      if (j < 0 || j >= static_cast<int64_t>(x.size())) continue;
      acc[i] += gain * h[k] * x[j];
    }
  }
}

}  // namespace

MultichannelWaveform generate_isotropic_noise(const std::vector<Point3>& mics,
                                              int64_t num_samples, int sample_rate,
                                              int num_directions, Rng& rng) {
  ADLB_CHECK(!mics.empty(), "isotropic noise: microphone geometry required");
  ADLB_CHECK(num_directions >= 1, "isotropic noise: need at least one direction");
  const double c = 343.0;
  Point3 center{0, 0, 0};
  for (const auto& m : mics)
    for (int i = 0; i < 3; ++i) center[i] += m[i] / mics.size();

  MultichannelWaveform out = zeros_like(static_cast<int>(mics.size()), num_samples,
                                        sample_rate);
  const double margin = kFracTaps;  // keeps every per-mic delay positive
  const double gain = 1.0 / std::sqrt(static_cast<double>(num_directions));

  // Fibonacci sphere directions
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int d = 0; d < num_directions; ++d) {
    double z = 1.0 - 2.0 * (d + 0.5) / num_directions;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = golden * d;
    Point3 u{r * std::cos(phi), r * std::sin(phi), z};

    std::vector<double> w(static_cast<size_t>(num_samples + 2 * kFracTaps));
    for (auto& v : w) v = rng.normal();
    for (size_t m = 0; m < mics.size(); ++m) {
      double proj = 0.0;
      for (int i = 0; i < 3; ++i) proj += u[i] * (mics[m][i] - center[i]);
      double delay = margin - proj / c * sample_rate;
      add_delayed(out.channels[m], w, delay, gain);
    }
  }
  return out;
}

std::vector<double> band_noise(int64_t num_samples, int sample_rate, double f_lo,
                               double f_hi, Rng& rng) {
  ADLB_CHECK(f_lo >= 0 && f_hi > f_lo && f_hi <= sample_rate / 2.0,
             "band_noise: bad band [" << f_lo << "," << f_hi << "]");
  std::vector<double> white(static_cast<size_t>(num_samples));
  for (auto& v : white) v = rng.normal();

  // windowed-sinc bandpass (difference of two low-passes)
  const int taps = 129;
  std::vector<double> h(taps);
  const double wl = 2.0 * f_lo / sample_rate, wh = 2.0 * f_hi / sample_rate;
  for (int i = 0; i < taps; ++i) {
    double t = i - (taps - 1) / 2.0;
    auto lp = [&](double wc) {
      return t == 0.0 ? wc : std::sin(M_PI * wc * t) / (M_PI * t);
    };
    double win = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (taps - 1));
    h[i] = (lp(wh) - lp(wl)) * win;
  }
  auto y = fft_convolve(white, h);
  // compensate the group delay so the burst stays aligned
  std::vector<double> out(static_cast<size_t>(num_samples));
  const int shift = (taps - 1) / 2;
  for (int64_t i = 0; i < num_samples; ++i) out[i] = y[i + shift];
  return out;
}

std::vector<double> pseudo_speech_banded(int64_t num_samples, int sample_rate,
                                         double f_lo, double f_hi, Rng& rng) {
  const int bands = static_cast<int>(rng.uniform_int(2, 3));
  std::vector<double> x(static_cast<size_t>(num_samples), 0.0);
  for (int b = 0; b < bands; ++b) {
    double lo = std::exp(rng.uniform(std::log(f_lo), std::log(f_hi * 0.6)));
    double hi = std::min(lo * rng.uniform(1.4, 2.2), f_hi);
    auto n = band_noise(num_samples, sample_rate, lo, hi, rng);
    double amp = rng.uniform(0.5, 1.0);
    for (int64_t i = 0; i < num_samples; ++i) x[i] += amp * n[i];
  }
  // syllabic amplitude modulation plus on/off gating
  double mod_hz = rng.uniform(2.0, 5.0);
  double phase = rng.uniform(0.0, 2.0 * M_PI);
  int64_t pos = 0;
  bool on = true;
  std::vector<double> gate(static_cast<size_t>(num_samples), 0.0);
  while (pos < num_samples) {
    double span_sec = on ? rng.uniform(0.25, 0.7) : rng.uniform(0.08, 0.25);
    auto span = static_cast<int64_t>(span_sec * sample_rate);
    if (on)
      for (int64_t i = pos; i < std::min(pos + span, num_samples); ++i) gate[i] = 1.0;
    pos += span;
    on = !on;
  }
  // short raised-cosine ramps to avoid clicks at gate edges
  const auto ramp = static_cast<int64_t>(0.01 * sample_rate);
  std::vector<double> smooth = gate;
  for (int64_t i = 1; i < num_samples; ++i)
    smooth[i] = std::max(gate[i], smooth[i - 1] - 1.0 / ramp);
  for (int64_t i = num_samples - 2; i >= 0; --i)
    smooth[i] = std::max(smooth[i], smooth[i + 1] - 1.0 / ramp);

  for (int64_t i = 0; i < num_samples; ++i) {
    double am = 0.35 + 0.65 * (0.5 + 0.5 * std::sin(2.0 * M_PI * mod_hz * i /
                                                        sample_rate + phase));
    x[i] *= am * smooth[i];
  }
  double e = energy(x);
  ADLB_CHECK(e > 0, "pseudo_speech: degenerate zero-energy draw");
  double g = std::sqrt(static_cast<double>(num_samples) / e) * 0.1;
  for (auto& v : x) v *= g;
  return x;
}

std::vector<double> pseudo_speech(int64_t num_samples, int sample_rate, Rng& rng) {
  return pseudo_speech_banded(num_samples, sample_rate, 200.0,
                              std::min(6000.0, sample_rate / 2.0 * 0.9), rng);
}

MixtureParts synthesize_mixture(const MixtureSpec& spec, const RoomConfig& room,
                                const std::vector<Point3>& source_positions,
                                const std::vector<std::vector<double>>& dry_sources) {
  room.validate();
  ADLB_CHECK(spec.num_sources == 1 || spec.num_sources == 2,
             "mixture: 1 or 2 sources supported, got " << spec.num_sources);
  ADLB_CHECK(static_cast<int>(dry_sources.size()) == spec.num_sources,
             "mixture: dry source count mismatch");
  ADLB_CHECK(source_positions.size() == dry_sources.size(),
             "mixture: source position count mismatch");
  ADLB_CHECK(!room.mics.empty(), "mixture: room has no microphones");

  Rng rng(spec.seed);
  const int C = static_cast<int>(room.mics.size());
  const int sr = room.sample_rate;

  // total span: onsets + dry lengths
  int64_t total = 0;
  std::vector<int64_t> onsets = spec.onsets;
  onsets.resize(dry_sources.size(), 0);
  for (size_t k = 0; k < dry_sources.size(); ++k) {
    ADLB_CHECK(energy(dry_sources[k]) > 0.0,
               "mixture: dry source " << k << " is silent (energy ratio undefined)");
    total = std::max<int64_t>(total, onsets[k] +
                                         static_cast<int64_t>(dry_sources[k].size()));
  }

  MixtureParts parts;
  parts.references.reserve(dry_sources.size());
  for (size_t k = 0; k < dry_sources.size(); ++k) {
    MultichannelWaveform ref = zeros_like(C, total, sr);
    for (int c = 0; c < C; ++c) {
      auto rir = simulate_rir(room, source_positions[k], room.mics[c]);
      auto rev = fft_convolve(dry_sources[k], rir);
      auto& ch = ref.channels[c];
      for (size_t i = 0; i < rev.size(); ++i) {
        int64_t j = onsets[k] + static_cast<int64_t>(i);
        if (j >= total) break;
        ch[j] += rev[i];
      }
    }
    parts.references.push_back(std::move(ref));
  }

  // source energy ratio: scale source 1 against source 0
  if (parts.references.size() == 2) {
    double e0 = energy(parts.references[0]);
    double e1 = energy(parts.references[1]);
    double g = std::sqrt(e0 / (e1 * std::pow(10.0, spec.ser_db / 10.0)));
    scale_in_place(parts.references[1], g);
    parts.realized_ser_db =
        10.0 * std::log10(energy(parts.references[0]) / energy(parts.references[1]));
  }

  MultichannelWaveform speech = zeros_like(C, total, sr);
  for (const auto& ref : parts.references) add_in_place(speech, ref);
  const double e_speech = energy(speech);

  parts.noise = zeros_like(C, total, sr);
  if (spec.with_iso_noise) {
    auto iso = generate_isotropic_noise(room.mics, total, sr, spec.noise_directions,
                                        rng);
    double g = std::sqrt(e_speech / (energy(iso) *
                                     std::pow(10.0, spec.iso_snr_db / 10.0)));
    scale_in_place(iso, g);
    add_in_place(parts.noise, iso);
  }
  if (spec.with_point_noise) {
    // a reverberated wideband point source at a random interior position
    Point3 pos{rng.uniform(0.4, room.dimensions[0] - 0.4),
               rng.uniform(0.4, room.dimensions[1] - 0.4),
               rng.uniform(0.4, room.dimensions[2] - 0.4)};
    auto src = band_noise(total, sr, 100.0, sr / 2.0 * 0.9, rng);
    MultichannelWaveform pt = zeros_like(C, total, sr);
    for (int c = 0; c < C; ++c) {
      auto rir = simulate_rir(room, pos, room.mics[c]);
      auto rev = fft_convolve(src, rir);
      for (int64_t i = 0; i < total; ++i) pt.channels[c][i] = rev[i];
    }
    double g = std::sqrt(e_speech / (energy(pt) *
                                     std::pow(10.0, spec.point_snr_db / 10.0)));
    scale_in_place(pt, g);
    add_in_place(parts.noise, pt);
  }

  parts.mixture = zeros_like(C, total, sr);
  add_in_place(parts.mixture, speech);
  add_in_place(parts.mixture, parts.noise);

  // common normalization keeps every ratio intact
  double peak = 0.0;
  for (const auto& ch : parts.mixture.channels)
    for (double v : ch) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    double g = 0.9 / peak;
    scale_in_place(parts.mixture, g);
    scale_in_place(parts.noise, g);
    for (auto& ref : parts.references) scale_in_place(ref, g);
  }
  return parts;
}

MixtureRecord simulate_one(const SimConfig& cfg, uint64_t seed, const std::string& id,
                           const std::string& out_dir) {
  Rng rng(seed);
  const auto samples = static_cast<int64_t>(cfg.duration_sec * cfg.sample_rate);

  RoomConfig room;
  room.sample_rate = cfg.sample_rate;
  room.rir_length = cfg.rir_length;
  room.max_order = cfg.max_order;
  for (int i = 0; i < 3; ++i)
    room.dimensions[i] = rng.uniform(cfg.room_min, cfg.room_max);
  for (int i = 0; i < 6; ++i)
    room.absorption[i] = rng.uniform(cfg.absorption_min, cfg.absorption_max);

  // circular array (first mic at the center) around a point near the middle
  Point3 center{room.dimensions[0] * rng.uniform(0.4, 0.6),
                room.dimensions[1] * rng.uniform(0.4, 0.6),
                std::min(1.2, room.dimensions[2] * 0.45)};
  room.mics.push_back(center);
  for (int c = 1; c < cfg.channels; ++c) {
    double a = 2.0 * M_PI * (c - 1) / std::max(1, cfg.channels - 1);
    room.mics.push_back(Point3{center[0] + cfg.array_radius * std::cos(a),
                               center[1] + cfg.array_radius * std::sin(a), center[2]});
  }

  // talkers at distinct azimuths, comfortably inside the walls
  std::vector<Point3> src_pos;
  std::vector<double> azimuths;
  for (int k = 0; k < cfg.num_sources; ++k) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      double az = rng.uniform(0.0, 2.0 * M_PI);
      bool separated = true;
      for (double prev : azimuths) {
        double d = std::abs(std::remainder(az - prev, 2.0 * M_PI));
        if (d < 0.6) separated = false;
      }
      if (!separated) continue;
      double dist = rng.uniform(1.0, 2.5);
      Point3 p{center[0] + dist * std::cos(az), center[1] + dist * std::sin(az),
               std::min(room.dimensions[2] - 0.4, center[2] + rng.uniform(0.0, 0.4))};
      bool ok = true;
      for (int i = 0; i < 3; ++i)
        if (p[i] < 0.3 || p[i] > room.dimensions[i] - 0.3) ok = false;
      if (!ok) continue;
      src_pos.push_back(p);
      azimuths.push_back(az);
      break;
    }
    ADLB_CHECK(static_cast<int>(src_pos.size()) == k + 1,
               "simulate: could not place source " << k << " inside the room");
  }

  // overlap layout: talker 0 leads, talker 1 enters mid-utterance
  MixtureSpec spec;
  spec.num_sources = cfg.num_sources;
  spec.seed = mix_seed(seed, 1);
  spec.ser_db = rng.uniform(cfg.ser_min, cfg.ser_max);
  spec.iso_snr_db = rng.uniform(cfg.iso_snr_min, cfg.iso_snr_max);
  spec.point_snr_db = rng.uniform(cfg.point_snr_min, cfg.point_snr_max);
  spec.with_point_noise = cfg.with_point_noise;
  spec.noise_directions = cfg.noise_directions;

  std::vector<std::vector<double>> dry;
  Rng speech_rng = rng.fork(2);
  if (cfg.num_sources == 1) {
    spec.onsets = {0};
    dry.push_back(pseudo_speech(samples, cfg.sample_rate, speech_rng));
  } else {
    double a = rng.uniform(0.65, 0.95);
    double b = rng.uniform(0.15, 0.45);
    auto len0 = static_cast<int64_t>(a * samples);
    auto onset1 = static_cast<int64_t>(b * samples);
    spec.onsets = {0, onset1};
    dry.push_back(pseudo_speech(len0, cfg.sample_rate, speech_rng));
    Rng rng2 = rng.fork(3);
    dry.push_back(pseudo_speech(samples - onset1, cfg.sample_rate, rng2));
  }

  auto parts = synthesize_mixture(spec, room, src_pos, dry);
  // trim/pad the parts to the nominal duration
  auto fit = [&](MultichannelWaveform& w) {
    for (auto& ch : w.channels) ch.resize(static_cast<size_t>(samples), 0.0);
  };
  fit(parts.mixture);
  fit(parts.noise);
  for (auto& r : parts.references) fit(r);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  MixtureRecord rec;
  rec.id = id;
  rec.seed = seed;
  rec.mixture = id + ".mix.wav";
  write_wav(parts.mixture, (fs::path(out_dir) / rec.mixture).string());
  for (size_t k = 0; k < parts.references.size(); ++k) {
    std::string name = id + ".src" + std::to_string(k) + ".wav";
    write_wav(parts.references[k], (fs::path(out_dir) / name).string());
    rec.references.push_back(name);
  }
  rec.noise = id + ".noise.wav";
  write_wav(parts.noise, (fs::path(out_dir) / rec.noise).string());

  rec.ser_db = parts.realized_ser_db;
  rec.iso_snr_db = spec.iso_snr_db;
  rec.point_snr_db = spec.point_snr_db;
  rec.room_dims = room.dimensions;
  rec.mic_positions = room.mics;
  rec.source_positions = src_pos;
  if (cfg.num_sources == 2) {
    double overlap_samples =
        std::max<int64_t>(0, static_cast<int64_t>(dry[0].size()) - spec.onsets[1]);
    rec.overlap_ratio = overlap_samples / static_cast<double>(samples);
  }
  return rec;
}

namespace {

nlohmann::json point_json(const Point3& p) { return nlohmann::json{p[0], p[1], p[2]}; }

Point3 point_from(const nlohmann::json& j) {
  return Point3{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

void write_manifest(const std::vector<MixtureRecord>& records,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  ADLB_CHECK(out.good(), "manifest: cannot write " << path);
  for (const auto& r : records) {
    nlohmann::json j;
    j["id"] = r.id;
    j["mixture"] = r.mixture;
    j["references"] = r.references;
    j["noise"] = r.noise;
    j["seed"] = r.seed;
    j["ser_db"] = r.ser_db;
    j["iso_snr_db"] = r.iso_snr_db;
    j["point_snr_db"] = r.point_snr_db;
    j["overlap_ratio"] = r.overlap_ratio;
    j["room"] = point_json(r.room_dims);
    nlohmann::json mics = nlohmann::json::array();
    for (const auto& m : r.mic_positions) mics.push_back(point_json(m));
    j["mics"] = mics;
    nlohmann::json srcs = nlohmann::json::array();
    for (const auto& s : r.source_positions) srcs.push_back(point_json(s));
    j["sources"] = srcs;
    out << j.dump() << "\n";
  }
  ADLB_CHECK(out.good(), "manifest: short write " << path);
}

std::vector<MixtureRecord> read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ADLB_CHECK(in.good(), "manifest: cannot open " << path);
  std::vector<MixtureRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    ADLB_CHECK(!j.is_discarded(), "manifest: bad JSON line " << out.size() + 1
                                                             << " in " << path);
    MixtureRecord r;
    r.id = j.at("id").get<std::string>();
    r.mixture = j.at("mixture").get<std::string>();
    r.references = j.at("references").get<std::vector<std::string>>();
    r.noise = j.at("noise").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.ser_db = j.at("ser_db").get<double>();
    r.iso_snr_db = j.at("iso_snr_db").get<double>();
    r.point_snr_db = j.at("point_snr_db").get<double>();
    r.overlap_ratio = j.value("overlap_ratio", 0.0);
    r.room_dims = point_from(j.at("room"));
    for (const auto& m : j.at("mics")) r.mic_positions.push_back(point_from(m));
    for (const auto& s : j.at("sources")) r.source_positions.push_back(point_from(s));
    out.push_back(std::move(r));
  }
  return out;
}

std::string manifest_relative(const std::string& manifest_path,
                              const std::string& file) {
  namespace fs = std::filesystem;
  return (fs::path(manifest_path).parent_path() / file).string();
}

}  // namespace adlb
