// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_MIXER_HPP_
#define ADLB_MIXER_HPP_

#include <string>
#include <vector>

#include "adlb/room.hpp"
#include "adlb/wav.hpp"

namespace adlb {

// Requested mixing conditions for one mixture. Realized ratios follow
// the request exactly (the mixer scales by energy).
struct MixtureSpec {
  int num_sources = 2;  // 1 or 2
  double ser_db = 0.0;  // source energy ratio E0/E1 in dB
  double iso_snr_db = 5.0;
  double point_snr_db = 8.0;
  bool with_iso_noise = true;
  bool with_point_noise = true;
  std::vector<int64_t> onsets;  // sample offset per source
  int noise_directions = 64;
  uint64_t seed = 0;
};

struct MixtureParts {
  MultichannelWaveform mixture;
  std::vector<MultichannelWaveform> references;  // reverberant image per source
  MultichannelWaveform noise;                    // all noise, combined
  double realized_ser_db = 0.0;
};

// Reverberates the dry sources in the room, mixes at the requested
// energy ratios and adds isotropic plus point noise. The returned parts
// satisfy mixture == sum(references) + noise exactly.
MixtureParts synthesize_mixture(const MixtureSpec& spec, const RoomConfig& room,
                                const std::vector<Point3>& source_positions,
                                const std::vector<std::vector<double>>& dry_sources);

// Spherically isotropic noise: >= 64 white-noise plane waves from a
// Fibonacci sphere with windowed-sinc fractional delays per microphone.
MultichannelWaveform generate_isotropic_noise(const std::vector<Point3>& mics,
                                              int64_t num_samples, int sample_rate,
                                              int num_directions, Rng& rng);

// Band-limited modulated noise "pseudo speech" for self-contained tests:
// a few noise bands with syllabic amplitude modulation and pauses.
std::vector<double> pseudo_speech(int64_t num_samples, int sample_rate, Rng& rng);
std::vector<double> pseudo_speech_banded(int64_t num_samples, int sample_rate,
                                         double f_lo, double f_hi, Rng& rng);
std::vector<double> band_noise(int64_t num_samples, int sample_rate, double f_lo,
                               double f_hi, Rng& rng);

double energy(const std::vector<double>& x);
double energy(const MultichannelWaveform& w);

// ---- dataset-level simulation -----------------------------------------

struct SimConfig {
  int sample_rate = 16000;
  double duration_sec = 4.0;
  int channels = 7;
  int num_sources = 2;
  double room_min = 4.0, room_max = 8.0;
  double absorption_min = 0.2, absorption_max = 0.6;
  int rir_length = 4096;
  int max_order = -1;
  double ser_min = -5.0, ser_max = 5.0;
  double iso_snr_min = 0.0, iso_snr_max = 10.0;
  double point_snr_min = -5.0, point_snr_max = 10.0;
  bool with_point_noise = true;
  int noise_directions = 64;
  double array_radius = 0.0425;
};

// One manifest line: file paths (relative to the manifest), geometry,
// realized ratios and the seed that reproduces the mixture.
struct MixtureRecord {
  std::string id;
  std::string mixture;
  std::vector<std::string> references;
  std::string noise;
  uint64_t seed = 0;
  double ser_db = 0.0, iso_snr_db = 0.0, point_snr_db = 0.0;
  double overlap_ratio = 0.0;
  Point3 room_dims{};
  std::vector<Point3> mic_positions;
  std::vector<Point3> source_positions;
};

// Samples a room, geometry and pseudo-speech sources from the seed, then
// writes <id>.mix.wav / <id>.src<k>.wav / <id>.noise.wav under out_dir.
MixtureRecord simulate_one(const SimConfig& cfg, uint64_t seed, const std::string& id,
                           const std::string& out_dir);

void write_manifest(const std::vector<MixtureRecord>& records, const std::string& path);
std::vector<MixtureRecord> read_manifest(const std::string& path);
// directory of the manifest joined with a record-relative path
std::string manifest_relative(const std::string& manifest_path, const std::string& file);

}  // namespace adlb

#endif  // ADLB_MIXER_HPP_
