// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/config.hpp"

#include <algorithm>
#include <fstream>

namespace adlb {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig::RunConfig() {
  values_ = {
      {"stft.fft_size", "512"},
      {"stft.hop", "256"},
      {"stft.window", "sqrt_hann"},

      {"sim.sample_rate", "16000"},
      {"sim.duration_sec", "4.0"},
      {"sim.sources", "2"},
      {"sim.room_min", "4.0"},
      {"sim.room_max", "8.0"},
      {"sim.absorption_min", "0.2"},
      {"sim.absorption_max", "0.6"},
      {"sim.rir_length", "4096"},
      {"sim.max_order", "-1"},
      {"sim.ser_min", "-5.0"},
      {"sim.ser_max", "5.0"},
      {"sim.iso_snr_min", "0.0"},
      {"sim.iso_snr_max", "10.0"},
      {"sim.point_snr_min", "-5.0"},
      {"sim.point_snr_max", "10.0"},
      {"sim.point_noise", "true"},
      {"sim.noise_directions", "64"},
      {"sim.array_radius", "0.0425"},

      {"model.width", "64"},
      {"model.heads", "4"},
      {"model.kernel", "33"},
      {"model.enc_layers", "4"},
      {"model.tac_blocks", "1"},
      {"model.dec_layers", "2"},
      {"model.mask_variant", "real"},
      {"model.max_frames", "4000"},
      {"model.gru_v1", "200"},
      {"model.gru_v2", "100"},
      {"model.gru_vv", "200"},
      {"model.gru_vad", "200"},

      {"train.loss", "mag"},
      {"train.phase", "pretrain"},
      {"train.epochs", "1"},
      {"train.max_steps", "0"},
      {"train.lr_peak", "1e-3"},
      {"train.warmup_steps", "1000"},
      {"train.lr_decay", "0.98"},
      {"train.decay_interval", "0"},
      {"train.weight_decay", "1e-2"},
      {"train.noise_loss_weight", "0.5"},
      {"train.freeze_mask_in_joint", "false"},
      {"train.ckpt_every_epochs", "1"},
      {"train.log_every", "50"},
      {"train.mel_bands", "80"},

      {"css.history_sec", "1.2"},
      {"css.current_sec", "0.8"},
      {"css.future_sec", "0.4"},

      {"bf.norm_v", "true"},
      {"bf.psd", "true"},
      {"bf.vad", "true"},
      {"bf.residual", "true"},
      {"bf.alpha", "0.5"},
      {"bf.vad_cap", "0.0"},
      {"bf.cov_norm", "chunk"},

      {"run.threads", "1"},
  };
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  ADLB_CHECK(in.good(), "config: cannot open " << path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    ADLB_CHECK(eq != std::string::npos,
               "config: " << path << ":" << lineno << ": expected key=value");
    set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  ADLB_CHECK(it != values_.end(), "config: unknown key '" << key << "'");
  it->second = value;
}

std::string RunConfig::get_str(const std::string& key) const {
  auto it = values_.find(key);
  ADLB_CHECK(it != values_.end(), "config: unknown key '" << key << "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string v = get_str(key);
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    ADLB_CHECK(used == v.size(), "config: " << key << ": bad number '" << v << "'");
    return d;
  } catch (const std::exception&) {
    ADLB_CHECK(false, "config: " << key << ": bad number '" << v << "'");
  }
  return 0;
}

int64_t RunConfig::get_int(const std::string& key) const {
  const std::string v = get_str(key);
  try {
    size_t used = 0;
    long long i = std::stoll(v, &used);
    ADLB_CHECK(used == v.size(), "config: " << key << ": bad integer '" << v << "'");
    return i;
  } catch (const std::exception&) {
    ADLB_CHECK(false, "config: " << key << ": bad integer '" << v << "'");
  }
  return 0;
}

bool RunConfig::get_bool(const std::string& key) const {
  std::string v = get_str(key);
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  ADLB_CHECK(false, "config: " << key << ": bad boolean '" << v << "'");
  return false;
}

}  // namespace adlb
