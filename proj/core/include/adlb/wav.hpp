// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_WAV_HPP_
#define ADLB_WAV_HPP_

#include <string>
#include <vector>

#include "adlb/common.hpp"

namespace adlb {

// C-channel, sample-rate-tagged time-domain signal. Channels always have
// equal length; values are nominally in [-1, 1].
struct MultichannelWaveform {
  int sample_rate = 0;
  std::vector<std::vector<double>> channels;

  int64_t num_channels() const { return static_cast<int64_t>(channels.size()); }
  int64_t num_samples() const {
    return channels.empty() ? 0 : static_cast<int64_t>(channels[0].size());
  }
  void validate() const;
};

enum class WavCodec { kFloat32, kPcm16 };

// RIFF/WAVE reader: PCM16 (scaled by 1/32768) and IEEE float32, any
// channel count. Malformed or unsupported files raise adlb::Error.
MultichannelWaveform read_wav(const std::string& path);
void write_wav(const MultichannelWaveform& w, const std::string& path,
               WavCodec codec = WavCodec::kFloat32);

}  // namespace adlb

#endif  // ADLB_WAV_HPP_
