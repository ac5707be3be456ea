// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_STFT_HPP_
#define ADLB_STFT_HPP_

#include <complex>
#include <string>
#include <vector>

#include "adlb/wav.hpp"

namespace adlb {

struct StftConfig {
  int fft_size = 512;
  int hop = 256;
  std::string window = "sqrt_hann";  // sqrt_hann | hann | rect
};

// Complex T-F tensor indexed (channel, frame, bin) with enough metadata
// to invert back to the time domain.
struct ComplexSpectrogram {
  int64_t channels = 0;
  int64_t frames = 0;
  int64_t bins = 0;  // fft_size/2 + 1
  int sample_rate = 0;
  int64_t num_samples = 0;  // original signal length
  StftConfig config;
  std::vector<std::complex<double>> data;  // (c, t, f) row-major

  std::complex<double>& at(int64_t c, int64_t t, int64_t f) {
    return data[(c * frames + t) * bins + f];
  }
  const std::complex<double>& at(int64_t c, int64_t t, int64_t f) const {
    return data[(c * frames + t) * bins + f];
  }
};

// Centered STFT/iSTFT with constant-overlap-add analysis/synthesis
// windows. Non-COLA window/hop combinations are rejected at construction.
class Stft {
 public:
  explicit Stft(const StftConfig& config);

  int64_t bins() const { return config_.fft_size / 2 + 1; }
  int64_t num_frames(int64_t num_samples) const;
  const StftConfig& config() const { return config_; }

  ComplexSpectrogram forward(const MultichannelWaveform& w) const;
  MultichannelWaveform inverse(const ComplexSpectrogram& spec) const;

  // single-channel frame set for one signal (frames x bins)
  std::vector<std::complex<double>> forward_channel(const std::vector<double>& x,
                                                    int64_t* out_frames) const;

 private:
  StftConfig config_;
  std::vector<double> analysis_;
  std::vector<double> synthesis_;
  double ola_gain_ = 1.0;  // constant value of sum_t wa*ws over shifts
};

// linear convolution via FFT, sized up to the next power of two
std::vector<double> fft_convolve(const std::vector<double>& x,
                                 const std::vector<double>& h);

}  // namespace adlb

#endif  // ADLB_STFT_HPP_
