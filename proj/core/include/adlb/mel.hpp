// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_MEL_HPP_
#define ADLB_MEL_HPP_

#include <vector>

#include "adlb/tensor.hpp"

namespace adlb {

// Triangular mel filterbank on the HTK scale covering [0, Nyquist].
// Filters that would miss every bin center fall back to their nearest
// bin so every row keeps positive mass.
class MelFilterbank {
 public:
  MelFilterbank(int num_bands, int num_bins, int sample_rate, int fft_size,
                double log_floor = 1e-10);

  int num_bands() const { return num_bands_; }
  int num_bins() const { return num_bins_; }
  double log_floor() const { return log_floor_; }
  double weight(int band, int bin) const { return weights_[band * num_bins_ + bin]; }

  // log(max(mel . mag^2, floor)); magnitude input (T, F) -> (T, num_bands)
  std::vector<double> log_mel(const std::vector<double>& magnitude, int64_t frames) const;

  // (F, num_bands) constant for use inside differentiable losses
  Tensor matrix_transposed() const;

 private:
  int num_bands_, num_bins_;
  double log_floor_;
  std::vector<double> weights_;  // (num_bands, num_bins)
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace adlb

#endif  // ADLB_MEL_HPP_
