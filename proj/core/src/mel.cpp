// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/mel.hpp"

#include <algorithm>
#include <cmath>

namespace adlb {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int num_bands, int num_bins, int sample_rate, int fft_size,
                             double log_floor)
    : num_bands_(num_bands), num_bins_(num_bins), log_floor_(log_floor) {
  ADLB_CHECK(num_bands > 0 && num_bins > 1, "mel: bad dimensions");
  ADLB_CHECK(log_floor > 0, "mel: log floor must be positive");
  weights_.assign(static_cast<size_t>(num_bands) * num_bins, 0.0);

  const double nyquist = sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  std::vector<double> edges(static_cast<size_t>(num_bands) + 2);
  for (int i = 0; i < num_bands + 2; ++i)
    edges[i] = mel_to_hz(mel_max * i / (num_bands + 1));

  const double bin_hz = static_cast<double>(sample_rate) / fft_size;
  for (int b = 0; b < num_bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    double mass = 0.0;
    for (int k = 0; k < num_bins; ++k) {
      double f = k * bin_hz;
      double wgt = 0.0;
      if (f > lo && f < mid)
        wgt = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        wgt = (hi - f) / (hi - mid);
      weights_[b * num_bins_ + k] = wgt;
      mass += wgt;
    }
    if (mass <= 0.0) {
      int nearest = static_cast<int>(std::lround(mid / bin_hz));
      nearest = std::clamp(nearest, 0, num_bins - 1);
      weights_[b * num_bins_ + nearest] = 1.0;
    }
  }
}

std::vector<double> MelFilterbank::log_mel(const std::vector<double>& magnitude,
                                           int64_t frames) const {
  ADLB_CHECK(static_cast<int64_t>(magnitude.size()) == frames * num_bins_,
             "mel: magnitude size " << magnitude.size() << " does not match "
                                    << frames << "x" << num_bins_);
  std::vector<double> out(static_cast<size_t>(frames) * num_bands_);
  for (int64_t t = 0; t < frames; ++t) {
    const double* m = magnitude.data() + t * num_bins_;
    for (int b = 0; b < num_bands_; ++b) {
      const double* w = weights_.data() + b * num_bins_;
      double s = 0.0;
      for (int k = 0; k < num_bins_; ++k) s += w[k] * m[k] * m[k];
      out[t * num_bands_ + b] = std::log(std::max(s, log_floor_));
    }
  }
  return out;
}

Tensor MelFilterbank::matrix_transposed() const {
  std::vector<double> data(static_cast<size_t>(num_bins_) * num_bands_);
  for (int b = 0; b < num_bands_; ++b)
    for (int k = 0; k < num_bins_; ++k)
      data[static_cast<size_t>(k) * num_bands_ + b] = weights_[b * num_bins_ + k];
  return Tensor({num_bins_, num_bands_}, std::move(data));
}

}  // namespace adlb
