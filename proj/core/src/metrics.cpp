// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/metrics.hpp"

#include <cmath>

namespace adlb {

namespace {

constexpr double kClampDb = 60.0;

double clamp_db(double num, double den) {
  if (den <= 0.0) return kClampDb;  // exact match up to scale
  if (num <= 0.0) return -kClampDb;
  return std::clamp(10.0 * std::log10(num / den), -kClampDb, kClampDb);
}

}  // namespace

double si_sdr(const std::vector<double>& estimate,
              const std::vector<double>& reference) {
  ADLB_CHECK(estimate.size() == reference.size(),
             "si_sdr: length mismatch " << estimate.size() << " vs "
                                        << reference.size());
  double dot = 0.0, ref_e = 0.0;
  for (size_t i = 0; i < reference.size(); ++i) {
    dot += estimate[i] * reference[i];
    ref_e += reference[i] * reference[i];
  }
  ADLB_CHECK(ref_e > 0.0, "si_sdr: zero reference");
  const double alpha = dot / ref_e;
  double target_e = 0.0, err_e = 0.0;
  for (size_t i = 0; i < reference.size(); ++i) {
    double t = alpha * reference[i];
    double e = t - estimate[i];
    target_e += t * t;
    err_e += e * e;
  }
  return clamp_db(target_e, err_e);
}

double snr_db(const std::vector<double>& estimate,
              const std::vector<double>& reference) {
  ADLB_CHECK(estimate.size() == reference.size(),
             "snr: length mismatch " << estimate.size() << " vs " << reference.size());
  double ref_e = 0.0, err_e = 0.0;
  for (size_t i = 0; i < reference.size(); ++i) {
    ref_e += reference[i] * reference[i];
    double e = reference[i] - estimate[i];
    err_e += e * e;
  }
  ADLB_CHECK(ref_e > 0.0, "snr: zero reference");
  return clamp_db(ref_e, err_e);
}

}  // namespace adlb
