// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_METRICS_HPP_
#define ADLB_METRICS_HPP_

#include <vector>

#include "adlb/common.hpp"

namespace adlb {

// Scale-invariant SDR in dB, clamped to [-60, 60]. The reference must be
// nonzero; lengths must agree.
double si_sdr(const std::vector<double>& estimate, const std::vector<double>& reference);

// Plain SNR in dB (no optimal scaling), clamped to [-60, 60].
double snr_db(const std::vector<double>& estimate, const std::vector<double>& reference);

}  // namespace adlb

#endif  // ADLB_METRICS_HPP_
