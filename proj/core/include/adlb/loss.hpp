// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_LOSS_HPP_
#define ADLB_LOSS_HPP_

#include "adlb/mel.hpp"
#include "adlb/tensor.hpp"

namespace adlb {

enum class LossType { kMagnitude, kLogMel };

struct LossContext {
  LossType type = LossType::kMagnitude;
  const MelFilterbank* mel = nullptr;  // required for kLogMel
};

// mean squared error between magnitude spectra, either directly or in the
// log-mel domain
Tensor spectrum_loss(const Tensor& est_mag, const Tensor& ref_mag,
                     const LossContext& ctx);

// Permutation-invariant pair loss: min over the two assignments of the
// mean per-source loss. perm_out (optional) reports the winning
// assignment, 0 = identity, 1 = swap; ties keep identity.
Tensor pit_loss(const Tensor& est0, const Tensor& est1, const Tensor& ref0,
                const Tensor& ref1, const LossContext& ctx, int* perm_out = nullptr);

}  // namespace adlb

#endif  // ADLB_LOSS_HPP_
