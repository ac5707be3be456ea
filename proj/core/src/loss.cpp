// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/loss.hpp"

namespace adlb {

namespace {

Tensor to_log_mel(const Tensor& mag, const MelFilterbank& mel, const Tensor& melT) {
  Tensor power = mul(mag, mag);
  Tensor banded = matmul(power, melT);
  return log_t(clamp_min(banded, mel.log_floor()));
}

}  // namespace

Tensor spectrum_loss(const Tensor& est_mag, const Tensor& ref_mag,
                     const LossContext& ctx) {
  ADLB_CHECK(est_mag.shape() == ref_mag.shape(),
             "loss: estimate " << shape_str(est_mag.shape()) << " vs reference "
                               << shape_str(ref_mag.shape()));
  if (ctx.type == LossType::kMagnitude) {
    Tensor d = sub(est_mag, ref_mag);
    return mean_all(mul(d, d));
  }
  ADLB_CHECK(ctx.mel != nullptr, "loss: log-mel loss requires a filterbank");
  Tensor melT = ctx.mel->matrix_transposed();
  Tensor d = sub(to_log_mel(est_mag, *ctx.mel, melT),
                 to_log_mel(ref_mag, *ctx.mel, melT));
  return mean_all(mul(d, d));
}

Tensor pit_loss(const Tensor& est0, const Tensor& est1, const Tensor& ref0,
                const Tensor& ref1, const LossContext& ctx, int* perm_out) {
  Tensor id = scale(add(spectrum_loss(est0, ref0, ctx), spectrum_loss(est1, ref1, ctx)),
                    0.5);
  Tensor sw = scale(add(spectrum_loss(est0, ref1, ctx), spectrum_loss(est1, ref0, ctx)),
                    0.5);
  const bool swap = sw.value() < id.value();
  if (perm_out) *perm_out = swap ? 1 : 0;
  return swap ? sw : id;
}

}  // namespace adlb
