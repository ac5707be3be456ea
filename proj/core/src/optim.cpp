// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/optim.hpp"

#include <cmath>

namespace adlb {

double LrSchedule::lr(int64_t step) const {
  if (warmup_steps > 0 && step < warmup_steps)
    return peak * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  int64_t past = step - warmup_steps;
  int64_t k = decay_interval > 0 ? past / decay_interval : 0;
  return peak * std::pow(decay, static_cast<double>(k));
}

void AdamW::step(ParameterStore& ps, const GradMap& grads) {
  const double lr = schedule_.lr(step_);
  ++step_;
  const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(step_));

  for (auto& [name, p] : ps.items()) {
    if (!grads.has(p)) continue;
    const Tensor& g = grads.at(p);
    const int64_t n = p.numel();
    auto& mom = state_[name];
    if (mom.m.empty()) {
      mom.m.assign(static_cast<size_t>(n), 0.0);
      mom.v.assign(static_cast<size_t>(n), 0.0);
    }
    std::vector<double> out(p.data(), p.data() + n);
    const double* pg = g.data();
    for (int64_t i = 0; i < n; ++i) {
      mom.m[i] = b1_ * mom.m[i] + (1.0 - b1_) * pg[i];
      mom.v[i] = b2_ * mom.v[i] + (1.0 - b2_) * pg[i] * pg[i];
      double mhat = mom.m[i] / bc1;
      double vhat = mom.v[i] / bc2;
      out[i] -= lr * (mhat / (std::sqrt(vhat) + eps_) + wd_ * out[i]);
    }
    p = Tensor(p.shape(), std::move(out));
  }
}

}  // namespace adlb
