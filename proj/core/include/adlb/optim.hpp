// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_OPTIM_HPP_
#define ADLB_OPTIM_HPP_

#include <map>
#include <string>
#include <vector>

#include "adlb/nn.hpp"
#include "adlb/tensor.hpp"

namespace adlb {

// Linear warm-up to the peak rate, then stepwise exponential decay every
// decay_interval steps.
struct LrSchedule {
  int64_t warmup_steps = 1000;
  double peak = 1e-3;
  double decay = 0.98;
  int64_t decay_interval = 1000;

  double lr(int64_t step) const;
};

// AdamW with decoupled weight decay. Only parameters present in the
// gradient map are touched; moments auto-initialize to zero.
class AdamW {
 public:
  explicit AdamW(LrSchedule schedule, double weight_decay = 1e-2,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : schedule_(schedule), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(ParameterStore& ps, const GradMap& grads);

  int64_t steps_taken() const { return step_; }
  double current_lr() const { return schedule_.lr(step_); }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  LrSchedule schedule_;
  double wd_, b1_, b2_, eps_;
  int64_t step_ = 0;  // number of completed steps
  std::map<std::string, Moments> state_;
};

}  // namespace adlb

#endif  // ADLB_OPTIM_HPP_
