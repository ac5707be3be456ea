// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_NN_HPP_
#define ADLB_NN_HPP_

#include <map>
#include <string>

#include "adlb/common.hpp"
#include "adlb/tensor.hpp"

namespace adlb {

// Named tensor store for all network weights; checkpoint-serializable.
// Iteration order is lexicographic, which keeps initialization and
// serialization deterministic.
class ParameterStore {
 public:
  bool has(const std::string& name) const { return params_.count(name) > 0; }
  // fetch as a gradient leaf (trainable view) or as a constant
  Tensor param(const std::string& name, bool trainable = true) const;
  void put(const std::string& name, Tensor t) { params_[name] = std::move(t); }
  const std::map<std::string, Tensor>& items() const { return params_; }
  std::map<std::string, Tensor>& items() { return params_; }
  size_t size() const { return params_.size(); }
  int64_t total_elements() const;

 private:
  std::map<std::string, Tensor> params_;
};

// Deterministic seeded initialization: uniform(-a, a) with a = 1/sqrt(fan_in)
// for weight matrices, zeros for biases.
Tensor init_weight(Rng& rng, int64_t fan_in, int64_t fan_out);
void init_linear(ParameterStore& ps, Rng& rng, const std::string& prefix, int64_t in,
                 int64_t out);

// y = x W + b with W named "<prefix>.w" (in,out) and b "<prefix>.b" (1,out)
Tensor linear(const ParameterStore& ps, const std::string& prefix, const Tensor& x,
              bool trainable);

struct GruParams {
  Tensor wz, uz, bz;
  Tensor wr, ur, br;
  Tensor wh, uh, bh;
  int64_t in = 0, hidden = 0;
};

void init_gru(ParameterStore& ps, Rng& rng, const std::string& prefix, int64_t in,
              int64_t hidden);
GruParams gru_params(const ParameterStore& ps, const std::string& prefix,
                     bool trainable);

// Single GRU step composed from primitives:
//   z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br)
//   c = tanh(x Wh + (r .* h) Uh + bh)
//   h' = (1 - z) .* h + z .* c
Tensor gru_cell(const Tensor& x, const Tensor& h, const GruParams& p);

// Full sequence as one tape node (hand-written BPTT). X packs the inputs
// time-major as (T*B, in); h0 is (B, hidden). Returns all hidden states
// (T*B, hidden); forward-only mode when no tape is active. Matches
// iterated gru_cell exactly.
Tensor gru_layer_seq(const Tensor& x_seq, int64_t steps, int64_t batch,
                     const GruParams& p, const Tensor& h0);

}  // namespace adlb

#endif  // ADLB_NN_HPP_
