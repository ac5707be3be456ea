// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_MASKNET_HPP_
#define ADLB_MASKNET_HPP_

#include <array>
#include <string>
#include <vector>

#include "adlb/nn.hpp"
#include "adlb/stft.hpp"
#include "adlb/tensor.hpp"

namespace adlb {

// Per-chunk masks for two speakers plus one noise source, (T,F) each.
// Real masks are sigmoid-bounded in [0,1]; complex masks are magnitude-
// capped at 2 with a tanh compression.
struct MaskSet {
  bool complex_variant = false;
  int64_t frames = 0, bins = 0;
  std::array<Tensor, 3> real_masks;      // speaker 0, speaker 1, noise
  std::array<CTensor, 3> complex_masks;

  // mask applied to a complex plane
  CTensor apply(int k, const CTensor& y) const;
  // squared mask magnitude (denominator material for covariances)
  Tensor pow2(int k) const;
  // real magnitude view (VAD input)
  Tensor magnitude(int k) const;
};

struct MaskNetConfig {
  int64_t width = 64;
  int64_t heads = 4;
  int64_t kernel = 33;
  int64_t enc_layers = 4;  // conformers before pooling, split around TACs
  int64_t tac_blocks = 1;
  int64_t dec_layers = 2;  // conformers after channel-mean pooling
  std::string variant = "real";  // real | complex
  int64_t bins = 257;
  int64_t max_frames = 4000;

  int64_t feat_width() const { return 3 * bins; }
  int64_t out_width() const { return (variant == "complex" ? 6 : 3) * bins; }
  void validate() const;
};

void init_masknet(ParameterStore& ps, Rng& rng, const MaskNetConfig& cfg);

// Shared-parameter conformer block: half FFN, full self-attention over the
// chunk (no causal masking), depthwise convolution, half FFN, layer norm.
Tensor conformer_block(const ParameterStore& ps, const std::string& prefix,
                       const Tensor& x, int64_t heads, bool trainable);
void init_conformer(ParameterStore& ps, Rng& rng, const std::string& prefix,
                    int64_t width, int64_t kernel);

// Transform-average-concatenate across channels; equivariant under
// channel permutation.
std::vector<Tensor> tac_block(const ParameterStore& ps, const std::string& prefix,
                              const std::vector<Tensor>& channels, bool trainable);
void init_tac(ParameterStore& ps, Rng& rng, const std::string& prefix, int64_t width);

// Geometry-agnostic mask estimation for any channel count >= 1. Input
// features per channel: log magnitude plus cos/sin phase relative to the
// channel-mean spectrum (permutation-invariant reference).
MaskSet estimate_masks(const ParameterStore& ps, const MaskNetConfig& cfg,
                       const ComplexSpectrogram& chunk, bool trainable);

// feature assembly, exposed for tests: (T, 3F) per channel
std::vector<Tensor> masknet_features(const ComplexSpectrogram& chunk);

}  // namespace adlb

#endif  // ADLB_MASKNET_HPP_
