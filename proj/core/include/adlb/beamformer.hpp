// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_BEAMFORMER_HPP_
#define ADLB_BEAMFORMER_HPP_

#include <optional>
#include <string>
#include <vector>

#include "adlb/cmat.hpp"
#include "adlb/masknet.hpp"
#include "adlb/nn.hpp"
#include "adlb/stft.hpp"
#include "adlb/tensor.hpp"

namespace adlb {

struct BeamformerConfig {
  int64_t channels = 7;
  int64_t bins = 257;
  int64_t gru_v1 = 200, gru_v2 = 100;  // steering net recurrent widths
  int64_t gru_vv = 200;                // inverse-covariance net, both layers
  int64_t gru_vad = 200;               // VAD net, both layers
  bool norm_v = true;       // normalize the estimated steering vector
  bool psd = true;          // upper-triangular Gram construction of the inverse
  bool vad = true;          // frame-level output gain
  bool residual = true;     // add alpha * masked channel 0
  double alpha = 0.5;
  double vad_cap = 0.0;     // 0 = uncapped ReLU per the reference behavior
  std::string cov_norm = "chunk";  // chunk | running

  int64_t cov_width() const { return 2 * channels * channels; }
  int64_t steer_width() const { return 2 * channels; }
  int64_t inv_width() const {
    return psd ? channels * channels + channels : 2 * channels * channels;
  }
  void validate() const;
};

void init_beamformer(ParameterStore& ps, Rng& rng, const BeamformerConfig& cfg);

// Streaming hidden state of one GRU-Net (two layers), detached values.
struct GruNetState {
  Tensor h1, h2;
  bool defined() const { return h1.defined(); }
};

// Per-source streaming state across chunk boundaries.
struct BeamformerState {
  GruNetState v, vv, vad;
};

// Per-(t,f) covariance planes for one source: C*C complex Hermitian
// matrices stored row-major as planes of shape (T,F).
struct CovSeries {
  int64_t channels = 0;
  std::vector<CTensor> phi;  // index i*C + j
  const CTensor& at(int64_t i, int64_t j) const { return phi[i * channels + j]; }
};

// Frame-wise normalized covariance: phi(t,f) = s s^H / (sum_t m^2 + eps).
// norm_mode "chunk" divides by the whole-chunk mask energy; "running"
// divides by the causal running sum.
CovSeries framewise_covariance(const std::vector<CTensor>& masked_channels,
                               const Tensor& mask_pow2, const std::string& norm_mode,
                               double eps = kComplexEps);

// Masked speech and interference bundles for source k (Eq. 3 inputs):
// v_masked = noise-masked signal plus the other speaker's masked signal.
struct SourceSignals {
  std::vector<CTensor> s_masked;  // per channel
  std::vector<CTensor> v_masked;
  Tensor s_pow2, v_pow2;
  Tensor vad_input;  // (T,F) speaker mask magnitude
};
SourceSignals build_source_signals(const std::vector<CTensor>& y_channels,
                                   const MaskSet& masks, int source);

// ---- classical chunk-wise MVDR baseline --------------------------------

struct ClassicalMvdr {
  std::vector<std::vector<cplx>> weights;   // per bin: C-vector h
  std::vector<std::vector<cplx>> steering;  // per bin: unit v actually used
  int fallback_bins = 0;  // power iteration fallbacks (warned)
};

// h = Phi_vv^-1 v / (v^H Phi_vv^-1 v) with v the principal eigenvector of
// the chunk-averaged speech covariance (power iteration). Diagonal
// loading 1e-6 * trace/C stabilizes the inverse.
ClassicalMvdr mvdr_classical(const std::vector<CMat>& phi_ss,
                             const std::vector<CMat>& phi_vv,
                             double diag_load = 1e-6);

// Chunk-summed covariances per bin from raw (non-differentiable) data.
struct ChunkCovariances {
  std::vector<CMat> ss, vv;  // per bin
};
ChunkCovariances accumulate_chunk_covariances(const ComplexSpectrogram& chunk,
                                              const MaskSet& masks, int source,
                                              double eps = kComplexEps);

// y(t,f) -> h^H y per (t,f) for chunk-constant weights
std::vector<cplx> apply_classical_beamformer(const ComplexSpectrogram& chunk,
                                             const ClassicalMvdr& bf);

// ---- ADL-MVDR -----------------------------------------------------------

struct AdlMvdrOutput {
  CTensor s_adl;              // beamformed (T,F)
  CTensor s_vad;              // after VAD gating (equals s_adl when disabled)
  CTensor s_final;            // after residual connection
  Tensor vad_gain;            // (T,1), ones when disabled
  std::vector<CTensor> weights;  // per channel h planes (T,F)
  std::vector<CTensor> steering;  // per channel normalized v planes
};

// Full frame-wise pipeline for one source: covariances -> GRU-Nets ->
// beamforming weights -> gating -> residual. Causal in t; states carry
// across calls when provided. snapshot_t (if >= 0) captures the states
// after that frame for chunked streaming.
AdlMvdrOutput adl_mvdr_source(const ParameterStore& ps, const BeamformerConfig& cfg,
                              const std::vector<CTensor>& y_channels,
                              const MaskSet& masks, int source,
                              const BeamformerState* state, int64_t snapshot_t,
                              BeamformerState* snapshot_out, BeamformerState* final_out,
                              bool trainable);

// GRU-Net building blocks (exposed for tests)
Tensor gru_net_apply(const ParameterStore& ps, const std::string& prefix,
                     const Tensor& x_seq, int64_t steps, int64_t batch,
                     const GruNetState* state, int64_t snapshot_t,
                     GruNetState* snapshot_out, GruNetState* final_out, bool relu_out,
                     bool trainable);

// steering head: (T*F, 2C) -> normalized per-channel planes
std::vector<CTensor> steering_from_output(const Tensor& out, int64_t frames,
                                          int64_t bins, int64_t channels,
                                          bool normalize);
// inverse-covariance head: (T*F, inv_width) -> C*C planes (Hermitian PSD
// under the triangular Gram construction)
CovSeries inverse_from_output(const Tensor& out, int64_t frames, int64_t bins,
                              int64_t channels, bool psd);

// h = Phi^-1 v / (v^H Phi^-1 v), all per (t,f)
std::vector<CTensor> mvdr_weights(const CovSeries& phi_inv,
                                  const std::vector<CTensor>& steering);
// s(t,f) = h^H(t,f) y(t,f)
CTensor apply_beamformer(const std::vector<CTensor>& weights,
                         const std::vector<CTensor>& y_channels);

}  // namespace adlb

#endif  // ADLB_BEAMFORMER_HPP_
