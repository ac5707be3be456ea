// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/beamformer.hpp"

#include <cmath>

namespace adlb {

void BeamformerConfig::validate() const {
  ADLB_CHECK(channels >= 1, "beamformer: channel count must be >= 1");
  ADLB_CHECK(bins >= 1, "beamformer: bin count must be >= 1");
  ADLB_CHECK(gru_v1 > 0 && gru_v2 > 0 && gru_vv > 0 && gru_vad > 0,
             "beamformer: recurrent widths must be positive");
  ADLB_CHECK(alpha >= 0.0 && alpha <= 1.0, "beamformer: alpha outside [0,1]");
  ADLB_CHECK(cov_norm == "chunk" || cov_norm == "running",
             "beamformer: cov_norm must be chunk or running, got " << cov_norm);
}

void init_beamformer(ParameterStore& ps, Rng& rng, const BeamformerConfig& cfg) {
  cfg.validate();
  init_gru(ps, rng, "bf.v.l1", cfg.cov_width(), cfg.gru_v1);
  init_gru(ps, rng, "bf.v.l2", cfg.gru_v1, cfg.gru_v2);
  init_linear(ps, rng, "bf.v.out", cfg.gru_v2, cfg.steer_width());
  init_gru(ps, rng, "bf.vv.l1", cfg.cov_width(), cfg.gru_vv);
  init_gru(ps, rng, "bf.vv.l2", cfg.gru_vv, cfg.gru_vv);
  init_linear(ps, rng, "bf.vv.out", cfg.gru_vv, cfg.inv_width());
  init_gru(ps, rng, "bf.vad.l1", cfg.bins, cfg.gru_vad);
  init_gru(ps, rng, "bf.vad.l2", cfg.gru_vad, cfg.gru_vad);
  init_linear(ps, rng, "bf.vad.out", cfg.gru_vad, 1);
}

CovSeries framewise_covariance(const std::vector<CTensor>& masked_channels,
                               const Tensor& mask_pow2, const std::string& norm_mode,
                               double eps) {
  const auto C = static_cast<int64_t>(masked_channels.size());
  ADLB_CHECK(C >= 1, "covariance: no channels");
  CovSeries cov;
  cov.channels = C;
  cov.phi.resize(static_cast<size_t>(C * C));

  const bool running = norm_mode == "running";
  ADLB_CHECK(running || norm_mode == "chunk",
             "covariance: unknown normalization '" << norm_mode << "'");
  Tensor denom_row;   // (1,F) for chunk mode
  Tensor denom_full;  // (T,F) for running mode
  if (running)
    denom_full = cumsum_axis0(mask_pow2);
  else
    denom_row = sum_axis0(mask_pow2);

  auto normalize = [&](const Tensor& x) {
    return running ? div_eps(x, denom_full, eps) : div_rowvec_eps(x, denom_row, eps);
  };
  for (int64_t i = 0; i < C; ++i)
    for (int64_t j = i; j < C; ++j) {
      CTensor num = cmul_conj(masked_channels[i], masked_channels[j]);
      CTensor phi{normalize(num.re), normalize(num.im)};
      cov.phi[i * C + j] = phi;
      if (j != i) cov.phi[j * C + i] = cconj(phi);
    }
  return cov;
}

SourceSignals build_source_signals(const std::vector<CTensor>& y_channels,
                                   const MaskSet& masks, int source) {
  ADLB_CHECK(source == 0 || source == 1, "beamformer: source index must be 0 or 1");
  SourceSignals s;
  const int other = 1 - source;
  for (const auto& y : y_channels) {
    s.s_masked.push_back(masks.apply(source, y));
    s.v_masked.push_back(cadd(masks.apply(2, y), masks.apply(other, y)));
  }
  s.s_pow2 = masks.pow2(source);
  if (masks.complex_variant) {
    CTensor mv = cadd(masks.complex_masks[2], masks.complex_masks[other]);
    s.v_pow2 = cmag2(mv);
  } else {
    Tensor mv = add(masks.real_masks[2], masks.real_masks[other]);
    s.v_pow2 = mul(mv, mv);
  }
  s.vad_input = masks.magnitude(source);
  return s;
}

// ---- classical baseline -------------------------------------------------

ChunkCovariances accumulate_chunk_covariances(const ComplexSpectrogram& chunk,
                                              const MaskSet& masks, int source,
                                              double eps) {
  const int64_t C = chunk.channels, T = chunk.frames, F = chunk.bins;
  ADLB_CHECK(masks.frames == T && masks.bins == F,
             "covariance: masks do not match the chunk");
  const int other = 1 - source;

  ChunkCovariances out;
  out.ss.assign(static_cast<size_t>(F), CMat(C));
  out.vv.assign(static_cast<size_t>(F), CMat(C));
  std::vector<double> ss_den(static_cast<size_t>(F), 0.0),
      vv_den(static_cast<size_t>(F), 0.0);

  auto mask_at = [&](int k, int64_t t, int64_t f) -> cplx {
    if (masks.complex_variant)
      return {masks.complex_masks[k].re(t, f), masks.complex_masks[k].im(t, f)};
    return {masks.real_masks[k](t, f), 0.0};
  };

  std::vector<cplx> sv(static_cast<size_t>(C)), vv(static_cast<size_t>(C));
  for (int64_t t = 0; t < T; ++t)
    for (int64_t f = 0; f < F; ++f) {
      const cplx ms = mask_at(source, t, f);
      const cplx mv = mask_at(2, t, f) + mask_at(other, t, f);
      for (int64_t c = 0; c < C; ++c) {
        const cplx y = chunk.at(c, t, f);
        sv[c] = ms * y;
        vv[c] = mv * y;
      }
      for (int64_t i = 0; i < C; ++i)
        for (int64_t j = 0; j < C; ++j) {
          out.ss[f].at(i, j) += sv[i] * std::conj(sv[j]);
          out.vv[f].at(i, j) += vv[i] * std::conj(vv[j]);
        }
      ss_den[f] += std::norm(ms);
      vv_den[f] += std::norm(mv);
    }
  for (int64_t f = 0; f < F; ++f) {
    out.ss[f] = scale(out.ss[f], 1.0 / (ss_den[f] + eps));
    out.vv[f] = scale(out.vv[f], 1.0 / (vv_den[f] + eps));
  }
  return out;
}

ClassicalMvdr mvdr_classical(const std::vector<CMat>& phi_ss,
                             const std::vector<CMat>& phi_vv, double diag_load) {
  ADLB_CHECK(!phi_ss.empty() && phi_ss.size() == phi_vv.size(),
             "mvdr: covariance series size mismatch");
  const int64_t C = phi_ss[0].n;
  ClassicalMvdr out;
  out.weights.reserve(phi_ss.size());
  for (size_t f = 0; f < phi_ss.size(); ++f) {
    ADLB_CHECK(phi_ss[f].n == C && phi_vv[f].n == C, "mvdr: inconsistent sizes");
    PowerIterResult pi = power_iteration(phi_ss[f], 500, 1e-12);
    std::vector<cplx> v = pi.vec;
    if (!pi.converged) {
      // largest-diagonal column, the documented fallback
      int64_t best = 0;
      double mag = -1.0;
      for (int64_t i = 0; i < C; ++i)
        if (std::abs(phi_ss[f].at(i, i)) > mag) {
          mag = std::abs(phi_ss[f].at(i, i));
          best = i;
        }
      for (int64_t i = 0; i < C; ++i) v[i] = phi_ss[f].at(i, best);
      double n = norm2(v);
      if (n < 1e-30) {
        v.assign(static_cast<size_t>(C), 0.0);
        v[best] = 1.0;
      } else {
        for (auto& z : v) z /= n;
      }
      ++out.fallback_bins;
    }
    CMat loaded = diagonal_loading(phi_vv[f], diag_load);
    CMat inv = inverse(loaded);
    std::vector<cplx> num = matvec(inv, v);
    cplx den = vdot(v, num);
    std::vector<cplx> h(static_cast<size_t>(C));
    const double d = std::abs(den);
    for (int64_t i = 0; i < C; ++i)
      h[i] = d > 1e-300 ? num[i] / den : cplx(0.0);
    out.weights.push_back(std::move(h));
    out.steering.push_back(std::move(v));
  }
  if (out.fallback_bins > 0)
    log_warn("mvdr: power iteration fell back on " +
             std::to_string(out.fallback_bins) + " bins");
  return out;
}

std::vector<cplx> apply_classical_beamformer(const ComplexSpectrogram& chunk,
                                             const ClassicalMvdr& bf) {
  const int64_t C = chunk.channels, T = chunk.frames, F = chunk.bins;
  ADLB_CHECK(static_cast<int64_t>(bf.weights.size()) == F,
             "beamformer: weight bins " << bf.weights.size() << " != " << F);
  std::vector<cplx> out(static_cast<size_t>(T * F));
  for (int64_t t = 0; t < T; ++t)
    for (int64_t f = 0; f < F; ++f) {
      cplx s = 0.0;
      for (int64_t c = 0; c < C; ++c)
        s += std::conj(bf.weights[f][c]) * chunk.at(c, t, f);
      out[t * F + f] = s;
    }
  return out;
}

// ---- GRU-Nets -------------------------------------------------------------

Tensor gru_net_apply(const ParameterStore& ps, const std::string& prefix,
                     const Tensor& x_seq, int64_t steps, int64_t batch,
                     const GruNetState* state, int64_t snapshot_t,
                     GruNetState* snapshot_out, GruNetState* final_out, bool relu_out,
                     bool trainable) {
  GruParams l1 = gru_params(ps, prefix + ".l1", trainable);
  GruParams l2 = gru_params(ps, prefix + ".l2", trainable);
  Tensor h1_0 = state && state->defined() ? state->h1
                                          : Tensor::zeros({batch, l1.hidden});
  Tensor h2_0 = state && state->defined() ? state->h2
                                          : Tensor::zeros({batch, l2.hidden});
  Tensor h1 = gru_layer_seq(x_seq, steps, batch, l1, h1_0);
  Tensor h2 = gru_layer_seq(h1, steps, batch, l2, h2_0);
  if (snapshot_out && snapshot_t >= 0) {
    ADLB_CHECK(snapshot_t < steps, "gru_net: snapshot frame out of range");
    snapshot_out->h1 = slice_rows(h1, snapshot_t * batch, batch).detached();
    snapshot_out->h2 = slice_rows(h2, snapshot_t * batch, batch).detached();
  }
  if (final_out) {
    final_out->h1 = slice_rows(h1, (steps - 1) * batch, batch).detached();
    final_out->h2 = slice_rows(h2, (steps - 1) * batch, batch).detached();
  }
  Tensor out = linear(ps, prefix + ".out", h2, trainable);
  return relu_out ? relu(out) : out;
}

namespace {

// (T,F) plane from one column of a (T*F, W) sequence output
Tensor plane_from_col(const Tensor& seq, int64_t col, int64_t frames, int64_t bins) {
  return reshape(slice_cols(seq, col, 1), {frames, bins});
}

// packs C*C complex planes into the 2C^2-wide GRU input, reals then imags
Tensor pack_cov_input(const CovSeries& cov, int64_t frames, int64_t bins) {
  std::vector<Tensor> cols;
  cols.reserve(cov.phi.size() * 2);
  for (const auto& p : cov.phi) cols.push_back(reshape(p.re, {frames * bins, 1}));
  for (const auto& p : cov.phi) cols.push_back(reshape(p.im, {frames * bins, 1}));
  return concat_cols(cols);
}

}  // namespace

std::vector<CTensor> steering_from_output(const Tensor& out, int64_t frames,
                                          int64_t bins, int64_t channels,
                                          bool normalize) {
  ADLB_CHECK(out.cols() == 2 * channels,
             "steering: head width " << out.cols() << " != " << 2 * channels);
  std::vector<CTensor> v(static_cast<size_t>(channels));
  for (int64_t c = 0; c < channels; ++c) {
    v[c].re = plane_from_col(out, c, frames, bins);
    v[c].im = plane_from_col(out, channels + c, frames, bins);
  }
  if (!normalize) return v;
  Tensor norm2 = cmag2(v[0]);
  for (int64_t c = 1; c < channels; ++c) norm2 = add(norm2, cmag2(v[c]));
  Tensor norm = sqrt_eps(norm2, 0.0);
  for (auto& vc : v) {
    vc.re = div_eps(vc.re, norm, kComplexEps);
    vc.im = div_eps(vc.im, norm, kComplexEps);
  }
  return v;
}

CovSeries inverse_from_output(const Tensor& out, int64_t frames, int64_t bins,
                              int64_t channels, bool psd) {
  const int64_t C = channels;
  CovSeries inv;
  inv.channels = C;
  inv.phi.resize(static_cast<size_t>(C * C));
  if (!psd) {
    ADLB_CHECK(out.cols() == 2 * C * C,
               "inverse head: width " << out.cols() << " != " << 2 * C * C);
    for (int64_t i = 0; i < C; ++i)
      for (int64_t j = 0; j < C; ++j) {
        inv.phi[i * C + j].re = plane_from_col(out, i * C + j, frames, bins);
        inv.phi[i * C + j].im =
            plane_from_col(out, C * C + i * C + j, frames, bins);
      }
    return inv;
  }
  // upper-triangular U, inverse = U U^H (Hermitian positive semi-definite)
  const int64_t P = C * (C + 1) / 2;
  ADLB_CHECK(out.cols() == 2 * P, "inverse head: width " << out.cols()
                                                         << " != " << 2 * P);
  std::vector<CTensor> u(static_cast<size_t>(C * C));  // zero below diagonal
  int64_t idx = 0;
  for (int64_t i = 0; i < C; ++i)
    for (int64_t j = i; j < C; ++j, ++idx) {
      u[i * C + j].re = plane_from_col(out, idx, frames, bins);
      u[i * C + j].im = plane_from_col(out, P + idx, frames, bins);
    }
  for (int64_t i = 0; i < C; ++i)
    for (int64_t j = i; j < C; ++j) {
      CTensor acc;
      for (int64_t k = std::max(i, j); k < C; ++k) {
        CTensor term = cmul_conj(u[i * C + k], u[j * C + k]);
        acc = acc.defined() ? cadd(acc, term) : term;
      }
      inv.phi[i * C + j] = acc;
      if (j != i) inv.phi[j * C + i] = cconj(acc);
    }
  return inv;
}

std::vector<CTensor> mvdr_weights(const CovSeries& phi_inv,
                                  const std::vector<CTensor>& steering) {
  const auto C = static_cast<int64_t>(steering.size());
  ADLB_CHECK(phi_inv.channels == C, "mvdr_weights: dimension mismatch");
  std::vector<CTensor> num(static_cast<size_t>(C));
  for (int64_t i = 0; i < C; ++i) {
    CTensor acc;
    for (int64_t j = 0; j < C; ++j) {
      CTensor term = cmul(phi_inv.at(i, j), steering[j]);
      acc = acc.defined() ? cadd(acc, term) : term;
    }
    num[i] = acc;
  }
  CTensor den;
  for (int64_t i = 0; i < C; ++i) {
    CTensor term = cmul_conj(num[i], steering[i]);  // num_i * conj(v_i)
    den = den.defined() ? cadd(den, term) : term;
  }
  // den = v^H Phi^-1 v up to conjugation symmetry; guard with epsilon
  CTensor inv_den = creciprocal(den, kComplexEps);
  std::vector<CTensor> h(static_cast<size_t>(C));
  for (int64_t i = 0; i < C; ++i) h[i] = cmul(num[i], inv_den);
  return h;
}

CTensor apply_beamformer(const std::vector<CTensor>& weights,
                         const std::vector<CTensor>& y_channels) {
  ADLB_CHECK(weights.size() == y_channels.size(),
             "apply_beamformer: channel mismatch");
  CTensor out;
  for (size_t c = 0; c < weights.size(); ++c) {
    CTensor term = cmul(cconj(weights[c]), y_channels[c]);
    out = out.defined() ? cadd(out, term) : term;
  }
  return out;
}

AdlMvdrOutput adl_mvdr_source(const ParameterStore& ps, const BeamformerConfig& cfg,
                              const std::vector<CTensor>& y_channels,
                              const MaskSet& masks, int source,
                              const BeamformerState* state, int64_t snapshot_t,
                              BeamformerState* snapshot_out, BeamformerState* final_out,
                              bool trainable) {
  cfg.validate();
  const auto C = static_cast<int64_t>(y_channels.size());
  ADLB_CHECK(C == cfg.channels, "adl_mvdr: input has " << C << " channels, config "
                                                       << cfg.channels);
  const int64_t T = masks.frames, F = masks.bins;
  ADLB_CHECK(F == cfg.bins, "adl_mvdr: bins " << F << " != config " << cfg.bins);

  SourceSignals sig = build_source_signals(y_channels, masks, source);
  CovSeries phi_ss =
      framewise_covariance(sig.s_masked, sig.s_pow2, cfg.cov_norm);
  CovSeries phi_vv =
      framewise_covariance(sig.v_masked, sig.v_pow2, cfg.cov_norm);

  Tensor v_out = gru_net_apply(ps, "bf.v", pack_cov_input(phi_ss, T, F), T, F,
                               state ? &state->v : nullptr, snapshot_t,
                               snapshot_out ? &snapshot_out->v : nullptr,
                               final_out ? &final_out->v : nullptr, false, trainable);
  Tensor vv_out = gru_net_apply(ps, "bf.vv", pack_cov_input(phi_vv, T, F), T, F,
                                state ? &state->vv : nullptr, snapshot_t,
                                snapshot_out ? &snapshot_out->vv : nullptr,
                                final_out ? &final_out->vv : nullptr, false, trainable);

  AdlMvdrOutput out;
  out.steering = steering_from_output(v_out, T, F, C, cfg.norm_v);
  CovSeries phi_inv = inverse_from_output(vv_out, T, F, C, cfg.psd);
  out.weights = mvdr_weights(phi_inv, out.steering);
  out.s_adl = apply_beamformer(out.weights, y_channels);

  if (cfg.vad) {
    Tensor w = gru_net_apply(ps, "bf.vad", sig.vad_input, T, 1,
                             state ? &state->vad : nullptr, snapshot_t,
                             snapshot_out ? &snapshot_out->vad : nullptr,
                             final_out ? &final_out->vad : nullptr, true, trainable);
    if (cfg.vad_cap > 0.0) {
      Tensor capv = Tensor::full(w.shape(), cfg.vad_cap);
      w = sub(capv, relu(sub(capv, w)));
    }
    out.vad_gain = w;
    out.s_vad = {mul_colvec(out.s_adl.re, w), mul_colvec(out.s_adl.im, w)};
  } else {
    out.vad_gain = Tensor::full({T, 1}, 1.0);
    out.s_vad = out.s_adl;
    if (snapshot_out) snapshot_out->vad = GruNetState{};
    if (final_out) final_out->vad = GruNetState{};
  }

  if (cfg.residual) {
    CTensor masked0 = masks.apply(source, y_channels[0]);
    out.s_final = cadd(out.s_vad, cscale(masked0, cfg.alpha));
  } else {
    out.s_final = out.s_vad;
  }
  return out;
}

}  // namespace adlb
