// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>

#include "adlb/beamformer.hpp"
#include "adlb/masknet.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace adlb;
using testutil::gradcheck;
using testutil::random_tensor;

namespace {

ComplexSpectrogram random_chunk(Rng& rng, int64_t C, int64_t T, int64_t F) {
  ComplexSpectrogram s;
  s.channels = C;
  s.frames = T;
  s.bins = F;
  s.sample_rate = 16000;
  s.data.resize(static_cast<size_t>(C * T * F));
  for (auto& z : s.data) z = {rng.normal() * 0.2, rng.normal() * 0.2};
  return s;
}

MaskNetConfig tiny_masknet(int64_t bins) {
  MaskNetConfig cfg;
  cfg.width = 16;
  cfg.heads = 2;
  cfg.kernel = 3;
  cfg.enc_layers = 2;
  cfg.tac_blocks = 1;
  cfg.dec_layers = 1;
  cfg.bins = bins;
  return cfg;
}

MaskSet random_masks(Rng& rng, int64_t T, int64_t F) {
  MaskSet m;
  m.frames = T;
  m.bins = F;
  for (int k = 0; k < 3; ++k) m.real_masks[k] = random_tensor(rng, {T, F}, 0.05, 0.95);
  return m;
}

std::vector<CTensor> random_planes(Rng& rng, int64_t C, int64_t T, int64_t F) {
  std::vector<CTensor> y;
  for (int64_t c = 0; c < C; ++c)
    y.push_back(CTensor{random_tensor(rng, {T, F}, -0.5, 0.5),
                        random_tensor(rng, {T, F}, -0.5, 0.5)});
  return y;
}

}  // namespace

// ---- conformer / TAC ------------------------------------------------------

TEST_CASE("conformer block preserves shape") {
  Rng rng(1);
  ParameterStore ps;
  init_conformer(ps, rng, "c", 64, 33);
  Tensor x = random_tensor(rng, {10, 64});
  Tensor y = conformer_block(ps, "c", x, 4, false);
  CHECK(y.shape() == Shape{10, 64});
  for (int64_t i = 0; i < y.numel(); ++i) CHECK(std::isfinite(y[i]));
}

TEST_CASE("conformer rejects width not divisible by heads") {
  Rng rng(2);
  ParameterStore ps;
  init_conformer(ps, rng, "c", 6, 3);
  Tensor x = random_tensor(rng, {4, 6});
  CHECK_THROWS_AS(conformer_block(ps, "c", x, 4, false), Error);
}

TEST_CASE("conformer gradients match finite differences on a 2-frame toy") {
  Rng rng(3);
  ParameterStore ps;
  init_conformer(ps, rng, "c", 8, 3);
  Tensor x = random_tensor(rng, {2, 8});
  CHECK(gradcheck(x, [&](const Tensor& t) {
          Tensor y = conformer_block(ps, "c", t, 2, false);
          return mean_all(mul(y, y));
        }, 1e-5) < 1e-4);
  Tensor q = ps.param("c.attn.q.w", false);
  CHECK(gradcheck(q, [&](const Tensor& t) {
          ParameterStore ps2 = ps;
          ps2.put("c.attn.q.w", t);
          Tensor y = conformer_block(ps2, "c", x, 2, true);
          return mean_all(mul(y, y));
        }, 1e-5) < 1e-4);
}

TEST_CASE("tac with one channel: pooled average equals the channel") {
  Rng rng(4);
  ParameterStore ps;
  init_tac(ps, rng, "t", 8);
  // kill the per-channel transform path so only the averaged path remains
  ps.put("t.tx.w", Tensor::zeros({8, 8}));
  ps.put("t.tx.b", Tensor::zeros({1, 8}));
  Tensor x = random_tensor(rng, {5, 8});
  auto out1 = tac_block(ps, "t", {x}, false);
  // two identical channels share the same average; outputs must agree
  auto out2 = tac_block(ps, "t", {x, x}, false);
  for (int64_t i = 0; i < x.numel(); ++i) {
    CHECK(out1[0][i] == doctest::Approx(out2[0][i]).epsilon(1e-12));
    CHECK(out2[0][i] == doctest::Approx(out2[1][i]).epsilon(1e-12));
  }
}

TEST_CASE("tac is equivariant under channel permutation") {
  Rng rng(5);
  ParameterStore ps;
  init_tac(ps, rng, "t", 8);
  std::vector<Tensor> chans = {random_tensor(rng, {4, 8}), random_tensor(rng, {4, 8}),
                               random_tensor(rng, {4, 8})};
  auto out = tac_block(ps, "t", chans, false);
  auto out_perm = tac_block(ps, "t", {chans[2], chans[0], chans[1]}, false);
  for (int64_t i = 0; i < chans[0].numel(); ++i) {
    CHECK(out_perm[0][i] == doctest::Approx(out[2][i]).epsilon(1e-9));
    CHECK(out_perm[1][i] == doctest::Approx(out[0][i]).epsilon(1e-9));
  }
}

TEST_CASE("tac averaged path receives (x1+x2)/2, hand oracle") {
  ParameterStore ps;
  Rng rng(6);
  init_tac(ps, rng, "t", 2);
  // identity avg transform, zero channel transform, projection reads only
  // the averaged half
  ps.put("t.tx.w", Tensor::zeros({2, 2}));
  ps.put("t.tx.b", Tensor::zeros({1, 2}));
  ps.put("t.avg.w", Tensor({2, 2}, {1, 0, 0, 1}));
  ps.put("t.avg.b", Tensor::zeros({1, 2}));
  ps.put("t.proj.w", Tensor({4, 2}, {0, 0, 0, 0, 1, 0, 0, 1}));
  ps.put("t.proj.b", Tensor::zeros({1, 2}));
  Tensor x1({1, 2}, {0.2, 0.6});
  Tensor x2({1, 2}, {0.4, 0.2});
  auto out = tac_block(ps, "t", {x1, x2}, false);
  // out_c = x_c + relu(identity((x1+x2)/2)) = x_c + (0.3, 0.4)
  CHECK(out[0][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out[0][1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out[1][0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(out[1][1] == doctest::Approx(0.6).epsilon(1e-12));
}

// ---- mask estimator ---------------------------------------------------------

TEST_CASE("real masks live in [0,1] and share (T,F)") {
  Rng rng(7);
  MaskNetConfig cfg = tiny_masknet(9);
  ParameterStore ps;
  Rng init_rng(100);
  init_masknet(ps, init_rng, cfg);
  ComplexSpectrogram chunk = random_chunk(rng, 3, 6, 9);
  MaskSet m = estimate_masks(ps, cfg, chunk, false);
  CHECK(m.frames == 6);
  CHECK(m.bins == 9);
  for (int k = 0; k < 3; ++k) {
    CHECK(m.real_masks[k].shape() == Shape{6, 9});
    for (int64_t i = 0; i < m.real_masks[k].numel(); ++i) {
      CHECK(m.real_masks[k][i] >= 0.0);
      CHECK(m.real_masks[k][i] <= 1.0);
    }
  }
}

TEST_CASE("complex mask magnitudes are capped at 2") {
  Rng rng(8);
  MaskNetConfig cfg = tiny_masknet(9);
  cfg.variant = "complex";
  ParameterStore ps;
  Rng init_rng(101);
  init_masknet(ps, init_rng, cfg);
  ComplexSpectrogram chunk = random_chunk(rng, 2, 5, 9);
  // exaggerate the head weights so the raw outputs are far outside the cap
  Tensor w = ps.param("masknet.out.w", false);
  ps.put("masknet.out.w", scale(w, 50.0));
  MaskSet m = estimate_masks(ps, cfg, chunk, false);
  for (int k = 0; k < 3; ++k) {
    Tensor mag = cmag(m.complex_masks[k]);
    for (int64_t i = 0; i < mag.numel(); ++i) {
      CHECK(mag[i] <= 2.0 + 1e-9);
      CHECK(std::isfinite(mag[i]));
    }
  }
}

TEST_CASE("channel permutation leaves the masks unchanged") {
  Rng rng(9);
  MaskNetConfig cfg = tiny_masknet(9);
  ParameterStore ps;
  Rng init_rng(102);
  init_masknet(ps, init_rng, cfg);
  ComplexSpectrogram chunk = random_chunk(rng, 4, 6, 9);
  MaskSet base = estimate_masks(ps, cfg, chunk, false);

  ComplexSpectrogram perm = chunk;
  const int order[4] = {2, 0, 3, 1};
  for (int c = 0; c < 4; ++c)
    for (int64_t i = 0; i < 6 * 9; ++i)
      perm.data[c * 6 * 9 + i] = chunk.data[order[c] * 6 * 9 + i];
  MaskSet permuted = estimate_masks(ps, cfg, perm, false);
  for (int k = 0; k < 3; ++k)
    for (int64_t i = 0; i < 6 * 9; ++i)
      CHECK(std::abs(base.real_masks[k][i] - permuted.real_masks[k][i]) < 1e-6);
}

TEST_CASE("zero-input spectrogram gives masks constant across time") {
  MaskNetConfig cfg = tiny_masknet(9);
  ParameterStore ps;
  Rng init_rng(103);
  init_masknet(ps, init_rng, cfg);
  ComplexSpectrogram chunk;
  chunk.channels = 2;
  chunk.frames = 7;
  chunk.bins = 9;
  chunk.data.assign(2 * 7 * 9, cplx(0.0));
  MaskSet m = estimate_masks(ps, cfg, chunk, false);
  for (int k = 0; k < 3; ++k)
    for (int64_t t = 1; t < 7; ++t)
      for (int64_t f = 0; f < 9; ++f)
        CHECK(std::abs(m.real_masks[k](t, f) - m.real_masks[k](0, f)) < 1e-12);
}

TEST_CASE("geometry-agnostic: one parameter set serves any channel count") {
  Rng rng(10);
  MaskNetConfig cfg = tiny_masknet(9);
  ParameterStore ps;
  Rng init_rng(104);
  init_masknet(ps, init_rng, cfg);
  for (int64_t C : {1, 2, 7}) {
    ComplexSpectrogram chunk = random_chunk(rng, C, 5, 9);
    MaskSet m = estimate_masks(ps, cfg, chunk, false);
    CHECK(m.real_masks[0].shape() == Shape{5, 9});
    for (int64_t i = 0; i < m.real_masks[0].numel(); ++i) {
      CHECK(m.real_masks[0][i] >= 0.0);
      CHECK(m.real_masks[0][i] <= 1.0);
    }
  }
}

TEST_CASE("chunk length limit is enforced") {
  Rng rng(11);
  MaskNetConfig cfg = tiny_masknet(9);
  cfg.max_frames = 4;
  ParameterStore ps;
  Rng init_rng(105);
  init_masknet(ps, init_rng, cfg);
  ComplexSpectrogram chunk = random_chunk(rng, 2, 6, 9);
  CHECK_THROWS_WITH_AS(estimate_masks(ps, cfg, chunk, false),
                       doctest::Contains("exceeds"), Error);
}

TEST_CASE("mask gradients flow to network parameters") {
  Rng rng(12);
  MaskNetConfig cfg = tiny_masknet(7);
  ParameterStore ps;
  Rng init_rng(106);
  init_masknet(ps, init_rng, cfg);
  ComplexSpectrogram chunk = random_chunk(rng, 2, 3, 7);
  Tensor leaf = ps.param("masknet.out.w", false);
  double err = gradcheck(leaf, [&](const Tensor& t) {
    ParameterStore ps2 = ps;
    ps2.put("masknet.out.w", t);
    MaskSet m = estimate_masks(ps2, cfg, chunk, true);
    return mean_all(mul(m.real_masks[0], m.real_masks[0]));
  }, 1e-5);
  CHECK(err < 1e-3);
}

// ---- covariances -------------------------------------------------------------

TEST_CASE("all-one mask, single frame, unit vector: phi = e e^H") {
  std::vector<CTensor> planes;
  planes.push_back(CTensor{Tensor({1, 1}, {1.0}), Tensor({1, 1}, {0.0})});
  planes.push_back(CTensor{Tensor({1, 1}, {0.0}), Tensor({1, 1}, {0.0})});
  Tensor mask2 = Tensor({1, 1}, {1.0});
  CovSeries cov = framewise_covariance(planes, mask2, "chunk", 0.0);
  CHECK(cov.at(0, 0).re.value() == doctest::Approx(1.0));
  CHECK(cov.at(0, 1).re.value() == doctest::Approx(0.0));
  CHECK(cov.at(1, 1).re.value() == doctest::Approx(0.0));
}

TEST_CASE("zero speaker mask keeps the covariance bounded near zero") {
  Rng rng(13);
  const int64_t C = 2, T = 4, F = 3;
  auto y = random_planes(rng, C, T, F);
  Tensor zero_mask = Tensor::zeros({T, F});
  std::vector<CTensor> masked;
  for (auto& p : y) masked.push_back(cmul_real(p, zero_mask));
  CovSeries cov = framewise_covariance(masked, zero_mask, "chunk");
  for (const auto& p : cov.phi)
    for (int64_t i = 0; i < p.re.numel(); ++i) {
      CHECK(std::abs(p.re[i]) < 1e-9);
      CHECK(std::abs(p.im[i]) < 1e-9);
    }
}

TEST_CASE("framewise covariance matches the brute-force oracle to 1e-12") {
  Rng rng(14);
  const int64_t C = 2, T = 2, F = 3;
  auto y = random_planes(rng, C, T, F);
  Tensor mask = random_tensor(rng, {T, F}, 0.1, 1.0);
  std::vector<CTensor> masked;
  for (auto& p : y) masked.push_back(cmul_real(p, mask));
  const double eps = kComplexEps;
  CovSeries cov = framewise_covariance(masked, mul(mask, mask), "chunk", eps);

  for (int64_t t = 0; t < T; ++t)
    for (int64_t f = 0; f < F; ++f) {
      double den = eps;
      for (int64_t tt = 0; tt < T; ++tt) den += mask(tt, f) * mask(tt, f);
      for (int64_t i = 0; i < C; ++i)
        for (int64_t j = 0; j < C; ++j) {
          cplx si(mask(t, f) * y[i].re(t, f), mask(t, f) * y[i].im(t, f));
          cplx sj(mask(t, f) * y[j].re(t, f), mask(t, f) * y[j].im(t, f));
          cplx expect = si * std::conj(sj) / den;
          CHECK(std::abs(cov.at(i, j).re(t, f) - expect.real()) < 1e-12);
          CHECK(std::abs(cov.at(i, j).im(t, f) - expect.imag()) < 1e-12);
        }
    }
}

TEST_CASE("framewise covariances are Hermitian and PSD per (t,f)") {
  Rng rng(15);
  const int64_t C = 3, T = 3, F = 4;
  auto y = random_planes(rng, C, T, F);
  Tensor mask = random_tensor(rng, {T, F}, 0.1, 1.0);
  std::vector<CTensor> masked;
  for (auto& p : y) masked.push_back(cmul_real(p, mask));
  CovSeries cov = framewise_covariance(masked, mul(mask, mask), "chunk");
  Rng probe_rng(151);
  for (int64_t t = 0; t < T; ++t)
    for (int64_t f = 0; f < F; ++f) {
      CMat m(C);
      for (int64_t i = 0; i < C; ++i)
        for (int64_t j = 0; j < C; ++j)
          m.at(i, j) = {cov.at(i, j).re(t, f), cov.at(i, j).im(t, f)};
      CHECK(hermitian_deviation(m) < 1e-10);
      for (int probe = 0; probe < 5; ++probe) {
        std::vector<cplx> v(C);
        for (auto& z : v) z = {probe_rng.normal(), probe_rng.normal()};
        CHECK(vdot(v, matvec(m, v)).real() > -1e-12);
      }
    }
}

TEST_CASE("running normalization is causal; chunk normalization is not") {
  Rng rng(16);
  const int64_t C = 2, T = 6, F = 3, Tcut = 3;
  auto y = random_planes(rng, C, T, F);
  Tensor mask = random_tensor(rng, {T, F}, 0.1, 1.0);
  std::vector<CTensor> masked;
  for (auto& p : y) masked.push_back(cmul_real(p, mask));

  auto cut = [&](const Tensor& t) { return slice_rows(t, 0, Tcut); };
  std::vector<CTensor> masked_cut;
  for (auto& p : masked) masked_cut.push_back(CTensor{cut(p.re), cut(p.im)});

  CovSeries full = framewise_covariance(masked, mul(mask, mask), "running");
  CovSeries trunc = framewise_covariance(masked_cut, cut(mul(mask, mask)), "running");
  for (int64_t i = 0; i < C * C; ++i)
    for (int64_t t = 0; t < Tcut; ++t)
      for (int64_t f = 0; f < F; ++f)
        CHECK(full.phi[i].re(t, f) == trunc.phi[i].re(t, f));

  CovSeries full_chunk = framewise_covariance(masked, mul(mask, mask), "chunk");
  CovSeries trunc_chunk =
      framewise_covariance(masked_cut, cut(mul(mask, mask)), "chunk");
  bool differs = false;
  for (int64_t f = 0; f < F && !differs; ++f)
    differs = full_chunk.phi[0].re(0, f) != trunc_chunk.phi[0].re(0, f);
  CHECK(differs);
}

// ---- classical MVDR -----------------------------------------------------------

TEST_CASE("C=1 classical MVDR is a distortionless pass-through") {
  std::vector<CMat> ss(4, CMat(1)), vv(4, CMat(1));
  Rng rng(17);
  for (int f = 0; f < 4; ++f) {
    ss[f].at(0, 0) = rng.uniform(0.5, 2.0);
    vv[f].at(0, 0) = rng.uniform(0.5, 2.0);
  }
  ClassicalMvdr bf = mvdr_classical(ss, vv);
  for (int f = 0; f < 4; ++f) {
    // h^H v = 1 with v the (unit) principal direction of a 1x1 matrix
    CHECK(std::abs(std::conj(bf.weights[f][0]) * cplx(1.0) - cplx(1.0)) < 1e-6);
  }
}

TEST_CASE("identity interference covariance gives h = v/(v^H v)") {
  Rng rng(18);
  const int64_t C = 3;
  CMat ss = oracles::random_hermitian_psd(rng, C);
  PowerIterResult pi = power_iteration(ss);
  std::vector<CMat> vv = {CMat::identity(C)};
  ClassicalMvdr bf = mvdr_classical({ss}, vv, /*diag_load=*/0.0);
  // with identity vv, h = v / (v^H v) = v for unit v
  for (int64_t i = 0; i < C; ++i)
    CHECK(std::abs(bf.weights[0][i] - pi.vec[i]) < 1e-8);
}

TEST_CASE("2x2 closed-form oracle and interference power") {
  // v = (1,1)/sqrt(2), Phi_VV = [[1, 0.5],[0.5, 1]]
  CMat vv(2);
  vv.at(0, 0) = 1.0;
  vv.at(0, 1) = 0.5;
  vv.at(1, 0) = 0.5;
  vv.at(1, 1) = 1.0;
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<cplx> v{s, s};
  CMat ss = CMat::outer(v);

  ClassicalMvdr bf = mvdr_classical({ss}, {vv}, /*diag_load=*/0.0);
  // explicit 2x2 inverse: (1/(1-0.25)) [[1,-0.5],[-0.5,1]]
  CMat inv(2);
  inv.at(0, 0) = 4.0 / 3.0;
  inv.at(0, 1) = -2.0 / 3.0;
  inv.at(1, 0) = -2.0 / 3.0;
  inv.at(1, 1) = 4.0 / 3.0;
  auto num = matvec(inv, v);
  cplx den = vdot(v, num);
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(bf.weights[0][i] - num[i] / den) < 1e-10);

  // distortionless and no worse than delay-and-sum
  cplx hv = vdot(bf.weights[0], v);
  CHECK(std::abs(hv - cplx(1.0)) < 1e-6);
  auto power = [&](const std::vector<cplx>& w) {
    return vdot(w, matvec(vv, w)).real();
  };
  std::vector<cplx> das{v[0], v[1]};  // v/(v^H v) = v for unit v
  CHECK(power(bf.weights[0]) <= power(das) + 1e-9);
}

TEST_CASE("distortionless constraint holds on random instances") {
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const int64_t C = 2 + trial % 3;
    CMat ss = oracles::random_hermitian_psd(rng, C);
    CMat vv = oracles::random_hermitian_psd(rng, C, 1e-2);
    ClassicalMvdr bf = mvdr_classical({ss}, {vv});
    cplx hv = vdot(bf.weights[0], bf.steering[0]);
    CHECK(std::abs(hv - cplx(1.0)) < 1e-6);
  }
}

TEST_CASE("classical MVDR beats random distortionless competitors") {
  Rng rng(20);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t C = 2 + trial % 3;
    std::vector<cplx> v(C);
    for (auto& z : v) z = {rng.normal(), rng.normal()};
    double n = norm2(v);
    for (auto& z : v) z /= n;
    CMat ss = CMat::outer(v);
    CMat vv = oracles::random_hermitian_psd(rng, C, 1e-2);
    ClassicalMvdr bf = mvdr_classical({ss}, {vv});
    double h_power = vdot(bf.weights[0], matvec(vv, bf.weights[0])).real();
    for (int k = 0; k < 100; ++k) {
      std::vector<cplx> u(C);
      for (auto& z : u) z = {rng.normal(), rng.normal()};
      cplx uv = vdot(u, v);  // u^H v
      if (std::abs(uv) < 1e-3) continue;
      // w = u * conj(1/(u^H v)) satisfies w^H v = 1
      cplx c = std::conj(cplx(1.0) / uv);
      for (auto& z : u) z *= c;
      double w_power = vdot(u, matvec(vv, u)).real();
      CHECK(h_power <= w_power * (1.0 + 1e-9) + 1e-12);
    }
  }
}

TEST_CASE("power iteration matches the characteristic-polynomial oracle") {
  Rng rng(21);
  int done = 0;
  while (done < 100) {
    const int64_t C = 2 + done % 2;
    CMat m = oracles::random_hermitian(rng, C);
    auto values = C == 2 ? oracles::eig2_values(m) : oracles::eig3_values(m);
    // need the largest-|lambda| eigenvalue well separated
    std::vector<double> mags;
    for (double l : values) mags.push_back(std::abs(l));
    std::sort(mags.begin(), mags.end(), std::greater<>());
    if (mags[0] - mags[1] < 0.05 * std::max(mags[0], 1.0)) continue;
    double target = 0;
    for (double l : values)
      if (std::abs(l) == mags[0]) target = l;
    auto expect = C == 2 ? oracles::eig2_vector(m, target)
                         : oracles::eig3_vector(m, target);
    PowerIterResult pi = power_iteration(m, 2000, 1e-14);
    CHECK(pi.converged);
    CHECK(oracles::aligned_distance(pi.vec, expect) < 1e-8);
    CHECK(pi.eigenvalue == doctest::Approx(target).epsilon(1e-8));
    ++done;
  }
}

TEST_CASE("jacobi oracle agrees with the characteristic polynomial") {
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    CMat m2 = oracles::random_hermitian(rng, 2);
    auto a = oracles::eig2_values(m2);
    auto b = oracles::jacobi_eigenvalues(m2);
    CHECK(std::abs(a[0] - b[0]) < 1e-10);
    CHECK(std::abs(a[1] - b[1]) < 1e-10);
    CMat m3 = oracles::random_hermitian(rng, 3);
    auto a3 = oracles::eig3_values(m3);
    auto b3 = oracles::jacobi_eigenvalues(m3);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(a3[i] - b3[i]) < 1e-8);
  }
}

// ---- GRU-Net heads -------------------------------------------------------------

TEST_CASE("head widths follow the channel count (C=7: 14 and 98)") {
  BeamformerConfig cfg;
  cfg.channels = 7;
  cfg.psd = false;
  CHECK(cfg.steer_width() == 14);
  CHECK(cfg.inv_width() == 98);
  cfg.psd = true;
  CHECK(cfg.inv_width() == 56);  // C^2 + C
  cfg.validate();

  ParameterStore ps;
  Rng rng(23);
  cfg.bins = 5;
  init_beamformer(ps, rng, cfg);
  CHECK(ps.param("bf.v.out.w", false).cols() == 14);
  CHECK(ps.param("bf.vv.out.w", false).cols() == 56);
  CHECK(ps.param("bf.vad.out.w", false).cols() == 1);
  CHECK(ps.param("bf.v.l1.wz", false).rows() == 98);  // 2 C^2 input
}

TEST_CASE("steering normalization: (3, 4i) maps to (0.6, 0.8i)") {
  Tensor out({1, 4}, {3.0, 0.0, 0.0, 4.0});  // re0, re1, im0, im1
  auto v = steering_from_output(out, 1, 1, 2, true);
  CHECK(v[0].re.value() == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(v[0].im.value() == doctest::Approx(0.0));
  CHECK(v[1].re.value() == doctest::Approx(0.0));
  CHECK(v[1].im.value() == doctest::Approx(0.8).epsilon(1e-6));
  double norm = std::sqrt(std::norm(cplx(v[0].re.value(), v[0].im.value())) +
                          std::norm(cplx(v[1].re.value(), v[1].im.value())));
  CHECK(std::abs(norm - 1.0) < 1e-6);
}

TEST_CASE("psd construction is Hermitian with eigenvalues >= -1e-10") {
  Rng rng(24);
  const int64_t C = 3, T = 4, F = 2;
  BeamformerConfig cfg;
  cfg.channels = C;
  cfg.bins = F;
  cfg.gru_v1 = cfg.gru_v2 = cfg.gru_vv = cfg.gru_vad = 8;
  ParameterStore ps;
  init_beamformer(ps, rng, cfg);
  Tensor x = random_tensor(rng, {T * F, cfg.cov_width()});
  Tensor out = gru_net_apply(ps, "bf.vv", x, T, F, nullptr, -1, nullptr, nullptr,
                             false, false);
  CovSeries inv = inverse_from_output(out, T, F, C, true);
  for (int64_t t = 0; t < T; ++t)
    for (int64_t f = 0; f < F; ++f) {
      CMat m(C);
      for (int64_t i = 0; i < C; ++i)
        for (int64_t j = 0; j < C; ++j)
          m.at(i, j) = {inv.at(i, j).re(t, f), inv.at(i, j).im(t, f)};
      CHECK(hermitian_deviation(m) < 1e-10);
      auto eig = oracles::jacobi_eigenvalues(m);
      CHECK(eig.back() >= -1e-10);
    }
}

TEST_CASE("apply_beamformer: channel selector and uniform averaging") {
  Rng rng(25);
  const int64_t C = 3, T = 4, F = 5;
  auto y = random_planes(rng, C, T, F);
  // h = e0 selects channel 0
  std::vector<CTensor> sel;
  sel.push_back(CTensor{Tensor::full({T, F}, 1.0), Tensor::zeros({T, F})});
  for (int64_t c = 1; c < C; ++c)
    sel.push_back(CTensor{Tensor::zeros({T, F}), Tensor::zeros({T, F})});
  CTensor out = apply_beamformer(sel, y);
  for (int64_t i = 0; i < T * F; ++i) {
    CHECK(out.re[i] == doctest::Approx(y[0].re[i]).epsilon(1e-12));
    CHECK(out.im[i] == doctest::Approx(y[0].im[i]).epsilon(1e-12));
  }
  // identical channels with uniform 1/C weights reproduce the channel
  std::vector<CTensor> same(C, y[0]);
  std::vector<CTensor> uni(C, CTensor{Tensor::full({T, F}, 1.0 / C),
                                      Tensor::zeros({T, F})});
  CTensor avg = apply_beamformer(uni, same);
  for (int64_t i = 0; i < T * F; ++i)
    CHECK(avg.re[i] == doctest::Approx(y[0].re[i]).epsilon(1e-12));
}

TEST_CASE("anechoic two-source toy: interferer attenuated by 20 dB or more") {
  // two mics 8 cm apart, far-field sources at broadside and 60 degrees
  const double d = 0.08, c = 343.0;
  const double tau = d * std::sin(M_PI / 3.0) / c;
  int checked = 0;
  for (double hz : {600.0, 1000.0, 1500.0, 2000.0, 2800.0}) {
    const cplx j(0.0, 1.0);
    std::vector<cplx> a1{1.0, 1.0};  // broadside
    std::vector<cplx> a2{1.0, std::exp(-j * (2.0 * M_PI * hz * tau))};
    CMat ss = CMat::outer(a1);
    CMat vv = CMat::outer(a2);
    for (int64_t i = 0; i < 2; ++i) vv.at(i, i) += 1e-4;
    ClassicalMvdr bf = mvdr_classical({ss}, {vv}, 0.0);
    cplx ga1 = vdot(bf.weights[0], a1);
    cplx ga2 = vdot(bf.weights[0], a2);
    // distortionless toward the unit direction of a1: h^H a1 = sqrt(2)
    CHECK(std::abs(ga1 - cplx(std::sqrt(2.0))) < 1e-3);
    double atten_db = 20.0 * std::log10(std::abs(ga2) / std::abs(ga1) + 1e-300);
    CHECK(atten_db <= -20.0);
    ++checked;
  }
  CHECK(checked == 5);
}

// ---- full frame-wise pipeline -----------------------------------------------

namespace {

BeamformerConfig toy_bf(int64_t C, int64_t F) {
  BeamformerConfig cfg;
  cfg.channels = C;
  cfg.bins = F;
  cfg.gru_v1 = 8;
  cfg.gru_v2 = 8;
  cfg.gru_vv = 8;
  cfg.gru_vad = 8;
  return cfg;
}

}  // namespace

TEST_CASE("vad gate: zero weights silence frames, unit weights pass through") {
  Rng rng(26);
  const int64_t C = 2, T = 5, F = 4;
  BeamformerConfig cfg = toy_bf(C, F);
  cfg.residual = false;
  ParameterStore ps;
  init_beamformer(ps, rng, cfg);
  auto y = random_planes(rng, C, T, F);
  MaskSet masks = random_masks(rng, T, F);

  // force the VAD head to emit exactly zero
  ps.put("bf.vad.out.w", Tensor::zeros({cfg.gru_vad, 1}));
  ps.put("bf.vad.out.b", Tensor::zeros({1, 1}));
  AdlMvdrOutput off = adl_mvdr_source(ps, cfg, y, masks, 0, nullptr, -1, nullptr,
                                      nullptr, false);
  for (int64_t i = 0; i < T * F; ++i) {
    CHECK(off.s_vad.re[i] == 0.0);
    CHECK(off.s_vad.im[i] == 0.0);
  }
  // force exactly one
  ps.put("bf.vad.out.b", Tensor::full({1, 1}, 1.0));
  AdlMvdrOutput on = adl_mvdr_source(ps, cfg, y, masks, 0, nullptr, -1, nullptr,
                                     nullptr, false);
  for (int64_t i = 0; i < T * F; ++i)
    CHECK(on.s_vad.re[i] == doctest::Approx(on.s_adl.re[i]).epsilon(1e-12));
}

TEST_CASE("vad weights settle to a constant on zero masks") {
  Rng rng(27);
  const int64_t C = 2, T = 40, F = 4;
  BeamformerConfig cfg = toy_bf(C, F);
  ParameterStore ps;
  init_beamformer(ps, rng, cfg);
  auto y = random_planes(rng, C, T, F);
  MaskSet masks;
  masks.frames = T;
  masks.bins = F;
  for (int k = 0; k < 3; ++k) masks.real_masks[k] = Tensor::zeros({T, F});
  AdlMvdrOutput out = adl_mvdr_source(ps, cfg, y, masks, 0, nullptr, -1, nullptr,
                                      nullptr, false);
  // constant input drives the recurrence to its fixed point
  const double last = out.vad_gain[T - 1];
  for (int64_t t = T / 2; t < T; ++t)
    CHECK(std::abs(out.vad_gain[t] - last) < 1e-9);
}

TEST_CASE("residual connection adds alpha times masked channel 0") {
  Rng rng(28);
  const int64_t C = 2, T = 4, F = 3;
  auto y = random_planes(rng, C, T, F);
  MaskSet masks = random_masks(rng, T, F);
  BeamformerConfig with = toy_bf(C, F);
  ParameterStore ps;
  init_beamformer(ps, rng, with);
  BeamformerConfig without = with;
  without.residual = false;

  AdlMvdrOutput a = adl_mvdr_source(ps, with, y, masks, 0, nullptr, -1, nullptr,
                                    nullptr, false);
  AdlMvdrOutput b = adl_mvdr_source(ps, without, y, masks, 0, nullptr, -1, nullptr,
                                    nullptr, false);
  CTensor masked0 = masks.apply(0, y[0]);
  for (int64_t i = 0; i < T * F; ++i) {
    CHECK(a.s_final.re[i] - b.s_final.re[i] ==
          doctest::Approx(0.5 * masked0.re[i]).epsilon(1e-9));
    CHECK(a.s_final.im[i] - b.s_final.im[i] ==
          doctest::Approx(0.5 * masked0.im[i]).epsilon(1e-9));
  }
  // alpha = 0 collapses to the gated beamformer output
  BeamformerConfig zero_alpha = with;
  zero_alpha.alpha = 0.0;
  AdlMvdrOutput z = adl_mvdr_source(ps, zero_alpha, y, masks, 0, nullptr, -1, nullptr,
                                    nullptr, false);
  for (int64_t i = 0; i < T * F; ++i)
    CHECK(z.s_final.re[i] == z.s_vad.re[i]);
}

TEST_CASE("frame-wise pipeline is causal under running normalization") {
  Rng rng(29);
  const int64_t C = 2, T = 8, Tcut = 5, F = 3;
  BeamformerConfig cfg = toy_bf(C, F);
  cfg.cov_norm = "running";
  ParameterStore ps;
  init_beamformer(ps, rng, cfg);
  auto y = random_planes(rng, C, T, F);
  MaskSet masks = random_masks(rng, T, F);

  auto cut_ct = [&](const CTensor& p) {
    return CTensor{slice_rows(p.re, 0, Tcut), slice_rows(p.im, 0, Tcut)};
  };
  std::vector<CTensor> y_cut;
  for (auto& p : y) y_cut.push_back(cut_ct(p));
  MaskSet masks_cut;
  masks_cut.frames = Tcut;
  masks_cut.bins = F;
  for (int k = 0; k < 3; ++k)
    masks_cut.real_masks[k] = slice_rows(masks.real_masks[k], 0, Tcut);

  AdlMvdrOutput full = adl_mvdr_source(ps, cfg, y, masks, 0, nullptr, -1, nullptr,
                                       nullptr, false);
  AdlMvdrOutput part = adl_mvdr_source(ps, cfg, y_cut, masks_cut, 0, nullptr, -1,
                                       nullptr, nullptr, false);
  for (int64_t t = 0; t < Tcut; ++t)
    for (int64_t f = 0; f < F; ++f) {
      CHECK(full.s_final.re(t, f) == part.s_final.re(t, f));
      CHECK(full.s_final.im(t, f) == part.s_final.im(t, f));
    }
}

TEST_CASE("gru-net state handoff continues one seamless trajectory") {
  Rng rng(30);
  const int64_t C = 2, T = 6, F = 3, Tsplit = 3;
  BeamformerConfig cfg = toy_bf(C, F);
  ParameterStore ps;
  init_beamformer(ps, rng, cfg);
  auto y = random_planes(rng, C, T, F);
  MaskSet masks = random_masks(rng, T, F);

  SourceSignals sig = build_source_signals(y, masks, 0);
  CovSeries phi = framewise_covariance(sig.s_masked, sig.s_pow2, "running");
  std::vector<Tensor> cols;
  for (const auto& p : phi.phi) cols.push_back(reshape(p.re, {T * F, 1}));
  for (const auto& p : phi.phi) cols.push_back(reshape(p.im, {T * F, 1}));
  Tensor x_all = concat_cols(cols);

  Tensor full_out = gru_net_apply(ps, "bf.v", x_all, T, F, nullptr, -1, nullptr,
                                  nullptr, false, false);
  GruNetState mid;
  Tensor first_out =
      gru_net_apply(ps, "bf.v", slice_rows(x_all, 0, Tsplit * F), Tsplit, F, nullptr,
                    Tsplit - 1, &mid, nullptr, false, false);
  Tensor second_out =
      gru_net_apply(ps, "bf.v", slice_rows(x_all, Tsplit * F, (T - Tsplit) * F),
                    T - Tsplit, F, &mid, -1, nullptr, nullptr, false, false);
  const int64_t W = full_out.cols();
  for (int64_t i = 0; i < Tsplit * F * W; ++i)
    CHECK(first_out[i] == doctest::Approx(full_out[i]).epsilon(1e-12));
  for (int64_t i = 0; i < (T - Tsplit) * F * W; ++i)
    CHECK(second_out[i] ==
          doctest::Approx(full_out[Tsplit * F * W + i]).epsilon(1e-12));
}

TEST_CASE("gradients flow end to end through the beamformer path") {
  Rng rng(31);
  const int64_t C = 2, T = 3, F = 3;
  BeamformerConfig cfg = toy_bf(C, F);
  ParameterStore ps;
  init_beamformer(ps, rng, cfg);
  auto y = random_planes(rng, C, T, F);
  MaskSet masks = random_masks(rng, T, F);

  for (const char* leaf : {"bf.v.l1.wz", "bf.vv.out.w", "bf.vad.l2.uh"}) {
    Tensor p = ps.param(leaf, false);
    double err = gradcheck(p, [&](const Tensor& t) {
      ParameterStore ps2 = ps;
      ps2.put(leaf, t);
      AdlMvdrOutput out = adl_mvdr_source(ps2, cfg, y, masks, 0, nullptr, -1, nullptr,
                                          nullptr, true);
      return mean_all(cmag2(out.s_final));
    }, 1e-5);
    INFO(leaf);
    CHECK(err < 1e-3);
  }
}
