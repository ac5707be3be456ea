// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_CMAT_HPP_
#define ADLB_CMAT_HPP_

#include <complex>
#include <vector>

#include "adlb/common.hpp"

namespace adlb {

using cplx = std::complex<double>;

// Dense square complex matrix, row-major; sized for microphone counts
// (a handful of channels), not for large linear algebra.
struct CMat {
  int64_t n = 0;
  std::vector<cplx> a;

  CMat() = default;
  explicit CMat(int64_t size) : n(size), a(static_cast<size_t>(size * size)) {}
  cplx& at(int64_t i, int64_t j) { return a[i * n + j]; }
  const cplx& at(int64_t i, int64_t j) const { return a[i * n + j]; }

  static CMat identity(int64_t size);
  static CMat outer(const std::vector<cplx>& v);  // v v^H
  cplx trace() const;
};

CMat add(const CMat& x, const CMat& y);
CMat scale(const CMat& x, cplx s);
std::vector<cplx> matvec(const CMat& m, const std::vector<cplx>& v);
cplx vdot(const std::vector<cplx>& x, const std::vector<cplx>& y);  // x^H y
double norm2(const std::vector<cplx>& v);
double hermitian_deviation(const CMat& m);  // max |a_ij - conj(a_ji)|

// Gauss-Jordan with partial pivoting; throws on a singular matrix.
CMat inverse(const CMat& m);

// m + rel * trace(m)/n * I
CMat diagonal_loading(const CMat& m, double rel);

struct PowerIterResult {
  std::vector<cplx> vec;  // unit norm
  double eigenvalue = 0.0;
  bool converged = false;
  int iters = 0;
};

// Principal eigenvector by power iteration, deterministic start from the
// largest-diagonal column.
PowerIterResult power_iteration(const CMat& m, int max_iters = 200,
                                double tol = 1e-12);

}  // namespace adlb

#endif  // ADLB_CMAT_HPP_
