// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/cmat.hpp"

#include <cmath>

namespace adlb {

CMat CMat::identity(int64_t size) {
  CMat m(size);
  for (int64_t i = 0; i < size; ++i) m.at(i, i) = 1.0;
  return m;
}

CMat CMat::outer(const std::vector<cplx>& v) {
  CMat m(static_cast<int64_t>(v.size()));
  for (int64_t i = 0; i < m.n; ++i)
    for (int64_t j = 0; j < m.n; ++j) m.at(i, j) = v[i] * std::conj(v[j]);
  return m;
}

cplx CMat::trace() const {
  cplx t = 0.0;
  for (int64_t i = 0; i < n; ++i) t += at(i, i);
  return t;
}

CMat add(const CMat& x, const CMat& y) {
  ADLB_CHECK(x.n == y.n, "cmat add: size mismatch");
  CMat out(x.n);
  for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] + y.a[i];
  return out;
}

CMat scale(const CMat& x, cplx s) {
  CMat out(x.n);
  for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] * s;
  return out;
}

std::vector<cplx> matvec(const CMat& m, const std::vector<cplx>& v) {
  ADLB_CHECK(m.n == static_cast<int64_t>(v.size()), "cmat matvec: size mismatch");
  std::vector<cplx> out(v.size(), 0.0);
  for (int64_t i = 0; i < m.n; ++i) {
    cplx s = 0.0;
    for (int64_t j = 0; j < m.n; ++j) s += m.at(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

cplx vdot(const std::vector<cplx>& x, const std::vector<cplx>& y) {
  ADLB_CHECK(x.size() == y.size(), "cmat vdot: size mismatch");
  cplx s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

double norm2(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const cplx& z : v) s += std::norm(z);
  return std::sqrt(s);
}

double hermitian_deviation(const CMat& m) {
  double dev = 0.0;
  for (int64_t i = 0; i < m.n; ++i)
    for (int64_t j = 0; j < m.n; ++j)
      dev = std::max(dev, std::abs(m.at(i, j) - std::conj(m.at(j, i))));
  return dev;
}

CMat inverse(const CMat& m) {
  const int64_t n = m.n;
  CMat a = m;
  CMat inv = CMat::identity(n);
  for (int64_t col = 0; col < n; ++col) {
    int64_t pivot = col;
    double best = std::abs(a.at(col, col));
    for (int64_t r = col + 1; r < n; ++r) {
      double mag = std::abs(a.at(r, col));
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    ADLB_CHECK(best > 1e-300, "cmat inverse: singular matrix (pivot " << col << ")");
    if (pivot != col) {
      for (int64_t j = 0; j < n; ++j) {
        std::swap(a.at(pivot, j), a.at(col, j));
        std::swap(inv.at(pivot, j), inv.at(col, j));
      }
    }
    cplx d = a.at(col, col);
    for (int64_t j = 0; j < n; ++j) {
      a.at(col, j) /= d;
      inv.at(col, j) /= d;
    }
    for (int64_t r = 0; r < n; ++r) {
      if (r == col) continue;
      cplx f = a.at(r, col);
      if (f == cplx(0.0)) continue;
      for (int64_t j = 0; j < n; ++j) {
        a.at(r, j) -= f * a.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

CMat diagonal_loading(const CMat& m, double rel) {
  CMat out = m;
  double load = rel * std::abs(m.trace()) / static_cast<double>(m.n);
  if (load <= 0.0) load = rel;  // zero-trace guard
  for (int64_t i = 0; i < m.n; ++i) out.at(i, i) += load;
  return out;
}

PowerIterResult power_iteration(const CMat& m, int max_iters, double tol) {
  const int64_t n = m.n;
  PowerIterResult res;
  // start from the column under the largest diagonal entry
  int64_t start = 0;
  double best = -1.0;
  for (int64_t i = 0; i < n; ++i) {
    double mag = std::abs(m.at(i, i));
    if (mag > best) {
      best = mag;
      start = i;
    }
  }
  std::vector<cplx> v(static_cast<size_t>(n), 0.0);
  for (int64_t i = 0; i < n; ++i) v[i] = m.at(i, start);
  if (norm2(v) < 1e-300) v[start] = 1.0;
  double nv = norm2(v);
  for (auto& z : v) z /= nv;

  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    std::vector<cplx> w = matvec(m, v);
    lambda = vdot(v, w).real();
    double nw = norm2(w);
    if (nw < 1e-300) {
      // zero matrix: any unit vector is as principal as another
      res.vec = v;
      res.eigenvalue = 0.0;
      res.converged = true;
      res.iters = it;
      return res;
    }
    double resid = 0.0;
    for (int64_t i = 0; i < n; ++i) resid += std::norm(w[i] - lambda * v[i]);
    resid = std::sqrt(resid);
    for (auto& z : w) z /= nw;
    v = std::move(w);
    res.iters = it + 1;
    if (resid <= tol * std::max(std::abs(lambda), 1e-30)) {
      res.converged = true;
      break;
    }
  }
  res.vec = v;
  res.eigenvalue = vdot(v, matvec(m, v)).real();
  return res;
}

}  // namespace adlb
