// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace adlb {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

namespace {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t e : s) n *= e;
  return n;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  ADLB_CHECK(a.shape() == b.shape(), op << ": shape mismatch " << shape_str(a.shape())
                                        << " vs " << shape_str(b.shape()));
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  ADLB_CHECK(shape_numel(shape_) == static_cast<int64_t>(data.size()),
             "tensor: shape " << shape_str(shape_) << " does not match data size "
                              << data.size());
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::zeros(const Shape& shape) {
  return Tensor(shape, std::vector<double>(shape_numel(shape), 0.0));
}

Tensor Tensor::full(const Shape& shape, double v) {
  return Tensor(shape, std::vector<double>(shape_numel(shape), v));
}

Tensor Tensor::scalar(double v) { return Tensor({1, 1}, {v}); }

Tensor Tensor::with_grad() const {
  Tensor t = *this;
  t.requires_grad_ = true;
  return t;
}

Tensor Tensor::detached() const {
  Tensor t = *this;
  t.requires_grad_ = false;
  t.node_ = -1;
  t.gen_ = 0;
  return t;
}

int64_t Tensor::rows() const {
  if (shape_.empty()) return 1;
  if (shape_.size() == 1) return 1;
  ADLB_CHECK(shape_.size() == 2, "rows(): rank-2 expected, got " << shape_str(shape_));
  return shape_[0];
}

int64_t Tensor::cols() const {
  if (shape_.empty()) return 1;
  if (shape_.size() == 1) return shape_[0];
  ADLB_CHECK(shape_.size() == 2, "cols(): rank-2 expected, got " << shape_str(shape_));
  return shape_[1];
}

double Tensor::value() const {
  ADLB_CHECK(numel() == 1, "value(): scalar-shaped tensor expected, got "
                               << shape_str(shape_));
  return (*data_)[0];
}

const Tensor& GradMap::at(const Tensor& t) const {
  auto it = by_leaf_.find(t.storage().get());
  ADLB_CHECK(it != by_leaf_.end(), "GradMap: no gradient recorded for tensor");
  return it->second;
}

// ---- tape ------------------------------------------------------------

namespace {
thread_local Tape* g_current_tape = nullptr;
std::atomic<uint64_t> g_tape_gen{1};
}  // namespace

Tape::Tape() : gen_(g_tape_gen.fetch_add(1)) {
  prev_ = g_current_tape;
  g_current_tape = this;
}

Tape::~Tape() { g_current_tape = prev_; }

Tape* Tape::current() { return g_current_tape; }

int Tape::node_of(const Tensor& t) {
  if (t.gen_ == gen_ && t.node_ >= 0) return t.node_;
  if (!t.requires_grad()) return -1;
  const void* key = t.storage().get();
  auto it = leaf_by_storage_.find(key);
  if (it != leaf_by_storage_.end()) return it->second;
  int id = add_node(t.numel(), BackwardFn());
  leaf_by_storage_.emplace(key, id);
  leaf_info_.emplace(id, std::make_pair(key, t.shape()));
  return id;
}

int Tape::add_node(int64_t out_numel, BackwardFn fn) {
  nodes_.push_back(Node{std::move(fn), out_numel});
  grads_.emplace_back();
  return static_cast<int>(nodes_.size()) - 1;
}

double* Tape::grad_buf(int node, int64_t numel) {
  if (node < 0) return nullptr;
  auto& g = grads_[node];
  if (g.empty()) g.assign(static_cast<size_t>(numel), 0.0);
  return g.data();
}

void Tape::attach(Tensor& out, int node) {
  out.node_ = node;
  out.gen_ = gen_;
  out = out.with_grad();
}

GradMap Tape::backward(const Tensor& root) {
  ADLB_CHECK(!consumed_, "backward: tape already consumed");
  ADLB_CHECK(root.numel() == 1,
             "backward: root must be scalar-shaped, got " << shape_str(root.shape()));
  consumed_ = true;
  GradMap out;
  if (root.gen_ != gen_ || root.node_ < 0) return out;  // nothing reachable

  grad_buf(root.node_, 1)[0] = 1.0;
  for (int i = root.node_; i >= 0; --i) {
    if (grads_[i].empty()) continue;
    if (nodes_[i].fn) {
      nodes_[i].fn(grads_[i].data(), *this);
      grads_[i].clear();
      grads_[i].shrink_to_fit();
    }
  }
  for (const auto& [id, info] : leaf_info_) {
    if (grads_[id].empty()) continue;
    out.insert(info.first, Tensor(info.second, std::move(grads_[id])));
  }
  nodes_.clear();
  grads_.clear();
  leaf_by_storage_.clear();
  leaf_info_.clear();
  return out;
}

// ---- op plumbing -----------------------------------------------------

namespace {

struct Rec {
  Tape* tape = nullptr;
  int a = -1, b = -1, c = -1;
  bool on() const { return tape != nullptr; }
};

Rec prep(const Tensor& a) {
  Rec r;
  Tape* t = Tape::current();
  if (!t) return r;
  int na = t->node_of(a);
  if (na < 0) return r;
  r.tape = t;
  r.a = na;
  return r;
}

Rec prep(const Tensor& a, const Tensor& b) {
  Rec r;
  Tape* t = Tape::current();
  if (!t) return r;
  int na = t->node_of(a), nb = t->node_of(b);
  if (na < 0 && nb < 0) return r;
  r.tape = t;
  r.a = na;
  r.b = nb;
  return r;
}

Rec prep(const Tensor& a, const Tensor& b, const Tensor& c) {
  Rec r;
  Tape* t = Tape::current();
  if (!t) return r;
  int na = t->node_of(a), nb = t->node_of(b), nc = t->node_of(c);
  if (na < 0 && nb < 0 && nc < 0) return r;
  r.tape = t;
  r.a = na;
  r.b = nb;
  r.c = nc;
  return r;
}

Tensor finish(Shape shape, std::vector<double> data, const Rec& r, BackwardFn fn) {
  Tensor out(std::move(shape), std::move(data));
  if (r.on()) {
    int node = r.tape->add_node(out.numel(), std::move(fn));
    r.tape->attach(out, node);
  }
  return out;
}

using DataPtr = std::shared_ptr<const std::vector<double>>;

}  // namespace

// ---- elementwise -----------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  const int64_t n = a.numel();
  std::vector<double> out(n);
  const double *pa = a.data(), *pb = b.data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] + pb[i];
  Rec r = prep(a, b);
  int na = r.a, nb = r.b;
  return finish(a.shape(), std::move(out), r, [na, nb, n](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, n))
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
    if (double* gb = t.grad_buf(nb, n))
      for (int64_t i = 0; i < n; ++i) gb[i] += g[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  const int64_t n = a.numel();
  std::vector<double> out(n);
  const double *pa = a.data(), *pb = b.data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] - pb[i];
  Rec r = prep(a, b);
  int na = r.a, nb = r.b;
  return finish(a.shape(), std::move(out), r, [na, nb, n](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, n))
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
    if (double* gb = t.grad_buf(nb, n))
      for (int64_t i = 0; i < n; ++i) gb[i] -= g[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  const int64_t n = a.numel();
  std::vector<double> out(n);
  const double *pa = a.data(), *pb = b.data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] * pb[i];
  Rec r = prep(a, b);
  int na = r.a, nb = r.b;
  DataPtr da = a.storage(), db = b.storage();
  return finish(a.shape(), std::move(out), r,
                [na, nb, n, da, db](const double* g, Tape& t) {
                  if (double* ga = t.grad_buf(na, n)) {
                    const double* pb = db->data();
                    for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * pb[i];
                  }
                  if (double* gb = t.grad_buf(nb, n)) {
                    const double* pa = da->data();
                    for (int64_t i = 0; i < n; ++i) gb[i] += g[i] * pa[i];
                  }
                });
}

Tensor div_eps(const Tensor& a, const Tensor& b, double eps) {
  check_same_shape("div", a, b);
  const int64_t n = a.numel();
  std::vector<double> out(n);
  const double *pa = a.data(), *pb = b.data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] / (pb[i] + eps);
  Rec r = prep(a, b);
  int na = r.a, nb = r.b;
  DataPtr da = a.storage(), db = b.storage();
  return finish(a.shape(), std::move(out), r,
                [na, nb, n, da, db, eps](const double* g, Tape& t) {
                  const double* pb = db->data();
                  if (double* ga = t.grad_buf(na, n))
                    for (int64_t i = 0; i < n; ++i) ga[i] += g[i] / (pb[i] + eps);
                  if (double* gb = t.grad_buf(nb, n)) {
                    const double* pa = da->data();
                    for (int64_t i = 0; i < n; ++i) {
                      double d = pb[i] + eps;
                      gb[i] -= g[i] * pa[i] / (d * d);
                    }
                  }
                });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double c) {
  const int64_t n = a.numel();
  std::vector<double> out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] * c;
  Rec r = prep(a);
  int na = r.a;
  return finish(a.shape(), std::move(out), r, [na, n, c](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, n))
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * c;
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  const int64_t n = a.numel();
  std::vector<double> out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] + c;
  Rec r = prep(a);
  int na = r.a;
  return finish(a.shape(), std::move(out), r, [na, n](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, n))
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
  });
}

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_from_output(const char* /*op*/, const Tensor& a, Fwd fwd, Bwd bwd) {
  const int64_t n = a.numel();
  std::vector<double> out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = fwd(pa[i]);
  Rec r = prep(a);
  int na = r.a;
  Tensor res(a.shape(), std::move(out));
  if (r.on()) {
    DataPtr dy = res.storage();
    int node = r.tape->add_node(n, [na, n, dy, bwd](const double* g, Tape& t) {
      if (double* ga = t.grad_buf(na, n)) {
        const double* py = dy->data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * bwd(py[i]);
      }
    });
    r.tape->attach(res, node);
  }
  return res;
}

}  // namespace

Tensor sigmoid(const Tensor& a) {
  return unary_from_output(
      "sigmoid", a,
      [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double y) { return y * (1.0 - y); });
}

Tensor tanh_t(const Tensor& a) {
  return unary_from_output("tanh", a, [](double x) { return std::tanh(x); },
                           [](double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary_from_output("relu", a, [](double x) { return x > 0 ? x : 0.0; },
                           [](double y) { return y > 0 ? 1.0 : 0.0; });
}

Tensor sqrt_eps(const Tensor& a, double eps) {
  return unary_from_output(
      "sqrt", a, [eps](double x) { return std::sqrt(x + eps); },
      [](double y) { return 0.5 / std::max(y, 1e-150); });
}

Tensor log_t(const Tensor& a) {
  const int64_t n = a.numel();
  std::vector<double> out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = std::log(pa[i]);
  Rec r = prep(a);
  int na = r.a;
  DataPtr dx = a.storage();
  return finish(a.shape(), std::move(out), r, [na, n, dx](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, n)) {
      const double* px = dx->data();
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i] / px[i];
    }
  });
}

Tensor clamp_min(const Tensor& a, double lo) {
  const int64_t n = a.numel();
  std::vector<double> out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] > lo ? pa[i] : lo;
  Rec r = prep(a);
  int na = r.a;
  DataPtr dx = a.storage();
  return finish(a.shape(), std::move(out), r, [na, n, dx, lo](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, n)) {
      const double* px = dx->data();
      for (int64_t i = 0; i < n; ++i)
        if (px[i] > lo) ga[i] += g[i];
    }
  });
}

// ---- shape ops -------------------------------------------------------

Tensor reshape(const Tensor& a, const Shape& shape) {
  ADLB_CHECK(shape_numel(shape) == a.numel(),
             "reshape: " << shape_str(a.shape()) << " -> " << shape_str(shape)
                         << " changes element count");
  const int64_t n = a.numel();
  std::vector<double> out(a.data(), a.data() + n);
  Rec r = prep(a);
  int na = r.a;
  return finish(shape, std::move(out), r, [na, n](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, n))
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
  });
}

Tensor transpose(const Tensor& a) {
  ADLB_CHECK(a.rank() == 2, "transpose: rank-2 expected, got " << shape_str(a.shape()));
  const int64_t R = a.rows(), C = a.cols();
  std::vector<double> out(static_cast<size_t>(R * C));
  const double* pa = a.data();
  for (int64_t i = 0; i < R; ++i)
    for (int64_t j = 0; j < C; ++j) out[j * R + i] = pa[i * C + j];
  Rec r = prep(a);
  int na = r.a;
  return finish({C, R}, std::move(out), r, [na, R, C](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, R * C)) {
      for (int64_t j = 0; j < C; ++j)
        for (int64_t i = 0; i < R; ++i) ga[i * C + j] += g[j * R + i];
    }
  });
}

Tensor slice_rows(const Tensor& a, int64_t begin, int64_t count) {
  const int64_t R = a.rows(), C = a.cols();
  ADLB_CHECK(begin >= 0 && count >= 0 && begin + count <= R,
             "slice_rows: [" << begin << "," << begin + count << ") out of " << R);
  std::vector<double> out(a.data() + begin * C, a.data() + (begin + count) * C);
  Rec r = prep(a);
  int na = r.a;
  return finish({count, C}, std::move(out), r,
                [na, begin, count, R, C](const double* g, Tape& t) {
                  if (double* ga = t.grad_buf(na, R * C)) {
                    for (int64_t i = 0; i < count * C; ++i) ga[begin * C + i] += g[i];
                  }
                });
}

Tensor slice_cols(const Tensor& a, int64_t begin, int64_t count) {
  const int64_t R = a.rows(), C = a.cols();
  ADLB_CHECK(begin >= 0 && count >= 0 && begin + count <= C,
             "slice_cols: [" << begin << "," << begin + count << ") out of " << C);
  std::vector<double> out(static_cast<size_t>(R * count));
  const double* pa = a.data();
  for (int64_t i = 0; i < R; ++i)
    for (int64_t j = 0; j < count; ++j) out[i * count + j] = pa[i * C + begin + j];
  Rec r = prep(a);
  int na = r.a;
  return finish({R, count}, std::move(out), r,
                [na, begin, count, R, C](const double* g, Tape& t) {
                  if (double* ga = t.grad_buf(na, R * C)) {
                    for (int64_t i = 0; i < R; ++i)
                      for (int64_t j = 0; j < count; ++j)
                        ga[i * C + begin + j] += g[i * count + j];
                  }
                });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  ADLB_CHECK(!parts.empty(), "concat_rows: empty input");
  const int64_t C = parts[0].cols();
  int64_t R = 0;
  for (const auto& p : parts) {
    ADLB_CHECK(p.cols() == C, "concat_rows: column mismatch " << shape_str(p.shape()));
    R += p.rows();
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(R * C));
  for (const auto& p : parts) out.insert(out.end(), p.data(), p.data() + p.numel());

  Tape* tp = Tape::current();
  bool rec = false;
  std::vector<int> nodes;
  std::vector<int64_t> sizes;
  if (tp) {
    nodes.reserve(parts.size());
    sizes.reserve(parts.size());
    for (const auto& p : parts) {
      int n = tp->node_of(p);
      nodes.push_back(n);
      sizes.push_back(p.numel());
      rec = rec || n >= 0;
    }
  }
  Tensor res({R, C}, std::move(out));
  if (rec) {
    int node = tp->add_node(R * C, [nodes, sizes](const double* g, Tape& t) {
      int64_t off = 0;
      for (size_t k = 0; k < nodes.size(); ++k) {
        if (double* gk = t.grad_buf(nodes[k], sizes[k]))
          for (int64_t i = 0; i < sizes[k]; ++i) gk[i] += g[off + i];
        off += sizes[k];
      }
    });
    tp->attach(res, node);
  }
  return res;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  ADLB_CHECK(!parts.empty(), "concat_cols: empty input");
  const int64_t R = parts[0].rows();
  int64_t C = 0;
  for (const auto& p : parts) {
    ADLB_CHECK(p.rows() == R, "concat_cols: row mismatch " << shape_str(p.shape()));
    C += p.cols();
  }
  std::vector<double> out(static_cast<size_t>(R * C));
  int64_t off = 0;
  for (const auto& p : parts) {
    const int64_t pc = p.cols();
    const double* pp = p.data();
    for (int64_t i = 0; i < R; ++i)
      for (int64_t j = 0; j < pc; ++j) out[i * C + off + j] = pp[i * pc + j];
    off += pc;
  }
  Tape* tp = Tape::current();
  bool rec = false;
  std::vector<int> nodes;
  std::vector<int64_t> widths;
  if (tp) {
    for (const auto& p : parts) {
      int n = tp->node_of(p);
      nodes.push_back(n);
      widths.push_back(p.cols());
      rec = rec || n >= 0;
    }
  }
  Tensor res({R, C}, std::move(out));
  if (rec) {
    int node = tp->add_node(R * C, [nodes, widths, R, C](const double* g, Tape& t) {
      int64_t off = 0;
      for (size_t k = 0; k < nodes.size(); ++k) {
        const int64_t w = widths[k];
        if (double* gk = t.grad_buf(nodes[k], R * w)) {
          for (int64_t i = 0; i < R; ++i)
            for (int64_t j = 0; j < w; ++j) gk[i * w + j] += g[i * C + off + j];
        }
        off += w;
      }
    });
    tp->attach(res, node);
  }
  return res;
}

// ---- reductions and broadcasts ----------------------------------------

Tensor sum_all(const Tensor& a) {
  const int64_t n = a.numel();
  double s = 0;
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) s += pa[i];
  Rec r = prep(a);
  int na = r.a;
  return finish({1, 1}, {s}, r, [na, n](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, n))
      for (int64_t i = 0; i < n; ++i) ga[i] += g[0];
  });
}

Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / a.numel()); }

Tensor sum_axis0(const Tensor& a) {
  const int64_t R = a.rows(), C = a.cols();
  std::vector<double> out(static_cast<size_t>(C), 0.0);
  const double* pa = a.data();
  for (int64_t i = 0; i < R; ++i)
    for (int64_t j = 0; j < C; ++j) out[j] += pa[i * C + j];
  Rec r = prep(a);
  int na = r.a;
  return finish({1, C}, std::move(out), r, [na, R, C](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, R * C))
      for (int64_t i = 0; i < R; ++i)
        for (int64_t j = 0; j < C; ++j) ga[i * C + j] += g[j];
  });
}

Tensor sum_axis1(const Tensor& a) {
  const int64_t R = a.rows(), C = a.cols();
  std::vector<double> out(static_cast<size_t>(R), 0.0);
  const double* pa = a.data();
  for (int64_t i = 0; i < R; ++i) {
    double s = 0;
    for (int64_t j = 0; j < C; ++j) s += pa[i * C + j];
    out[i] = s;
  }
  Rec r = prep(a);
  int na = r.a;
  return finish({R, 1}, std::move(out), r, [na, R, C](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, R * C))
      for (int64_t i = 0; i < R; ++i)
        for (int64_t j = 0; j < C; ++j) ga[i * C + j] += g[i];
  });
}

Tensor cumsum_axis0(const Tensor& a) {
  const int64_t R = a.rows(), C = a.cols();
  std::vector<double> out(static_cast<size_t>(R * C));
  const double* pa = a.data();
  for (int64_t j = 0; j < C; ++j) {
    double s = 0;
    for (int64_t i = 0; i < R; ++i) {
      s += pa[i * C + j];
      out[i * C + j] = s;
    }
  }
  Rec r = prep(a);
  int na = r.a;
  return finish({R, C}, std::move(out), r, [na, R, C](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, R * C)) {
      for (int64_t j = 0; j < C; ++j) {
        double s = 0;
        for (int64_t i = R - 1; i >= 0; --i) {
          s += g[i * C + j];
          ga[i * C + j] += s;
        }
      }
    }
  });
}

namespace {

void check_rowvec(const char* op, const Tensor& a, const Tensor& v) {
  ADLB_CHECK(v.rows() == 1 && v.cols() == a.cols(),
             op << ": expected (1," << a.cols() << ") row vector, got "
                << shape_str(v.shape()));
}

void check_colvec(const char* op, const Tensor& a, const Tensor& v) {
  ADLB_CHECK(v.cols() == 1 && v.rows() == a.rows(),
             op << ": expected (" << a.rows() << ",1) column vector, got "
                << shape_str(v.shape()));
}

}  // namespace

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  check_rowvec("add_rowvec", a, v);
  const int64_t R = a.rows(), C = a.cols();
  std::vector<double> out(static_cast<size_t>(R * C));
  const double *pa = a.data(), *pv = v.data();
  for (int64_t i = 0; i < R; ++i)
    for (int64_t j = 0; j < C; ++j) out[i * C + j] = pa[i * C + j] + pv[j];
  Rec r = prep(a, v);
  int na = r.a, nv = r.b;
  return finish({R, C}, std::move(out), r, [na, nv, R, C](const double* g, Tape& t) {
    if (double* ga = t.grad_buf(na, R * C))
      for (int64_t i = 0; i < R * C; ++i) ga[i] += g[i];
    if (double* gv = t.grad_buf(nv, C))
      for (int64_t i = 0; i < R; ++i)
        for (int64_t j = 0; j < C; ++j) gv[j] += g[i * C + j];
  });
}

Tensor mul_rowvec(const Tensor& a, const Tensor& v) {
  check_rowvec("mul_rowvec", a, v);
  const int64_t R = a.rows(), C = a.cols();
  std::vector<double> out(static_cast<size_t>(R * C));
  const double *pa = a.data(), *pv = v.data();
  for (int64_t i = 0; i < R; ++i)
    for (int64_t j = 0; j < C; ++j) out[i * C + j] = pa[i * C + j] * pv[j];
  Rec r = prep(a, v);
  int na = r.a, nv = r.b;
  DataPtr da = a.storage(), dv = v.storage();
  return finish({R, C}, std::move(out), r,
                [na, nv, R, C, da, dv](const double* g, Tape& t) {
                  if (double* ga = t.grad_buf(na, R * C)) {
                    const double* pv = dv->data();
                    for (int64_t i = 0; i < R; ++i)
                      for (int64_t j = 0; j < C; ++j) ga[i * C + j] += g[i * C + j] * pv[j];
                  }
                  if (double* gv = t.grad_buf(nv, C)) {
                    const double* pa = da->data();
                    for (int64_t i = 0; i < R; ++i)
                      for (int64_t j = 0; j < C; ++j) gv[j] += g[i * C + j] * pa[i * C + j];
                  }
                });
}

Tensor div_rowvec_eps(const Tensor& a, const Tensor& v, double eps) {
  check_rowvec("div_rowvec", a, v);
  const int64_t R = a.rows(), C = a.cols();
  std::vector<double> out(static_cast<size_t>(R * C));
  const double *pa = a.data(), *pv = v.data();
  for (int64_t i = 0; i < R; ++i)
    for (int64_t j = 0; j < C; ++j) out[i * C + j] = pa[i * C + j] / (pv[j] + eps);
  Rec r = prep(a, v);
  int na = r.a, nv = r.b;
  DataPtr da = a.storage(), dv = v.storage();
  return finish({R, C}, std::move(out), r,
                [na, nv, R, C, da, dv, eps](const double* g, Tape& t) {
                  const double* pv = dv->data();
                  if (double* ga = t.grad_buf(na, R * C)) {
                    for (int64_t i = 0; i < R; ++i)
                      for (int64_t j = 0; j < C; ++j) ga[i * C + j] += g[i * C + j] / (pv[j] + eps);
                  }
                  if (double* gv = t.grad_buf(nv, C)) {
                    const double* pa = da->data();
                    for (int64_t i = 0; i < R; ++i)
                      for (int64_t j = 0; j < C; ++j) {
                        double d = pv[j] + eps;
                        gv[j] -= g[i * C + j] * pa[i * C + j] / (d * d);
                      }
                  }
                });
}

Tensor mul_colvec(const Tensor& a, const Tensor& v) {
  check_colvec("mul_colvec", a, v);
  const int64_t R = a.rows(), C = a.cols();
  std::vector<double> out(static_cast<size_t>(R * C));
  const double *pa = a.data(), *pv = v.data();
  for (int64_t i = 0; i < R; ++i)
    for (int64_t j = 0; j < C; ++j) out[i * C + j] = pa[i * C + j] * pv[i];
  Rec r = prep(a, v);
  int na = r.a, nv = r.b;
  DataPtr da = a.storage(), dv = v.storage();
  return finish({R, C}, std::move(out), r,
                [na, nv, R, C, da, dv](const double* g, Tape& t) {
                  if (double* ga = t.grad_buf(na, R * C)) {
                    const double* pv = dv->data();
                    for (int64_t i = 0; i < R; ++i)
                      for (int64_t j = 0; j < C; ++j) ga[i * C + j] += g[i * C + j] * pv[i];
                  }
                  if (double* gv = t.grad_buf(nv, R)) {
                    const double* pa = da->data();
                    for (int64_t i = 0; i < R; ++i) {
                      double s = 0;
                      for (int64_t j = 0; j < C; ++j) s += g[i * C + j] * pa[i * C + j];
                      gv[i] += s;
                    }
                  }
                });
}

// ---- matmul ------------------------------------------------------------

void matmul_acc(const double* A, const double* B, double* C, int64_t M, int64_t K,
                int64_t N) {
  for (int64_t m = 0; m < M; ++m) {
    const double* a = A + m * K;
    double* c = C + m * N;
    for (int64_t k = 0; k < K; ++k) {
      const double av = a[k];
      if (av == 0.0) continue;
      const double* b = B + k * N;
      for (int64_t n = 0; n < N; ++n) c[n] += av * b[n];
    }
  }
}

void matmul_tn_acc(const double* A, const double* B, double* C, int64_t M, int64_t K,
                   int64_t N) {
  // C(K,N) += A(M,K)^T * B(M,N)
  for (int64_t m = 0; m < M; ++m) {
    const double* a = A + m * K;
    const double* b = B + m * N;
    for (int64_t k = 0; k < K; ++k) {
      const double av = a[k];
      if (av == 0.0) continue;
      double* c = C + k * N;
      for (int64_t n = 0; n < N; ++n) c[n] += av * b[n];
    }
  }
}

void matmul_nt_acc(const double* A, const double* B, double* C, int64_t M, int64_t N,
                   int64_t K) {
  // C(M,K) += A(M,N) * B(K,N)^T
  for (int64_t m = 0; m < M; ++m) {
    const double* a = A + m * N;
    double* c = C + m * K;
    for (int64_t k = 0; k < K; ++k) {
      const double* b = B + k * N;
      double s = 0;
      for (int64_t n = 0; n < N; ++n) s += a[n] * b[n];
      c[k] += s;
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  ADLB_CHECK(a.rank() <= 2 && b.rank() <= 2 && a.cols() == b.rows(),
             "matmul: shape mismatch " << shape_str(a.shape()) << " x "
                                       << shape_str(b.shape()));
  const int64_t M = a.rows(), K = a.cols(), N = b.cols();
  std::vector<double> out(static_cast<size_t>(M * N), 0.0);
  matmul_acc(a.data(), b.data(), out.data(), M, K, N);
  Rec r = prep(a, b);
  int na = r.a, nb = r.b;
  DataPtr da = a.storage(), db = b.storage();
  return finish({M, N}, std::move(out), r,
                [na, nb, M, K, N, da, db](const double* g, Tape& t) {
                  if (double* ga = t.grad_buf(na, M * K))
                    matmul_nt_acc(g, db->data(), ga, M, N, K);
                  if (double* gb = t.grad_buf(nb, K * N))
                    matmul_tn_acc(da->data(), g, gb, M, K, N);
                });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  ADLB_CHECK(a.rank() == 2 && b.rank() == 2 && a.cols() == b.cols(),
             "matmul_nt: shape mismatch " << shape_str(a.shape()) << " x "
                                          << shape_str(b.shape()) << "^T");
  const int64_t M = a.rows(), K = a.cols(), N = b.rows();
  std::vector<double> out(static_cast<size_t>(M * N), 0.0);
  matmul_nt_acc(a.data(), b.data(), out.data(), M, K, N);
  Rec r = prep(a, b);
  int na = r.a, nb = r.b;
  DataPtr da = a.storage(), db = b.storage();
  return finish({M, N}, std::move(out), r,
                [na, nb, M, K, N, da, db](const double* g, Tape& t) {
                  // C = A * B^T: dA += g * B ; dB += g^T * A
                  if (double* ga = t.grad_buf(na, M * K))
                    matmul_acc(g, db->data(), ga, M, N, K);
                  if (double* gb = t.grad_buf(nb, N * K))
                    matmul_tn_acc(g, da->data(), gb, M, N, K);
                });
}

// ---- fused nn primitives ----------------------------------------------

Tensor softmax_rows(const Tensor& a) {
  ADLB_CHECK(a.rank() == 2, "softmax: rank-2 expected, got " << shape_str(a.shape()));
  const int64_t R = a.rows(), C = a.cols();
  std::vector<double> out(static_cast<size_t>(R * C));
  const double* pa = a.data();
  for (int64_t i = 0; i < R; ++i) {
    double m = pa[i * C];
    for (int64_t j = 1; j < C; ++j) m = std::max(m, pa[i * C + j]);
    double s = 0;
    for (int64_t j = 0; j < C; ++j) {
      double e = std::exp(pa[i * C + j] - m);
      out[i * C + j] = e;
      s += e;
    }
    for (int64_t j = 0; j < C; ++j) out[i * C + j] /= s;
  }
  Rec r = prep(a);
  int na = r.a;
  Tensor res({R, C}, std::move(out));
  if (r.on()) {
    DataPtr dy = res.storage();
    int node = r.tape->add_node(R * C, [na, R, C, dy](const double* g, Tape& t) {
      if (double* ga = t.grad_buf(na, R * C)) {
        const double* py = dy->data();
        for (int64_t i = 0; i < R; ++i) {
          double dot = 0;
          for (int64_t j = 0; j < C; ++j) dot += g[i * C + j] * py[i * C + j];
          for (int64_t j = 0; j < C; ++j)
            ga[i * C + j] += py[i * C + j] * (g[i * C + j] - dot);
        }
      }
    });
    r.tape->attach(res, node);
  }
  return res;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  ADLB_CHECK(x.rank() == 2, "layer_norm: rank-2 expected, got " << shape_str(x.shape()));
  const int64_t R = x.rows(), C = x.cols();
  check_rowvec("layer_norm(gain)", x, gain);
  check_rowvec("layer_norm(bias)", x, bias);
  std::vector<double> out(static_cast<size_t>(R * C));
  auto xhat = std::make_shared<std::vector<double>>(static_cast<size_t>(R * C));
  auto rstd = std::make_shared<std::vector<double>>(static_cast<size_t>(R));
  const double *px = x.data(), *pg = gain.data(), *pb = bias.data();
  for (int64_t i = 0; i < R; ++i) {
    double mean = 0;
    for (int64_t j = 0; j < C; ++j) mean += px[i * C + j];
    mean /= C;
    double var = 0;
    for (int64_t j = 0; j < C; ++j) {
      double d = px[i * C + j] - mean;
      var += d * d;
    }
    var /= C;
    double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[i] = rs;
    for (int64_t j = 0; j < C; ++j) {
      double xh = (px[i * C + j] - mean) * rs;
      (*xhat)[i * C + j] = xh;
      out[i * C + j] = xh * pg[j] + pb[j];
    }
  }
  Rec r = prep(x, gain, bias);
  int nx = r.a, ng = r.b, nb = r.c;
  DataPtr dg = gain.storage();
  return finish({R, C}, std::move(out), r,
                [nx, ng, nb, R, C, xhat, rstd, dg](const double* g, Tape& t) {
                  const double* pg = dg->data();
                  if (double* gx = t.grad_buf(nx, R * C)) {
                    for (int64_t i = 0; i < R; ++i) {
                      double m1 = 0, m2 = 0;
                      for (int64_t j = 0; j < C; ++j) {
                        double gy = g[i * C + j] * pg[j];
                        m1 += gy;
                        m2 += gy * (*xhat)[i * C + j];
                      }
                      m1 /= C;
                      m2 /= C;
                      for (int64_t j = 0; j < C; ++j) {
                        double gy = g[i * C + j] * pg[j];
                        gx[i * C + j] +=
                            ((gy - m1) - (*xhat)[i * C + j] * m2) * (*rstd)[i];
                      }
                    }
                  }
                  if (double* gg = t.grad_buf(ng, C)) {
                    for (int64_t i = 0; i < R; ++i)
                      for (int64_t j = 0; j < C; ++j)
                        gg[j] += g[i * C + j] * (*xhat)[i * C + j];
                  }
                  if (double* gb = t.grad_buf(nb, C)) {
                    for (int64_t i = 0; i < R; ++i)
                      for (int64_t j = 0; j < C; ++j) gb[j] += g[i * C + j];
                  }
                });
}

Tensor conv1d_depthwise(const Tensor& x, const Tensor& w, const Tensor& bias) {
  ADLB_CHECK(x.rank() == 2 && w.rank() == 2, "conv1d: rank-2 operands expected");
  const int64_t T = x.rows(), D = x.cols(), K = w.rows();
  ADLB_CHECK(w.cols() == D, "conv1d: kernel width " << shape_str(w.shape())
                                                    << " does not match input "
                                                    << shape_str(x.shape()));
  ADLB_CHECK(K % 2 == 1, "conv1d: odd kernel length required, got " << K);
  check_rowvec("conv1d(bias)", x, bias);
  const int64_t H = K / 2;
  std::vector<double> out(static_cast<size_t>(T * D));
  const double *px = x.data(), *pw = w.data(), *pb = bias.data();
  auto clamp_t = [T](int64_t t) { return std::clamp<int64_t>(t, 0, T - 1); };
  for (int64_t t0 = 0; t0 < T; ++t0) {
    for (int64_t d = 0; d < D; ++d) out[t0 * D + d] = pb[d];
    for (int64_t k = 0; k < K; ++k) {
      int64_t ti = clamp_t(t0 + k - H);
      const double* xr = px + ti * D;
      const double* wr = pw + k * D;
      double* orow = out.data() + t0 * D;
      for (int64_t d = 0; d < D; ++d) orow[d] += xr[d] * wr[d];
    }
  }
  Rec r = prep(x, w, bias);
  int nx = r.a, nw = r.b, nb = r.c;
  DataPtr dx = x.storage(), dw = w.storage();
  return finish({T, D}, std::move(out), r,
                [nx, nw, nb, T, D, K, H, dx, dw, clamp_t](const double* g, Tape& t) {
                  if (double* gx = t.grad_buf(nx, T * D)) {
                    const double* pw = dw->data();
                    for (int64_t t0 = 0; t0 < T; ++t0)
                      for (int64_t k = 0; k < K; ++k) {
                        int64_t ti = clamp_t(t0 + k - H);
                        const double* wr = pw + k * D;
                        const double* gr = g + t0 * D;
                        double* gxr = gx + ti * D;
                        for (int64_t d = 0; d < D; ++d) gxr[d] += gr[d] * wr[d];
                      }
                  }
                  if (double* gw = t.grad_buf(nw, K * D)) {
                    const double* px = dx->data();
                    for (int64_t t0 = 0; t0 < T; ++t0)
                      for (int64_t k = 0; k < K; ++k) {
                        int64_t ti = clamp_t(t0 + k - H);
                        const double* xr = px + ti * D;
                        const double* gr = g + t0 * D;
                        double* gwr = gw + k * D;
                        for (int64_t d = 0; d < D; ++d) gwr[d] += gr[d] * xr[d];
                      }
                  }
                  if (double* gb = t.grad_buf(nb, D)) {
                    for (int64_t t0 = 0; t0 < T; ++t0)
                      for (int64_t d = 0; d < D; ++d) gb[d] += g[t0 * D + d];
                  }
                });
}

// ---- complex pairs -----------------------------------------------------

CTensor cadd(const CTensor& a, const CTensor& b) {
  return {add(a.re, b.re), add(a.im, b.im)};
}

CTensor csub(const CTensor& a, const CTensor& b) {
  return {sub(a.re, b.re), sub(a.im, b.im)};
}

CTensor cmul(const CTensor& a, const CTensor& b) {
  return {sub(mul(a.re, b.re), mul(a.im, b.im)),
          add(mul(a.re, b.im), mul(a.im, b.re))};
}

CTensor cmul_conj(const CTensor& a, const CTensor& b) {
  return {add(mul(a.re, b.re), mul(a.im, b.im)),
          sub(mul(a.im, b.re), mul(a.re, b.im))};
}

CTensor cconj(const CTensor& a) { return {a.re, neg(a.im)}; }

CTensor cscale(const CTensor& a, double c) { return {scale(a.re, c), scale(a.im, c)}; }

CTensor cmul_real(const CTensor& a, const Tensor& m) {
  return {mul(a.re, m), mul(a.im, m)};
}

CTensor creciprocal(const CTensor& z, double eps) {
  Tensor d = add_scalar(cmag2(z), eps);
  return {div_eps(z.re, d, 0.0), neg(div_eps(z.im, d, 0.0))};
}

Tensor cmag2(const CTensor& z) { return add(mul(z.re, z.re), mul(z.im, z.im)); }

Tensor cmag(const CTensor& z, double eps) { return sqrt_eps(cmag2(z), eps); }

}  // namespace adlb
