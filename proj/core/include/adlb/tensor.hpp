// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_TENSOR_HPP_
#define ADLB_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "adlb/common.hpp"

namespace adlb {

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& s);

// Dense row-major real tensor, 64-bit scalars. Values are immutable after
// construction; copies share storage. Autodiff bookkeeping (tape node id)
// travels with the value.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, double v);
  static Tensor scalar(double v);

  // Leaf flag: ops involving this tensor are recorded when a tape is active.
  Tensor with_grad() const;
  Tensor detached() const;

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return shape_; }
  int64_t numel() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  // rank-2 views: rank-0 is (1,1), rank-1 is a row vector
  int64_t rows() const;
  int64_t cols() const;

  const double* data() const { return data_->data(); }
  const std::shared_ptr<const std::vector<double>>& storage() const { return data_; }
  double operator[](int64_t i) const { return (*data_)[i]; }
  double operator()(int64_t r, int64_t c) const { return (*data_)[r * cols() + c]; }
  double value() const;  // scalar-shaped only

  bool requires_grad() const { return requires_grad_; }

  // tape bookkeeping (set by op recording)
  int node_ = -1;
  uint64_t gen_ = 0;

 private:
  std::shared_ptr<const std::vector<double>> data_;
  Shape shape_;
  bool requires_grad_ = false;
};

using BackwardFn = std::function<void(const double* gout, class Tape& tape)>;

// Gradients of one backward pass, keyed by leaf storage identity.
class GradMap {
 public:
  bool has(const Tensor& t) const { return by_leaf_.count(t.storage().get()) > 0; }
  const Tensor& at(const Tensor& t) const;
  size_t size() const { return by_leaf_.size(); }
  void insert(const void* key, Tensor grad) { by_leaf_.emplace(key, std::move(grad)); }

 private:
  std::unordered_map<const void*, Tensor> by_leaf_;
};

// Reverse-mode tape. Constructing one makes it current on this thread;
// ops record themselves while any operand requires gradients. backward()
// consumes the tape.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current();

  // root must be scalar-shaped; returns gradients for every reachable leaf
  GradMap backward(const Tensor& root);

  // recording API used by op implementations
  int node_of(const Tensor& t);  // registers a leaf on demand; -1 if no grad
  int add_node(int64_t out_numel, BackwardFn fn);
  double* grad_buf(int node, int64_t numel);  // nullptr when node < 0
  void attach(Tensor& out, int node);
  uint64_t gen() const { return gen_; }
  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    BackwardFn fn;  // empty for leaves
    int64_t numel = 0;
  };
  uint64_t gen_;
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::unordered_map<const void*, int> leaf_by_storage_;
  std::unordered_map<int, std::pair<const void*, Shape>> leaf_info_;
  Tape* prev_ = nullptr;
  bool consumed_ = false;
};

// ---- primitives ------------------------------------------------------
// Elementwise ops require identical shapes; violations throw adlb::Error
// naming the primitive and the shapes involved.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div_eps(const Tensor& a, const Tensor& b, double eps);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sqrt_eps(const Tensor& a, double eps);  // sqrt(a + eps)
Tensor log_t(const Tensor& a);                 // caller guarantees positivity
Tensor clamp_min(const Tensor& a, double lo);

Tensor reshape(const Tensor& a, const Shape& shape);
Tensor transpose(const Tensor& a);
Tensor slice_rows(const Tensor& a, int64_t begin, int64_t count);
Tensor slice_cols(const Tensor& a, int64_t begin, int64_t count);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);

Tensor sum_all(const Tensor& a);   // (1,1)
Tensor mean_all(const Tensor& a);  // (1,1)
Tensor sum_axis0(const Tensor& a);     // (T,F) -> (1,F)
Tensor sum_axis1(const Tensor& a);     // (T,F) -> (T,1)
Tensor cumsum_axis0(const Tensor& a);  // running sum down each column

Tensor add_rowvec(const Tensor& a, const Tensor& v);  // v is (1,F)
Tensor mul_rowvec(const Tensor& a, const Tensor& v);
Tensor div_rowvec_eps(const Tensor& a, const Tensor& v, double eps);
Tensor mul_colvec(const Tensor& a, const Tensor& v);  // v is (T,1)

Tensor matmul(const Tensor& a, const Tensor& b);     // (M,K)x(K,N)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (M,K)x(N,K)^T -> (M,N)

Tensor softmax_rows(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
// x (T,D), w (K,D) with K odd, edge-replicate 'same' padding along T
// (replicate keeps constant sequences constant through the filter)
Tensor conv1d_depthwise(const Tensor& x, const Tensor& w, const Tensor& bias);

// ---- complex pairs ---------------------------------------------------
// Complex values are paired real/imaginary planes; all complex arithmetic
// is composed from the real primitives above.

constexpr double kComplexEps = 1e-8;

struct CTensor {
  Tensor re, im;
  bool defined() const { return re.defined(); }
};

CTensor cadd(const CTensor& a, const CTensor& b);
CTensor csub(const CTensor& a, const CTensor& b);
CTensor cmul(const CTensor& a, const CTensor& b);
CTensor cmul_conj(const CTensor& a, const CTensor& b);  // a * conj(b)
CTensor cconj(const CTensor& a);
CTensor cscale(const CTensor& a, double c);
CTensor cmul_real(const CTensor& a, const Tensor& m);
CTensor creciprocal(const CTensor& z, double eps = kComplexEps);
Tensor cmag2(const CTensor& z);
Tensor cmag(const CTensor& z, double eps = 1e-12);  // sqrt(|z|^2 + eps)

// raw matmul kernels, exposed for fused ops (C += A*B etc., row-major)
void matmul_acc(const double* A, const double* B, double* C, int64_t M,
                int64_t K, int64_t N);
void matmul_tn_acc(const double* A, const double* B, double* C, int64_t M,
                   int64_t K, int64_t N);  // C(K,N) += A(M,K)^T * B(M,N)
void matmul_nt_acc(const double* A, const double* B, double* C, int64_t M,
                   int64_t N, int64_t K);  // C(M,K) += A(M,N) * B(K,N)^T

}  // namespace adlb

#endif  // ADLB_TENSOR_HPP_
