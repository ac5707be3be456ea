// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/nn.hpp"

#include <cmath>

namespace adlb {

Tensor ParameterStore::param(const std::string& name, bool trainable) const {
  auto it = params_.find(name);
  ADLB_CHECK(it != params_.end(), "parameter not found: " << name);
  return trainable ? it->second.with_grad() : it->second.detached();
}

int64_t ParameterStore::total_elements() const {
  int64_t n = 0;
  for (const auto& [k, v] : params_) n += v.numel();
  return n;
}

Tensor init_weight(Rng& rng, int64_t fan_in, int64_t fan_out) {
  double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> data(static_cast<size_t>(fan_in * fan_out));
  for (auto& v : data) v = rng.uniform(-a, a);
  return Tensor({fan_in, fan_out}, std::move(data));
}

void init_linear(ParameterStore& ps, Rng& rng, const std::string& prefix, int64_t in,
                 int64_t out) {
  ps.put(prefix + ".w", init_weight(rng, in, out));
  ps.put(prefix + ".b", Tensor::zeros({1, out}));
}

Tensor linear(const ParameterStore& ps, const std::string& prefix, const Tensor& x,
              bool trainable) {
  return add_rowvec(matmul(x, ps.param(prefix + ".w", trainable)),
                    ps.param(prefix + ".b", trainable));
}

void init_gru(ParameterStore& ps, Rng& rng, const std::string& prefix, int64_t in,
              int64_t hidden) {
  for (const char* gate : {"z", "r", "h"}) {
    ps.put(prefix + ".w" + gate, init_weight(rng, in, hidden));
    ps.put(prefix + ".u" + gate, init_weight(rng, hidden, hidden));
    ps.put(prefix + ".b" + gate, Tensor::zeros({1, hidden}));
  }
}

GruParams gru_params(const ParameterStore& ps, const std::string& prefix,
                     bool trainable) {
  GruParams p;
  p.wz = ps.param(prefix + ".wz", trainable);
  p.uz = ps.param(prefix + ".uz", trainable);
  p.bz = ps.param(prefix + ".bz", trainable);
  p.wr = ps.param(prefix + ".wr", trainable);
  p.ur = ps.param(prefix + ".ur", trainable);
  p.br = ps.param(prefix + ".br", trainable);
  p.wh = ps.param(prefix + ".wh", trainable);
  p.uh = ps.param(prefix + ".uh", trainable);
  p.bh = ps.param(prefix + ".bh", trainable);
  p.in = p.wz.rows();
  p.hidden = p.wz.cols();
  return p;
}

Tensor gru_cell(const Tensor& x, const Tensor& h, const GruParams& p) {
  ADLB_CHECK(x.cols() == p.in, "gru_cell: input width " << x.cols()
                                                        << " does not match params "
                                                        << p.in);
  ADLB_CHECK(h.cols() == p.hidden, "gru_cell: state width " << h.cols()
                                                            << " does not match params "
                                                            << p.hidden);
  Tensor z = sigmoid(add_rowvec(add(matmul(x, p.wz), matmul(h, p.uz)), p.bz));
  Tensor r = sigmoid(add_rowvec(add(matmul(x, p.wr), matmul(h, p.ur)), p.br));
  Tensor c = tanh_t(add_rowvec(add(matmul(x, p.wh), matmul(mul(r, h), p.uh)), p.bh));
  return add(mul(sub(Tensor::full(z.shape(), 1.0), z), h), mul(z, c));
}

namespace {

struct GruSaved {
  std::vector<double> z, r, c;  // gates, (T*B,H) each
};

inline void sigmoid_inplace(double* p, int64_t n) {
  for (int64_t i = 0; i < n; ++i)
    p[i] = p[i] >= 0 ? 1.0 / (1.0 + std::exp(-p[i]))
                     : std::exp(p[i]) / (1.0 + std::exp(p[i]));
}

}  // namespace

Tensor gru_layer_seq(const Tensor& x_seq, int64_t steps, int64_t batch,
                     const GruParams& p, const Tensor& h0) {
  const int64_t I = p.in, H = p.hidden, B = batch, T = steps;
  ADLB_CHECK(x_seq.rows() == T * B && x_seq.cols() == I,
             "gru_layer_seq: expected (" << T * B << "," << I << "), got "
                                         << shape_str(x_seq.shape()));
  ADLB_CHECK(h0.rows() == B && h0.cols() == H,
             "gru_layer_seq: bad initial state " << shape_str(h0.shape()));

  auto saved = std::make_shared<GruSaved>();
  saved->z.resize(static_cast<size_t>(T * B * H));
  saved->r.resize(static_cast<size_t>(T * B * H));
  saved->c.resize(static_cast<size_t>(T * B * H));
  std::vector<double> h_all(static_cast<size_t>(T * B * H));

  const double* px = x_seq.data();
  std::vector<double> rh(static_cast<size_t>(B * H));
  for (int64_t t = 0; t < T; ++t) {
    const double* xt = px + t * B * I;
    const double* hp = (t == 0) ? h0.data() : h_all.data() + (t - 1) * B * H;
    double* z = saved->z.data() + t * B * H;
    double* r = saved->r.data() + t * B * H;
    double* c = saved->c.data() + t * B * H;
    double* ht = h_all.data() + t * B * H;

    for (int64_t i = 0; i < B; ++i)
      for (int64_t j = 0; j < H; ++j) {
        z[i * H + j] = p.bz[j];
        r[i * H + j] = p.br[j];
        c[i * H + j] = p.bh[j];
      }
    matmul_acc(xt, p.wz.data(), z, B, I, H);
    matmul_acc(hp, p.uz.data(), z, B, H, H);
    matmul_acc(xt, p.wr.data(), r, B, I, H);
    matmul_acc(hp, p.ur.data(), r, B, H, H);
    sigmoid_inplace(z, B * H);
    sigmoid_inplace(r, B * H);
    for (int64_t i = 0; i < B * H; ++i) rh[i] = r[i] * hp[i];
    matmul_acc(xt, p.wh.data(), c, B, I, H);
    matmul_acc(rh.data(), p.uh.data(), c, B, H, H);
    for (int64_t i = 0; i < B * H; ++i) c[i] = std::tanh(c[i]);
    for (int64_t i = 0; i < B * H; ++i)
      ht[i] = (1.0 - z[i]) * hp[i] + z[i] * c[i];
  }

  Tape* tp = Tape::current();
  Tensor out({T * B, H}, std::move(h_all));
  if (!tp) return out;

  int nx = tp->node_of(x_seq), nh0 = tp->node_of(h0);
  int nwz = tp->node_of(p.wz), nuz = tp->node_of(p.uz), nbz = tp->node_of(p.bz);
  int nwr = tp->node_of(p.wr), nur = tp->node_of(p.ur), nbr = tp->node_of(p.br);
  int nwh = tp->node_of(p.wh), nuh = tp->node_of(p.uh), nbh = tp->node_of(p.bh);
  bool any = nx >= 0 || nh0 >= 0 || nwz >= 0 || nuz >= 0 || nbz >= 0 || nwr >= 0 ||
             nur >= 0 || nbr >= 0 || nwh >= 0 || nuh >= 0 || nbh >= 0;
  if (!any) return out;

  auto dx_store = x_seq.storage();
  auto h0_store = h0.storage();
  auto hall_store = out.storage();
  auto wz = p.wz.storage(), uz = p.uz.storage();
  auto wr = p.wr.storage(), ur = p.ur.storage();
  auto wh = p.wh.storage(), uh = p.uh.storage();

  auto fn = [=](const double* g, Tape& t) {
    double* gx = t.grad_buf(nx, T * B * I);
    double* gh0 = t.grad_buf(nh0, B * H);
    double* gwz = t.grad_buf(nwz, I * H);
    double* guz = t.grad_buf(nuz, H * H);
    double* gbz = t.grad_buf(nbz, H);
    double* gwr = t.grad_buf(nwr, I * H);
    double* gur = t.grad_buf(nur, H * H);
    double* gbr = t.grad_buf(nbr, H);
    double* gwh = t.grad_buf(nwh, I * H);
    double* guh = t.grad_buf(nuh, H * H);
    double* gbh = t.grad_buf(nbh, H);

    const double* px = dx_store->data();
    const double* hall = hall_store->data();
    std::vector<double> dh(static_cast<size_t>(B * H), 0.0);
    std::vector<double> daz(static_cast<size_t>(B * H)), dar(daz.size()),
        dac(daz.size()), drh(daz.size()), dhp(daz.size()), rhbuf(daz.size());

    for (int64_t t0 = T - 1; t0 >= 0; --t0) {
      const double* z = saved->z.data() + t0 * B * H;
      const double* r = saved->r.data() + t0 * B * H;
      const double* c = saved->c.data() + t0 * B * H;
      const double* hp = (t0 == 0) ? h0_store->data() : hall + (t0 - 1) * B * H;
      const double* gt = g + t0 * B * H;
      const double* xt = px + t0 * B * I;

      for (int64_t i = 0; i < B * H; ++i) dh[i] += gt[i];
      for (int64_t i = 0; i < B * H; ++i) {
        double dz = dh[i] * (c[i] - hp[i]);
        double dc = dh[i] * z[i];
        dhp[i] = dh[i] * (1.0 - z[i]);
        dac[i] = dc * (1.0 - c[i] * c[i]);
        daz[i] = dz * z[i] * (1.0 - z[i]);
      }
      std::fill(drh.begin(), drh.end(), 0.0);
      matmul_nt_acc(dac.data(), uh->data(), drh.data(), B, H, H);
      for (int64_t i = 0; i < B * H; ++i) {
        double dr = drh[i] * hp[i];
        dhp[i] += drh[i] * r[i];
        dar[i] = dr * r[i] * (1.0 - r[i]);
        rhbuf[i] = r[i] * hp[i];
      }
      matmul_nt_acc(daz.data(), uz->data(), dhp.data(), B, H, H);
      matmul_nt_acc(dar.data(), ur->data(), dhp.data(), B, H, H);
      if (gx) {
        double* gxt = gx + t0 * B * I;
        matmul_nt_acc(daz.data(), wz->data(), gxt, B, H, I);
        matmul_nt_acc(dar.data(), wr->data(), gxt, B, H, I);
        matmul_nt_acc(dac.data(), wh->data(), gxt, B, H, I);
      }
      if (gwz) matmul_tn_acc(xt, daz.data(), gwz, B, I, H);
      if (guz) matmul_tn_acc(hp, daz.data(), guz, B, H, H);
      if (gwr) matmul_tn_acc(xt, dar.data(), gwr, B, I, H);
      if (gur) matmul_tn_acc(hp, dar.data(), gur, B, H, H);
      if (gwh) matmul_tn_acc(xt, dac.data(), gwh, B, I, H);
      if (guh) matmul_tn_acc(rhbuf.data(), dac.data(), guh, B, H, H);
      if (gbz)
        for (int64_t i = 0; i < B; ++i)
          for (int64_t j = 0; j < H; ++j) gbz[j] += daz[i * H + j];
      if (gbr)
        for (int64_t i = 0; i < B; ++i)
          for (int64_t j = 0; j < H; ++j) gbr[j] += dar[i * H + j];
      if (gbh)
        for (int64_t i = 0; i < B; ++i)
          for (int64_t j = 0; j < H; ++j) gbh[j] += dac[i * H + j];
      dh = dhp;
    }
    if (gh0)
      for (int64_t i = 0; i < B * H; ++i) gh0[i] += dh[i];
  };
  int node = tp->add_node(T * B * H, fn);
  tp->attach(out, node);
  return out;
}

}  // namespace adlb
