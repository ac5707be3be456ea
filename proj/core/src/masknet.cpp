// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/masknet.hpp"

#include <cmath>

namespace adlb {

CTensor MaskSet::apply(int k, const CTensor& y) const {
  if (complex_variant) return cmul(complex_masks[k], y);
  return cmul_real(y, real_masks[k]);
}

Tensor MaskSet::pow2(int k) const {
  if (complex_variant) return cmag2(complex_masks[k]);
  return mul(real_masks[k], real_masks[k]);
}

Tensor MaskSet::magnitude(int k) const {
  if (complex_variant) return cmag(complex_masks[k]);
  return real_masks[k];
}

void MaskNetConfig::validate() const {
  ADLB_CHECK(width > 0 && heads > 0 && width % heads == 0,
             "masknet: width " << width << " must divide into " << heads << " heads");
  ADLB_CHECK(kernel > 0 && kernel % 2 == 1, "masknet: odd conv kernel required");
  ADLB_CHECK(enc_layers >= 1 && dec_layers >= 0 && tac_blocks >= 0,
             "masknet: bad layer counts");
  ADLB_CHECK(variant == "real" || variant == "complex",
             "masknet: variant must be real or complex, got " << variant);
  ADLB_CHECK(bins > 0 && max_frames > 0, "masknet: bad dimensions");
}

namespace {

Tensor swish(const Tensor& x) { return mul(x, sigmoid(x)); }

Tensor half_ffn(const ParameterStore& ps, const std::string& p, const Tensor& x,
                bool tr) {
  Tensor a = layer_norm(x, ps.param(p + ".ln.g", tr), ps.param(p + ".ln.b", tr));
  a = swish(linear(ps, p + ".fc1", a, tr));
  a = linear(ps, p + ".fc2", a, tr);
  return add(x, scale(a, 0.5));
}

Tensor self_attention(const ParameterStore& ps, const std::string& p, const Tensor& x,
                      int64_t heads, bool tr) {
  const int64_t D = x.cols();
  const int64_t dh = D / heads;
  Tensor a = layer_norm(x, ps.param(p + ".ln.g", tr), ps.param(p + ".ln.b", tr));
  Tensor q = linear(ps, p + ".q", a, tr);
  Tensor k = linear(ps, p + ".k", a, tr);
  Tensor v = linear(ps, p + ".v", a, tr);
  std::vector<Tensor> ctx;
  ctx.reserve(heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int64_t h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, dh);
    Tensor kh = slice_cols(k, h * dh, dh);
    Tensor vh = slice_cols(v, h * dh, dh);
    Tensor scores = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt));
    ctx.push_back(matmul(scores, vh));
  }
  Tensor o = linear(ps, p + ".out", concat_cols(ctx), tr);
  return add(x, o);
}

Tensor conv_module(const ParameterStore& ps, const std::string& p, const Tensor& x,
                   bool tr) {
  const int64_t D = x.cols();
  Tensor a = layer_norm(x, ps.param(p + ".ln.g", tr), ps.param(p + ".ln.b", tr));
  a = linear(ps, p + ".pw1", a, tr);  // (T, 2D), gated
  Tensor lin = slice_cols(a, 0, D);
  Tensor gate = sigmoid(slice_cols(a, D, D));
  a = mul(lin, gate);
  a = conv1d_depthwise(a, ps.param(p + ".dw.w", tr), ps.param(p + ".dw.b", tr));
  a = layer_norm(a, ps.param(p + ".mid.g", tr), ps.param(p + ".mid.b", tr));
  a = swish(a);
  a = linear(ps, p + ".pw2", a, tr);
  return add(x, a);
}

void init_ln(ParameterStore& ps, const std::string& p, int64_t width) {
  ps.put(p + ".g", Tensor::full({1, width}, 1.0));
  ps.put(p + ".b", Tensor::zeros({1, width}));
}

}  // namespace

void init_conformer(ParameterStore& ps, Rng& rng, const std::string& prefix,
                    int64_t width, int64_t kernel) {
  for (const char* ffn : {".ffn1", ".ffn2"}) {
    init_ln(ps, prefix + ffn + ".ln", width);
    init_linear(ps, rng, prefix + ffn + ".fc1", width, 4 * width);
    init_linear(ps, rng, prefix + ffn + ".fc2", 4 * width, width);
  }
  init_ln(ps, prefix + ".attn.ln", width);
  for (const char* m : {".attn.q", ".attn.k", ".attn.v", ".attn.out"})
    init_linear(ps, rng, prefix + m, width, width);
  init_ln(ps, prefix + ".conv.ln", width);
  init_linear(ps, rng, prefix + ".conv.pw1", width, 2 * width);
  ps.put(prefix + ".conv.dw.w", init_weight(rng, kernel, width));
  ps.put(prefix + ".conv.dw.b", Tensor::zeros({1, width}));
  init_ln(ps, prefix + ".conv.mid", width);
  init_linear(ps, rng, prefix + ".conv.pw2", width, width);
  init_ln(ps, prefix + ".ln", width);
}

Tensor conformer_block(const ParameterStore& ps, const std::string& prefix,
                       const Tensor& x, int64_t heads, bool trainable) {
  ADLB_CHECK(x.cols() % heads == 0, "conformer: width " << x.cols()
                                                        << " not divisible by "
                                                        << heads << " heads");
  Tensor h = half_ffn(ps, prefix + ".ffn1", x, trainable);
  h = self_attention(ps, prefix + ".attn", h, heads, trainable);
  h = conv_module(ps, prefix + ".conv", h, trainable);
  h = half_ffn(ps, prefix + ".ffn2", h, trainable);
  return layer_norm(h, ps.param(prefix + ".ln.g", trainable),
                    ps.param(prefix + ".ln.b", trainable));
}

void init_tac(ParameterStore& ps, Rng& rng, const std::string& prefix, int64_t width) {
  init_linear(ps, rng, prefix + ".tx", width, width);
  init_linear(ps, rng, prefix + ".avg", width, width);
  init_linear(ps, rng, prefix + ".proj", 2 * width, width);
}

std::vector<Tensor> tac_block(const ParameterStore& ps, const std::string& prefix,
                              const std::vector<Tensor>& channels, bool trainable) {
  ADLB_CHECK(!channels.empty(), "tac: at least one channel required");
  // average over raw channel features, then transform the pooled path
  Tensor mean = channels[0];
  for (size_t c = 1; c < channels.size(); ++c) mean = add(mean, channels[c]);
  mean = scale(mean, 1.0 / static_cast<double>(channels.size()));
  Tensor g = relu(linear(ps, prefix + ".avg", mean, trainable));

  std::vector<Tensor> out;
  out.reserve(channels.size());
  for (const auto& x : channels) {
    Tensor f = relu(linear(ps, prefix + ".tx", x, trainable));
    Tensor proj = relu(linear(ps, prefix + ".proj", concat_cols({f, g}), trainable));
    out.push_back(add(x, proj));
  }
  return out;
}

void init_masknet(ParameterStore& ps, Rng& rng, const MaskNetConfig& cfg) {
  cfg.validate();
  init_linear(ps, rng, "masknet.in", cfg.feat_width(), cfg.width);
  for (int64_t i = 0; i < cfg.enc_layers; ++i)
    init_conformer(ps, rng, "masknet.enc" + std::to_string(i), cfg.width, cfg.kernel);
  for (int64_t i = 0; i < cfg.tac_blocks; ++i)
    init_tac(ps, rng, "masknet.tac" + std::to_string(i), cfg.width);
  for (int64_t i = 0; i < cfg.dec_layers; ++i)
    init_conformer(ps, rng, "masknet.dec" + std::to_string(i), cfg.width, cfg.kernel);
  init_linear(ps, rng, "masknet.out", cfg.width, cfg.out_width());
}

std::vector<Tensor> masknet_features(const ComplexSpectrogram& chunk) {
  const int64_t C = chunk.channels, T = chunk.frames, F = chunk.bins;
  ADLB_CHECK(C >= 1 && T >= 1, "masknet: empty chunk");
  constexpr double eps = 1e-8;

  // channel-mean reference keeps the featurization invariant under
  // channel permutations
  std::vector<std::complex<double>> ref(static_cast<size_t>(T * F));
  for (int64_t c = 0; c < C; ++c)
    for (int64_t i = 0; i < T * F; ++i)
      ref[i] += chunk.data[c * T * F + i] / static_cast<double>(C);

  std::vector<Tensor> feats;
  feats.reserve(C);
  for (int64_t c = 0; c < C; ++c) {
    std::vector<double> f(static_cast<size_t>(T * 3 * F));
    for (int64_t t = 0; t < T; ++t) {
      for (int64_t b = 0; b < F; ++b) {
        const std::complex<double> y = chunk.at(c, t, b);
        const std::complex<double> r = ref[t * F + b];
        const double mag = std::abs(y);
        const std::complex<double> rel = y * std::conj(r);
        const double denom = mag * std::abs(r) + eps;
        double* row = f.data() + t * 3 * F;
        row[b] = std::log(mag + eps);
        row[F + b] = rel.real() / denom;
        row[2 * F + b] = rel.imag() / denom;
      }
    }
    feats.emplace_back(Shape{T, 3 * F}, std::move(f));
  }
  return feats;
}

MaskSet estimate_masks(const ParameterStore& ps, const MaskNetConfig& cfg,
                       const ComplexSpectrogram& chunk, bool trainable) {
  cfg.validate();
  ADLB_CHECK(chunk.bins == cfg.bins, "masknet: chunk bins " << chunk.bins
                                                            << " do not match config "
                                                            << cfg.bins);
  ADLB_CHECK(chunk.frames <= cfg.max_frames,
             "masknet: chunk of " << chunk.frames << " frames exceeds maximum "
                                  << cfg.max_frames);
  const int64_t T = chunk.frames, F = cfg.bins;

  std::vector<Tensor> streams;
  for (auto& f : masknet_features(chunk))
    streams.push_back(linear(ps, "masknet.in", f, trainable));

  // encoder conformers split as evenly as possible around the TAC blocks
  const int64_t groups = cfg.tac_blocks + 1;
  int64_t layer = 0, tac = 0;
  for (int64_t gix = 0; gix < groups; ++gix) {
    int64_t count = cfg.enc_layers / groups + (gix < cfg.enc_layers % groups ? 1 : 0);
    for (int64_t l = 0; l < count; ++l, ++layer) {
      std::string prefix = "masknet.enc" + std::to_string(layer);
      for (auto& s : streams) s = conformer_block(ps, prefix, s, cfg.heads, trainable);
    }
    if (gix + 1 < groups) {
      streams = tac_block(ps, "masknet.tac" + std::to_string(tac++), streams,
                          trainable);
    }
  }

  Tensor pooled = streams[0];
  for (size_t c = 1; c < streams.size(); ++c) pooled = add(pooled, streams[c]);
  pooled = scale(pooled, 1.0 / static_cast<double>(streams.size()));
  for (int64_t i = 0; i < cfg.dec_layers; ++i)
    pooled = conformer_block(ps, "masknet.dec" + std::to_string(i), pooled, cfg.heads,
                             trainable);
  Tensor out = linear(ps, "masknet.out", pooled, trainable);

  MaskSet masks;
  masks.frames = T;
  masks.bins = F;
  masks.complex_variant = cfg.variant == "complex";
  if (!masks.complex_variant) {
    Tensor act = sigmoid(out);
    for (int k = 0; k < 3; ++k) masks.real_masks[k] = slice_cols(act, k * F, F);
  } else {
    for (int k = 0; k < 3; ++k) {
      CTensor m{slice_cols(out, 2 * k * F, F), slice_cols(out, (2 * k + 1) * F, F)};
      // cap the magnitude at 2 with a smooth tanh compression
      Tensor mag = cmag(m, 1e-12);
      Tensor ratio = div_eps(scale(tanh_t(scale(mag, 0.5)), 2.0), mag, 0.0);
      masks.complex_masks[k] = cmul_real(m, ratio);
    }
  }
  return masks;
}

}  // namespace adlb
