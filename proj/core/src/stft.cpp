// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace adlb {

namespace {

// FFTW plan creation is not thread safe; executing a cached plan on fresh
// buffers via the new-array interface is. Plans use FFTW_ESTIMATE, which
// keeps the transform deterministic across runs.
class FftEngine {
 public:
  static FftEngine& instance() {
    static FftEngine e;
    return e;
  }

  void r2c(const double* in, std::complex<double>* out, int n) {
    fftw_plan plan = plan_r2c(n);
    std::vector<double> tmp(in, in + n);
    fftw_execute_dft_r2c(plan, tmp.data(), reinterpret_cast<fftw_complex*>(out));
  }

  void c2r(const std::complex<double>* in, double* out, int n) {
    fftw_plan plan = plan_c2r(n);
    std::vector<std::complex<double>> tmp(in, in + n / 2 + 1);
    fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(tmp.data()), out);
    const double s = 1.0 / n;
    for (int i = 0; i < n; ++i) out[i] *= s;
  }

 private:
  fftw_plan plan_r2c(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = r2c_.find(n);
    if (it != r2c_.end()) return it->second;
    std::vector<double> in(static_cast<size_t>(n));
    std::vector<std::complex<double>> out(static_cast<size_t>(n / 2 + 1));
    fftw_plan p = fftw_plan_dft_r2c_1d(n, in.data(),
                                       reinterpret_cast<fftw_complex*>(out.data()),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    ADLB_CHECK(p != nullptr, "stft: fftw r2c plan failed for n=" << n);
    r2c_[n] = p;
    return p;
  }

  fftw_plan plan_c2r(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = c2r_.find(n);
    if (it != c2r_.end()) return it->second;
    std::vector<std::complex<double>> in(static_cast<size_t>(n / 2 + 1));
    std::vector<double> out(static_cast<size_t>(n));
    fftw_plan p = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                                       out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    ADLB_CHECK(p != nullptr, "stft: fftw c2r plan failed for n=" << n);
    c2r_[n] = p;
    return p;
  }

  std::mutex mu_;
  std::map<int, fftw_plan> r2c_, c2r_;
};

std::vector<double> make_window(const std::string& kind, int n) {
  std::vector<double> w(static_cast<size_t>(n), 1.0);
  if (kind == "rect") return w;
  for (int i = 0; i < n; ++i) {
    double hann = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);  // periodic
    if (kind == "hann")
      w[i] = hann;
    else if (kind == "sqrt_hann")
      w[i] = std::sqrt(hann);
    else
      ADLB_CHECK(false, "stft: unknown window '" << kind
                                                 << "' (sqrt_hann, hann, rect)");
  }
  return w;
}

}  // namespace

Stft::Stft(const StftConfig& config) : config_(config) {
  ADLB_CHECK(config_.fft_size > 0 && config_.hop > 0,
             "stft: fft_size and hop must be positive");
  ADLB_CHECK(config_.hop <= config_.fft_size,
             "stft: hop " << config_.hop << " exceeds fft_size " << config_.fft_size);
  analysis_ = make_window(config_.window, config_.fft_size);
  synthesis_ = analysis_;
  if (config_.window == "hann")
    synthesis_.assign(static_cast<size_t>(config_.fft_size), 1.0);

  // constant-overlap-add: sum over shifts of wa*ws must be flat
  const int win = config_.fft_size, hop = config_.hop;
  std::vector<double> s(static_cast<size_t>(hop), 0.0);
  for (int r = 0; r < hop; ++r)
    for (int k = r; k < win; k += hop) s[r] += analysis_[k] * synthesis_[k];
  double smin = s[0], smax = s[0];
  for (double v : s) {
    smin = std::min(smin, v);
    smax = std::max(smax, v);
  }
  ADLB_CHECK(smax - smin < 1e-8 && smin > 1e-12,
             "stft: window '" << config_.window << "' with hop " << hop
                              << "/" << win << " does not satisfy COLA");
  ola_gain_ = s[0];
}

int64_t Stft::num_frames(int64_t num_samples) const {
  if (num_samples <= 0) return 0;
  const int64_t win = config_.fft_size, hop = config_.hop;
  return (win + num_samples - 1) / hop + 1;
}

std::vector<std::complex<double>> Stft::forward_channel(const std::vector<double>& x,
                                                        int64_t* out_frames) const {
  const int64_t win = config_.fft_size, hop = config_.hop;
  const int64_t n = static_cast<int64_t>(x.size());
  const int64_t T = num_frames(n);
  const int64_t F = bins();
  if (out_frames) *out_frames = T;
  std::vector<std::complex<double>> out(static_cast<size_t>(T * F));
  if (T == 0) return out;

  // center padding by one full window on the left
  std::vector<double> padded(static_cast<size_t>((T - 1) * hop + win), 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + win);

  std::vector<double> frame(static_cast<size_t>(win));
  auto& fft = FftEngine::instance();
  for (int64_t t = 0; t < T; ++t) {
    const double* src = padded.data() + t * hop;
    for (int64_t i = 0; i < win; ++i) frame[i] = src[i] * analysis_[i];
    fft.r2c(frame.data(), out.data() + t * F, static_cast<int>(win));
  }
  return out;
}

ComplexSpectrogram Stft::forward(const MultichannelWaveform& w) const {
  w.validate();
  ADLB_CHECK(w.num_channels() > 0, "stft: no channels");
  ComplexSpectrogram spec;
  spec.channels = w.num_channels();
  spec.sample_rate = w.sample_rate;
  spec.num_samples = w.num_samples();
  spec.config = config_;
  spec.bins = bins();
  spec.frames = num_frames(spec.num_samples);
  spec.data.resize(static_cast<size_t>(spec.channels * spec.frames * spec.bins));
  for (int64_t c = 0; c < spec.channels; ++c) {
    int64_t frames = 0;
    auto ch = forward_channel(w.channels[c], &frames);
    std::copy(ch.begin(), ch.end(), spec.data.begin() + c * spec.frames * spec.bins);
  }
  return spec;
}

std::vector<double> fft_convolve(const std::vector<double>& x,
                                 const std::vector<double>& h) {
  if (x.empty() || h.empty()) return {};
  const size_t n = x.size() + h.size() - 1;
  size_t m = 1;
  while (m < n) m <<= 1;
  std::vector<double> xp(m, 0.0), hp(m, 0.0);
  std::copy(x.begin(), x.end(), xp.begin());
  std::copy(h.begin(), h.end(), hp.begin());
  auto& fft = FftEngine::instance();
  std::vector<std::complex<double>> X(m / 2 + 1), H(m / 2 + 1);
  fft.r2c(xp.data(), X.data(), static_cast<int>(m));
  fft.r2c(hp.data(), H.data(), static_cast<int>(m));
  for (size_t i = 0; i < X.size(); ++i) X[i] *= H[i];
  std::vector<double> out(m);
  fft.c2r(X.data(), out.data(), static_cast<int>(m));
  out.resize(n);
  return out;
}

MultichannelWaveform Stft::inverse(const ComplexSpectrogram& spec) const {
  ADLB_CHECK(spec.bins == bins(), "istft: spectrogram bins " << spec.bins
                                                             << " do not match config "
                                                             << bins());
  const int64_t win = config_.fft_size, hop = config_.hop;
  const int64_t T = spec.frames, F = spec.bins;

  MultichannelWaveform w;
  w.sample_rate = spec.sample_rate;
  w.channels.assign(static_cast<size_t>(spec.channels), {});

  auto& fft = FftEngine::instance();
  std::vector<double> frame(static_cast<size_t>(win));
  const int64_t padded_len = T > 0 ? (T - 1) * hop + win : 0;
  for (int64_t c = 0; c < spec.channels; ++c) {
    std::vector<double> acc(static_cast<size_t>(padded_len), 0.0);
    for (int64_t t = 0; t < T; ++t) {
      fft.c2r(spec.data.data() + (c * T + t) * F, frame.data(), static_cast<int>(win));
      double* dst = acc.data() + t * hop;
      for (int64_t i = 0; i < win; ++i) dst[i] += frame[i] * synthesis_[i];
    }
    auto& ch = w.channels[static_cast<size_t>(c)];
    ch.assign(static_cast<size_t>(spec.num_samples), 0.0);
    const double inv_gain = 1.0 / ola_gain_;
    for (int64_t i = 0; i < spec.num_samples && win + i < padded_len; ++i)
      ch[i] = acc[win + i] * inv_gain;
  }
  return w;
}

}  // namespace adlb
