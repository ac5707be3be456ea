// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include <benchmark/benchmark.h>

#include "adlb/beamformer.hpp"
#include "adlb/masknet.hpp"
#include "adlb/mixer.hpp"
#include "adlb/room.hpp"
#include "adlb/stft.hpp"

namespace {

using namespace adlb;

Tensor random_tensor(Rng& rng, const Shape& shape) {
  int64_t n = 1;
  for (int64_t e : shape) n *= e;
  std::vector<double> d(static_cast<size_t>(n));
  for (auto& v : d) v = rng.uniform(-1, 1);
  return Tensor(shape, std::move(d));
}

void BM_Matmul(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng(1);
  Tensor a = random_tensor(rng, {n, n});
  Tensor b = random_tensor(rng, {n, n});
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_GruLayerSeq(benchmark::State& state) {
  const int64_t T = 150, B = 129, I = 8, H = state.range(0);
  Rng rng(2);
  ParameterStore ps;
  init_gru(ps, rng, "g", I, H);
  GruParams p = gru_params(ps, "g", false);
  Tensor x = random_tensor(rng, {T * B, I});
  Tensor h0 = Tensor::zeros({B, H});
  for (auto _ : state) {
    Tensor out = gru_layer_seq(x, T, B, p, h0);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * T * B);
}
BENCHMARK(BM_GruLayerSeq)->Arg(16)->Arg(32)->Arg(64);

void BM_Stft(benchmark::State& state) {
  Rng rng(3);
  MultichannelWaveform w;
  w.sample_rate = 16000;
  w.channels.assign(1, std::vector<double>(16000 * 4));
  for (auto& v : w.channels[0]) v = rng.uniform(-1, 1);
  Stft stft(StftConfig{});
  for (auto _ : state) {
    auto spec = stft.forward(w);
    benchmark::DoNotOptimize(spec.data.data());
  }
}
BENCHMARK(BM_Stft);

void BM_SimulateRir(benchmark::State& state) {
  RoomConfig room;
  room.dimensions = {6, 5, 3};
  room.absorption = {0.4, 0.4, 0.4, 0.4, 0.4, 0.4};
  room.rir_length = static_cast<int>(state.range(0));
  room.mics = {{2, 2, 1.2}};
  for (auto _ : state) {
    auto rir = simulate_rir(room, {4, 3, 1.5}, room.mics[0]);
    benchmark::DoNotOptimize(rir.data());
  }
}
BENCHMARK(BM_SimulateRir)->Arg(2048)->Arg(4096);

void BM_ClassicalMvdrPerBin(benchmark::State& state) {
  const int64_t C = state.range(0);
  Rng rng(4);
  std::vector<CMat> ss, vv;
  for (int f = 0; f < 129; ++f) {
    CMat b(C);
    for (auto& z : b.a) z = {rng.normal(), rng.normal()};
    CMat m(C);
    for (int64_t i = 0; i < C; ++i)
      for (int64_t j = 0; j < C; ++j) {
        cplx s = 0;
        for (int64_t k = 0; k < C; ++k) s += b.at(i, k) * std::conj(b.at(j, k));
        m.at(i, j) = s;
      }
    ss.push_back(m);
    vv.push_back(m);
  }
  for (auto _ : state) {
    ClassicalMvdr bf = mvdr_classical(ss, vv);
    benchmark::DoNotOptimize(bf.weights.data());
  }
  state.SetItemsProcessed(state.iterations() * 129);
}
BENCHMARK(BM_ClassicalMvdrPerBin)->Arg(2)->Arg(7);

// one frame of the frame-wise neural beamformer (weights for every bin)
void BM_AdlMvdrFrame(benchmark::State& state) {
  const int64_t C = 2, F = 129;
  Rng rng(5);
  BeamformerConfig cfg;
  cfg.channels = C;
  cfg.bins = F;
  cfg.gru_v1 = 24;
  cfg.gru_v2 = 16;
  cfg.gru_vv = 24;
  cfg.gru_vad = 24;
  ParameterStore ps;
  init_beamformer(ps, rng, cfg);
  std::vector<CTensor> y;
  for (int64_t c = 0; c < C; ++c)
    y.push_back(CTensor{random_tensor(rng, {1, F}), random_tensor(rng, {1, F})});
  MaskSet masks;
  masks.frames = 1;
  masks.bins = F;
  for (int k = 0; k < 3; ++k) {
    Tensor m = random_tensor(rng, {1, F});
    masks.real_masks[k] = sigmoid(m);
  }
  BeamformerState st;
  for (auto _ : state) {
    BeamformerState next;
    AdlMvdrOutput out = adl_mvdr_source(ps, cfg, y, masks, 0,
                                        st.v.defined() ? &st : nullptr, 0, &next,
                                        nullptr, false);
    benchmark::DoNotOptimize(out.s_final.re.data());
    st = next;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AdlMvdrFrame);

}  // namespace

BENCHMARK_MAIN();
