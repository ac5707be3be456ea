// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/css.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace adlb {

ChunkSchedule make_schedule(int64_t total_frames, int64_t n_h, int64_t n_c,
                            int64_t n_f) {
  ADLB_CHECK(n_c >= 1, "schedule: current window must hold at least one frame");
  ADLB_CHECK(n_h >= 0 && n_f >= 0, "schedule: negative sub-window");
  ChunkSchedule s;
  s.n_h = n_h;
  s.n_c = n_c;
  s.n_f = n_f;
  s.total_frames = total_frames;
  for (int64_t start = 0; start < total_frames; start += n_c) {
    ChunkWindow w;
    w.cur_start = start;
    w.cur_end = std::min(total_frames, start + n_c);
    w.win_start = start - n_h;
    w.win_end = start + n_c + n_f;
    s.chunks.push_back(w);
  }
  return s;
}

StitchDecision stitch_decide(const std::vector<double>& tail0,
                             const std::vector<double>& tail1,
                             const std::vector<double>& hist0,
                             const std::vector<double>& hist1) {
  ADLB_CHECK(tail0.size() == tail1.size() && hist0.size() == hist1.size() &&
                 tail0.size() == hist0.size(),
             "stitch: region size mismatch");
  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb) + 1e-12);
  };
  StitchDecision d;
  d.score_identity = cosine(tail0, hist0) + cosine(tail1, hist1);
  d.score_swap = cosine(tail0, hist1) + cosine(tail1, hist0);
  d.perm = d.score_swap > d.score_identity ? 1 : 0;
  return d;
}

namespace {

std::vector<cplx> ctensor_values(const CTensor& t) {
  const int64_t n = t.re.numel();
  std::vector<cplx> out(static_cast<size_t>(n));
  const double *re = t.re.data(), *im = t.im.data();
  for (int64_t i = 0; i < n; ++i) out[i] = {re[i], im[i]};
  return out;
}

// chunk spectrogram over the window, zero outside the recording
ComplexSpectrogram cut_chunk(const ComplexSpectrogram& full, const ChunkWindow& w) {
  ComplexSpectrogram chunk;
  chunk.channels = full.channels;
  chunk.frames = w.length();
  chunk.bins = full.bins;
  chunk.sample_rate = full.sample_rate;
  chunk.config = full.config;
  chunk.num_samples = 0;
  chunk.data.assign(static_cast<size_t>(chunk.channels * chunk.frames * chunk.bins),
                    cplx(0.0));
  for (int64_t c = 0; c < full.channels; ++c)
    for (int64_t t = std::max<int64_t>(0, w.win_start);
         t < std::min(full.frames, w.win_end); ++t) {
      const auto* src = &full.at(c, t, 0);
      auto* dst = &chunk.at(c, t - w.win_start, 0);
      std::copy(src, src + full.bins, dst);
    }
  return chunk;
}

std::vector<CTensor> chunk_planes(const ComplexSpectrogram& chunk) {
  std::vector<CTensor> planes;
  planes.reserve(static_cast<size_t>(chunk.channels));
  const int64_t T = chunk.frames, F = chunk.bins;
  for (int64_t c = 0; c < chunk.channels; ++c) {
    std::vector<double> re(static_cast<size_t>(T * F)), im(re.size());
    for (int64_t i = 0; i < T * F; ++i) {
      re[i] = chunk.data[c * T * F + i].real();
      im[i] = chunk.data[c * T * F + i].imag();
    }
    planes.push_back(CTensor{Tensor({T, F}, std::move(re)), Tensor({T, F}, std::move(im))});
  }
  return planes;
}

}  // namespace

SeparationResult separate(const MultichannelWaveform& input, const ParameterStore& ps,
                          const SeparateOptions& opts) {
  ADLB_CHECK(input.num_channels() > 0, "separate: input has zero channels");
  ADLB_CHECK(opts.mode == "mask-only" || opts.mode == "classical-mvdr" ||
                 opts.mode == "adl-mvdr",
             "separate: unknown mode '" << opts.mode << "'");
  input.validate();

  Stft stft(opts.stft);
  ComplexSpectrogram spec = stft.forward(input);
  const int64_t T = spec.frames, F = spec.bins, C = spec.channels;

  const double frames_per_sec =
      static_cast<double>(input.sample_rate) / opts.stft.hop;
  const auto n_h = static_cast<int64_t>(std::llround(opts.css.history_sec * frames_per_sec));
  const auto n_c = std::max<int64_t>(
      1, static_cast<int64_t>(std::llround(opts.css.current_sec * frames_per_sec)));
  const auto n_f = static_cast<int64_t>(std::llround(opts.css.future_sec * frames_per_sec));
  ChunkSchedule schedule = make_schedule(T, n_h, n_c, n_f);

  MaskNetConfig mn = opts.masknet;
  mn.bins = F;
  mn.max_frames = std::max(mn.max_frames, n_h + n_c + n_f);
  BeamformerConfig bf = opts.bf;
  bf.channels = C;
  bf.bins = F;

  SeparationResult result;
  result.sample_rate = input.sample_rate;
  result.streams.assign(2, std::vector<double>(static_cast<size_t>(input.num_samples()), 0.0));
  if (schedule.chunks.empty()) return result;

  // phase 1: chunk-local mask estimation, parallel across chunks
  const size_t n_chunks = schedule.chunks.size();
  std::vector<ComplexSpectrogram> chunks(n_chunks);
  std::vector<MaskSet> masks(n_chunks);
  {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (size_t i = next.fetch_add(1); i < n_chunks; i = next.fetch_add(1)) {
        chunks[i] = cut_chunk(spec, schedule.chunks[i]);
        masks[i] = estimate_masks(ps, mn, chunks[i], /*trainable=*/false);
      }
    };
    int workers = std::max(1, opts.threads);
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
  }

  // phase 2: beamforming and stitching, strictly in schedule order
  std::vector<std::vector<cplx>> out_spec(
      2, std::vector<cplx>(static_cast<size_t>(T * F), cplx(0.0)));
  BeamformerState states[2];
  bool have_state = false;

  InspectData inspect;
  if (opts.collect_inspect) {
    ADLB_CHECK(opts.mode == "adl-mvdr", "inspect: only meaningful in adl-mvdr mode");
    inspect.channels = C;
    inspect.frames = T;
    inspect.bins = F;
    inspect.source = opts.inspect_source;
    inspect.weights.assign(static_cast<size_t>(T * F * 2 * C), 0.0);
    inspect.vad.assign(static_cast<size_t>(T), 0.0);
  }

  for (size_t i = 0; i < n_chunks; ++i) {
    const ChunkWindow& w = schedule.chunks[i];
    const int64_t L = w.length();
    std::vector<std::vector<cplx>> outputs(2);  // per raw stream, (L*F)

    if (opts.mode == "mask-only") {
      auto planes = chunk_planes(chunks[i]);
      for (int k = 0; k < 2; ++k)
        outputs[k] = ctensor_values(masks[i].apply(k, planes[0]));
    } else if (opts.mode == "classical-mvdr") {
      for (int k = 0; k < 2; ++k) {
        ChunkCovariances cov = accumulate_chunk_covariances(chunks[i], masks[i], k);
        ClassicalMvdr cw = mvdr_classical(cov.ss, cov.vv);
        result.classical_fallback_bins += cw.fallback_bins;
        outputs[k] = apply_classical_beamformer(chunks[i], cw);
      }
    } else {
      auto planes = chunk_planes(chunks[i]);
      const int64_t snapshot_rel = std::min(n_c, L) - 1;
      for (int k = 0; k < 2; ++k) {
        BeamformerState snap;
        AdlMvdrOutput out = adl_mvdr_source(
            ps, bf, planes, masks[i], k, have_state ? &states[k] : nullptr,
            snapshot_rel, &snap, nullptr, /*trainable=*/false);
        outputs[k] = ctensor_values(out.s_final);
        if (opts.collect_inspect && k == opts.inspect_source) {
          for (int64_t t = w.cur_start; t < w.cur_end; ++t) {
            const int64_t rel = t - w.win_start;
            inspect.vad[t] = out.vad_gain[rel];
            for (int64_t c = 0; c < C; ++c)
              for (int64_t f = 0; f < F; ++f) {
                inspect.weights[(t * F + f) * 2 * C + c] = out.weights[c].re(rel, f);
                inspect.weights[(t * F + f) * 2 * C + C + c] = out.weights[c].im(rel, f);
              }
          }
        }
        states[k] = snap;
      }
      have_state = true;
    }

    // stitch against the already-emitted tail over the history region
    int perm = 0;
    const int64_t hist_lo = std::max<int64_t>(0, w.cur_start - n_h);
    const int64_t hist_n = w.cur_start - hist_lo;
    if (i > 0 && hist_n > 0) {
      std::vector<double> tail0, tail1, hist0, hist1;
      tail0.reserve(static_cast<size_t>(hist_n * F));
      for (int64_t t = hist_lo; t < w.cur_start; ++t)
        for (int64_t f = 0; f < F; ++f) {
          tail0.push_back(std::abs(out_spec[0][t * F + f]));
          tail1.push_back(std::abs(out_spec[1][t * F + f]));
          const int64_t rel = t - w.win_start;
          hist0.push_back(std::abs(outputs[0][rel * F + f]));
          hist1.push_back(std::abs(outputs[1][rel * F + f]));
        }
      perm = stitch_decide(tail0, tail1, hist0, hist1).perm;
    }
    result.chunk_perms.push_back(perm);

    for (int64_t t = w.cur_start; t < w.cur_end; ++t) {
      const int64_t rel = t - w.win_start;
      for (int64_t f = 0; f < F; ++f) {
        out_spec[0][t * F + f] = outputs[perm][rel * F + f];
        out_spec[1][t * F + f] = outputs[1 - perm][rel * F + f];
      }
    }
  }

  for (int k = 0; k < 2; ++k) {
    ComplexSpectrogram s;
    s.channels = 1;
    s.frames = T;
    s.bins = F;
    s.sample_rate = input.sample_rate;
    s.num_samples = input.num_samples();
    s.config = opts.stft;
    s.data = std::move(out_spec[k]);
    MultichannelWaveform wave = stft.inverse(s);
    result.streams[k] = std::move(wave.channels[0]);
  }
  if (opts.collect_inspect) result.inspect = std::move(inspect);
  return result;
}

EvalRow evaluate_separation(const std::vector<std::vector<double>>& streams,
                            const std::vector<double>& ref0,
                            const std::vector<double>& ref1,
                            const std::vector<double>& mixture_ch0) {
  ADLB_CHECK(streams.size() == 2, "evaluate: two streams expected");
  EvalRow row;
  const double id0 = si_sdr(streams[0], ref0), id1 = si_sdr(streams[1], ref1);
  const double sw0 = si_sdr(streams[0], ref1), sw1 = si_sdr(streams[1], ref0);
  if ((id0 + id1) >= (sw0 + sw1)) {
    row.perm = 0;
    row.si_sdr0 = id0;
    row.si_sdr1 = id1;
    row.snr0 = snr_db(streams[0], ref0);
    row.snr1 = snr_db(streams[1], ref1);
  } else {
    row.perm = 1;
    row.si_sdr0 = sw0;
    row.si_sdr1 = sw1;
    row.snr0 = snr_db(streams[0], ref1);
    row.snr1 = snr_db(streams[1], ref0);
  }
  row.mean_si_sdr = 0.5 * (row.si_sdr0 + row.si_sdr1);
  row.mix_si_sdr0 = si_sdr(mixture_ch0, ref0);
  row.mix_si_sdr1 = si_sdr(mixture_ch0, ref1);
  row.mean_mix_si_sdr = 0.5 * (row.mix_si_sdr0 + row.mix_si_sdr1);
  return row;
}

}  // namespace adlb
