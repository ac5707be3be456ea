// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_CSS_HPP_
#define ADLB_CSS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "adlb/beamformer.hpp"
#include "adlb/masknet.hpp"
#include "adlb/metrics.hpp"
#include "adlb/stft.hpp"

namespace adlb {

// Sliding-window layout: history/current/future sub-windows; the window
// advances by the current length. Current windows tile the recording
// exactly once; the last chunk is zero-padded.
struct ChunkWindow {
  int64_t win_start = 0, win_end = 0;  // may extend past [0, total)
  int64_t cur_start = 0, cur_end = 0;  // clipped to the recording
  int64_t length() const { return win_end - win_start; }
};

struct ChunkSchedule {
  int64_t n_h = 0, n_c = 0, n_f = 0;
  int64_t total_frames = 0;
  std::vector<ChunkWindow> chunks;
};

ChunkSchedule make_schedule(int64_t total_frames, int64_t n_h, int64_t n_c,
                            int64_t n_f);

// Block-stitching decision between the previously emitted tail and the
// current chunk's output over the shared history region. Similarity is
// cosine over magnitude spectrograms; ties keep the previous assignment.
struct StitchDecision {
  int perm = 0;  // 0 identity, 1 swap
  double score_identity = 0.0, score_swap = 0.0;
};
StitchDecision stitch_decide(const std::vector<double>& tail0,
                             const std::vector<double>& tail1,
                             const std::vector<double>& hist0,
                             const std::vector<double>& hist1);

struct CssConfig {
  double history_sec = 1.2;
  double current_sec = 0.8;
  double future_sec = 0.4;
};

struct SeparateOptions {
  std::string mode = "adl-mvdr";  // mask-only | classical-mvdr | adl-mvdr
  MaskNetConfig masknet;          // bins filled from the STFT at runtime
  BeamformerConfig bf;            // toggles; channels/bins filled at runtime
  StftConfig stft;
  CssConfig css;
  int threads = 1;
  bool collect_inspect = false;
  int inspect_source = 0;
};

struct InspectData {
  int64_t channels = 0, frames = 0, bins = 0;
  int source = 0;
  std::vector<double> weights;  // per (t,f): C reals then C imags
  std::vector<double> vad;      // per frame
};

struct SeparationResult {
  int sample_rate = 0;
  std::vector<std::vector<double>> streams;  // 2 mono signals, input length
  std::vector<int> chunk_perms;
  int classical_fallback_bins = 0;
  std::optional<InspectData> inspect;
};

// Long-form separation: schedule -> per-chunk masks -> (optional)
// beamforming, gating, residual -> block stitching -> overlap-add
// resynthesis. Chunk mask estimation fans out over `threads`; the
// recurrent pass and stitching consume chunks strictly in order.
SeparationResult separate(const MultichannelWaveform& input, const ParameterStore& ps,
                          const SeparateOptions& opts);

// PIT-style evaluation of two separated streams against two references
// (best assignment by mean SI-SDR), plus the unprocessed-mixture baseline.
struct EvalRow {
  int perm = 0;
  double si_sdr0 = 0, si_sdr1 = 0, mean_si_sdr = 0;
  double mix_si_sdr0 = 0, mix_si_sdr1 = 0, mean_mix_si_sdr = 0;
  double snr0 = 0, snr1 = 0;
};
EvalRow evaluate_separation(const std::vector<std::vector<double>>& streams,
                            const std::vector<double>& ref0,
                            const std::vector<double>& ref1,
                            const std::vector<double>& mixture_ch0);

}  // namespace adlb

#endif  // ADLB_CSS_HPP_
