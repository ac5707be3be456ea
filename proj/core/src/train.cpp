// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/train.hpp"

#include <cmath>
#include <filesystem>

#include "adlb/checkpoint.hpp"

namespace adlb {

namespace {

struct Sample {
  std::vector<CTensor> y;         // per channel constant planes
  ComplexSpectrogram mixture;     // for diagnostics
  std::vector<Tensor> ref_mags;   // channel-0 magnitudes per source
  Tensor noise_mag;               // channel-0 noise magnitude
  int64_t frames = 0, bins = 0;
};

Tensor magnitude_plane(const ComplexSpectrogram& spec, int64_t channel) {
  const int64_t T = spec.frames, F = spec.bins;
  std::vector<double> m(static_cast<size_t>(T * F));
  for (int64_t t = 0; t < T; ++t)
    for (int64_t f = 0; f < F; ++f) m[t * F + f] = std::abs(spec.at(channel, t, f));
  return Tensor({T, F}, std::move(m));
}

Sample load_sample(const MixtureRecord& rec, const std::string& manifest_path,
                   const Stft& stft) {
  Sample s;
  auto mix = read_wav(manifest_relative(manifest_path, rec.mixture));
  s.mixture = stft.forward(mix);
  s.frames = s.mixture.frames;
  s.bins = s.mixture.bins;
  const int64_t T = s.frames, F = s.bins;
  for (int64_t c = 0; c < s.mixture.channels; ++c) {
    std::vector<double> re(static_cast<size_t>(T * F)), im(re.size());
    for (int64_t i = 0; i < T * F; ++i) {
      re[i] = s.mixture.data[c * T * F + i].real();
      im[i] = s.mixture.data[c * T * F + i].imag();
    }
    s.y.push_back(CTensor{Tensor({T, F}, std::move(re)), Tensor({T, F}, std::move(im))});
  }
  for (const auto& ref : rec.references) {
    auto w = read_wav(manifest_relative(manifest_path, ref));
    s.ref_mags.push_back(magnitude_plane(stft.forward(w), 0));
  }
  ADLB_CHECK(s.ref_mags.size() == 2, "train: two reference sources required, got "
                                         << s.ref_mags.size());
  auto nz = read_wav(manifest_relative(manifest_path, rec.noise));
  s.noise_mag = magnitude_plane(stft.forward(nz), 0);
  return s;
}

}  // namespace

TrainResult train(ParameterStore& ps, const MaskNetConfig& mn_cfg,
                  const BeamformerConfig& bf_cfg, const StftConfig& stft_cfg,
                  const std::vector<MixtureRecord>& manifest,
                  const std::string& manifest_path, const TrainConfig& cfg) {
  ADLB_CHECK(!manifest.empty(), "train: empty manifest");
  ADLB_CHECK(cfg.loss == "mag" || cfg.loss == "logmel",
             "train: loss must be mag or logmel, got " << cfg.loss);
  ADLB_CHECK(cfg.phase == "pretrain" || cfg.phase == "joint",
             "train: phase must be pretrain or joint, got " << cfg.phase);
  const bool joint = cfg.phase == "joint";
  const bool train_mask = !joint || !cfg.freeze_mask_in_joint;

  Stft stft(stft_cfg);
  MelFilterbank mel(cfg.mel_bands, static_cast<int>(stft.bins()),
                    /*sample_rate=*/16000, stft_cfg.fft_size);
  LossContext loss_ctx{cfg.loss == "logmel" ? LossType::kLogMel : LossType::kMagnitude,
                       &mel};

  LrSchedule sched;
  sched.peak = cfg.lr_peak;
  sched.warmup_steps = cfg.warmup_steps;
  sched.decay = cfg.lr_decay;
  sched.decay_interval = cfg.decay_interval > 0
                             ? cfg.decay_interval
                             : static_cast<int64_t>(manifest.size());
  AdamW opt(sched, cfg.weight_decay);

  namespace fs = std::filesystem;
  if (!cfg.ckpt_dir.empty()) fs::create_directories(cfg.ckpt_dir);

  TrainResult res;
  Rng shuffle_rng(mix_seed(cfg.seed, 0x7261696e));
  std::vector<size_t> order(manifest.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  int64_t step = 0;
  bool done = false;
  for (int64_t epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<size_t>(shuffle_rng.uniform_int(0, i - 1))]);

    for (size_t oi = 0; oi < order.size() && !done; ++oi) {
      const MixtureRecord& rec = manifest[order[oi]];
      Sample sample = load_sample(rec, manifest_path, stft);
      MaskNetConfig mn = mn_cfg;
      mn.bins = sample.bins;
      mn.max_frames = std::max(mn.max_frames, sample.frames);
      BeamformerConfig bf = bf_cfg;
      bf.channels = static_cast<int64_t>(sample.y.size());
      bf.bins = sample.bins;

      Tape tape;
      ComplexSpectrogram chunk = sample.mixture;
      MaskSet masks = estimate_masks(ps, mn, chunk, train_mask);

      Tensor est0, est1;
      if (!joint) {
        est0 = cmag(masks.apply(0, sample.y[0]));
        est1 = cmag(masks.apply(1, sample.y[0]));
      } else {
        AdlMvdrOutput o0 = adl_mvdr_source(ps, bf, sample.y, masks, 0, nullptr, -1,
                                           nullptr, nullptr, /*trainable=*/true);
        AdlMvdrOutput o1 = adl_mvdr_source(ps, bf, sample.y, masks, 1, nullptr, -1,
                                           nullptr, nullptr, /*trainable=*/true);
        est0 = cmag(o0.s_final);
        est1 = cmag(o1.s_final);
      }
      int perm = 0;
      Tensor pit = pit_loss(est0, est1, sample.ref_mags[0], sample.ref_mags[1],
                            loss_ctx, &perm);
      Tensor total = pit;
      if (cfg.noise_loss_weight > 0.0 && train_mask) {
        Tensor noise_est = cmag(masks.apply(2, sample.y[0]));
        total = add(total, scale(spectrum_loss(noise_est, sample.noise_mag, loss_ctx),
                                 cfg.noise_loss_weight));
      }

      const double pit_v = pit.value(), total_v = total.value();
      if (!std::isfinite(total_v)) {
        log_warn("train: non-finite loss at step " + std::to_string(step) +
                 ", aborting (last good checkpoint retained)");
        res.aborted_non_finite = true;
        done = true;
        break;
      }
      res.pit_curve.push_back(pit_v);
      res.total_curve.push_back(total_v);
      if (step == 0) res.initial_pit = pit_v;
      res.final_pit = pit_v;

      GradMap grads = tape.backward(total);
      opt.step(ps, grads);
      ++step;
      if (cfg.log_every > 0 && step % cfg.log_every == 0)
        log_info("step " + std::to_string(step) + " loss " + std::to_string(total_v) +
                 " pit " + std::to_string(pit_v));
      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
    }

    if (!cfg.ckpt_dir.empty() && !res.aborted_non_finite &&
        ((epoch + 1) % std::max<int64_t>(1, cfg.ckpt_every_epochs) == 0 || done ||
         epoch + 1 == cfg.epochs)) {
      char name[64];
      std::snprintf(name, sizeof(name), "epoch_%04lld.adlb",
                    static_cast<long long>(epoch + 1));
      std::string path = (fs::path(cfg.ckpt_dir) / name).string();
      save_checkpoint(ps, path);
      res.last_good_checkpoint = path;
    }
  }

  if (!cfg.ckpt_dir.empty() && !res.aborted_non_finite) {
    res.final_checkpoint = (fs::path(cfg.ckpt_dir) / "final.adlb").string();
    save_checkpoint(ps, res.final_checkpoint);
    res.last_good_checkpoint = res.final_checkpoint;
  }
  res.steps = step;
  return res;
}

}  // namespace adlb
