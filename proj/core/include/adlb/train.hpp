// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_TRAIN_HPP_
#define ADLB_TRAIN_HPP_

#include <string>
#include <vector>

#include "adlb/beamformer.hpp"
#include "adlb/loss.hpp"
#include "adlb/masknet.hpp"
#include "adlb/mixer.hpp"
#include "adlb/optim.hpp"
#include "adlb/stft.hpp"

namespace adlb {

struct TrainConfig {
  std::string loss = "mag";        // mag | logmel
  std::string phase = "pretrain";  // pretrain (mask net only) | joint
  int64_t epochs = 1;
  int64_t max_steps = 0;  // 0 = bounded by epochs only
  double lr_peak = 1e-3;
  int64_t warmup_steps = 1000;
  double lr_decay = 0.98;
  int64_t decay_interval = 0;  // 0 = one manifest sweep
  double weight_decay = 1e-2;
  double noise_loss_weight = 0.5;  // fixed-assignment term training the noise mask
  bool freeze_mask_in_joint = false;
  uint64_t seed = 0;
  std::string ckpt_dir;
  int64_t ckpt_every_epochs = 1;
  int64_t log_every = 50;
  int mel_bands = 80;
};

struct TrainResult {
  std::string final_checkpoint;
  std::vector<double> pit_curve;    // PIT component per step
  std::vector<double> total_curve;  // optimized objective per step
  double initial_pit = 0.0, final_pit = 0.0;
  int64_t steps = 0;
  bool aborted_non_finite = false;
  std::string last_good_checkpoint;  // retained on abort
};

// Deterministic single-threaded training over a mixture manifest. The
// pretrain phase optimizes the mask estimator against masked channel-0
// magnitudes; the joint phase backpropagates through the full frame-wise
// beamformer. Checkpoints are written per epoch under ckpt_dir.
TrainResult train(ParameterStore& ps, const MaskNetConfig& mn_cfg,
                  const BeamformerConfig& bf_cfg, const StftConfig& stft_cfg,
                  const std::vector<MixtureRecord>& manifest,
                  const std::string& manifest_path, const TrainConfig& cfg);

}  // namespace adlb

#endif  // ADLB_TRAIN_HPP_
