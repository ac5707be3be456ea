// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// adlb: continuous speech separation with a frame-wise neural beamformer.
// Subcommands: simulate, train, separate, eval, inspect.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "adlb/checkpoint.hpp"
#include "adlb/config.hpp"
#include "adlb/css.hpp"
#include "adlb/mixer.hpp"
#include "adlb/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_file, "key=value configuration file");
  cmd->add_option("--set", args->overrides,
                  "override a configuration key, e.g. --set stft.hop=128");
  cmd->add_option("--seed", args->seed, "RNG seed; identical seeds reproduce outputs");
  cmd->add_option("--threads", args->threads, "worker pool size for chunk processing");
}

adlb::RunConfig build_config(const CommonArgs& args,
                             const std::string& ckpt_sidecar = "") {
  adlb::RunConfig cfg;
  if (!ckpt_sidecar.empty() && fs::exists(ckpt_sidecar)) {
    json j = json::parse(adlb::read_text_file(ckpt_sidecar));
    for (auto& [k, v] : j.at("config").items())
      if (cfg.has_key(k)) cfg.set(k, v.get<std::string>());
  }
  if (!args.config_file.empty()) cfg.load_file(args.config_file);
  for (const auto& kv : args.overrides) {
    size_t eq = kv.find('=');
    ADLB_CHECK(eq != std::string::npos, "--set expects key=value, got '" << kv << "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

adlb::StftConfig stft_from(const adlb::RunConfig& cfg) {
  adlb::StftConfig s;
  s.fft_size = static_cast<int>(cfg.get_int("stft.fft_size"));
  s.hop = static_cast<int>(cfg.get_int("stft.hop"));
  s.window = cfg.get_str("stft.window");
  return s;
}

adlb::MaskNetConfig masknet_from(const adlb::RunConfig& cfg) {
  adlb::MaskNetConfig m;
  m.width = cfg.get_int("model.width");
  m.heads = cfg.get_int("model.heads");
  m.kernel = cfg.get_int("model.kernel");
  m.enc_layers = cfg.get_int("model.enc_layers");
  m.tac_blocks = cfg.get_int("model.tac_blocks");
  m.dec_layers = cfg.get_int("model.dec_layers");
  m.variant = cfg.get_str("model.mask_variant");
  m.max_frames = cfg.get_int("model.max_frames");
  return m;
}

adlb::BeamformerConfig bf_from(const adlb::RunConfig& cfg) {
  adlb::BeamformerConfig b;
  b.gru_v1 = cfg.get_int("model.gru_v1");
  b.gru_v2 = cfg.get_int("model.gru_v2");
  b.gru_vv = cfg.get_int("model.gru_vv");
  b.gru_vad = cfg.get_int("model.gru_vad");
  b.norm_v = cfg.get_bool("bf.norm_v");
  b.psd = cfg.get_bool("bf.psd");
  b.vad = cfg.get_bool("bf.vad");
  b.residual = cfg.get_bool("bf.residual");
  b.alpha = cfg.get_double("bf.alpha");
  b.vad_cap = cfg.get_double("bf.vad_cap");
  b.cov_norm = cfg.get_str("bf.cov_norm");
  return b;
}

adlb::SimConfig sim_from(const adlb::RunConfig& cfg) {
  adlb::SimConfig s;
  s.sample_rate = static_cast<int>(cfg.get_int("sim.sample_rate"));
  s.duration_sec = cfg.get_double("sim.duration_sec");
  s.num_sources = static_cast<int>(cfg.get_int("sim.sources"));
  s.room_min = cfg.get_double("sim.room_min");
  s.room_max = cfg.get_double("sim.room_max");
  s.absorption_min = cfg.get_double("sim.absorption_min");
  s.absorption_max = cfg.get_double("sim.absorption_max");
  s.rir_length = static_cast<int>(cfg.get_int("sim.rir_length"));
  s.max_order = static_cast<int>(cfg.get_int("sim.max_order"));
  s.ser_min = cfg.get_double("sim.ser_min");
  s.ser_max = cfg.get_double("sim.ser_max");
  s.iso_snr_min = cfg.get_double("sim.iso_snr_min");
  s.iso_snr_max = cfg.get_double("sim.iso_snr_max");
  s.point_snr_min = cfg.get_double("sim.point_snr_min");
  s.point_snr_max = cfg.get_double("sim.point_snr_max");
  s.with_point_noise = cfg.get_bool("sim.point_noise");
  s.noise_directions = static_cast<int>(cfg.get_int("sim.noise_directions"));
  s.array_radius = cfg.get_double("sim.array_radius");
  return s;
}

adlb::CssConfig css_from(const adlb::RunConfig& cfg) {
  adlb::CssConfig c;
  c.history_sec = cfg.get_double("css.history_sec");
  c.current_sec = cfg.get_double("css.current_sec");
  c.future_sec = cfg.get_double("css.future_sec");
  return c;
}

json config_echo(const adlb::RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.values()) j[k] = v;
  return j;
}

void write_ckpt_sidecar(const std::string& ckpt_path, const adlb::RunConfig& cfg) {
  json j;
  j["config"] = config_echo(cfg);
  adlb::write_text_file(ckpt_path + ".json", j.dump(2) + "\n");
}

// channel count baked into the steering net input width (2*C^2)
int64_t channels_from_params(const adlb::ParameterStore& ps) {
  if (!ps.has("bf.v.l1.wz")) return 0;
  int64_t w = ps.param("bf.v.l1.wz", false).rows();
  auto c = static_cast<int64_t>(std::llround(std::sqrt(w / 2.0)));
  ADLB_CHECK(2 * c * c == w, "checkpoint: implausible steering input width " << w);
  return c;
}

void init_model_params(adlb::ParameterStore& ps, const adlb::RunConfig& cfg,
                       uint64_t seed, int64_t channels, int64_t bins,
                       bool need_beamformer) {
  adlb::Rng root(adlb::mix_seed(seed, 0x696e6974));
  if (!ps.has("masknet.in.w")) {
    adlb::MaskNetConfig mn = masknet_from(cfg);
    mn.bins = bins;
    adlb::Rng r = root.fork(1);
    adlb::init_masknet(ps, r, mn);
  }
  if (need_beamformer && !ps.has("bf.v.l1.wz")) {
    adlb::BeamformerConfig bf = bf_from(cfg);
    bf.channels = channels;
    bf.bins = bins;
    adlb::Rng r = root.fork(2);
    adlb::init_beamformer(ps, r, bf);
  }
}

// ---- simulate -----------------------------------------------------------

int run_simulate(const CommonArgs& common, int count, int channels,
                 const std::string& out_dir) {
  adlb::RunConfig cfg = build_config(common);
  adlb::SimConfig sim = sim_from(cfg);
  sim.channels = channels;

  fs::create_directories(out_dir);
  std::vector<adlb::MixtureRecord> records(static_cast<size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      char id[32];
      std::snprintf(id, sizeof(id), "mix%05d", i);
      records[static_cast<size_t>(i)] =
          adlb::simulate_one(sim, adlb::mix_seed(common.seed, i), id, out_dir);
    }
  };
  int workers = std::max(1, common.threads);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::string manifest = (fs::path(out_dir) / "manifest.jsonl").string();
  adlb::write_manifest(records, manifest);

  json sidecar;
  sidecar["seed"] = common.seed;
  sidecar["count"] = count;
  sidecar["channels"] = channels;
  sidecar["config"] = config_echo(cfg);
  adlb::write_text_file((fs::path(out_dir) / "simulate.sidecar.json").string(),
                        sidecar.dump(2) + "\n");
  adlb::log_info("wrote " + std::to_string(count) + " mixtures to " + out_dir);
  return 0;
}

// ---- train ----------------------------------------------------------------

int run_train(const CommonArgs& common, const std::string& manifest_path,
              const std::string& out_dir, const std::string& init_ckpt) {
  adlb::RunConfig cfg = build_config(
      common, init_ckpt.empty() ? "" : init_ckpt + ".json");
  auto manifest = adlb::read_manifest(manifest_path);
  ADLB_CHECK(!manifest.empty(), "train: empty manifest " << manifest_path);

  adlb::StftConfig stft_cfg = stft_from(cfg);
  adlb::Stft stft(stft_cfg);
  const int64_t bins = stft.bins();
  const auto channels = static_cast<int64_t>(manifest[0].mic_positions.size());

  adlb::TrainConfig tc;
  tc.loss = cfg.get_str("train.loss");
  tc.phase = cfg.get_str("train.phase");
  tc.epochs = cfg.get_int("train.epochs");
  tc.max_steps = cfg.get_int("train.max_steps");
  tc.lr_peak = cfg.get_double("train.lr_peak");
  tc.warmup_steps = cfg.get_int("train.warmup_steps");
  tc.lr_decay = cfg.get_double("train.lr_decay");
  tc.decay_interval = cfg.get_int("train.decay_interval");
  tc.weight_decay = cfg.get_double("train.weight_decay");
  tc.noise_loss_weight = cfg.get_double("train.noise_loss_weight");
  tc.freeze_mask_in_joint = cfg.get_bool("train.freeze_mask_in_joint");
  tc.ckpt_every_epochs = cfg.get_int("train.ckpt_every_epochs");
  tc.log_every = cfg.get_int("train.log_every");
  tc.mel_bands = static_cast<int>(cfg.get_int("train.mel_bands"));
  tc.seed = common.seed;
  tc.ckpt_dir = out_dir;

  adlb::ParameterStore ps;
  if (!init_ckpt.empty()) ps = adlb::load_checkpoint(init_ckpt);
  init_model_params(ps, cfg, common.seed, channels, bins, tc.phase == "joint");

  adlb::MaskNetConfig mn = masknet_from(cfg);
  mn.bins = bins;
  adlb::BeamformerConfig bf = bf_from(cfg);
  bf.channels = channels;
  bf.bins = bins;

  adlb::TrainResult res =
      adlb::train(ps, mn, bf, stft_cfg, manifest, manifest_path, tc);

  std::ostringstream curve;
  curve << "step,pit_loss,total_loss\n";
  for (size_t i = 0; i < res.pit_curve.size(); ++i)
    curve << i << "," << res.pit_curve[i] << "," << res.total_curve[i] << "\n";
  adlb::write_text_file((fs::path(out_dir) / "loss_curve.csv").string(), curve.str());

  if (!res.final_checkpoint.empty()) write_ckpt_sidecar(res.final_checkpoint, cfg);
  if (res.aborted_non_finite) {
    std::fprintf(stderr, "train: aborted on non-finite loss; last good checkpoint: %s\n",
                 res.last_good_checkpoint.c_str());
    return 2;
  }
  adlb::log_info("training done: " + std::to_string(res.steps) + " steps, final pit " +
                 std::to_string(res.final_pit));
  return 0;
}

// ---- separate ---------------------------------------------------------------

adlb::SeparateOptions separate_options(const adlb::RunConfig& cfg,
                                       const std::string& mode, int threads) {
  adlb::SeparateOptions opts;
  opts.mode = mode;
  opts.masknet = masknet_from(cfg);
  opts.bf = bf_from(cfg);
  opts.stft = stft_from(cfg);
  opts.css = css_from(cfg);
  opts.threads = threads;
  return opts;
}

int run_separate(const CommonArgs& common, const std::string& in_path,
                 const std::string& ckpt, const std::string& out_dir,
                 const std::string& mode) {
  adlb::RunConfig cfg = build_config(common, ckpt + ".json");
  adlb::ParameterStore ps = adlb::load_checkpoint(ckpt);
  adlb::MultichannelWaveform input = adlb::read_wav(in_path);

  adlb::SeparateOptions opts = separate_options(cfg, mode, common.threads);
  adlb::SeparationResult res = adlb::separate(input, ps, opts);

  fs::create_directories(out_dir);
  std::string stem = fs::path(in_path).stem().string();
  for (int k = 0; k < 2; ++k) {
    adlb::MultichannelWaveform w;
    w.sample_rate = res.sample_rate;
    w.channels = {res.streams[k]};
    adlb::write_wav(w, (fs::path(out_dir) / (stem + ".stream" + std::to_string(k) +
                                             ".wav")).string());
  }
  json sidecar;
  sidecar["input"] = in_path;
  sidecar["mode"] = opts.mode;
  sidecar["toggles"] = {{"norm_v", opts.bf.norm_v},
                        {"psd", opts.bf.psd},
                        {"vad", opts.bf.vad},
                        {"residual", opts.bf.residual}};
  sidecar["checkpoint"] = ckpt;
  sidecar["checkpoint_fnv1a"] = adlb::hex64(adlb::fnv1a_file(ckpt));
  sidecar["chunk_permutations"] = res.chunk_perms;
  sidecar["config"] = config_echo(cfg);
  adlb::write_text_file((fs::path(out_dir) / (stem + ".sidecar.json")).string(),
                        sidecar.dump(2) + "\n");
  return 0;
}

// ---- eval ------------------------------------------------------------------

int run_eval(const CommonArgs& common, const std::string& manifest_path,
             const std::string& ckpt, const std::string& out_csv,
             const std::string& mode) {
  adlb::RunConfig cfg = build_config(common, ckpt + ".json");
  adlb::ParameterStore ps = adlb::load_checkpoint(ckpt);
  auto manifest = adlb::read_manifest(manifest_path);
  adlb::SeparateOptions opts = separate_options(cfg, mode, common.threads);

  std::ostringstream csv;
  csv << "id,si_sdr0,si_sdr1,mean_si_sdr,mix_si_sdr,improvement_db,snr0,snr1,perm\n";
  double total_impr = 0.0;
  for (const auto& rec : manifest) {
    auto mix = adlb::read_wav(adlb::manifest_relative(manifest_path, rec.mixture));
    ADLB_CHECK(rec.references.size() == 2, "eval: record " << rec.id
                                                           << " lacks two references");
    auto r0 = adlb::read_wav(adlb::manifest_relative(manifest_path, rec.references[0]));
    auto r1 = adlb::read_wav(adlb::manifest_relative(manifest_path, rec.references[1]));
    adlb::SeparationResult res = adlb::separate(mix, ps, opts);
    adlb::EvalRow row = adlb::evaluate_separation(res.streams, r0.channels[0],
                                                  r1.channels[0], mix.channels[0]);
    const double impr = row.mean_si_sdr - row.mean_mix_si_sdr;
    total_impr += impr;
    csv << rec.id << "," << row.si_sdr0 << "," << row.si_sdr1 << ","
        << row.mean_si_sdr << "," << row.mean_mix_si_sdr << "," << impr << ","
        << row.snr0 << "," << row.snr1 << "," << row.perm << "\n";
  }
  adlb::write_text_file(out_csv, csv.str());
  adlb::log_info("eval: mean SI-SDR improvement " +
                 std::to_string(total_impr / std::max<size_t>(1, manifest.size())) +
                 " dB over " + std::to_string(manifest.size()) + " mixtures");
  return 0;
}

// ---- inspect ----------------------------------------------------------------

int run_inspect(const CommonArgs& common, const std::string& in_path,
                const std::string& ckpt, const std::string& out_path, int source) {
  adlb::RunConfig cfg = build_config(common, ckpt + ".json");
  adlb::ParameterStore ps = adlb::load_checkpoint(ckpt);
  adlb::MultichannelWaveform input = adlb::read_wav(in_path);

  adlb::SeparateOptions opts = separate_options(cfg, "adl-mvdr", common.threads);
  opts.collect_inspect = true;
  opts.inspect_source = source;
  adlb::SeparationResult res = adlb::separate(input, ps, opts);
  ADLB_CHECK(res.inspect.has_value(), "inspect: no data collected");
  const adlb::InspectData& d = *res.inspect;

  // one-line JSON header, then per-(t,f) binary records:
  //   t u32, f u32, h_re f64[C], h_im f64[C], vad f64
  json header;
  header["channels"] = d.channels;
  header["frames"] = d.frames;
  header["bins"] = d.bins;
  header["source"] = d.source;
  header["record"] = "t:u32,f:u32,h_re:f64[C],h_im:f64[C],w:f64";
  header["checkpoint_fnv1a"] = adlb::hex64(adlb::fnv1a_file(ckpt));

  std::ofstream out(out_path, std::ios::binary);
  ADLB_CHECK(out.good(), "inspect: cannot write " << out_path);
  std::string hline = header.dump() + "\n";
  out.write(hline.data(), static_cast<std::streamsize>(hline.size()));
  for (int64_t t = 0; t < d.frames; ++t)
    for (int64_t f = 0; f < d.bins; ++f) {
      auto tu = static_cast<uint32_t>(t), fu = static_cast<uint32_t>(f);
      out.write(reinterpret_cast<const char*>(&tu), 4);
      out.write(reinterpret_cast<const char*>(&fu), 4);
      out.write(reinterpret_cast<const char*>(
                    d.weights.data() + (t * d.bins + f) * 2 * d.channels),
                static_cast<std::streamsize>(2 * d.channels * sizeof(double)));
      out.write(reinterpret_cast<const char*>(&d.vad[t]), sizeof(double));
    }
  ADLB_CHECK(out.good(), "inspect: short write " << out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adlb: continuous speech separation with a frame-wise neural beamformer"};
  app.name("adlb");
  app.require_subcommand(1);

  CommonArgs common;

  auto* sim = app.add_subcommand("simulate", "synthesize multichannel training mixtures");
  int sim_count = 10, sim_channels = 7;
  std::string sim_out;
  sim->add_option("--count", sim_count, "number of mixtures")->required();
  sim->add_option("--channels", sim_channels, "microphone count");
  sim->add_option("--out", sim_out, "output directory")->required();
  add_common(sim, &common);

  auto* tr = app.add_subcommand("train", "train the mask estimator / joint beamformer");
  std::string tr_manifest, tr_out, tr_init;
  tr->add_option("--manifest", tr_manifest, "mixture manifest (JSON lines)")->required();
  tr->add_option("--out", tr_out, "checkpoint directory")->required();
  tr->add_option("--init", tr_init, "initial checkpoint (e.g. pretrain output)");
  add_common(tr, &common);

  auto* sep = app.add_subcommand("separate", "separate a recording into two streams");
  std::string sep_in, sep_ckpt, sep_out = ".", sep_mode = "adl-mvdr";
  bool no_norm_v = false, no_psd = false, no_vad = false, no_residual = false;
  sep->add_option("--in", sep_in, "input multichannel WAV")->required();
  sep->add_option("--ckpt", sep_ckpt, "model checkpoint (.adlb)")->required();
  sep->add_option("--out", sep_out, "output directory");
  sep->add_option("--mode", sep_mode, "mask-only | classical-mvdr | adl-mvdr");
  sep->add_flag("--no-norm-v", no_norm_v, "disable steering vector normalization");
  sep->add_flag("--no-psd", no_psd, "disable the positive semi-definite constraint");
  sep->add_flag("--no-vad", no_vad, "disable the VAD output gate");
  sep->add_flag("--no-residual", no_residual, "disable the masked-speech residual");
  add_common(sep, &common);

  auto* ev = app.add_subcommand("eval", "SI-SDR/SNR evaluation over a manifest");
  std::string ev_manifest, ev_ckpt, ev_out = "eval.csv", ev_mode = "adl-mvdr";
  ev->add_option("--manifest", ev_manifest, "mixture manifest (JSON lines)")->required();
  ev->add_option("--ckpt", ev_ckpt, "model checkpoint (.adlb)")->required();
  ev->add_option("--out", ev_out, "output CSV path");
  ev->add_option("--mode", ev_mode, "mask-only | classical-mvdr | adl-mvdr");
  ev->add_flag("--no-norm-v", no_norm_v, "disable steering vector normalization");
  ev->add_flag("--no-psd", no_psd, "disable the positive semi-definite constraint");
  ev->add_flag("--no-vad", no_vad, "disable the VAD output gate");
  ev->add_flag("--no-residual", no_residual, "disable the masked-speech residual");
  add_common(ev, &common);

  auto* ins = app.add_subcommand("inspect", "dump per-frame beamformer weights");
  std::string ins_in, ins_ckpt, ins_out = "inspect.bin";
  int ins_source = 0;
  ins->add_option("--in", ins_in, "input multichannel WAV")->required();
  ins->add_option("--ckpt", ins_ckpt, "model checkpoint (.adlb)")->required();
  ins->add_option("--out", ins_out, "output dump path");
  ins->add_option("--source", ins_source, "source index (0 or 1)");
  add_common(ins, &common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }

  try {
    // flag toggles override config-file values
    auto apply_toggles = [&]() {
      if (no_norm_v) common.overrides.push_back("bf.norm_v=false");
      if (no_psd) common.overrides.push_back("bf.psd=false");
      if (no_vad) common.overrides.push_back("bf.vad=false");
      if (no_residual) common.overrides.push_back("bf.residual=false");
    };
    if (sim->parsed()) return run_simulate(common, sim_count, sim_channels, sim_out);
    if (tr->parsed()) return run_train(common, tr_manifest, tr_out, tr_init);
    if (sep->parsed()) {
      apply_toggles();
      return run_separate(common, sep_in, sep_ckpt, sep_out, sep_mode);
    }
    if (ev->parsed()) {
      apply_toggles();
      return run_eval(common, ev_manifest, ev_ckpt, ev_out, ev_mode);
    }
    if (ins->parsed()) return run_inspect(common, ins_in, ins_ckpt, ins_out, ins_source);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
