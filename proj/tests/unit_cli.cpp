// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "adlb/common.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin_path() {
  const char* p = std::getenv("ADLB_BIN");
  REQUIRE_MESSAGE(p != nullptr, "ADLB_BIN must point at the adlb binary");
  return p;
}

std::string golden_dir() {
  const char* p = std::getenv("ADLB_GOLDEN_DIR");
  REQUIRE_MESSAGE(p != nullptr, "ADLB_GOLDEN_DIR must point at tests/golden");
  return p;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  std::string cmd = bin_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// tiny-model overrides shared by the pipeline tests
const char* kTiny =
    "--set model.width=16 --set model.heads=2 --set model.kernel=3 "
    "--set model.enc_layers=1 --set model.tac_blocks=0 --set model.dec_layers=1 "
    "--set model.gru_v1=8 --set model.gru_v2=8 --set model.gru_vv=8 "
    "--set model.gru_vad=8 --set stft.fft_size=128 --set stft.hop=64 "
    "--set css.history_sec=0.12 --set css.current_sec=0.08 "
    "--set css.future_sec=0.04 ";

std::string sandbox(const std::string& name) {
  std::string dir = (fs::temp_directory_path() / name).string();
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("help output matches the golden files for every subcommand") {
  const std::pair<const char*, const char*> subs[] = {
      {"", "help_main.txt"},        {"simulate", "help_simulate.txt"},
      {"train", "help_train.txt"},  {"separate", "help_separate.txt"},
      {"eval", "help_eval.txt"},    {"inspect", "help_inspect.txt"}};
  for (const auto& [sub, file] : subs) {
    RunResult r = run(std::string(sub) + (sub[0] ? " --help" : " --help"));
    CHECK(r.exit_code == 0);
    std::string expect = adlb::read_text_file((fs::path(golden_dir()) / file).string());
    CHECK_MESSAGE(r.output == expect, "help drift for subcommand: " << sub);
  }
}

TEST_CASE("exit codes: 0 help, 1 usage error, 2 runtime error") {
  CHECK(run("--help").exit_code == 0);
  CHECK(run("").exit_code == 1);                       // missing subcommand
  CHECK(run("simulate --out x").exit_code == 1);       // missing required
  CHECK(run("separate --in nope.wav --ckpt nope.adlb").exit_code == 2);
  RunResult bad = run("simulate --count 1 --out /tmp/adlb_cfg --set no.such.key=1");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("unknown key") != std::string::npos);
}

TEST_CASE("full pipeline: simulate, train, separate, eval, inspect") {
  std::string dir = sandbox("adlb_cli_flow");
  std::string sim = dir + "/data";
  std::string simargs = std::string("simulate --count 3 --channels 2 --seed 9 --out ") +
                        sim + " " + kTiny +
                        "--set sim.duration_sec=0.5 --set sim.rir_length=512";
  RunResult r = run(simargs);
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(sim + "/manifest.jsonl"));
  // 3 mixtures, each with mix + 2 refs + noise
  int wavs = 0;
  for (auto& e : fs::directory_iterator(sim))
    if (e.path().extension() == ".wav") ++wavs;
  CHECK(wavs == 3 * 4);

  // same seed reproduces the manifest and audio bit for bit
  std::string sim2 = dir + "/data2";
  run(std::string("simulate --count 3 --channels 2 --seed 9 --out ") + sim2 + " " +
      kTiny + "--set sim.duration_sec=0.5 --set sim.rir_length=512");
  CHECK(adlb::fnv1a_file(sim + "/manifest.jsonl") ==
        adlb::fnv1a_file(sim2 + "/manifest.jsonl"));
  CHECK(adlb::fnv1a_file(sim + "/mix00001.mix.wav") ==
        adlb::fnv1a_file(sim2 + "/mix00001.mix.wav"));

  // pretrain a few steps, then joint from the pretrain checkpoint
  std::string pre = dir + "/pre";
  r = run(std::string("train --manifest ") + sim + "/manifest.jsonl --out " + pre +
          " --seed 3 " + kTiny +
          "--set train.max_steps=3 --set train.epochs=1 --set train.warmup_steps=5 "
          "--set train.log_every=0");
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(pre + "/final.adlb"));
  CHECK(fs::exists(pre + "/final.adlb.json"));
  CHECK(fs::exists(pre + "/loss_curve.csv"));

  std::string joint = dir + "/joint";
  r = run(std::string("train --manifest ") + sim + "/manifest.jsonl --out " + joint +
          " --seed 3 --init " + pre + "/final.adlb " + kTiny +
          "--set train.phase=joint --set train.max_steps=2 --set train.epochs=1 "
          "--set train.warmup_steps=5 --set train.log_every=0");
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(joint + "/final.adlb"));

  // separate with the vad toggle off: sidecar must record vad=false
  std::string sep = dir + "/sep";
  r = run(std::string("separate --in ") + sim + "/mix00000.mix.wav --ckpt " + joint +
          "/final.adlb --out " + sep + " --mode adl-mvdr --no-vad");
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(sep + "/mix00000.mix.stream0.wav"));
  CHECK(fs::exists(sep + "/mix00000.mix.stream1.wav"));
  json sidecar = json::parse(adlb::read_text_file(sep + "/mix00000.mix.sidecar.json"));
  CHECK(sidecar["mode"] == "adl-mvdr");
  CHECK(sidecar["toggles"]["vad"] == false);
  CHECK(sidecar["toggles"]["norm_v"] == true);
  CHECK(sidecar["config"].contains("stft.fft_size"));
  CHECK(sidecar["chunk_permutations"].is_array());
  CHECK(sidecar.contains("checkpoint_fnv1a"));

  // identical invocation is bit-reproducible
  std::string sep2 = dir + "/sep2";
  run(std::string("separate --in ") + sim + "/mix00000.mix.wav --ckpt " + joint +
      "/final.adlb --out " + sep2 + " --mode adl-mvdr --no-vad");
  CHECK(adlb::fnv1a_file(sep + "/mix00000.mix.stream0.wav") ==
        adlb::fnv1a_file(sep2 + "/mix00000.mix.stream0.wav"));

  // eval emits one CSV row per mixture plus a header
  std::string csv = dir + "/eval.csv";
  r = run(std::string("eval --manifest ") + sim + "/manifest.jsonl --ckpt " + joint +
          "/final.adlb --out " + csv + " --mode mask-only");
  CHECK(r.exit_code == 0);
  std::ifstream in(csv);
  int lines = 0;
  std::string line, header;
  while (std::getline(in, line)) {
    if (lines == 0) header = line;
    ++lines;
  }
  CHECK(lines == 4);
  CHECK(header.find("si_sdr0") != std::string::npos);

  // inspect dump: one-line JSON header then fixed-size binary records
  std::string dump = dir + "/dump.bin";
  r = run(std::string("inspect --in ") + sim + "/mix00000.mix.wav --ckpt " + joint +
          "/final.adlb --out " + dump + " --source 1");
  CHECK(r.exit_code == 0);
  std::ifstream din(dump, std::ios::binary);
  std::string hline;
  std::getline(din, hline);
  json header_json = json::parse(hline);
  CHECK(header_json["source"] == 1);
  const int64_t C = header_json["channels"].get<int64_t>();
  const int64_t T = header_json["frames"].get<int64_t>();
  const int64_t F = header_json["bins"].get<int64_t>();
  CHECK(C == 2);
  const auto record = static_cast<int64_t>(8 + 2 * C * 8 + 8);
  auto body_start = static_cast<int64_t>(hline.size()) + 1;
  CHECK(static_cast<int64_t>(fs::file_size(dump)) - body_start == T * F * record);

  fs::remove_all(dir);
}
