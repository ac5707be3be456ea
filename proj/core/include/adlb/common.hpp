// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_COMMON_HPP_
#define ADLB_COMMON_HPP_

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace adlb {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] void fail(const std::string& msg);

#define ADLB_CHECK(cond, msg)                        \
  do {                                               \
    if (!(cond)) {                                   \
      std::ostringstream os__;                       \
      os__ << msg;                                   \
      ::adlb::fail(os__.str());                      \
    }                                                \
  } while (0)

// Verbosity from ADLB_LOG: quiet(0), info(1, default), debug(2).
int log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);
void log_warn(const std::string& msg);

// 64-bit mixing for deriving per-item seeds (splitmix64 finalizer).
uint64_t mix_seed(uint64_t seed, uint64_t stream);

// Deterministic RNG. mt19937_64 produces a bit-exact stream per the
// standard; distributions are hand-rolled because the std:: distribution
// objects are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  uint64_t next_u64() { return gen_(); }
  // uniform in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // standard normal, Box-Muller with cached spare
  double normal();
  // inclusive bounds
  int64_t uniform_int(int64_t lo, int64_t hi);
  Rng fork(uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

double now_seconds();

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a 64-bit over a file's bytes; used to tag checkpoints in sidecars.
uint64_t fnv1a_file(const std::string& path);
std::string hex64(uint64_t v);

}  // namespace adlb

#endif  // ADLB_COMMON_HPP_
