// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace adlb {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'L', 'B'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  ADLB_CHECK(in.good(), "checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const ParameterStore& ps, const std::string& path,
                     CkptDtype dtype) {
  std::ofstream out(path, std::ios::binary);
  ADLB_CHECK(out.good(), "checkpoint: cannot write " << path);
  out.write(kMagic, 4);
  write_pod<uint32_t>(out, kVersion);
  write_pod<uint32_t>(out, static_cast<uint32_t>(ps.size()));
  for (const auto& [name, t] : ps.items()) {
    write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint8_t>(out, static_cast<uint8_t>(dtype));
    write_pod<uint32_t>(out, static_cast<uint32_t>(t.shape().size()));
    for (int64_t e : t.shape()) write_pod<uint64_t>(out, static_cast<uint64_t>(e));
    if (dtype == CkptDtype::kF64) {
      out.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
    } else {
      std::vector<float> narrow(t.data(), t.data() + t.numel());
      out.write(reinterpret_cast<const char*>(narrow.data()),
                static_cast<std::streamsize>(narrow.size() * sizeof(float)));
    }
  }
  ADLB_CHECK(out.good(), "checkpoint: short write " << path);
}

ParameterStore load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ADLB_CHECK(in.good(), "checkpoint: cannot open " << path);
  char magic[4];
  in.read(magic, 4);
  ADLB_CHECK(in.good() && std::memcmp(magic, kMagic, 4) == 0,
             "checkpoint: bad magic in " << path);
  uint32_t version = read_pod<uint32_t>(in);
  ADLB_CHECK(version == kVersion, "checkpoint: unsupported version " << version);
  uint32_t count = read_pod<uint32_t>(in);
  ParameterStore ps;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = read_pod<uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    ADLB_CHECK(in.good(), "checkpoint: truncated name");
    auto dtype = static_cast<CkptDtype>(read_pod<uint8_t>(in));
    ADLB_CHECK(dtype == CkptDtype::kF64 || dtype == CkptDtype::kF32,
               "checkpoint: unknown dtype tag for " << name);
    uint32_t rank = read_pod<uint32_t>(in);
    ADLB_CHECK(rank <= 8, "checkpoint: implausible rank " << rank);
    Shape shape(rank);
    int64_t numel = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<int64_t>(read_pod<uint64_t>(in));
      numel *= shape[d];
    }
    std::vector<double> data(static_cast<size_t>(numel));
    if (dtype == CkptDtype::kF64) {
      in.read(reinterpret_cast<char*>(data.data()),
              static_cast<std::streamsize>(numel * sizeof(double)));
    } else {
      std::vector<float> narrow(static_cast<size_t>(numel));
      in.read(reinterpret_cast<char*>(narrow.data()),
              static_cast<std::streamsize>(numel * sizeof(float)));
      for (int64_t k = 0; k < numel; ++k) data[k] = narrow[k];
    }
    ADLB_CHECK(in.good(), "checkpoint: truncated payload for " << name);
    ps.put(name, Tensor(std::move(shape), std::move(data)));
  }
  return ps;
}

}  // namespace adlb
