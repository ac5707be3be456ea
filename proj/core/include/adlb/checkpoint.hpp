// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_CHECKPOINT_HPP_
#define ADLB_CHECKPOINT_HPP_

#include <string>

#include "adlb/nn.hpp"

namespace adlb {

// Checkpoint file layout (little-endian):
//   magic "ADLB", format version u32, entry count u32, then per entry:
//   name length u32 + UTF-8 name, dtype tag u8 (0 = f64, 1 = f32),
//   rank u32, extents u64 each, raw payload.
// f64 round-trips bit-exactly; f32 entries widen losslessly on load.
enum class CkptDtype : uint8_t { kF64 = 0, kF32 = 1 };

void save_checkpoint(const ParameterStore& ps, const std::string& path,
                     CkptDtype dtype = CkptDtype::kF64);
ParameterStore load_checkpoint(const std::string& path);

}  // namespace adlb

#endif  // ADLB_CHECKPOINT_HPP_
