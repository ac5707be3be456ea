// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef ADLB_ROOM_HPP_
#define ADLB_ROOM_HPP_

#include <array>
#include <vector>

#include "adlb/common.hpp"

namespace adlb {

using Point3 = std::array<double, 3>;

// Shoebox room for image-method impulse responses. Walls are ordered
// x=0, x=Lx, y=0, y=Ly, z=0, z=Lz; absorption is energy absorption in
// [0,1], amplitude reflection per bounce is sqrt(1 - absorption).
struct RoomConfig {
  Point3 dimensions{6.0, 5.0, 3.0};
  std::array<double, 6> absorption{0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
  double speed_of_sound = 343.0;
  int max_order = -1;  // -1: every image that lands inside rir_length
  int sample_rate = 16000;
  int rir_length = 4096;
  std::vector<Point3> mics;

  void validate() const;
  bool inside(const Point3& p) const;
};

// Image-method FIR: each image contributes one integer-delay tap at
// round(distance/c * sample_rate) with amplitude prod(sqrt(1-a)) / (4 pi d).
std::vector<double> simulate_rir(const RoomConfig& room, const Point3& source,
                                 const Point3& mic);

}  // namespace adlb

#endif  // ADLB_ROOM_HPP_
