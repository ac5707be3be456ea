// Copyright 2026 adlbeam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "adlb/room.hpp"

#include <cmath>

namespace adlb {

namespace {

double ipow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

bool RoomConfig::inside(const Point3& p) const {
  for (int i = 0; i < 3; ++i)
    if (!(p[i] > 0.0 && p[i] < dimensions[i])) return false;
  return true;
}

void RoomConfig::validate() const {
  for (int i = 0; i < 3; ++i)
    ADLB_CHECK(dimensions[i] > 0.0, "room: non-positive dimension " << dimensions[i]);
  for (double a : absorption)
    ADLB_CHECK(a >= 0.0 && a <= 1.0, "room: absorption " << a << " outside [0,1]");
  ADLB_CHECK(speed_of_sound > 0.0, "room: speed of sound must be positive");
  ADLB_CHECK(sample_rate > 0 && rir_length > 0, "room: bad sampling setup");
  for (const auto& m : mics)
    ADLB_CHECK(inside(m), "room: microphone (" << m[0] << "," << m[1] << "," << m[2]
                                               << ") outside room");
}

std::vector<double> simulate_rir(const RoomConfig& room, const Point3& source,
                                 const Point3& mic) {
  room.validate();
  ADLB_CHECK(room.inside(source), "rir: source (" << source[0] << "," << source[1]
                                                  << "," << source[2]
                                                  << ") outside room");
  ADLB_CHECK(room.inside(mic), "rir: mic (" << mic[0] << "," << mic[1] << "," << mic[2]
                                            << ") outside room");

  const double c = room.speed_of_sound;
  const double fs = room.sample_rate;
  std::vector<double> imp(static_cast<size_t>(room.rir_length), 0.0);

  // amplitude reflection coefficients per wall
  double beta[6];
  for (int i = 0; i < 6; ++i) beta[i] = std::sqrt(1.0 - room.absorption[i]);

  // image indices far enough that every tap inside rir_length is covered
  const double max_dist = (room.rir_length + 1.0) * c / fs;
  int n[3];
  for (int i = 0; i < 3; ++i)
    n[i] = static_cast<int>(std::ceil(max_dist / (2.0 * room.dimensions[i]))) + 1;

  const double* L = room.dimensions.data();
  for (int mx = -n[0]; mx <= n[0]; ++mx)
    for (int my = -n[1]; my <= n[1]; ++my)
      for (int mz = -n[2]; mz <= n[2]; ++mz)
        for (int q = 0; q <= 1; ++q)
          for (int j = 0; j <= 1; ++j)
            for (int k = 0; k <= 1; ++k) {
              const int bounce[6] = {std::abs(mx - q), std::abs(mx),
                                     std::abs(my - j), std::abs(my),
                                     std::abs(mz - k), std::abs(mz)};
              if (room.max_order >= 0) {
                int order = 0;
                for (int b : bounce) order += b;
                if (order > room.max_order) continue;
              }
              const double img[3] = {(1 - 2 * q) * source[0] + 2 * mx * L[0],
                                     (1 - 2 * j) * source[1] + 2 * my * L[1],
                                     (1 - 2 * k) * source[2] + 2 * mz * L[2]};
              const double dx = img[0] - mic[0], dy = img[1] - mic[1],
                           dz = img[2] - mic[2];
              const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
              const auto tap = static_cast<int64_t>(std::llround(dist / c * fs));
              if (tap < 0 || tap >= room.rir_length) continue;
              double gain = 1.0;
              for (int w = 0; w < 6; ++w) gain *= ipow(beta[w], bounce[w]);
              if (gain == 0.0) continue;
              imp[static_cast<size_t>(tap)] +=
                  gain / (4.0 * M_PI * std::max(dist, 1e-2));
            }
  return imp;
}

}  // namespace adlb
