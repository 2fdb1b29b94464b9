#pragma once

// Desk-scale synthetic stand-ins for real AIS data. Two scenarios:
//  - lines: straight tracks, constant speed (optional constant along-track
//    acceleration), Gaussian position noise. Noise 0, acceleration 0 gives
//    data a constant-velocity extrapolator predicts exactly.
//  - crossroad: a shared approach leg through a fixed waypoint that forks
//    into three branches (-45, 0, +45 degrees); the branch is the intention
//    class, so the dataset is labeled.

#include <cstdint>
#include <vector>

#include "core/pipeline.hpp"

namespace vtp {

struct LinesConfig {
  std::size_t n_tracks = 20;
  std::size_t track_len = 30;    // samples per track
  double noise_sigma = 50.0;     // meters, per coordinate, i.i.d.
  double accel = 0.0;            // along-track m/s^2 (straight but speeding up)
  std::int64_t delta_s = 900;
  std::uint64_t seed = 1;
};

struct CrossroadConfig {
  std::size_t n_tracks = 200;
  std::size_t approach_len = 16;  // samples before the fork; sample 16 is the waypoint
  std::size_t track_len = 30;
  double noise_sigma = 50.0;
  std::int64_t delta_s = 900;
  std::uint64_t seed = 1;
  // Fixed fork waypoint, Danish-strait scale UTM coordinates.
  double waypoint_e = 550000.0;
  double waypoint_n = 6150000.0;
};

std::vector<Trajectory> synth_lines(const LinesConfig& cfg);
std::vector<Trajectory> synth_crossroad(const CrossroadConfig& cfg);

}  // namespace vtp
