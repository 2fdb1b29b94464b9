#include "core/synth.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace vtp {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr std::int64_t kBaseEpoch = 1600000000;  // fixed, arbitrary anchor

std::string padded(const char* prefix, std::size_t i) {
  std::string n = std::to_string(i);
  while (n.size() < 3) n.insert(n.begin(), '0');
  return std::string(prefix) + n + "#0";
}

}  // namespace

std::vector<Trajectory> synth_lines(const LinesConfig& cfg) {
  if (cfg.n_tracks == 0 || cfg.track_len < 2) throw ConfigError("lines scenario needs tracks of >= 2 samples");
  if (cfg.delta_s <= 0) throw ConfigError("sampling interval must be positive");
  if (cfg.noise_sigma < 0.0) throw ConfigError("noise sigma must be non-negative");
  Rng rng(cfg.seed);
  std::vector<Trajectory> out;
  out.reserve(cfg.n_tracks);
  for (std::size_t i = 0; i < cfg.n_tracks; ++i) {
    const double e0 = 450000.0 + rng.uniform() * 200000.0;
    const double n0 = 6050000.0 + rng.uniform() * 300000.0;
    const double heading = rng.uniform() * 2.0 * kPi;
    const double speed = 4.0 + rng.uniform() * 6.0;  // m/s
    const double dx = std::cos(heading), dy = std::sin(heading);

    Trajectory tr;
    tr.id = padded("line-", i);
    tr.t0 = kBaseEpoch + static_cast<std::int64_t>(i) * 86400;
    tr.delta_s = cfg.delta_s;
    tr.intention = -1;
    for (std::size_t k = 0; k < cfg.track_len; ++k) {
      const double t = static_cast<double>(k) * static_cast<double>(cfg.delta_s);
      const double along = speed * t + 0.5 * cfg.accel * t * t;
      double e = e0 + dx * along;
      double n = n0 + dy * along;
      if (cfg.noise_sigma > 0.0) {
        e += cfg.noise_sigma * rng.normal();
        n += cfg.noise_sigma * rng.normal();
      }
      tr.easting.push_back(e);
      tr.northing.push_back(n);
    }
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<Trajectory> synth_crossroad(const CrossroadConfig& cfg) {
  if (cfg.n_tracks == 0) throw ConfigError("crossroad scenario needs at least one track");
  if (cfg.track_len < cfg.approach_len + 2)
    throw ConfigError("crossroad track_len must exceed approach_len + 1");
  if (cfg.delta_s <= 0) throw ConfigError("sampling interval must be positive");
  if (cfg.noise_sigma < 0.0) throw ConfigError("noise sigma must be non-negative");

  Rng rng(cfg.seed);
  std::vector<Trajectory> out;
  out.reserve(cfg.n_tracks);
  for (std::size_t i = 0; i < cfg.n_tracks; ++i) {
    const double speed = 5.0 + rng.uniform() * 3.0;  // m/s
    const int branch = static_cast<int>(rng.below(3));
    // Approach heads due east into the fixed waypoint; branches turn
    // -45 / 0 / +45 degrees there.
    const double turn = (static_cast<double>(branch) - 1.0) * (kPi / 4.0);
    const double bx = std::cos(turn), by = std::sin(turn);
    const double step = speed * static_cast<double>(cfg.delta_s);

    Trajectory tr;
    tr.id = padded("cross-", i);
    tr.t0 = kBaseEpoch + static_cast<std::int64_t>(i) * 43200;
    tr.delta_s = cfg.delta_s;
    tr.intention = branch;
    for (std::size_t k = 0; k < cfg.track_len; ++k) {
      double e, n;
      if (k <= cfg.approach_len) {
        // Sample approach_len lands exactly on the waypoint.
        const double back = static_cast<double>(cfg.approach_len - k) * step;
        e = cfg.waypoint_e - back;
        n = cfg.waypoint_n;
      } else {
        const double ahead = static_cast<double>(k - cfg.approach_len) * step;
        e = cfg.waypoint_e + bx * ahead;
        n = cfg.waypoint_n + by * ahead;
      }
      if (cfg.noise_sigma > 0.0) {
        e += cfg.noise_sigma * rng.normal();
        n += cfg.noise_sigma * rng.normal();
      }
      tr.easting.push_back(e);
      tr.northing.push_back(n);
    }
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace vtp
