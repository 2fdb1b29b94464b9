#pragma once

// From validated AIS records to normalized, windowed training tuples:
// group by vessel, segment voyages on reporting gaps, project to UTM,
// resample onto a uniform grid, label intentions, split at trajectory
// level, and z-score with training-split statistics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/ais.hpp"

namespace vtp {

// One vessel's reports between gaps, projected to UTM, time-ordered.
struct Voyage {
  std::string vessel;           // decimal MMSI
  std::vector<std::int64_t> t;  // strictly increasing seconds
  std::vector<double> easting;
  std::vector<double> northing;
};

// Uniformly resampled track. Sample i is at time t0 + i*delta_s.
struct Trajectory {
  std::string id;  // "<vessel>#<segment ordinal>"
  std::int64_t t0 = 0;
  std::int64_t delta_s = 0;
  std::vector<double> easting;
  std::vector<double> northing;
  int intention = -1;  // class in [0, v), or -1 when unlabeled

  std::size_t size() const { return easting.size(); }
};

struct PipelineCounters {
  std::size_t records_out_of_zone = 0;  // skipped at projection
  std::size_t duplicate_timestamps = 0; // dropped (first report kept)
  std::size_t segments_total = 0;
  std::size_t segments_too_short = 0;   // dropped before windowing
  std::size_t trajectories_unlabeled = 0;  // excluded in labeled mode
};

// Group records by MMSI, sort by time (stable), drop duplicate timestamps,
// project to UTM (out-of-zone rows skipped and counted), and cut a new
// segment wherever the inter-report gap exceeds `gap_s`. Voyages come out
// ordered by vessel id then time.
std::vector<Voyage> segment_voyages(const std::vector<AisRecord>& records, std::int64_t gap_s,
                                    int utm_zone, PipelineCounters& counters);

// Linear interpolation onto t0, t0+delta, ... t0 is the first report time;
// no extrapolation beyond the last report. Empty when the span is < delta.
std::optional<Trajectory> resample_voyage(const Voyage& voyage, std::int64_t delta_s,
                                          int segment_ordinal);

// Stride-1 sliding windows: count = T - (l+h) + 1, empty when T < l+h.
// Each entry is the start index of the input block.
std::vector<std::size_t> window_starts(std::size_t track_len, std::size_t l, std::size_t h);

// Named geographic bounding box for destination-based intention labels.
struct Region {
  std::string name;
  double min_lat = 0.0, min_lon = 0.0, max_lat = 0.0, max_lon = 0.0;
};

// Label by the final resampled position (inverse-projected to lat/lon):
// returns the matching region's index, or nullopt when no region matches.
// Throws DataError listing names when several regions match.
std::optional<int> label_by_regions(const Trajectory& traj, const std::vector<Region>& regions,
                                    int utm_zone);

// Per-axis z-score statistics over training-split coordinates.
struct NormStats {
  double mean_e = 0.0, mean_n = 0.0;
  double std_e = 1.0, std_n = 1.0;
};

// Stats over every sample of the given trajectories (population std).
// Throws DataError when either axis has zero spread or there are no points.
NormStats compute_norm_stats(const std::vector<Trajectory>& trajectories);

// z-score one point / undo it.
void normalize_point(const NormStats& s, double& e, double& n);
void denormalize_point(const NormStats& s, double& e, double& n);

// Covariance conjugation for denormalization: sigma_raw = D sigma_norm D
// with D = diag(std_e, std_n). `sigma` is row-major 2x2.
void denormalize_covariance(const NormStats& s, double sigma[4]);

// Seeded trajectory-level split. Fractions must sum to 1 (1e-9); counts are
// round(n*f_train), round(n*f_val), remainder test. Returns indices into
// the input list, shuffled; no index appears twice.
struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};
SplitIndices split_trajectories(std::size_t count, double f_train, double f_val, double f_test,
                                std::uint64_t seed);

}  // namespace vtp
