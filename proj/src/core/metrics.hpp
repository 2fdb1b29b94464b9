#pragma once

// Prediction quality metrics over de-normalized (raw UTM meter) outputs:
// positional error at fixed horizons, displacement error over the whole
// horizon, calibration coverage against the reported covariances, APE as a
// function of distance from a fixed origin, and the constant-velocity
// extrapolation baseline.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace vtp {

// One evaluated window. All arrays are step-major with (easting, northing)
// interleaved: mean/truth have 2h entries, cov has 4h (row-major 2x2 per
// step). cov may be empty when only positional metrics are wanted.
struct EvalPair {
  std::vector<double> mean;
  std::vector<double> truth;
  std::vector<double> cov;
};

// Mean Euclidean error at 1-based step k, meters.
double ape(const std::vector<EvalPair>& pairs, std::size_t k);

// Mean Euclidean error over all steps and windows, meters.
double ade(const std::vector<EvalPair>& pairs);

// 1-based step index for a wall-clock horizon: round(hours*3600/delta_s),
// clamped to [1, horizon].
std::size_t horizon_step(double hours, std::int64_t delta_s, std::size_t horizon);

// chi-squared quantile with 2 degrees of freedom: -2 ln(1-level).
double chi2_quantile_2dof(double level);

struct CoverageResult {
  double fraction = 0.0;       // covered / usable
  std::size_t covered = 0;
  std::size_t usable = 0;      // (window, step) pairs with invertible cov
  std::size_t excluded = 0;    // singular or non-finite covariances
};

// Fraction of (window, step) pairs whose truth lies inside the reported
// Gaussian's `level` ellipse (Mahalanobis^2 <= chi2_quantile_2dof(level)).
CoverageResult coverage(const std::vector<EvalPair>& pairs, double level);

// Mean generalized variance (sqrt of the covariance determinant, m^2) at
// 1-based step k over all windows. Determinants that floating-point noise
// pushes below zero clamp to zero. Every pair must carry covariances.
double mean_generalized_variance_at(const std::vector<EvalPair>& pairs, std::size_t k);

struct ApeBin {
  double lo = 0.0, hi = 0.0;  // meters from the origin
  std::size_t count = 0;
  double ape = 0.0;           // mean error at the requested step, meters
};

// Windows are binned by the truth's distance from `origin` at step k;
// per-bin APE at that step. Bins run contiguously from 0 to the farthest
// occupied bin; empty bins carry count 0.
std::vector<ApeBin> distance_binned_ape(const std::vector<EvalPair>& pairs, std::size_t k,
                                        double origin_e, double origin_n, double bin_width);

struct GenVarBin {
  double lo = 0.0, hi = 0.0;  // meters from the origin
  std::size_t count = 0;
  double gen_var = 0.0;  // mean sqrt(det cov) at the requested step, m^2
};

// Same binning rule as distance_binned_ape (truth distance from the origin
// at step k), but averaging the generalized variance per bin. Every pair
// must carry covariances.
std::vector<GenVarBin> distance_binned_gen_var(const std::vector<EvalPair>& pairs, std::size_t k,
                                               double origin_e, double origin_n, double bin_width);

// Constant-velocity extrapolation from the last two input points:
// v = (x_l - x_{l-1}) / delta, predictions x_l + k*delta*v for k=1..h.
// `inputs` is 2l interleaved; returns 2h interleaved.
std::vector<double> ncv_baseline(const std::vector<double>& inputs, std::int64_t delta_s,
                                 std::size_t horizon);

}  // namespace vtp
