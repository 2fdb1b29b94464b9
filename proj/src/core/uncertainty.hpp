#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "core/model.hpp"

namespace vtp {

// Monte Carlo dropout batch: M forward passes with independently sampled
// masks, each pass one draw from the approximate weight posterior.
struct McBatch {
  std::size_t horizon = 0;
  std::vector<std::vector<GaussianStep>> samples;  // M x horizon
  std::vector<std::uint64_t> seeds;                // per-pass mask seeds
};

// Runs M stochastic passes. Pass j uses a mask stream derived from
// (master_seed, j), so the batch is reproducible regardless of execution
// order and any prefix of a longer batch is unchanged by growing M.
McBatch mc_forward(ModelParams& params, const std::vector<Tensor>& xs, const Tensor* psi,
                   std::size_t horizon, std::size_t mc_samples, std::uint64_t master_seed);

// Per-step combined moments. Covariances are row-major 2x2.
struct StepMoments {
  std::array<double, 2> mean{};
  std::array<double, 4> epistemic{};      // spread of sample means (PSD-clipped)
  std::array<double, 4> epistemic_raw{};  // as computed, before the clip
  std::array<double, 4> aleatoric{};      // average of per-sample covariances
  std::array<double, 4> total{};          // epistemic + aleatoric (clipped)
  std::array<double, 4> total_raw{};
};

struct PredictionMoments {
  std::vector<StepMoments> steps;
};

// Moment matching across the batch, population form (divisor M):
//
//   mean_t  = (1/M) sum_j mu_t^j
//   total_t = (1/M) sum_j mu_t^j mu_t^jT - mean_t mean_tT   (epistemic)
//           + (1/M) sum_j Sigma_t^j                         (aleatoric)
//
// The epistemic part is computed in centered form, which is algebraically
// identical and keeps M=1 exactly zero. Floating-point noise can still
// leave a tiny negative eigenvalue; reported matrices get a symmetric
// eigenvalue floor at zero, with the raw matrices preserved alongside.
PredictionMoments combine_moments(const McBatch& batch);

// sqrt(det Sigma) of a 2x2 covariance; negative determinants (possible only
// through floating-point noise on raw matrices) clamp to zero.
double generalized_variance(const std::array<double, 4>& sigma);

// Across-step average of per-step generalized variances.
double mean_generalized_variance(const PredictionMoments& pred);

// Smallest eigenvalue of a symmetric 2x2 matrix.
double min_eigenvalue(const std::array<double, 4>& sigma);

}  // namespace vtp
