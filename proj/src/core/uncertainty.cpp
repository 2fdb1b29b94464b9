#include "core/uncertainty.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace vtp {

namespace {

std::array<double, 4> symmetrize(const std::array<double, 4>& a) {
  const double off = 0.5 * (a[1] + a[2]);
  return {a[0], off, off, a[3]};
}

// Floor negative eigenvalues of a symmetric 2x2 at zero, preserving the
// eigenvectors.
std::array<double, 4> psd_clip(const std::array<double, 4>& a_in) {
  const std::array<double, 4> a = symmetrize(a_in);
  const double tr2 = 0.5 * (a[0] + a[3]);
  const double disc = std::sqrt(std::max(0.0, 0.25 * (a[0] - a[3]) * (a[0] - a[3]) + a[1] * a[1]));
  const double lo = tr2 - disc;
  if (lo >= 0.0) return a;
  const double hi = tr2 + disc;
  if (hi <= 0.0) return {0, 0, 0, 0};
  // Eigenvector of the positive eigenvalue; pick the better-conditioned form.
  double qx, qy;
  if (std::fabs(a[0] - hi) > std::fabs(a[3] - hi)) {
    qx = a[1];
    qy = hi - a[0];
  } else {
    qx = hi - a[3];
    qy = a[1];
  }
  const double n = std::hypot(qx, qy);
  if (n == 0.0) return {hi, 0, 0, 0};  // already diagonal
  qx /= n;
  qy /= n;
  return {hi * qx * qx, hi * qx * qy, hi * qx * qy, hi * qy * qy};
}

}  // namespace

McBatch mc_forward(ModelParams& params, const std::vector<Tensor>& xs, const Tensor* psi,
                   std::size_t horizon, std::size_t mc_samples, std::uint64_t master_seed) {
  if (mc_samples == 0) throw ContractError("mc_forward requires at least one sample");
  McBatch batch;
  batch.horizon = horizon;
  batch.samples.reserve(mc_samples);
  batch.seeds.reserve(mc_samples);
  for (std::size_t j = 0; j < mc_samples; ++j) {
    const std::uint64_t seed = mix_seed(master_seed, j);
    Rng rng(seed);
    PredictResult r = predict_once(params, xs, psi, horizon, ForwardMode::McSample, rng);
    batch.samples.push_back(std::move(r.steps));
    batch.seeds.push_back(seed);
  }
  return batch;
}

PredictionMoments combine_moments(const McBatch& batch) {
  if (batch.samples.empty()) throw ContractError("combine_moments requires a non-empty batch");
  const std::size_t M = batch.samples.size();
  const std::size_t h = batch.horizon;
  for (const auto& seq : batch.samples)
    if (seq.size() != h)
      throw ContractError("all Monte Carlo samples must share the horizon length");

  PredictionMoments out;
  out.steps.resize(h);
  const double inv_m = 1.0 / static_cast<double>(M);
  for (std::size_t t = 0; t < h; ++t) {
    StepMoments& s = out.steps[t];
    double mx = 0, my = 0;
    for (std::size_t j = 0; j < M; ++j) {
      mx += batch.samples[j][t].mean[0];
      my += batch.samples[j][t].mean[1];
    }
    mx *= inv_m;
    my *= inv_m;
    s.mean = {mx, my};

    std::array<double, 4> epi{0, 0, 0, 0};
    std::array<double, 4> ale{0, 0, 0, 0};
    for (std::size_t j = 0; j < M; ++j) {
      const GaussianStep& g = batch.samples[j][t];
      const double dx = g.mean[0] - mx;
      const double dy = g.mean[1] - my;
      epi[0] += dx * dx;
      epi[1] += dx * dy;
      epi[3] += dy * dy;
      for (int k = 0; k < 4; ++k) ale[k] += g.sigma[static_cast<std::size_t>(k)];
    }
    for (double& x : epi) x *= inv_m;
    epi[2] = epi[1];
    for (double& x : ale) x *= inv_m;

    s.epistemic_raw = epi;
    s.epistemic = psd_clip(epi);
    s.aleatoric = ale;
    for (std::size_t k = 0; k < 4; ++k) s.total_raw[k] = epi[k] + ale[k];
    for (std::size_t k = 0; k < 4; ++k) s.total[k] = s.epistemic[k] + ale[k];
  }
  return out;
}

double generalized_variance(const std::array<double, 4>& sigma) {
  const double det = sigma[0] * sigma[3] - sigma[1] * sigma[2];
  return std::sqrt(std::max(0.0, det));
}

double mean_generalized_variance(const PredictionMoments& pred) {
  if (pred.steps.empty()) throw ContractError("empty prediction");
  double acc = 0.0;
  for (const StepMoments& s : pred.steps) acc += generalized_variance(s.total);
  return acc / static_cast<double>(pred.steps.size());
}

double min_eigenvalue(const std::array<double, 4>& sigma) {
  const std::array<double, 4> a = symmetrize(sigma);
  const double tr2 = 0.5 * (a[0] + a[3]);
  const double disc = std::sqrt(std::max(0.0, 0.25 * (a[0] - a[3]) * (a[0] - a[3]) + a[1] * a[1]));
  return tr2 - disc;
}

}  // namespace vtp
