#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/error.hpp"

namespace vtp {
namespace {

std::size_t steps_of(const EvalPair& p) {
  if (p.mean.size() != p.truth.size() || p.mean.empty() || p.mean.size() % 2 != 0)
    throw ContractError("evaluation pair mean/truth lengths disagree or are empty");
  if (!p.cov.empty() && p.cov.size() != 2 * p.mean.size())
    throw ContractError("evaluation pair covariance length disagrees with the horizon");
  return p.mean.size() / 2;
}

double step_error(const EvalPair& p, std::size_t k0) {
  const double de = p.mean[2 * k0] - p.truth[2 * k0];
  const double dn = p.mean[2 * k0 + 1] - p.truth[2 * k0 + 1];
  return std::hypot(de, dn);
}

double step_gen_var(const EvalPair& p, std::size_t k0) {
  if (p.cov.empty())
    throw ContractError("generalized variance needs covariances on every pair");
  const double det = p.cov[4 * k0] * p.cov[4 * k0 + 3] - p.cov[4 * k0 + 1] * p.cov[4 * k0 + 2];
  return std::sqrt(std::max(0.0, det));
}

// Shared binning rule for the per-distance tables: a window falls in the bin
// of its truth's distance from the origin at 1-based step k. Returns per-bin
// counts and sums of `value(pair, k-1)`, contiguous from bin 0.
template <typename ValueFn>
void bin_by_distance(const std::vector<EvalPair>& pairs, std::size_t k, double origin_e,
                     double origin_n, double bin_width, ValueFn&& value,
                     std::vector<std::size_t>& counts, std::vector<double>& sums) {
  if (bin_width <= 0.0) throw ContractError("bin width must be positive");
  counts.clear();
  sums.clear();
  for (const EvalPair& p : pairs) {
    const std::size_t h = steps_of(p);
    if (k < 1 || k > h)
      throw ContractError("horizon step " + std::to_string(k) + " outside [1, " +
                          std::to_string(h) + "]");
    const double dist = std::hypot(p.truth[2 * (k - 1)] - origin_e,
                                   p.truth[2 * (k - 1) + 1] - origin_n);
    const std::size_t bin = static_cast<std::size_t>(dist / bin_width);
    if (bin >= counts.size()) {
      counts.resize(bin + 1, 0);
      sums.resize(bin + 1, 0.0);
    }
    ++counts[bin];
    sums[bin] += value(p, k - 1);
  }
}

}  // namespace

double ape(const std::vector<EvalPair>& pairs, std::size_t k) {
  if (pairs.empty()) throw ContractError("ape needs at least one evaluated window");
  double sum = 0.0;
  for (const EvalPair& p : pairs) {
    const std::size_t h = steps_of(p);
    if (k < 1 || k > h)
      throw ContractError("horizon step " + std::to_string(k) + " outside [1, " +
                          std::to_string(h) + "]");
    sum += step_error(p, k - 1);
  }
  return sum / static_cast<double>(pairs.size());
}

double ade(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) throw ContractError("ade needs at least one evaluated window");
  double sum = 0.0;
  std::size_t count = 0;
  for (const EvalPair& p : pairs) {
    const std::size_t h = steps_of(p);
    for (std::size_t k = 0; k < h; ++k) sum += step_error(p, k);
    count += h;
  }
  return sum / static_cast<double>(count);
}

std::size_t horizon_step(double hours, std::int64_t delta_s, std::size_t horizon) {
  if (delta_s <= 0 || horizon == 0) throw ContractError("horizon_step needs delta > 0 and h > 0");
  const double raw = hours * 3600.0 / static_cast<double>(delta_s);
  long long k = std::llround(raw);
  if (k < 1) k = 1;
  if (k > static_cast<long long>(horizon)) k = static_cast<long long>(horizon);
  return static_cast<std::size_t>(k);
}

double chi2_quantile_2dof(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ContractError("coverage level must be in (0, 1)");
  return -2.0 * std::log(1.0 - level);
}

CoverageResult coverage(const std::vector<EvalPair>& pairs, double level) {
  const double threshold = chi2_quantile_2dof(level);
  CoverageResult out;
  for (const EvalPair& p : pairs) {
    const std::size_t h = steps_of(p);
    if (p.cov.empty()) throw ContractError("coverage needs covariances on every pair");
    for (std::size_t k = 0; k < h; ++k) {
      const double a = p.cov[4 * k], b = p.cov[4 * k + 1], c = p.cov[4 * k + 2],
                   d = p.cov[4 * k + 3];
      const double det = a * d - b * c;
      if (!(det > 0.0) || !std::isfinite(det) || !std::isfinite(a + d)) {
        ++out.excluded;
        continue;
      }
      const double r1 = p.truth[2 * k] - p.mean[2 * k];
      const double r2 = p.truth[2 * k + 1] - p.mean[2 * k + 1];
      const double m2 = (r1 * (d * r1 - b * r2) + r2 * (-c * r1 + a * r2)) / det;
      ++out.usable;
      if (m2 <= threshold) ++out.covered;
    }
  }
  out.fraction = out.usable == 0 ? 0.0 : static_cast<double>(out.covered) /
                                             static_cast<double>(out.usable);
  return out;
}

double mean_generalized_variance_at(const std::vector<EvalPair>& pairs, std::size_t k) {
  if (pairs.empty()) throw ContractError("cannot aggregate generalized variance over zero windows");
  double sum = 0.0;
  for (const EvalPair& p : pairs) {
    const std::size_t h = steps_of(p);
    if (k < 1 || k > h)
      throw ContractError("horizon step " + std::to_string(k) + " outside [1, " +
                          std::to_string(h) + "]");
    sum += step_gen_var(p, k - 1);
  }
  return sum / static_cast<double>(pairs.size());
}

std::vector<ApeBin> distance_binned_ape(const std::vector<EvalPair>& pairs, std::size_t k,
                                        double origin_e, double origin_n, double bin_width) {
  if (pairs.empty()) {
    if (bin_width <= 0.0) throw ContractError("bin width must be positive");
    return {};
  }
  std::vector<std::size_t> counts;
  std::vector<double> sums;
  bin_by_distance(pairs, k, origin_e, origin_n, bin_width, step_error, counts, sums);
  std::vector<ApeBin> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i].lo = static_cast<double>(i) * bin_width;
    out[i].hi = static_cast<double>(i + 1) * bin_width;
    out[i].count = counts[i];
    out[i].ape = counts[i] == 0 ? 0.0 : sums[i] / static_cast<double>(counts[i]);
  }
  return out;
}

std::vector<GenVarBin> distance_binned_gen_var(const std::vector<EvalPair>& pairs, std::size_t k,
                                               double origin_e, double origin_n,
                                               double bin_width) {
  if (pairs.empty()) {
    if (bin_width <= 0.0) throw ContractError("bin width must be positive");
    return {};
  }
  std::vector<std::size_t> counts;
  std::vector<double> sums;
  bin_by_distance(pairs, k, origin_e, origin_n, bin_width, step_gen_var, counts, sums);
  std::vector<GenVarBin> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i].lo = static_cast<double>(i) * bin_width;
    out[i].hi = static_cast<double>(i + 1) * bin_width;
    out[i].count = counts[i];
    out[i].gen_var = counts[i] == 0 ? 0.0 : sums[i] / static_cast<double>(counts[i]);
  }
  return out;
}

std::vector<double> ncv_baseline(const std::vector<double>& inputs, std::int64_t delta_s,
                                 std::size_t horizon) {
  if (inputs.size() < 4 || inputs.size() % 2 != 0)
    throw ContractError("constant-velocity baseline needs at least two input points");
  if (delta_s <= 0 || horizon == 0)
    throw ContractError("constant-velocity baseline needs delta > 0 and h > 0");
  const std::size_t l = inputs.size() / 2;
  const double xe = inputs[2 * (l - 1)], xn = inputs[2 * (l - 1) + 1];
  const double ve = (xe - inputs[2 * (l - 2)]) / static_cast<double>(delta_s);
  const double vn = (xn - inputs[2 * (l - 2) + 1]) / static_cast<double>(delta_s);
  std::vector<double> out(2 * horizon);
  for (std::size_t k = 1; k <= horizon; ++k) {
    const double t = static_cast<double>(k) * static_cast<double>(delta_s);
    out[2 * (k - 1)] = xe + ve * t;
    out[2 * (k - 1) + 1] = xn + vn * t;
  }
  return out;
}

}  // namespace vtp
