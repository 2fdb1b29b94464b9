#include "core/gradcheck.hpp"

#include <cmath>
#include <cstring>

#include "core/error.hpp"

namespace vtp {

namespace {
double evaluate(const std::function<Var(Tape&, Var)>& build, const Tensor& x) {
  Tape tape;
  Var root = build(tape, tape.input(x));
  const Tensor& out = tape.value(root);
  if (!out.is_scalar()) throw ContractError("grad_check target must be scalar, got " + out.shape_str());
  return out.data[0];
}
}  // namespace

GradCheckReport grad_check(const std::function<Var(Tape&, Var)>& build, const Tensor& x,
                           double step, double tol) {
  if (step <= 0.0) throw ContractError("grad_check step must be positive");
  GradCheckReport report;

  const double f0 = evaluate(build, x);
  const double f0_again = evaluate(build, x);
  report.deterministic =
      std::memcmp(&f0, &f0_again, sizeof(double)) == 0 && std::isfinite(f0);
  if (!report.deterministic) return report;

  // Analytic gradient w.r.t. the input leaf.
  Tape tape;
  Var leaf = tape.input(x);
  Var root = build(tape, leaf);
  tape.backward(root);
  const Tensor analytic = tape.grad(leaf);

  constexpr double kEps = 1e-6;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    Tensor xp = x;
    Tensor xm = x;
    xp.data[i] += step;
    xm.data[i] -= step;
    const double numeric = (evaluate(build, xp) - evaluate(build, xm)) / (2.0 * step);
    const double ad = analytic.data[i];
    const double rel = std::fabs(ad - numeric) / (std::fabs(ad) + std::fabs(numeric) + kEps);
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = i;
      report.analytic_at_worst = ad;
      report.numeric_at_worst = numeric;
    }
  }
  report.pass = report.deterministic && report.max_rel_err <= tol;
  return report;
}

}  // namespace vtp
