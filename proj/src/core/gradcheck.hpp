#pragma once

#include <cstddef>
#include <functional>

#include "core/tape.hpp"

namespace vtp {

struct GradCheckReport {
  bool deterministic = false;  // two builds of the same graph agree bitwise
  bool pass = false;           // deterministic and max_rel_err <= tol
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;  // flat coordinate of the worst disagreement
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Compares reverse-mode gradients of a scalar-valued graph against central
// finite differences, coordinate by coordinate:
//
//   rel_err_i = |g_ad_i - g_fd_i| / (|g_ad_i| + |g_fd_i| + eps)
//
// `build` must construct the graph on the given tape from the input leaf it
// receives and return the scalar root. It must be deterministic; the checker
// verifies this by evaluating the unperturbed graph twice and comparing
// bitwise, and reports failure (not a throw) if the two runs differ.
//
// eps = 1e-6 in the denominator absorbs the finite-difference noise floor
// (~1e-11 for unit-scale outputs at the default step) so that coordinates
// with true gradient zero do not produce spurious relative errors.
GradCheckReport grad_check(const std::function<Var(Tape&, Var)>& build, const Tensor& x,
                           double step = 1e-5, double tol = 1e-4);

}  // namespace vtp
