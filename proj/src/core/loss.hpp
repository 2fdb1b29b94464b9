#pragma once

#include <vector>

#include "core/model.hpp"
#include "core/tape.hpp"

namespace vtp {

// Sequence Gaussian negative log-likelihood on the tape:
//
//   sum_k [ 1/2 (y_k - mu_k)^T Sigma_k^-1 (y_k - mu_k) + 1/2 ln|Sigma_k| ]
//
// evaluated through the Cholesky parameterization without ever forming
// Sigma or dividing: with head outputs (v0, v1, v2) = (log b11, log b22,
// b21), forward-substitute u1 = r1 exp(-v0), u2 = (r2 - v2 u1) exp(-v1);
// the quadratic form is u1^2 + u2^2 and ln|Sigma| = 2 (v0 + v1).
Var nll_loss(Tape& t, const ForwardGraph& graph, const std::vector<Tensor>& targets);

// Mean absolute error over steps and coordinates; ignores the covariance
// head entirely.
Var mae_loss(Tape& t, const ForwardGraph& graph, const std::vector<Tensor>& targets);

}  // namespace vtp
