#include "core/loss.hpp"

#include "core/error.hpp"

namespace vtp {

namespace {
void require_lengths(const ForwardGraph& graph, const std::vector<Tensor>& targets) {
  if (graph.steps.empty()) throw ContractError("loss requires a non-empty prediction");
  if (graph.steps.size() != targets.size())
    throw ContractError("loss length mismatch: " + std::to_string(graph.steps.size()) +
                        " predicted steps vs " + std::to_string(targets.size()) + " targets");
  for (const Tensor& y : targets)
    if (y.rows() != 2 || y.cols() != 1)
      throw DimensionError("target positions must be (2x1) columns, got " + y.shape_str());
}
}  // namespace

Var nll_loss(Tape& t, const ForwardGraph& graph, const std::vector<Tensor>& targets) {
  require_lengths(graph, targets);
  Var total;
  for (std::size_t k = 0; k < graph.steps.size(); ++k) {
    const DecodeStepVars& s = graph.steps[k];
    Var r = t.sub(t.input(targets[k]), s.mu);
    Var r1 = t.slice_rows(r, 0, 1);
    Var r2 = t.slice_rows(r, 1, 2);
    Var v0 = t.slice_rows(s.head, 0, 1);
    Var v1 = t.slice_rows(s.head, 1, 2);
    Var v2 = t.slice_rows(s.head, 2, 3);
    Var u1 = t.hadamard(r1, t.exp(t.scale(v0, -1.0)));
    Var u2 = t.hadamard(t.sub(r2, t.hadamard(v2, u1)), t.exp(t.scale(v1, -1.0)));
    Var quad = t.scale(t.add(t.hadamard(u1, u1), t.hadamard(u2, u2)), 0.5);
    Var step = t.add(quad, t.add(v0, v1));
    total = k == 0 ? step : t.add(total, step);
  }
  return t.sum(total);  // collapse the (1x1) column to a declared scalar root
}

Var mae_loss(Tape& t, const ForwardGraph& graph, const std::vector<Tensor>& targets) {
  require_lengths(graph, targets);
  Var total;
  for (std::size_t k = 0; k < graph.steps.size(); ++k) {
    Var r = t.abs(t.sub(t.input(targets[k]), graph.steps[k].mu));
    Var s = t.sum(r);
    total = k == 0 ? s : t.add(total, s);
  }
  const double denom = 2.0 * static_cast<double>(graph.steps.size());
  return t.scale(total, 1.0 / denom);
}

}  // namespace vtp
