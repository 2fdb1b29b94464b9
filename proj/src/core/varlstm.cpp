#include "core/varlstm.hpp"

#include "core/error.hpp"

namespace vtp {

LstmStateVar lstm_step(Tape& t, const LstmWeightsVar& w, Var x_t, const LstmStateVar& prev,
                       Var dh_mask) {
  const std::size_t p = w.p;
  if (p == 0) throw ContractError("lstm weights have no state extent set");
  Var h_masked = t.hadamard(prev.h, dh_mask);
  Var gates = t.add(t.matmul(w.W, t.concat_rows({x_t, h_masked})), w.b);
  Var i = t.sigmoid(t.slice_rows(gates, 0, p));
  Var f = t.sigmoid(t.slice_rows(gates, p, 2 * p));
  Var o = t.sigmoid(t.slice_rows(gates, 2 * p, 3 * p));
  Var g = t.tanh(t.slice_rows(gates, 3 * p, 4 * p));
  Var c = t.add(t.hadamard(f, prev.c), t.hadamard(i, g));
  Var h = t.hadamard(o, t.tanh(c));
  return {h, c};
}

std::vector<Var> run_lstm(Tape& t, const LstmWeightsVar& w, const std::vector<Var>& xs,
                          Var dh_mask) {
  if (xs.empty()) throw ContractError("run_lstm requires a non-empty sequence");
  LstmStateVar state{t.input(Tensor::zeros({w.p, 1})), t.input(Tensor::zeros({w.p, 1}))};
  std::vector<Var> hs;
  hs.reserve(xs.size());
  for (Var x : xs) {
    state = lstm_step(t, w, x, state, dh_mask);
    hs.push_back(state.h);
  }
  return hs;
}

}  // namespace vtp
