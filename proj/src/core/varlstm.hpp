#pragma once

#include <vector>

#include "core/tape.hpp"

namespace vtp {

// Tied-weight LSTM: one matrix W {4p, d+p} and one bias {4p,1} produce all
// four gate pre-activations from the concatenated [input ; masked state].
struct LstmWeightsVar {
  Var W;
  Var b;
  std::size_t p = 0;  // state extent
};

struct LstmStateVar {
  Var h;
  Var c;
};

// One step of the variational LSTM.
//
//   [i~; f~; o~; g~] = W [x_t ; h_{t-1} o d_h] + b
//   i,f,o = sigm(.), g = tanh(.)
//   c_t = f o c_{t-1} + i o g
//   h_t = o o tanh(c_t)
//
// d_h is the per-sequence recurrent dropout mask (already inverted-scaled);
// the same mask Var must be passed for every step of a sequence.
LstmStateVar lstm_step(Tape& t, const LstmWeightsVar& w, Var x_t, const LstmStateVar& prev,
                       Var dh_mask);

// Runs a full sequence from a zero state, returning every hidden state in
// input order.
std::vector<Var> run_lstm(Tape& t, const LstmWeightsVar& w, const std::vector<Var>& xs,
                          Var dh_mask);

}  // namespace vtp
