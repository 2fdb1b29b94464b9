#pragma once

#include <vector>

#include "core/tape.hpp"

namespace vtp {

struct AttentionVars {
  Var W_h;  // {m, 2p} annotation projection
  Var W_s;  // {m, p}  decoder-state projection
  Var v;    // {1, m}  score vector
};

// Per-sequence precomputation: annotations masked by the shared attention
// dropout mask, and their W_h projections (constant across decode steps).
struct AttentionContextCache {
  std::vector<Var> masked;     // h_j o d_a, each {2p,1}
  std::vector<Var> projected;  // W_h (h_j o d_a), each {m,1}
};

AttentionContextCache attention_prepare(Tape& t, const AttentionVars& a,
                                        const std::vector<Var>& annotations, Var da_mask);

struct AttentionStep {
  Var context;  // z_t = sum_j alpha_tj (h_j o d_a), {2p,1}
  Var alphas;   // {l,1} softmax weights for this step
};

// Additive scores against the previous decoder state:
//   e_tj = v^T tanh(W_h (h_j o d_a) + W_s s_{t-1}),  alpha_t = softmax(e_t)
AttentionStep attention_step(Tape& t, const AttentionVars& a, const AttentionContextCache& cache,
                             Var s_prev);

}  // namespace vtp
