#include "core/attention.hpp"

#include "core/error.hpp"

namespace vtp {

AttentionContextCache attention_prepare(Tape& t, const AttentionVars& a,
                                        const std::vector<Var>& annotations, Var da_mask) {
  if (annotations.empty()) throw ContractError("attention requires at least one annotation");
  AttentionContextCache cache;
  cache.masked.reserve(annotations.size());
  cache.projected.reserve(annotations.size());
  for (Var h : annotations) {
    Var hm = t.hadamard(h, da_mask);
    cache.masked.push_back(hm);
    cache.projected.push_back(t.matmul(a.W_h, hm));
  }
  return cache;
}

AttentionStep attention_step(Tape& t, const AttentionVars& a, const AttentionContextCache& cache,
                             Var s_prev) {
  Var s_proj = t.matmul(a.W_s, s_prev);
  std::vector<Var> scores;
  scores.reserve(cache.projected.size());
  for (Var proj : cache.projected)
    scores.push_back(t.matmul(a.v, t.tanh(t.add(proj, s_proj))));
  Var alphas = t.softmax(t.concat_rows(scores));
  Var z;
  for (std::size_t j = 0; j < cache.masked.size(); ++j) {
    Var term = t.smul(t.slice_rows(alphas, j, j + 1), cache.masked[j]);
    z = j == 0 ? term : t.add(z, term);
  }
  return {z, alphas};
}

}  // namespace vtp
