#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/attention.hpp"
#include "core/model_config.hpp"
#include "core/tape.hpp"
#include "core/varlstm.hpp"

namespace vtp {

// All trainable state of one model, in a fixed creation/serialization order.
struct ModelParams {
  ModelConfig cfg;
  Parameter enc_fwd_W, enc_fwd_b;   // forward encoder {4p, 2+p}, {4p,1}
  Parameter enc_bwd_W, enc_bwd_b;   // backward encoder, same shapes
  Parameter dec_W, dec_b;           // decoder {4p, (2+2p)+p}, {4p,1}
  Parameter attn_Wh, attn_Ws, attn_v;
  Parameter init_W, init_b;         // decoder-state initializer {p, p+v}, {p,1}
  Parameter head_Wmu, head_bmu;     // mean head {2,p}, {2,1}
  Parameter head_Wsig, head_bsig;   // covariance head {3,p}, {3,1}

  // Weights drawn uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) from one seeded
  // stream in declaration order; biases zero except an optional +1 on the
  // forget gate. The draw order is frozen: reruns with the same seed and
  // config produce bit-identical parameters.
  static ModelParams create(const ModelConfig& cfg, std::uint64_t seed);

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  Parameter* find(std::string_view name);  // nullptr when absent

  void zero_grad();
};

// Tape handles for one forward pass.
struct ModelVars {
  LstmWeightsVar enc_fwd, enc_bwd, dec;
  AttentionVars attn;
  Var init_W, init_b;
  Var head_Wmu, head_bmu, head_Wsig, head_bsig;
};

// Puts every parameter on the tape. `hook` may wrap individual leaves (used
// by the gradient checker to substitute or sabotage one tensor).
ModelVars lease_params(Tape& t, ModelParams& params,
                       const std::function<Var(std::string_view, Var)>& hook = nullptr);

// One decode step's outputs, still on the tape.
struct DecodeStepVars {
  Var mu;      // {2,1} predicted position
  Var head;    // {3,1} covariance head: (log b11, log b22, b21)
  Var alphas;  // {l,1} attention weights
};

struct ForwardGraph {
  std::vector<DecodeStepVars> steps;
};

// Values fed back as the "previous prediction" can be overridden per step
// (teacher forcing, perturbation experiments). Entry t, when set, replaces
// the mean fed into decode step t; entry 0 is ignored because step 0 always
// consumes the last observed position.
using FeedbackPlan = std::vector<std::optional<Tensor>>;

// Full differentiable pass: bidirectional encode, intention-conditioned
// decoder init, additive attention, recursive decode for `horizon` steps.
// xs are the input positions as {2,1} columns (normalized); psi is the
// one-hot intention column, or nullptr for "unknown" (zeros are substituted
// when the model is labeled).
ForwardGraph model_forward(Tape& t, const ModelVars& mv, const ModelConfig& cfg,
                           const std::vector<Tensor>& xs, const Tensor* psi,
                           std::size_t horizon, const MaskSet& masks,
                           const FeedbackPlan* feedback = nullptr);

// One predicted step, off the tape: mean, Cholesky factor entries of the
// covariance (Sigma = B B^T with B = [[b11,0],[b21,b22]]), and Sigma itself.
struct GaussianStep {
  std::array<double, 2> mean{};
  double b11 = 0, b21 = 0, b22 = 0;
  std::array<double, 4> sigma{};  // row-major 2x2
};

GaussianStep gaussian_from_head(const Tensor& mu, const Tensor& head);

struct PredictResult {
  std::vector<GaussianStep> steps;
  std::vector<double> alphas;  // horizon x input_len, row-major
};

// Single non-training pass in the given mode; masks are sampled internally
// from `rng` (ignored in Deterministic mode).
PredictResult predict_once(ModelParams& params, const std::vector<Tensor>& xs, const Tensor* psi,
                           std::size_t horizon, ForwardMode mode, Rng& rng);

}  // namespace vtp
