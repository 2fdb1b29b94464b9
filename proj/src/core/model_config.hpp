#pragma once

#include <cstddef>
#include <cstdint>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace vtp {

// Architecture hyper-parameters. Input/output positions are always planar
// (easting, northing), so the feature extent is fixed at 2.
struct ModelConfig {
  std::size_t hidden = 64;            // LSTM state extent p (per direction)
  std::size_t attention_width = 64;   // score space extent m
  std::size_t intention_classes = 0;  // one-hot extent v; 0 when unlabeled
  bool labeled = false;               // condition decoder init on intention
  double recurrent_dropout = 0.05;    // rate on h_{t-1} links (both LSTMs)
  double attention_dropout = 0.05;    // rate on annotations entering attention
  double intention_dropout = 0.3;     // rate gamma on the intention block
  bool forget_bias_one = true;        // +1 on forget-gate bias at init
  // Paper-faithful intention masking scales the whole kept vector by
  // (p+v)/p; the compensated variant instead rescales only the intention
  // entries by 1/(1-gamma) and leaves the encoded entries untouched.
  bool compensated_intention_mask = false;

  static constexpr std::size_t kFeatures = 2;

  std::size_t init_extent() const { return hidden + (labeled ? intention_classes : 0); }

  void validate() const {
    if (hidden == 0) throw ConfigError("model.hidden must be >= 1");
    if (attention_width == 0) throw ConfigError("model.attention_width must be >= 1");
    if (labeled && intention_classes == 0)
      throw ConfigError("labeled model requires model.intention_classes >= 1");
    auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate_ok(recurrent_dropout) || !rate_ok(attention_dropout) || !rate_ok(intention_dropout))
      throw ConfigError("dropout rates must lie in [0, 1]");
  }
};

// How a forward pass treats dropout.
//   Train         - recurrent/attention masks sampled; intention block masked
//                   and rescaled (this is the regularizer).
//   McSample      - recurrent/attention masks sampled (posterior draws for
//                   Monte Carlo uncertainty); intention path left unchanged.
//   Deterministic - every mask is ones; bit-stable reference pass.
enum class ForwardMode { Train, McSample, Deterministic };

// One full set of per-sequence masks. Sampled once per forward pass and
// held constant across time steps (variational dropout), never resampled
// within a sequence.
struct MaskSet {
  Tensor enc_fwd_dh;  // {p,1}
  Tensor enc_bwd_dh;  // {p,1}
  Tensor dec_dh;      // {p,1}
  Tensor attn_da;     // {2p,1}
  Tensor init_deta;   // {p+v,1} (or {p,1} unlabeled)
};

namespace detail {
// Inverted-dropout vector: entries are 1/(1-rate) with probability (1-rate),
// else 0, so the expected value of a masked activation is unchanged. Rate 1
// is the (degenerate but well-defined) all-zero mask.
inline Tensor bernoulli_mask(std::size_t n, double rate, Rng& rng) {
  Tensor m = Tensor::filled({n, 1}, 1.0);
  if (rate <= 0.0) return m;
  if (rate >= 1.0) {
    m.fill(0.0);
    return m;
  }
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  for (double& x : m.data) x = rng.uniform() < keep ? scale : 0.0;
  return m;
}
}  // namespace detail

// Draw order is part of the determinism contract: enc_fwd, enc_bwd, dec,
// attention, intention (one shared Bernoulli for the whole block).
inline MaskSet sample_masks(const ModelConfig& cfg, ForwardMode mode, Rng& rng) {
  const std::size_t p = cfg.hidden;
  const std::size_t e = cfg.init_extent();
  MaskSet ms;
  if (mode == ForwardMode::Deterministic) {
    ms.enc_fwd_dh = Tensor::filled({p, 1}, 1.0);
    ms.enc_bwd_dh = Tensor::filled({p, 1}, 1.0);
    ms.dec_dh = Tensor::filled({p, 1}, 1.0);
    ms.attn_da = Tensor::filled({2 * p, 1}, 1.0);
    ms.init_deta = Tensor::filled({e, 1}, 1.0);
    return ms;
  }
  ms.enc_fwd_dh = detail::bernoulli_mask(p, cfg.recurrent_dropout, rng);
  ms.enc_bwd_dh = detail::bernoulli_mask(p, cfg.recurrent_dropout, rng);
  ms.dec_dh = detail::bernoulli_mask(p, cfg.recurrent_dropout, rng);
  ms.attn_da = detail::bernoulli_mask(2 * p, cfg.attention_dropout, rng);

  ms.init_deta = Tensor::filled({e, 1}, 1.0);
  // The intention block is only regularized while training a labeled model;
  // at sampling/test time the initializer input passes through unchanged.
  if (mode == ForwardMode::Train && cfg.labeled && cfg.intention_classes > 0) {
    const double gamma = cfg.intention_dropout;
    const std::size_t v = cfg.intention_classes;
    // One shared draw drops or keeps the whole intention block.
    const double nu = (gamma < 1.0 && rng.uniform() < 1.0 - gamma) ? 1.0 : 0.0;
    if (cfg.compensated_intention_mask) {
      const double kept = gamma < 1.0 ? nu / (1.0 - gamma) : 0.0;
      for (std::size_t i = p; i < e; ++i) ms.init_deta.data[i] = kept;
    } else {
      const double lift = static_cast<double>(p + v) / static_cast<double>(p);
      for (std::size_t i = 0; i < p; ++i) ms.init_deta.data[i] = lift;
      for (std::size_t i = p; i < e; ++i) ms.init_deta.data[i] = nu * lift;
    }
  }
  return ms;
}

}  // namespace vtp
