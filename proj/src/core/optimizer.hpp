#pragma once

#include <cstddef>
#include <vector>

#include "core/tape.hpp"

namespace vtp {

struct AdamWConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 5.0;  // global L2 norm ceiling; <= 0 disables clipping
};

// Adam with decoupled weight decay. The decay term is applied directly to
// the parameter (theta -= lr * wd * theta), never through the moment
// estimates, so a zero gradient with positive decay is a pure multiplicative
// shrink. Frozen parameters are skipped entirely - no update, no decay, no
// moment drift - which keeps them bit-identical for as long as they stay
// frozen.
class AdamW {
public:
  AdamW(std::vector<Parameter*> params, AdamWConfig cfg);

  // One update from the gradients currently held by the parameters.
  // Clips the global gradient norm first (when enabled), then applies the
  // bias-corrected moment update. Throws NumericError naming the parameter
  // if any gradient entry is not finite.
  void step();

  std::size_t step_count() const { return step_count_; }
  const AdamWConfig& config() const { return cfg_; }

private:
  struct Slot {
    Tensor m, v;
  };
  std::vector<Parameter*> params_;
  std::vector<Slot> slots_;
  AdamWConfig cfg_;
  std::size_t step_count_ = 0;
};

// Global L2 norm over the gradients of non-frozen parameters.
double gradient_norm(const std::vector<Parameter*>& params);

}  // namespace vtp
