#include "core/optimizer.hpp"

#include <cmath>

#include "core/error.hpp"

namespace vtp {

AdamW::AdamW(std::vector<Parameter*> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.learning_rate < 0) throw ConfigError("learning rate must be >= 0");
  if (cfg_.weight_decay < 0) throw ConfigError("weight decay must be >= 0");
  if (cfg_.beta1 < 0 || cfg_.beta1 >= 1 || cfg_.beta2 < 0 || cfg_.beta2 >= 1)
    throw ConfigError("Adam betas must lie in [0, 1)");
  slots_.reserve(params_.size());
  for (const Parameter* p : params_)
    slots_.push_back({Tensor::zeros_like(p->value), Tensor::zeros_like(p->value)});
}

double gradient_norm(const std::vector<Parameter*>& params) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    if (p->frozen) continue;
    for (double g : p->grad.data) sq += g * g;
  }
  return std::sqrt(sq);
}

void AdamW::step() {
  for (const Parameter* p : params_) {
    if (p->frozen) continue;
    for (double g : p->grad.data)
      if (!std::isfinite(g))
        throw NumericError("non-finite gradient in parameter '" + p->name + "'");
  }

  double scale = 1.0;
  if (cfg_.grad_clip > 0.0) {
    const double norm = gradient_norm(params_);
    if (norm > cfg_.grad_clip) scale = cfg_.grad_clip / norm;
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (p.frozen) continue;
    Slot& s = slots_[i];
    for (std::size_t j = 0; j < p.value.data.size(); ++j) {
      const double g = p.grad.data[j] * scale;
      s.m.data[j] = cfg_.beta1 * s.m.data[j] + (1.0 - cfg_.beta1) * g;
      s.v.data[j] = cfg_.beta2 * s.v.data[j] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = s.m.data[j] / bc1;
      const double v_hat = s.v.data[j] / bc2;
      p.value.data[j] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.eps);
      p.value.data[j] -= cfg_.learning_rate * cfg_.weight_decay * p.value.data[j];
    }
  }
}

}  // namespace vtp
