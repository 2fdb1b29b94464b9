#include "core/train.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <thread>
#include <utility>

#include "core/error.hpp"
#include "core/loss.hpp"
#include "core/metrics.hpp"
#include "core/optimizer.hpp"
#include "core/rng.hpp"
#include "json.hpp"

namespace vtp {
namespace {

using nlohmann::json;

// Salt separating the epoch-shuffle RNG stream from the per-sample mask
// streams (which are keyed by (seed, epoch, window index)).
constexpr std::uint64_t kShuffleSalt = 0x73687566666c6521ull;

std::vector<Tensor> input_columns(const DatasetWindow& w, std::size_t l) {
  std::vector<Tensor> xs;
  xs.reserve(l);
  for (std::size_t j = 0; j < l; ++j) xs.push_back(Tensor::column({w.x[2 * j], w.x[2 * j + 1]}));
  return xs;
}

std::vector<Tensor> target_columns(const DatasetWindow& w, std::size_t h) {
  std::vector<Tensor> ys;
  ys.reserve(h);
  for (std::size_t k = 0; k < h; ++k) ys.push_back(Tensor::column({w.y[2 * k], w.y[2 * k + 1]}));
  return ys;
}

Tensor one_hot(int cls, std::size_t v) {
  Tensor t = Tensor::zeros({v, 1});
  t.data[static_cast<std::size_t>(cls)] = 1.0;
  return t;
}

Var loss_of(LossKind kind, Tape& t, const ForwardGraph& g, const std::vector<Tensor>& targets) {
  return kind == LossKind::Nll ? nll_loss(t, g, targets) : mae_loss(t, g, targets);
}

// One training sample: fresh tape, per-sample masks, backward pass scaled
// by 1/batch_n so batch gradients are the mean over the batch. Returns the
// unscaled loss value.
double train_sample(ModelParams& params, const ModelConfig& mcfg, const TrainConfig& tcfg,
                    const Dataset& data, std::size_t window_index, std::size_t epoch,
                    std::size_t batch_n) {
  const DatasetWindow& w = data.windows[window_index];
  Tape t;
  Rng mask_rng(mix_seed(tcfg.seed, static_cast<std::uint64_t>(epoch),
                        static_cast<std::uint64_t>(window_index)));
  const MaskSet masks = sample_masks(mcfg, ForwardMode::Train, mask_rng);
  const ModelVars mv = lease_params(t, params);
  const std::vector<Tensor> xs = input_columns(w, data.input_len);
  Tensor psi;
  const Tensor* psi_ptr = nullptr;
  if (mcfg.labeled) {
    psi = one_hot(w.intention, mcfg.intention_classes);
    psi_ptr = &psi;
  }
  const ForwardGraph g = model_forward(t, mv, mcfg, xs, psi_ptr, data.horizon, masks);
  const std::vector<Tensor> targets = target_columns(w, data.horizon);
  const Var loss = loss_of(tcfg.loss, t, g, targets);
  const double value = t.value(loss).data[0];
  if (!std::isfinite(value)) return value;  // caller handles divergence
  t.backward(t.scale(loss, 1.0 / static_cast<double>(batch_n)));
  return value;
}

void accumulate_grads(ModelParams& into, const ModelParams& from) {
  const auto dst = into.all();
  const auto src = from.all();
  for (std::size_t i = 0; i < dst.size(); ++i)
    for (std::size_t d = 0; d < dst[i]->grad.data.size(); ++d)
      dst[i]->grad.data[d] += src[i]->grad.data[d];
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train.learning_rate must be positive and finite");
  if (weight_decay < 0.0 || !std::isfinite(weight_decay))
    throw ConfigError("train.weight_decay must be non-negative and finite");
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (max_epochs == 0) throw ConfigError("train.max_epochs must be >= 1");
  if (workers == 0) throw ConfigError("train.workers must be >= 1");
}

std::string train_config_json(const TrainConfig& tcfg) {
  json j;
  j["learning_rate"] = tcfg.learning_rate;
  j["weight_decay"] = tcfg.weight_decay;
  j["batch_size"] = tcfg.batch_size;
  j["patience"] = tcfg.patience;
  j["max_epochs"] = tcfg.max_epochs;
  j["loss"] = tcfg.loss == LossKind::Nll ? "nll" : "mae";
  j["grad_clip"] = tcfg.grad_clip;
  j["seed"] = tcfg.seed;
  j["workers"] = tcfg.workers;
  return j.dump();
}

TrainResult train_model(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                        const Checkpoint* resume, const ProgressFn& progress) {
  mcfg.validate();
  tcfg.validate();
  if (mcfg.labeled) {
    if (!data.labeled) throw ConfigError("labeled model requires a labeled dataset");
    if (mcfg.intention_classes != static_cast<std::size_t>(data.intention_classes))
      throw ConfigError("model.intention_classes disagrees with the dataset vocabulary");
  }
  const auto [tr0, tr1] = data.split_range("train");
  if (tr1 == tr0) throw DataError("dataset has no training windows");
  const auto [va0, va1] = data.split_range("val");
  const bool has_val = va1 > va0;
  // With no validation split the training split doubles as the early-stop
  // signal (deterministic pass, so it is a clean objective, just in-sample).
  const std::size_t ev0 = has_val ? va0 : tr0;
  const std::size_t ev1 = has_val ? va1 : tr1;

  ModelParams params;
  int start_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  if (resume) {
    require_matching_extents(*resume, mcfg);
    params = resume->params;
    start_epoch = resume->epoch;
    // Validation losses are only comparable within one objective: a resume
    // that switches the loss kind starts the best-tracking fresh instead of
    // racing the new objective against a number from the old one.
    bool same_loss = false;
    if (!resume->train_config_json.empty()) {
      const json echo = json::parse(resume->train_config_json, nullptr, false);
      if (!echo.is_discarded() && echo.contains("loss") && echo["loss"].is_string())
        same_loss = echo["loss"] == (tcfg.loss == LossKind::Nll ? "nll" : "mae");
    }
    if (same_loss) best_val = resume->best_val_loss;
  } else {
    params = ModelParams::create(mcfg, tcfg.seed);
  }
  params.zero_grad();
  // Freeze state is a property of this run's loss, never inherited from a
  // resumed snapshot (an MAE run freezes the covariance head; a follow-up
  // NLL run must thaw it).
  for (Parameter* p : params.all()) p->frozen = false;

  if (tcfg.loss == LossKind::Mae) {
    params.find("head.W_sigma")->frozen = true;
    params.find("head.b_sigma")->frozen = true;
  }

  AdamWConfig ocfg;
  ocfg.learning_rate = tcfg.learning_rate;
  ocfg.weight_decay = tcfg.weight_decay;
  ocfg.grad_clip = tcfg.grad_clip;
  AdamW opt(params.all(), ocfg);

  const auto snapshot = [&](int completed, double val) {
    Checkpoint c;
    c.model = mcfg;
    c.params = params;
    c.norm = data.norm;
    c.vocabulary = data.vocabulary;
    c.best_val_loss = val;
    c.epoch = completed;
    c.train_config_json = train_config_json(tcfg);
    c.delta_s = data.delta_s;
    c.input_len = data.input_len;
    c.horizon = data.horizon;
    c.utm_zone = data.utm_zone;
    return c;
  };

  TrainResult out;
  out.best = snapshot(start_epoch, best_val);

  // Deterministic (dropout-free) pass over [e0, e1): mean loss plus the
  // denormalized prediction/truth pairs for the positional metrics.
  const auto evaluate = [&](std::size_t e0, std::size_t e1, std::vector<EvalPair>& pairs) {
    double sum = 0.0;
    pairs.clear();
    pairs.reserve(e1 - e0);
    Rng unused(0);
    const MaskSet masks = sample_masks(mcfg, ForwardMode::Deterministic, unused);
    for (std::size_t i = e0; i < e1; ++i) {
      const DatasetWindow& w = data.windows[i];
      Tape t;
      const ModelVars mv = lease_params(t, params);
      const std::vector<Tensor> xs = input_columns(w, data.input_len);
      Tensor psi;
      const Tensor* psi_ptr = nullptr;
      if (mcfg.labeled) {
        psi = one_hot(w.intention, mcfg.intention_classes);
        psi_ptr = &psi;
      }
      const ForwardGraph g = model_forward(t, mv, mcfg, xs, psi_ptr, data.horizon, masks);
      const std::vector<Tensor> targets = target_columns(w, data.horizon);
      sum += t.value(loss_of(tcfg.loss, t, g, targets)).data[0];
      EvalPair p;
      p.mean.reserve(2 * data.horizon);
      p.truth.reserve(2 * data.horizon);
      for (std::size_t k = 0; k < data.horizon; ++k) {
        const Tensor& mu = t.value(g.steps[k].mu);
        double me = mu.data[0], mn = mu.data[1];
        denormalize_point(data.norm, me, mn);
        double te = w.y[2 * k], tn = w.y[2 * k + 1];
        denormalize_point(data.norm, te, tn);
        p.mean.push_back(me);
        p.mean.push_back(mn);
        p.truth.push_back(te);
        p.truth.push_back(tn);
      }
      pairs.push_back(std::move(p));
    }
    return sum / static_cast<double>(e1 - e0);
  };

  const std::size_t n_train = tr1 - tr0;
  const std::size_t k1 = horizon_step(1.0, data.delta_s, data.horizon);
  const std::size_t k2 = horizon_step(2.0, data.delta_s, data.horizon);
  const std::size_t k3 = horizon_step(3.0, data.delta_s, data.horizon);
  const std::size_t effective_patience = tcfg.patience == 0 ? 1 : tcfg.patience;
  std::size_t since_improve = 0;
  std::vector<std::size_t> order(n_train);
  std::vector<EvalPair> pairs;

  const auto diverge = [&](std::string reason) {
    out.diverged = true;
    out.stop_reason = std::move(reason);
    return out;
  };

  for (int epoch = start_epoch; epoch < static_cast<int>(tcfg.max_epochs); ++epoch) {
    const auto wall_start = std::chrono::steady_clock::now();

    for (std::size_t i = 0; i < n_train; ++i) order[i] = tr0 + i;
    Rng shuffle_rng(mix_seed(tcfg.seed, kShuffleSalt, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n_train; i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(i))]);

    double loss_sum = 0.0;
    bool finite = true;
    for (std::size_t b0 = 0; b0 < n_train && finite; b0 += tcfg.batch_size) {
      const std::size_t bn = std::min(tcfg.batch_size, n_train - b0);
      params.zero_grad();

      if (tcfg.workers <= 1 || bn == 1) {
        for (std::size_t i = 0; i < bn && finite; ++i) {
          const double v = train_sample(params, mcfg, tcfg, data, order[b0 + i],
                                        static_cast<std::size_t>(epoch), bn);
          if (!std::isfinite(v)) finite = false;
          loss_sum += v;
        }
      } else {
        // Contiguous chunks per worker, each against its own parameter copy;
        // gradients and loss sums reduce back in worker order so a fixed
        // worker count reproduces bit-identically.
        const std::size_t nw = std::min(tcfg.workers, bn);
        std::vector<ModelParams> wp(nw, params);
        std::vector<double> wloss(nw, 0.0);
        std::vector<bool> wfinite(nw, true);
        std::vector<std::exception_ptr> werr(nw);
        std::vector<std::thread> threads;
        threads.reserve(nw);
        const std::size_t chunk = (bn + nw - 1) / nw;
        for (std::size_t k = 0; k < nw; ++k) {
          const std::size_t c0 = k * chunk;
          const std::size_t c1 = std::min(bn, c0 + chunk);
          threads.emplace_back([&, k, c0, c1] {
            try {
              wp[k].zero_grad();
              for (std::size_t i = c0; i < c1; ++i) {
                const double v = train_sample(wp[k], mcfg, tcfg, data, order[b0 + i],
                                              static_cast<std::size_t>(epoch), bn);
                if (!std::isfinite(v)) {
                  wfinite[k] = false;
                  return;
                }
                wloss[k] += v;
              }
            } catch (...) {
              werr[k] = std::current_exception();
            }
          });
        }
        for (auto& th : threads) th.join();
        for (std::size_t k = 0; k < nw; ++k) {
          if (werr[k]) std::rethrow_exception(werr[k]);
          if (!wfinite[k]) finite = false;
          loss_sum += wloss[k];
          accumulate_grads(params, wp[k]);
        }
      }

      if (!finite) break;
      try {
        opt.step();
      } catch (const NumericError& e) {
        return diverge(e.what());
      }
    }
    if (!finite) return diverge("non-finite training loss");
    const double train_loss = loss_sum / static_cast<double>(n_train);

    const double val_loss = evaluate(ev0, ev1, pairs);
    if (!std::isfinite(val_loss)) return diverge("non-finite validation loss");

    EpochLog lg;
    lg.epoch = epoch + 1;
    lg.train_loss = train_loss;
    lg.val_loss = val_loss;
    lg.val_ape_1h = ape(pairs, k1) / 1000.0;
    lg.val_ape_2h = ape(pairs, k2) / 1000.0;
    lg.val_ape_3h = ape(pairs, k3) / 1000.0;
    lg.val_ade = ade(pairs) / 1000.0;
    lg.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    out.log.push_back(lg);

    if (val_loss < best_val) {
      best_val = val_loss;
      out.best = snapshot(epoch + 1, best_val);
      since_improve = 0;
    } else {
      ++since_improve;
    }

    if (progress && !progress(lg)) {
      out.stop_reason = "stopped by caller";
      return out;
    }
    if (since_improve >= effective_patience) {
      out.early_stopped = true;
      out.stop_reason = "no validation improvement in " + std::to_string(effective_patience) +
                        (effective_patience == 1 ? " epoch" : " epochs");
      return out;
    }
  }

  out.stop_reason = "reached max epochs";
  return out;
}

}  // namespace vtp
