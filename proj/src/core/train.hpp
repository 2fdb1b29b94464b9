#pragma once

// Training loop: mini-batch AdamW on the sequence loss with per-epoch
// validation, strict-improvement early stopping, and checkpointing of the
// best validation state.
//
// Determinism contract: for a fixed dataset, model config, train config
// (seed and worker count included) the full epoch log and the resulting
// parameters are bit-identical run to run. Per-sample dropout masks are
// seeded from (seed, epoch, window index in the dataset), so they do not
// depend on shuffle order or on how a batch is carved across workers;
// changing the worker count only reorders floating-point accumulation.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/dataset.hpp"
#include "core/model.hpp"

namespace vtp {

enum class LossKind { Nll, Mae };

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  std::size_t batch_size = 200;
  std::size_t patience = 3000;    // non-improving epochs tolerated (min 1)
  std::size_t max_epochs = 5000;  // absolute cap on completed epochs
  LossKind loss = LossKind::Nll;
  double grad_clip = 5.0;  // global L2 ceiling; <= 0 disables
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const;
};

// One line of the training log. Positional metrics are computed from a
// deterministic (dropout-free) pass over the validation split, denormalized
// to meters and reported in kilometers; when the validation split is empty
// the training split stands in for it (and supplies the early-stop signal).
struct EpochLog {
  int epoch = 0;  // completed epochs, 1-based, continues across resume
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_ape_1h = 0.0;  // km
  double val_ape_2h = 0.0;  // km
  double val_ape_3h = 0.0;  // km
  double val_ade = 0.0;     // km
  double wall_seconds = 0.0;
};

struct TrainResult {
  Checkpoint best;  // lowest validation loss seen (initial state if none)
  std::vector<EpochLog> log;
  bool early_stopped = false;  // patience ran out
  bool diverged = false;       // non-finite loss or gradient
  std::string stop_reason;
};

// Return false to stop cleanly after the current epoch.
using ProgressFn = std::function<bool(const EpochLog&)>;

// Train a model on the dataset's train split. `resume` (optional) supplies
// starting parameters and the epoch counter from an earlier run; its extents
// must match `mcfg`. Optimizer moments always start fresh. With the MAE
// loss the covariance head is frozen at its initial values. JSON config
// echoes land in the resulting checkpoint.
TrainResult train_model(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                        const Checkpoint* resume = nullptr, const ProgressFn& progress = nullptr);

// The resolved training configuration as canonical JSON (stable key order).
std::string train_config_json(const TrainConfig& tcfg);

}  // namespace vtp
