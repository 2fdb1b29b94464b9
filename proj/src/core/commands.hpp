#pragma once

// Command layer: each function implements one end-to-end run — load inputs,
// do the work, write a fixed set of artifacts under `out_dir`, and return
// the run summary as a JSON string. Nothing here writes timestamps, so a
// re-run with the same inputs and configuration is byte-identical.

#include <string>

#include "core/runconfig.hpp"
#include "core/train.hpp"

namespace vtp {

// AIS CSV -> out_dir/{dataset.bin, manifest.json, config.json}.
// Returns the manifest (dataset header plus ingest counters).
std::string cmd_ingest(const std::string& csv_path, const RunConfig& rc,
                       const std::string& out_dir);

// Synthetic scenario -> the same artifacts as ingest. The generator's own
// sampling interval (synth.delta_s) becomes the dataset's; windowing
// geometry and splits come from the data section. Returns the manifest.
std::string cmd_synth(const RunConfig& rc, const std::string& out_dir);

// Dataset -> out_dir/{checkpoint.bin, training_log.csv, config.json,
// summary.json}. `resume_checkpoint` empty starts fresh. When training
// diverges every artifact is still written (the checkpoint holds the last
// healthy state), then a NumericError propagates. Returns the summary.
std::string cmd_train(const std::string& dataset_path, const RunConfig& rc,
                      const std::string& out_dir, const std::string& resume_checkpoint,
                      const ProgressFn& progress);

// One track -> out_dir/{prediction.geojson, prediction.csv, config.json,
// summary.json}. Exactly one input source:
//  - a raw AIS CSV: single vessel required; its most recent voyage is
//    resampled on the checkpoint's grid and the latest input_len points
//    feed the model with intention unknown;
//  - one dataset window: dataset_path plus split name and the window's
//    index within that split; the window's intention (if any, and if the
//    model is labeled) conditions the prediction and the true future is
//    included in the outputs.
// Returns the summary.
std::string cmd_predict(const std::string& checkpoint_path, const std::string& input_csv,
                        const std::string& dataset_path, const std::string& split,
                        long window_index, const RunConfig& rc, const std::string& out_dir);

// Whole-split metrics -> out_dir/{evaluation.json, coverage.csv, config.json}
// plus binned_ape.csv when eval.origin is set. Labeled checkpoints are
// scored a second time with the intention input withheld (same Monte Carlo
// seeds), reported as "model_no_intention". A constant-velocity
// extrapolation baseline is always reported alongside. Returns the report.
std::string cmd_evaluate(const std::string& checkpoint_path, const std::string& dataset_path,
                         const std::string& split, const RunConfig& rc,
                         const std::string& out_dir);

// Analytic-vs-numeric gradient audit of every parameter tensor on a small
// model (writes no files). `sabotage` (optional) names one tensor whose
// gradient is deliberately corrupted during the audit; the audit must then
// fail, proving the check can detect a wrong gradient. Any failing tensor
// raises NumericError naming it. Returns the report on success.
std::string cmd_gradcheck(const RunConfig& rc, const std::string& sabotage);

}  // namespace vtp
