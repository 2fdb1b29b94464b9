#pragma once

// Resolved run configuration: one JSON document with a section per concern
// (data, model, train, uncertainty, eval, predict, synth, gradcheck). User
// input is merged over built-in defaults key by key; unknown keys are
// rejected with their dotted path, so typos never silently fall back to a
// default. Every run echoes the fully resolved document next to its outputs.

#include <cstdint>
#include <string>
#include <vector>

#include "core/model_config.hpp"
#include "core/pipeline.hpp"
#include "core/train.hpp"

namespace vtp {

// Ingest/windowing geometry and labeling rules.
struct DataSettings {
  std::int64_t delta_s = 900;  // resample grid spacing, seconds
  std::size_t input_len = 12;  // observed steps per window
  std::size_t horizon = 12;    // predicted steps per window
  std::int64_t gap_s = 3600;   // reporting gap that cuts a new voyage
  int utm_zone = 32;
  std::string ship_type;  // CSV ship-type filter; empty keeps every type
  bool labeled = false;   // label trajectories by destination region
  std::vector<Region> regions;
  double f_train = 0.72, f_val = 0.08, f_test = 0.2;
  std::uint64_t seed = 1;  // trajectory-level split shuffle
};

// Monte Carlo dropout settings shared by predict and evaluate.
struct McSettings {
  std::size_t mc_samples = 100;
  std::uint64_t seed = 0;
};

struct EvalSettings {
  bool has_origin = false;  // origin null -> no distance-binned tables
  double origin_e = 0.0, origin_n = 0.0;
  double bin_width_m = 9260.0;  // 5 nautical miles
  std::vector<double> levels{0.68, 0.95};
};

struct PredictSettings {
  bool emit_samples = false;  // also emit each Monte Carlo pass's mean track
};

struct SynthSettings {
  std::string scenario = "lines";  // "lines" | "crossroad"
  std::size_t n_tracks = 20;
  std::size_t track_len = 30;
  double noise_sigma = 50.0;
  double accel = 0.0;  // lines only: along-track acceleration, m/s^2
  std::int64_t delta_s = 900;
  std::uint64_t seed = 1;
  std::size_t approach_len = 16;  // crossroad only
  double waypoint_e = 550000.0;
  double waypoint_n = 6150000.0;
};

struct GradcheckSettings {
  std::size_t hidden = 4;
  std::size_t attention_width = 4;
  std::size_t input_len = 3;
  std::size_t horizon = 3;
  bool labeled = true;  // labeled exercises the intention path too
  std::size_t intention_classes = 2;
  double tolerance = 1e-4;
  std::uint64_t seed = 7;
};

struct RunConfig {
  DataSettings data;
  ModelConfig model;
  TrainConfig train;
  McSettings uncertainty;
  EvalSettings eval;
  PredictSettings predict;
  SynthSettings synth;
  GradcheckSettings gradcheck;
  std::string resolved_json;  // merged defaults + user, pretty-printed
};

// Parse and validate a user configuration (JSON object; "" or "null" means
// defaults only). Types, enumerations and document-level invariants are
// checked here; command-specific semantics (e.g. learning rate > 0) are
// checked by the command that uses the section. Throws ConfigError naming
// the offending dotted path.
RunConfig parse_run_config(const std::string& user_json);

// The built-in defaults, pretty-printed.
std::string default_run_config_json();

}  // namespace vtp
