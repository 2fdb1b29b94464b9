#pragma once

// Model checkpoint: everything needed to run prediction later — model
// extents, parameter tensors, normalization statistics, intention
// vocabulary, data geometry — plus training bookkeeping for resume.
//
// File layout ("VTPCKPT1", little-endian):
//   bytes 0..7   magic "VTPCKPT1"
//   u64          header_len
//   header_len   UTF-8 JSON: version, model config, data geometry,
//                norm stats, vocabulary, best_val_loss, epoch,
//                train-config echo, tensor table [{name, rows, cols}]
//   f64[...]     tensor payloads, concatenated in table order
//   u64          FNV-1a-64 checksum over every preceding byte
//
// Loading verifies magic, version and checksum (integrity error on any
// mismatch, no partial state) and rebuilds parameters bit-identically.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/pipeline.hpp"

namespace vtp {

struct Checkpoint {
  ModelConfig model;
  ModelParams params;
  NormStats norm;
  std::vector<std::string> vocabulary;  // empty when unlabeled
  double best_val_loss = std::numeric_limits<double>::infinity();
  int epoch = 0;  // epochs completed when this checkpoint was taken
  std::string train_config_json;  // resolved training configuration echo

  // Data geometry, so prediction can window and denormalize raw tracks.
  std::int64_t delta_s = 900;
  std::size_t input_len = 12;
  std::size_t horizon = 12;
  int utm_zone = 32;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Guard for resuming or evaluating against a different setup: throws
// DimensionError naming the first mismatched extent (hidden width,
// attention width, or the intention vocabulary).
void require_matching_extents(const Checkpoint& c, const ModelConfig& expected);

}  // namespace vtp
