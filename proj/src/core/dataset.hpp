#pragma once

// Windowed-sample container: the pipeline's output, the trainer's input.
//
// File layout ("VTPDSET1", little-endian):
//   bytes 0..7    magic "VTPDSET1"
//   u64           header_len
//   header_len    UTF-8 JSON header: version, delta_s, input_len, horizon,
//                 utm_zone, labeled, intention_classes, norm stats,
//                 trajectory table (id, split, intention, len, t0),
//                 per-split window counts
//   u64           W (total window count; train block first, then val, test)
//   u32[W]        trajectory index per window
//   u32[W]        start index per window
//   i32[W]        intention class per window (-1 when unlabeled)
//   f64[W*2l]     inputs, normalized, (easting, northing) interleaved per step
//   f64[W*2h]     targets, same layout
//   u64           FNV-1a-64 checksum over every preceding byte
//
// Loading verifies magic, version and checksum; any shortfall is an
// integrity error and no partial state escapes.

#include <cstdint>
#include <string>
#include <vector>

#include "core/pipeline.hpp"

namespace vtp {

struct TrajectoryMeta {
  std::string id;
  std::string split;  // "train" | "val" | "test"
  int intention = -1;
  std::uint32_t len = 0;
  std::int64_t t0 = 0;
};

struct DatasetWindow {
  std::uint32_t traj = 0;   // index into Dataset::trajectories
  std::uint32_t start = 0;  // start of the input block in the source track
  std::int32_t intention = -1;
  std::vector<double> x;  // 2*input_len, normalized
  std::vector<double> y;  // 2*horizon, normalized
};

struct Dataset {
  std::int64_t delta_s = 900;
  std::size_t input_len = 12;
  std::size_t horizon = 12;
  int utm_zone = 32;
  bool labeled = false;
  int intention_classes = 0;
  std::vector<std::string> vocabulary;  // class names, size == intention_classes
  NormStats norm;
  std::vector<TrajectoryMeta> trajectories;
  std::vector<DatasetWindow> windows;  // train block, then val, then test
  std::size_t n_train = 0, n_val = 0, n_test = 0;

  // [first, last) window range of one split ("train" | "val" | "test").
  std::pair<std::size_t, std::size_t> split_range(const std::string& split) const;
};

// Normalize, window and pack trajectories. `splits` indexes `trajectories`;
// normalization statistics come from the train split only. In labeled mode
// every trajectory must carry an intention in [0, intention_classes), and
// `vocabulary` (when given) must name each class; left empty it defaults to
// "class-0".."class-(v-1)". Trajectories shorter than l+h are rejected
// (drop them upstream).
Dataset assemble_dataset(const std::vector<Trajectory>& trajectories, const SplitIndices& splits,
                         std::size_t input_len, std::size_t horizon, int utm_zone, bool labeled,
                         int intention_classes, std::vector<std::string> vocabulary = {});

void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

// Manifest: a human-readable JSON mirror of the header plus ingest counts
// and the resolved configuration echo. Deterministic (no timestamps).
std::string dataset_manifest_json(const Dataset& d, const std::string& config_echo_json);

// FNV-1a 64-bit over a byte range (the container's integrity hash).
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 14695981039346656037ull);

}  // namespace vtp
