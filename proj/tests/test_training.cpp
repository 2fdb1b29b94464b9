#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/synth.hpp"
#include "core/train.hpp"
#include "doctest.h"

using namespace vtp;

namespace {

// Small, fast fixture: straight constant-speed tracks, 7 windows each.
Dataset lines_dataset(std::size_t n_tracks, double f_train, double f_val, double f_test,
                      std::uint64_t seed, double noise = 0.0) {
  LinesConfig cfg;
  cfg.n_tracks = n_tracks;
  cfg.track_len = 30;
  cfg.noise_sigma = noise;
  cfg.accel = 0.0;
  cfg.seed = seed;
  const auto tracks = synth_lines(cfg);
  const SplitIndices splits = split_trajectories(tracks.size(), f_train, f_val, f_test, seed + 1);
  return assemble_dataset(tracks, splits, 12, 12, 32, false, 0);
}

ModelConfig small_model(double dropout = 0.05) {
  ModelConfig m;
  m.hidden = 8;
  m.attention_width = 8;
  m.recurrent_dropout = dropout;
  m.attention_dropout = dropout;
  return m;
}

TrainConfig fast_config(std::uint64_t seed, std::size_t epochs) {
  TrainConfig t;
  t.learning_rate = 3e-3;
  t.weight_decay = 1e-4;
  t.batch_size = 16;
  t.patience = 1000;
  t.max_epochs = epochs;
  t.loss = LossKind::Nll;
  t.seed = seed;
  return t;
}

bool tensors_equal(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return false;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] != b.data[i]) return false;
  return true;
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  const auto pa = a.all();
  const auto pb = b.all();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!tensors_equal(pa[i]->value, pb[i]->value)) return false;
  return true;
}

bool logs_equal(const std::vector<EpochLog>& a, const std::vector<EpochLog>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    // Everything but wall time must match bit for bit.
    if (a[i].epoch != b[i].epoch || a[i].train_loss != b[i].train_loss ||
        a[i].val_loss != b[i].val_loss || a[i].val_ape_1h != b[i].val_ape_1h ||
        a[i].val_ape_2h != b[i].val_ape_2h || a[i].val_ape_3h != b[i].val_ape_3h ||
        a[i].val_ade != b[i].val_ade)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("a single epoch produces one complete log record") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  const TrainResult r = train_model(data, small_model(), fast_config(1, 1));
  REQUIRE(r.log.size() == 1);
  CHECK(r.log[0].epoch == 1);
  CHECK(std::isfinite(r.log[0].train_loss));
  CHECK(std::isfinite(r.log[0].val_loss));
  CHECK(r.log[0].val_ape_1h > 0.0);
  CHECK(r.log[0].val_ape_2h > 0.0);
  CHECK(r.log[0].val_ape_3h > 0.0);
  CHECK(r.log[0].val_ade > 0.0);
  CHECK(r.log[0].wall_seconds >= 0.0);
  CHECK(r.stop_reason == "reached max epochs");
  CHECK_FALSE(r.early_stopped);
  CHECK_FALSE(r.diverged);
  // The checkpoint echoes the dataset geometry and the training config.
  CHECK(r.best.delta_s == 900);
  CHECK(r.best.input_len == 12);
  CHECK(r.best.horizon == 12);
  CHECK(r.best.utm_zone == 32);
  CHECK_FALSE(r.best.train_config_json.empty());
}

TEST_CASE("fixed seeds reproduce the run bit for bit") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  const ModelConfig m = small_model();
  const TrainResult a = train_model(data, m, fast_config(42, 3));
  const TrainResult b = train_model(data, m, fast_config(42, 3));
  CHECK(logs_equal(a.log, b.log));
  CHECK(params_equal(a.best.params, b.best.params));

  const TrainResult c = train_model(data, m, fast_config(43, 3));
  CHECK_FALSE(logs_equal(a.log, c.log));
}

TEST_CASE("a fixed worker count reproduces bit for bit") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  const ModelConfig m = small_model();
  TrainConfig t = fast_config(42, 2);
  t.workers = 2;
  t.batch_size = 8;
  const TrainResult a = train_model(data, m, t);
  const TrainResult b = train_model(data, m, t);
  CHECK(logs_equal(a.log, b.log));
  CHECK(params_equal(a.best.params, b.best.params));
  for (const EpochLog& lg : a.log) {
    CHECK(std::isfinite(lg.train_loss));
    CHECK(std::isfinite(lg.val_loss));
  }
}

TEST_CASE("loss falls on an easy overfit and the best checkpoint tracks the minimum") {
  // No validation split: the training split stands in as the early-stop
  // signal, which is exactly the small-overfit setup.
  const Dataset data = lines_dataset(6, 1.0, 0.0, 0.0, 11);
  const ModelConfig m = small_model(0.0);
  TrainConfig t = fast_config(5, 25);
  t.batch_size = 8;
  const TrainResult r = train_model(data, m, t);
  REQUIRE(r.log.size() == 25);
  CHECK(r.log.back().val_loss < r.log.front().val_loss);

  double lowest = r.log.front().val_loss;
  int lowest_epoch = r.log.front().epoch;
  for (const EpochLog& lg : r.log)
    if (lg.val_loss < lowest) {
      lowest = lg.val_loss;
      lowest_epoch = lg.epoch;
    }
  CHECK(r.best.best_val_loss == lowest);
  CHECK(r.best.epoch == lowest_epoch);
}

TEST_CASE("patience zero stops after the first non-improving epoch") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  TrainConfig t = fast_config(3, 50);
  // A step too small for float64 to register leaves the validation loss
  // bit-identical, so epoch 2 cannot strictly improve on epoch 1.
  t.learning_rate = 1e-30;
  t.weight_decay = 0.0;
  t.patience = 0;
  const TrainResult r = train_model(data, small_model(), t);
  REQUIRE(r.log.size() == 2);
  CHECK(r.log[0].val_loss == r.log[1].val_loss);
  CHECK(r.early_stopped);
  CHECK_FALSE(r.diverged);
  CHECK(r.stop_reason == "no validation improvement in 1 epoch");
  CHECK(r.best.epoch == 1);
}

TEST_CASE("the progress callback can stop a run cleanly") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  std::vector<int> seen;
  const TrainResult r = train_model(data, small_model(), fast_config(1, 50), nullptr,
                                    [&](const EpochLog& lg) {
                                      seen.push_back(lg.epoch);
                                      return lg.epoch < 2;
                                    });
  CHECK(r.log.size() == 2);
  CHECK(seen == std::vector<int>{1, 2});
  CHECK_FALSE(r.early_stopped);
  CHECK_FALSE(r.diverged);
  CHECK(r.stop_reason == "stopped by caller");
}

TEST_CASE("the absolute-error loss freezes the covariance head bit-exactly") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  const ModelConfig m = small_model();
  ModelParams init = ModelParams::create(m, 9);

  TrainConfig t = fast_config(9, 3);
  t.loss = LossKind::Mae;
  TrainResult r = train_model(data, m, t);
  const Checkpoint& best = r.best;
  ModelParams trained = best.params;
  CHECK(tensors_equal(trained.find("head.W_sigma")->value, init.head_Wsig.value));
  CHECK(tensors_equal(trained.find("head.b_sigma")->value, init.head_bsig.value));
  CHECK_FALSE(tensors_equal(trained.find("head.W_mu")->value, init.head_Wmu.value));

  // The likelihood loss moves the covariance head.
  t.loss = LossKind::Nll;
  TrainResult rn = train_model(data, m, t);
  ModelParams trained_n = rn.best.params;
  CHECK_FALSE(tensors_equal(trained_n.find("head.W_sigma")->value, init.head_Wsig.value));

  // Resuming with the likelihood loss thaws a head frozen by an earlier
  // absolute-error run (freeze state never survives into a new run).
  TrainConfig t2 = fast_config(9, r.best.epoch + 2);
  t2.loss = LossKind::Nll;
  const TrainResult resumed = train_model(data, m, t2, &r.best);
  ModelParams thawed = resumed.best.params;
  CHECK_FALSE(tensors_equal(thawed.find("head.W_sigma")->value, init.head_Wsig.value));
}

TEST_CASE("non-finite losses abort with the best state preserved") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  const ModelConfig m = small_model();
  const TrainResult healthy = train_model(data, m, fast_config(2, 2));
  REQUIRE_FALSE(healthy.diverged);

  Checkpoint poisoned = healthy.best;
  poisoned.params.find("head.W_mu")->value.fill(1e200);  // mean ~1e200 -> squared residual overflows
  TrainConfig t = fast_config(2, poisoned.epoch + 5);
  const TrainResult r = train_model(data, m, t, &poisoned);
  CHECK(r.diverged);
  CHECK(r.log.empty());
  CHECK(r.stop_reason == "non-finite training loss");
  CHECK(r.best.epoch == poisoned.epoch);
  CHECK(params_equal(r.best.params, poisoned.params));
}

TEST_CASE("checkpoint files round-trip bit-exactly") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  const ModelConfig m = small_model();
  const TrainResult r = train_model(data, m, fast_config(4, 2));
  const std::string path = "ckpt_roundtrip.bin";
  save_checkpoint(r.best, path);
  const Checkpoint back = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(params_equal(back.params, r.best.params));
  CHECK(back.model.hidden == m.hidden);
  CHECK(back.model.attention_width == m.attention_width);
  CHECK(back.model.labeled == m.labeled);
  CHECK(back.model.intention_classes == m.intention_classes);
  CHECK(back.model.recurrent_dropout == m.recurrent_dropout);
  CHECK(back.model.attention_dropout == m.attention_dropout);
  CHECK(back.best_val_loss == r.best.best_val_loss);
  CHECK(back.epoch == r.best.epoch);
  CHECK(back.norm.mean_e == r.best.norm.mean_e);
  CHECK(back.norm.mean_n == r.best.norm.mean_n);
  CHECK(back.norm.std_e == r.best.norm.std_e);
  CHECK(back.norm.std_n == r.best.norm.std_n);
  CHECK(back.vocabulary == r.best.vocabulary);
  CHECK(back.delta_s == r.best.delta_s);
  CHECK(back.input_len == r.best.input_len);
  CHECK(back.horizon == r.best.horizon);
  CHECK(back.utm_zone == r.best.utm_zone);
  CHECK(back.train_config_json == r.best.train_config_json);
}

TEST_CASE("damaged checkpoint files are rejected") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  const TrainResult r = train_model(data, small_model(), fast_config(4, 1));
  const std::string path = "ckpt_damage.bin";
  save_checkpoint(r.best, path);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::remove(path.c_str());
  REQUIRE(bytes.size() > 128);

  SUBCASE("a flipped payload byte fails the checksum") {
    std::string bad = bytes;
    bad[bytes.size() / 2] = static_cast<char>(bad[bytes.size() / 2] ^ 0x40);
    std::ofstream(path, std::ios::binary).write(bad.data(), static_cast<std::streamsize>(bad.size()));
    CHECK_THROWS_AS(load_checkpoint(path), IntegrityError);
    std::remove(path.c_str());
  }

  SUBCASE("truncation is an integrity error") {
    std::ofstream(path, std::ios::binary)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 16));
    CHECK_THROWS_AS(load_checkpoint(path), IntegrityError);
    std::remove(path.c_str());
  }

  SUBCASE("a foreign magic is a format error") {
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream(path, std::ios::binary).write(bad.data(), static_cast<std::streamsize>(bad.size()));
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::remove(path.c_str());
  }
}

TEST_CASE("extent guards catch mismatched architectures") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  const ModelConfig m = small_model();
  const TrainResult r = train_model(data, m, fast_config(4, 1));

  ModelConfig wide = m;
  wide.hidden = 16;
  CHECK_THROWS_AS(require_matching_extents(r.best, wide), DimensionError);

  ModelConfig attn = m;
  attn.attention_width = 16;
  CHECK_THROWS_AS(require_matching_extents(r.best, attn), DimensionError);

  ModelConfig labeled = m;
  labeled.labeled = true;
  labeled.intention_classes = 3;
  CHECK_THROWS_AS(require_matching_extents(r.best, labeled), DimensionError);

  CHECK_NOTHROW(require_matching_extents(r.best, m));
  // Resuming against a mismatched architecture is refused the same way.
  CHECK_THROWS_AS(train_model(data, wide, fast_config(4, 2), &r.best), DimensionError);
}

TEST_CASE("resume continues the epoch counter without optimizer state") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  const ModelConfig m = small_model();
  const TrainResult first = train_model(data, m, fast_config(8, 3));
  REQUIRE_FALSE(first.log.empty());
  const int resumed_from = first.best.epoch;

  TrainConfig t = fast_config(8, static_cast<std::size_t>(resumed_from) + 2);
  const TrainResult second = train_model(data, m, t, &first.best);
  REQUIRE(second.log.size() == 2);
  CHECK(second.log.front().epoch == resumed_from + 1);
  CHECK(second.log.back().epoch == resumed_from + 2);

  // Already at or past the cap: nothing to do, the snapshot passes through.
  TrainConfig done = fast_config(8, static_cast<std::size_t>(resumed_from));
  const TrainResult noop = train_model(data, m, done, &first.best);
  CHECK(noop.log.empty());
  CHECK(noop.stop_reason == "reached max epochs");
  CHECK(params_equal(noop.best.params, first.best.params));
}

TEST_CASE("labeled training needs a matching labeled dataset") {
  const Dataset unlabeled = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  ModelConfig labeled = small_model();
  labeled.labeled = true;
  labeled.intention_classes = 3;
  CHECK_THROWS_AS(train_model(unlabeled, labeled, fast_config(1, 1)), ConfigError);

  CrossroadConfig cc;
  cc.n_tracks = 6;
  cc.seed = 21;
  const auto tracks = synth_crossroad(cc);
  const SplitIndices splits = split_trajectories(tracks.size(), 0.5, 0.25, 0.25, 22);
  const Dataset crossroad = assemble_dataset(tracks, splits, 12, 12, 32, true, 3);

  ModelConfig two = labeled;
  two.intention_classes = 2;
  CHECK_THROWS_AS(train_model(crossroad, two, fast_config(1, 1)), ConfigError);

  const TrainResult r = train_model(crossroad, labeled, fast_config(1, 2));
  REQUIRE(r.log.size() == 2);
  CHECK(std::isfinite(r.log.back().val_loss));
  CHECK(r.best.vocabulary == std::vector<std::string>{"class-0", "class-1", "class-2"});
  CHECK(r.best.model.labeled);
}

TEST_CASE("training configuration is validated up front") {
  const Dataset data = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  TrainConfig t = fast_config(1, 1);
  t.learning_rate = 0.0;
  CHECK_THROWS_AS(train_model(data, small_model(), t), ConfigError);
  t = fast_config(1, 1);
  t.batch_size = 0;
  CHECK_THROWS_AS(train_model(data, small_model(), t), ConfigError);
  t = fast_config(1, 1);
  t.max_epochs = 0;
  CHECK_THROWS_AS(train_model(data, small_model(), t), ConfigError);
  t = fast_config(1, 1);
  t.workers = 0;
  CHECK_THROWS_AS(train_model(data, small_model(), t), ConfigError);
  t = fast_config(1, 1);
  t.weight_decay = -0.5;
  CHECK_THROWS_AS(train_model(data, small_model(), t), ConfigError);

  // A dataset with no training windows cannot be trained on. The assembly
  // path always produces one (it rejects an empty train split outright), so
  // emulate a hand-damaged container by zeroing the count.
  Dataset empty_train = lines_dataset(4, 0.5, 0.25, 0.25, 7);
  empty_train.n_train = 0;
  CHECK_THROWS_AS(train_model(empty_train, small_model(), fast_config(1, 1)), DataError);
}

TEST_CASE("the config echo is canonical JSON") {
  TrainConfig t = fast_config(123, 7);
  t.loss = LossKind::Mae;
  t.workers = 2;
  const std::string echo = train_config_json(t);
  CHECK(echo.find("\"loss\":\"mae\"") != std::string::npos);
  CHECK(echo.find("\"seed\":123") != std::string::npos);
  CHECK(echo.find("\"max_epochs\":7") != std::string::npos);
  CHECK(echo.find("\"workers\":2") != std::string::npos);
  CHECK(train_config_json(t) == echo);
}
