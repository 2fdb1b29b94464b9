// Consumer-side test of the C API: links only the shared library and sees
// only the public header, the way an embedding application would.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "vtp/vtp.h"

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

// Copies and releases a string the library handed out.
std::string take(char* s) {
  if (!s) return "";
  std::string out(s);
  vtp_string_free(s);
  return out;
}

const char* kLinesConfig = R"({
  "data": {"input_len": 4, "horizon": 4,
           "splits": {"train": 0.5, "val": 0.25, "test": 0.25}, "seed": 11},
  "model": {"hidden": 8, "attention_width": 8},
  "train": {"learning_rate": 3e-3, "batch_size": 8, "max_epochs": 3,
            "patience": 100, "seed": 5},
  "uncertainty": {"mc_samples": 3, "seed": 9},
  "synth": {"scenario": "lines", "n_tracks": 6, "track_len": 12,
            "noise_sigma": 10.0, "seed": 3}
})";

const char* kCrossroadConfig = R"({
  "data": {"input_len": 4, "horizon": 4,
           "splits": {"train": 0.5, "val": 0.25, "test": 0.25}, "seed": 13},
  "model": {"hidden": 8, "attention_width": 8, "labeled": true},
  "train": {"learning_rate": 3e-3, "batch_size": 8, "max_epochs": 2,
            "patience": 100, "seed": 7},
  "uncertainty": {"mc_samples": 3, "seed": 17},
  "synth": {"scenario": "crossroad", "n_tracks": 9, "track_len": 12,
            "approach_len": 6, "noise_sigma": 10.0, "seed": 19}
})";

struct Fixture {
  fs::path root;
  std::string dataset, checkpoint;
  std::string labeled_dataset, labeled_checkpoint;
  vtp_status synth_status = VTP_OK, train_status = VTP_OK;
  vtp_status labeled_synth_status = VTP_OK, labeled_train_status = VTP_OK;
  std::string synth_summary, train_summary;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    x.root = fs::temp_directory_path() / "vtp_capi";
    fs::remove_all(x.root);

    const fs::path data = x.root / "data", model = x.root / "model";
    char* out = nullptr;
    x.synth_status = vtp_synth(kLinesConfig, data.string().c_str(), &out);
    x.synth_summary = take(out);
    x.dataset = (data / "dataset.bin").string();

    out = nullptr;
    x.train_status = vtp_train(x.dataset.c_str(), kLinesConfig, model.string().c_str(), nullptr,
                               nullptr, nullptr, &out);
    x.train_summary = take(out);
    x.checkpoint = (model / "checkpoint.bin").string();

    const fs::path ldata = x.root / "ldata", lmodel = x.root / "lmodel";
    x.labeled_synth_status = vtp_synth(kCrossroadConfig, ldata.string().c_str(), nullptr);
    x.labeled_dataset = (ldata / "dataset.bin").string();
    x.labeled_train_status = vtp_train(x.labeled_dataset.c_str(), kCrossroadConfig,
                                       lmodel.string().c_str(), nullptr, nullptr, nullptr,
                                       nullptr);
    x.labeled_checkpoint = (lmodel / "checkpoint.bin").string();
    return x;
  }();
  return f;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// Progress callbacks must have C linkage; state travels through `user`.
struct ProgressLog {
  int calls = 0;
  int stop_after = 0;  // 0 = never ask for a stop
  double last_val = 0.0;
};

extern "C" int record_progress(int epoch, double train_loss, double val_loss, void* user) {
  auto* log = static_cast<ProgressLog*>(user);
  log->calls = epoch;
  log->last_val = val_loss;
  (void)train_loss;
  return log->stop_after != 0 && epoch >= log->stop_after ? 1 : 0;
}

}  // namespace

TEST_CASE("version and error text use static storage") {
  const char* v = vtp_version();
  REQUIRE(v != nullptr);
  CHECK(std::strlen(v) > 0);
  CHECK(vtp_last_error() != nullptr);  // never NULL, even before any failure
  vtp_string_free(nullptr);            // releasing nothing is a no-op
}

TEST_CASE("batch commands deliver summaries and artifacts") {
  const Fixture& f = fixture();
  REQUIRE(f.synth_status == VTP_OK);
  REQUIRE(f.train_status == VTP_OK);
  REQUIRE(f.labeled_synth_status == VTP_OK);
  REQUIRE(f.labeled_train_status == VTP_OK);

  const json manifest = json::parse(f.synth_summary);
  CHECK(manifest["window_counts"]["train"] == 15);
  const json summary = json::parse(f.train_summary);
  CHECK(summary["epochs_run"] == 3);
  CHECK(summary["diverged"] == false);
  CHECK(fs::exists(f.checkpoint));
  CHECK(fs::exists(f.labeled_checkpoint));

  // A NULL out_json means "do the work, skip the summary".
  const fs::path again = f.root / "synth_again";
  CHECK(vtp_synth(kLinesConfig, again.string().c_str(), nullptr) == VTP_OK);

  // predict and evaluate run through the same surface.
  char* out = nullptr;
  const fs::path pred = f.root / "pred";
  REQUIRE(vtp_predict(f.checkpoint.c_str(), nullptr, f.dataset.c_str(), "test", 0, kLinesConfig,
                      pred.string().c_str(), &out) == VTP_OK);
  const json p = json::parse(take(out));
  CHECK(p["steps"] == 4);

  out = nullptr;
  const fs::path ev = f.root / "eval";
  REQUIRE(vtp_evaluate(f.checkpoint.c_str(), f.dataset.c_str(), "val", kLinesConfig,
                       ev.string().c_str(), &out) == VTP_OK);
  const json e = json::parse(take(out));
  CHECK(e["windows"] == 10);

  out = nullptr;
  REQUIRE(vtp_gradcheck(R"({"gradcheck": {"hidden": 3, "attention_width": 3,
                           "input_len": 2, "horizon": 2}})",
                        nullptr, &out) == VTP_OK);
  const json g = json::parse(take(out));
  CHECK(g["pass"] == true);
  CHECK(g["tensors"].size() == 15);
}

TEST_CASE("status codes follow the error taxonomy") {
  const Fixture& f = fixture();

  // Contract errors: misuse, bad configuration.
  CHECK(vtp_ingest(nullptr, "", "/tmp/vtp_capi_x", nullptr) == VTP_CONTRACT_ERROR);
  CHECK(std::strlen(vtp_last_error()) > 0);
  CHECK(vtp_synth("{\"bogus\": 1}", "/tmp/vtp_capi_x", nullptr) == VTP_CONTRACT_ERROR);
  CHECK(contains(vtp_last_error(), "unknown configuration key: bogus"));
  CHECK(vtp_synth("{not json", "/tmp/vtp_capi_x", nullptr) == VTP_CONTRACT_ERROR);
  CHECK(contains(vtp_last_error(), "not valid JSON"));
  CHECK(vtp_train(f.dataset.c_str(), kLinesConfig, nullptr, nullptr, nullptr, nullptr, nullptr) ==
        VTP_CONTRACT_ERROR);

  // Data errors: missing or unreadable inputs.
  CHECK(vtp_train("/nonexistent/dataset.bin", kLinesConfig, "/tmp/vtp_capi_x", nullptr, nullptr,
                  nullptr, nullptr) == VTP_DATA_ERROR);
  CHECK(std::strlen(vtp_last_error()) > 0);
  CHECK(vtp_ingest("/nonexistent/ais.csv", "", "/tmp/vtp_capi_x", nullptr) == VTP_DATA_ERROR);

  // Numeric errors: a deliberately corrupted gradient is caught.
  char* out = nullptr;
  CHECK(vtp_gradcheck(R"({"gradcheck": {"hidden": 3, "attention_width": 3,
                         "input_len": 2, "horizon": 2}})",
                      "head.W_mu", &out) == VTP_NUMERIC_ERROR);
  CHECK(out == nullptr);  // no summary on failure
  CHECK(contains(vtp_last_error(), "head.W_mu"));
}

TEST_CASE("the progress callback sees every epoch and can stop the run") {
  const Fixture& f = fixture();
  REQUIRE(f.train_status == VTP_OK);

  ProgressLog watched;
  const fs::path out_a = f.root / "train_watched";
  REQUIRE(vtp_train(f.dataset.c_str(), kLinesConfig, out_a.string().c_str(), nullptr,
                    record_progress, &watched, nullptr) == VTP_OK);
  CHECK(watched.calls == 3);  // one call per epoch, last epoch number retained
  CHECK(std::isfinite(watched.last_val));

  ProgressLog stopper;
  stopper.stop_after = 1;
  char* out = nullptr;
  const fs::path out_b = f.root / "train_stopped";
  REQUIRE(vtp_train(f.dataset.c_str(), kLinesConfig, out_b.string().c_str(), nullptr,
                    record_progress, &stopper, &out) == VTP_OK);
  const json s = json::parse(take(out));
  CHECK(stopper.calls == 1);
  CHECK(s["epochs_run"] == 1);
  CHECK(s["stop_reason"] == "stopped by caller");
  CHECK(fs::exists(out_b / "checkpoint.bin"));  // a clean stop still checkpoints
}

TEST_CASE("the embedding interface predicts from raw positions") {
  const Fixture& f = fixture();
  REQUIRE(f.train_status == VTP_OK);

  vtp_model* model = nullptr;
  REQUIRE(vtp_model_open(f.checkpoint.c_str(), &model) == VTP_OK);
  REQUIRE(model != nullptr);
  CHECK(vtp_model_input_len(model) == 4);
  CHECK(vtp_model_horizon(model) == 4);
  CHECK(vtp_model_step_seconds(model) == 900.0);
  CHECK(vtp_model_intention_classes(model) == 0);

  // Six fixes of a straight 2.6 m/s track; only the last four are consumed.
  std::vector<double> xy;
  for (int i = 0; i < 6; ++i) {
    xy.push_back(500000.0 + 120.0 * i);
    xy.push_back(6100000.0 + 80.0 * i);
  }

  vtp_prediction* pred = nullptr;
  REQUIRE(vtp_model_predict(model, xy.data(), xy.size() / 2, -1, 3, 9, &pred) == VTP_OK);
  REQUIRE(pred != nullptr);
  REQUIRE(vtp_prediction_steps(pred) == 4);

  for (int k = 1; k <= 4; ++k) {
    double mean[2] = {0, 0}, cov[4] = {0, 0, 0, 0}, epi[4] = {0, 0, 0, 0};
    REQUIRE(vtp_prediction_mean(pred, k, mean) == VTP_OK);
    REQUIRE(vtp_prediction_cov(pred, k, cov) == VTP_OK);
    REQUIRE(vtp_prediction_epistemic(pred, k, epi) == VTP_OK);
    CHECK(std::isfinite(mean[0]));
    CHECK(std::isfinite(mean[1]));
    // Covariances come back symmetric and positive on the diagonal, with
    // the epistemic part never exceeding the total.
    CHECK(cov[1] == cov[2]);
    CHECK(epi[1] == epi[2]);
    CHECK(cov[0] > 0.0);
    CHECK(cov[3] > 0.0);
    CHECK(epi[0] >= 0.0);
    CHECK(epi[0] <= cov[0]);
    CHECK(epi[3] <= cov[3]);
  }

  // Identical calls reproduce bit for bit; a new seed draws new masks.
  vtp_prediction* same = nullptr;
  vtp_prediction* other = nullptr;
  REQUIRE(vtp_model_predict(model, xy.data(), xy.size() / 2, -1, 3, 9, &same) == VTP_OK);
  REQUIRE(vtp_model_predict(model, xy.data(), xy.size() / 2, -1, 3, 10, &other) == VTP_OK);
  double a[2], b[2], c[2];
  REQUIRE(vtp_prediction_mean(pred, 4, a) == VTP_OK);
  REQUIRE(vtp_prediction_mean(same, 4, b) == VTP_OK);
  REQUIRE(vtp_prediction_mean(other, 4, c) == VTP_OK);
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
  CHECK(a[0] != c[0]);

  // Step indices outside [1, steps] and missing buffers are contract errors.
  double scratch[4];
  CHECK(vtp_prediction_mean(pred, 0, scratch) == VTP_CONTRACT_ERROR);
  CHECK(vtp_prediction_mean(pred, 5, scratch) == VTP_CONTRACT_ERROR);
  CHECK(contains(vtp_last_error(), "outside [1, 4]"));
  CHECK(vtp_prediction_cov(pred, 1, nullptr) == VTP_CONTRACT_ERROR);

  // Input validation on the predict call itself.
  CHECK(vtp_model_predict(model, xy.data(), 3, -1, 3, 9, &same) == VTP_CONTRACT_ERROR);
  CHECK(contains(vtp_last_error(), "need at least 4 points"));
  CHECK(vtp_model_predict(model, xy.data(), 6, -1, 0, 9, &same) == VTP_CONTRACT_ERROR);
  CHECK(vtp_model_predict(model, nullptr, 6, -1, 3, 9, &same) == VTP_CONTRACT_ERROR);
  CHECK(vtp_model_predict(model, xy.data(), 6, 2, 3, 9, &same) == VTP_CONTRACT_ERROR);

  vtp_prediction_free(pred);
  vtp_prediction_free(same);
  vtp_prediction_free(other);
  vtp_model_close(model);
}

TEST_CASE("a labeled model accepts a class index and rejects bad ones") {
  const Fixture& f = fixture();
  REQUIRE(f.labeled_train_status == VTP_OK);

  vtp_model* model = nullptr;
  REQUIRE(vtp_model_open(f.labeled_checkpoint.c_str(), &model) == VTP_OK);
  CHECK(vtp_model_intention_classes(model) == 3);

  std::vector<double> xy;
  for (int i = 0; i < 4; ++i) {
    xy.push_back(545000.0 + 900.0 * 3.0 * i);  // eastbound toward the junction
    xy.push_back(6150000.0);
  }

  vtp_prediction* pred = nullptr;
  REQUIRE(vtp_model_predict(model, xy.data(), 4, 1, 3, 17, &pred) == VTP_OK);
  CHECK(vtp_prediction_steps(pred) == 4);
  vtp_prediction_free(pred);

  // Unknown intention is allowed; an out-of-range class is not.
  REQUIRE(vtp_model_predict(model, xy.data(), 4, -1, 3, 17, &pred) == VTP_OK);
  vtp_prediction_free(pred);
  pred = nullptr;
  CHECK(vtp_model_predict(model, xy.data(), 4, 3, 3, 17, &pred) == VTP_CONTRACT_ERROR);
  CHECK(pred == nullptr);

  vtp_model_close(model);
}

TEST_CASE("handles tolerate null and absent inputs") {
  CHECK(vtp_model_input_len(nullptr) == 0);
  CHECK(vtp_model_horizon(nullptr) == 0);
  CHECK(vtp_model_step_seconds(nullptr) == 0.0);
  CHECK(vtp_model_intention_classes(nullptr) == 0);
  vtp_model_close(nullptr);
  vtp_prediction_free(nullptr);
  CHECK(vtp_prediction_steps(nullptr) == 0);

  vtp_model* model = nullptr;
  CHECK(vtp_model_open("/nonexistent/checkpoint.bin", &model) == VTP_DATA_ERROR);
  CHECK(model == nullptr);
  CHECK(std::strlen(vtp_last_error()) > 0);
  CHECK(vtp_model_open(nullptr, &model) == VTP_CONTRACT_ERROR);
  CHECK(vtp_model_open("x", nullptr) == VTP_CONTRACT_ERROR);

  double mean[2];
  CHECK(vtp_prediction_mean(nullptr, 1, mean) == VTP_CONTRACT_ERROR);
  CHECK(vtp_model_predict(nullptr, mean, 1, -1, 1, 0, nullptr) == VTP_CONTRACT_ERROR);
}
