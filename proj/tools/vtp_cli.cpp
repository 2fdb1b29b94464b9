// vtp command-line interface. Thin shell over the C API: parses flags into
// a configuration overlay, forwards to the library, prints the JSON summary
// to stdout, and exits with the status code the library returned (0 ok,
// 1 contract/config, 2 data, 3 numeric).
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vtp/vtp.h"

namespace {

using nlohmann::json;

// Store a value at a dotted path ("train.seed") inside a JSON object,
// creating intermediate objects as needed.
void set_path(json& root, const std::string& dotted, const json& value) {
  json* cur = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    if (dot == std::string::npos) {
      (*cur)[dotted.substr(start)] = value;
      return;
    }
    cur = &(*cur)[dotted.substr(start, dot - start)];
    start = dot + 1;
  }
}

// Overlay `patch` onto `base`: objects merge member-wise, everything else
// replaces. (The library re-validates the merged document against its
// defaults, so unknown keys are still caught there.)
void deep_merge(json& base, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object())
      deep_merge(base[it.key()], *it);
    else
      base[it.key()] = *it;
  }
}

// Register a flag that writes its parsed value to a config path.
template <typename T>
CLI::Option* opt(CLI::App* cmd, json& overlay, const std::string& flag, const char* path,
                 const std::string& desc) {
  return cmd->add_option_function<T>(
      flag, [&overlay, path](const T& v) { set_path(overlay, path, json(v)); }, desc);
}

CLI::Option* onoff(CLI::App* cmd, json& overlay, const std::string& flag, const char* path,
                   bool value, const std::string& desc) {
  return cmd->add_flag_function(
      flag,
      [&overlay, path, value](std::int64_t n) {
        if (n > 0) set_path(overlay, path, json(value));
      },
      desc);
}

std::string read_file(const std::string& path, int* exit_code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "error: cannot read %s\n", path.c_str());
    *exit_code = VTP_DATA_ERROR;
    return {};
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int finish(vtp_status status, char* out) {
  if (status != VTP_OK) {
    std::fprintf(stderr, "error: %s\n", vtp_last_error());
    return static_cast<int>(status);
  }
  if (out) {
    std::fputs(out, stdout);
    vtp_string_free(out);
  }
  return 0;
}

extern "C" int progress_printer(int epoch, double train_loss, double val_loss, void* user) {
  if (user == nullptr || !*static_cast<bool*>(user))
    std::fprintf(stderr, "epoch %d  train %.6f  val %.6f\n", epoch, train_loss, val_loss);
  return 0;  // never request a stop
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vessel trajectory prediction"};
  app.set_version_flag("--version", std::string(vtp_version()));
  app.require_subcommand(1);

  json overlay = json::object();
  std::string config_path, outdir, regions_path;

  // ---- ingest ---------------------------------------------------------
  std::string in_csv;
  CLI::App* ingest = app.add_subcommand("ingest", "AIS CSV to a windowed dataset");
  ingest->add_option("csv", in_csv, "input AIS CSV file")->required();
  ingest->add_option("--outdir", outdir, "output directory")->required();
  ingest->add_option("--config", config_path, "configuration JSON file");
  opt<std::int64_t>(ingest, overlay, "--delta", "data.delta_s", "resample interval, seconds");
  opt<std::size_t>(ingest, overlay, "--input-len", "data.input_len", "observed steps per window");
  opt<std::size_t>(ingest, overlay, "--horizon", "data.horizon", "predicted steps per window");
  opt<std::int64_t>(ingest, overlay, "--gap", "data.gap_s", "voyage-splitting gap, seconds");
  opt<int>(ingest, overlay, "--zone", "data.utm_zone", "UTM zone");
  opt<std::string>(ingest, overlay, "--ship-type", "data.ship_type",
                   "keep only this ship type (empty keeps all)");
  onoff(ingest, overlay, "--labeled", "data.labeled", true,
        "label trajectories by destination region");
  ingest->add_option("--regions", regions_path, "JSON file with the destination regions");
  opt<double>(ingest, overlay, "--train-frac", "data.splits.train", "training fraction");
  opt<double>(ingest, overlay, "--val-frac", "data.splits.val", "validation fraction");
  opt<double>(ingest, overlay, "--test-frac", "data.splits.test", "test fraction");
  opt<std::uint64_t>(ingest, overlay, "--seed", "data.seed", "split shuffle seed");

  // ---- synth ----------------------------------------------------------
  CLI::App* synth = app.add_subcommand("synth", "synthetic dataset (lines or crossroad)");
  synth->add_option("--outdir", outdir, "output directory")->required();
  synth->add_option("--config", config_path, "configuration JSON file");
  opt<std::string>(synth, overlay, "--scenario", "synth.scenario", "\"lines\" or \"crossroad\"");
  opt<std::size_t>(synth, overlay, "--tracks", "synth.n_tracks", "number of tracks");
  opt<std::size_t>(synth, overlay, "--track-len", "synth.track_len", "samples per track");
  opt<double>(synth, overlay, "--noise", "synth.noise_sigma", "position noise sigma, meters");
  opt<double>(synth, overlay, "--accel", "synth.accel",
              "lines: along-track acceleration, m/s^2");
  opt<std::int64_t>(synth, overlay, "--delta", "synth.delta_s", "sampling interval, seconds");
  opt<std::size_t>(synth, overlay, "--approach-len", "synth.approach_len",
                   "crossroad: samples before the fork");
  opt<double>(synth, overlay, "--waypoint-e", "synth.waypoint_e", "crossroad: fork easting");
  opt<double>(synth, overlay, "--waypoint-n", "synth.waypoint_n", "crossroad: fork northing");
  opt<std::uint64_t>(synth, overlay, "--seed", "synth.seed", "generator seed");
  opt<std::size_t>(synth, overlay, "--input-len", "data.input_len", "observed steps per window");
  opt<std::size_t>(synth, overlay, "--horizon", "data.horizon", "predicted steps per window");
  opt<double>(synth, overlay, "--train-frac", "data.splits.train", "training fraction");
  opt<double>(synth, overlay, "--val-frac", "data.splits.val", "validation fraction");
  opt<double>(synth, overlay, "--test-frac", "data.splits.test", "test fraction");
  opt<std::uint64_t>(synth, overlay, "--split-seed", "data.seed", "split shuffle seed");

  // ---- train ----------------------------------------------------------
  std::string dataset_path, resume_path;
  bool quiet = false;
  CLI::App* train = app.add_subcommand("train", "train a model on a dataset");
  train->add_option("dataset", dataset_path, "dataset file")->required();
  train->add_option("--outdir", outdir, "output directory")->required();
  train->add_option("--config", config_path, "configuration JSON file");
  train->add_option("--resume", resume_path, "checkpoint to continue from");
  train->add_flag("--quiet", quiet, "suppress per-epoch progress on stderr");
  opt<std::size_t>(train, overlay, "--hidden", "model.hidden", "LSTM state width");
  opt<std::size_t>(train, overlay, "--attention-width", "model.attention_width",
                   "attention score width");
  onoff(train, overlay, "--labeled", "model.labeled", true,
        "condition the decoder on intention labels");
  opt<std::size_t>(train, overlay, "--classes", "model.intention_classes",
                   "intention classes (0 takes the dataset's)");
  opt<double>(train, overlay, "--recurrent-dropout", "model.recurrent_dropout",
              "recurrent dropout rate");
  opt<double>(train, overlay, "--attention-dropout", "model.attention_dropout",
              "attention dropout rate");
  opt<double>(train, overlay, "--intention-dropout", "model.intention_dropout",
              "intention dropout rate");
  opt<double>(train, overlay, "--lr", "train.learning_rate", "learning rate");
  opt<double>(train, overlay, "--weight-decay", "train.weight_decay", "decoupled weight decay");
  opt<std::size_t>(train, overlay, "--batch", "train.batch_size", "mini-batch size");
  opt<std::size_t>(train, overlay, "--patience", "train.patience",
                   "non-improving epochs tolerated");
  opt<std::size_t>(train, overlay, "--epochs", "train.max_epochs", "maximum epochs");
  opt<std::string>(train, overlay, "--loss", "train.loss", "\"nll\" or \"mae\"");
  opt<double>(train, overlay, "--grad-clip", "train.grad_clip", "global gradient-norm ceiling");
  opt<std::uint64_t>(train, overlay, "--seed", "train.seed", "training seed");
  opt<std::size_t>(train, overlay, "--workers", "train.workers", "gradient worker threads");

  // ---- predict --------------------------------------------------------
  std::string checkpoint_path, predict_csv, predict_dataset, predict_split = "test";
  long window_index = 0;
  CLI::App* predict = app.add_subcommand("predict", "predict one track's future");
  predict->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  predict->add_option("--csv", predict_csv, "raw AIS CSV with one vessel's track");
  predict->add_option("--dataset", predict_dataset, "dataset file (window mode)");
  predict->add_option("--split", predict_split, "dataset split (default test)");
  predict->add_option("--window", window_index, "window index within the split");
  predict->add_option("--outdir", outdir, "output directory")->required();
  predict->add_option("--config", config_path, "configuration JSON file");
  opt<std::size_t>(predict, overlay, "--samples", "uncertainty.mc_samples",
                   "Monte Carlo passes");
  opt<std::uint64_t>(predict, overlay, "--seed", "uncertainty.seed", "Monte Carlo seed");
  opt<std::vector<double>>(predict, overlay, "--level", "eval.levels",
                           "confidence level(s) for the ellipses");
  onoff(predict, overlay, "--emit-samples", "predict.emit_samples", true,
        "also write each Monte Carlo pass's mean track");

  // ---- evaluate -------------------------------------------------------
  std::string eval_split = "test";
  CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a dataset split");
  evaluate->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  evaluate->add_option("dataset", dataset_path, "dataset file")->required();
  evaluate->add_option("--split", eval_split, "dataset split (default test)");
  evaluate->add_option("--outdir", outdir, "output directory")->required();
  evaluate->add_option("--config", config_path, "configuration JSON file");
  opt<std::size_t>(evaluate, overlay, "--samples", "uncertainty.mc_samples",
                   "Monte Carlo passes");
  opt<std::uint64_t>(evaluate, overlay, "--seed", "uncertainty.seed", "Monte Carlo seed");
  opt<std::vector<double>>(evaluate, overlay, "--origin", "eval.origin",
                           "distance-bin origin: easting northing")
      ->expected(2);
  opt<double>(evaluate, overlay, "--bin-width", "eval.bin_width_m", "distance bin width, meters");
  opt<std::vector<double>>(evaluate, overlay, "--level", "eval.levels",
                           "coverage level(s)");

  // ---- gradcheck ------------------------------------------------------
  std::string sabotage;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "audit gradients on a small model");
  gradcheck->add_option("--sabotage", sabotage,
                        "corrupt this tensor's gradient (the audit must fail)");
  gradcheck->add_option("--config", config_path, "configuration JSON file");
  opt<std::size_t>(gradcheck, overlay, "--hidden", "gradcheck.hidden", "LSTM state width");
  opt<std::size_t>(gradcheck, overlay, "--attention-width", "gradcheck.attention_width",
                   "attention score width");
  opt<std::size_t>(gradcheck, overlay, "--input-len", "gradcheck.input_len", "observed steps");
  opt<std::size_t>(gradcheck, overlay, "--horizon", "gradcheck.horizon", "predicted steps");
  onoff(gradcheck, overlay, "--labeled", "gradcheck.labeled", true, "include the intention path");
  onoff(gradcheck, overlay, "--unlabeled", "gradcheck.labeled", false,
        "exclude the intention path");
  opt<std::size_t>(gradcheck, overlay, "--classes", "gradcheck.intention_classes",
                   "intention classes");
  opt<double>(gradcheck, overlay, "--tol", "gradcheck.tolerance", "relative-error tolerance");
  opt<std::uint64_t>(gradcheck, overlay, "--seed", "gradcheck.seed", "problem seed");

  CLI11_PARSE(app, argc, argv);

  // Assemble the configuration document: file first, flags on top.
  json config = json::object();
  int exit_code = 0;
  if (!config_path.empty()) {
    const std::string text = read_file(config_path, &exit_code);
    if (exit_code != 0) return exit_code;
    config = json::parse(text, nullptr, false);
    if (config.is_discarded()) {
      std::fprintf(stderr, "error: %s is not valid JSON\n", config_path.c_str());
      return VTP_CONTRACT_ERROR;
    }
    if (config.is_null()) config = json::object();
  }
  if (!regions_path.empty()) {
    const std::string text = read_file(regions_path, &exit_code);
    if (exit_code != 0) return exit_code;
    json regions = json::parse(text, nullptr, false);
    if (regions.is_discarded()) {
      std::fprintf(stderr, "error: %s is not valid JSON\n", regions_path.c_str());
      return VTP_CONTRACT_ERROR;
    }
    set_path(overlay, "data.regions", regions);
  }
  if (!config.is_object()) {
    std::fprintf(stderr, "error: the configuration root must be a JSON object\n");
    return VTP_CONTRACT_ERROR;
  }
  deep_merge(config, overlay);
  const std::string cfg = config.dump();

  // The call must complete before `out` is read, so keep the two steps on
  // separate statements (argument evaluation order is unspecified).
  char* out = nullptr;
  vtp_status status = VTP_CONTRACT_ERROR;
  if (*ingest) {
    status = vtp_ingest(in_csv.c_str(), cfg.c_str(), outdir.c_str(), &out);
  } else if (*synth) {
    status = vtp_synth(cfg.c_str(), outdir.c_str(), &out);
  } else if (*train) {
    status = vtp_train(dataset_path.c_str(), cfg.c_str(), outdir.c_str(),
                       resume_path.empty() ? nullptr : resume_path.c_str(), progress_printer,
                       &quiet, &out);
  } else if (*predict) {
    status = vtp_predict(checkpoint_path.c_str(),
                         predict_csv.empty() ? nullptr : predict_csv.c_str(),
                         predict_dataset.empty() ? nullptr : predict_dataset.c_str(),
                         predict_split.c_str(), window_index, cfg.c_str(), outdir.c_str(), &out);
  } else if (*evaluate) {
    status = vtp_evaluate(checkpoint_path.c_str(), dataset_path.c_str(), eval_split.c_str(),
                          cfg.c_str(), outdir.c_str(), &out);
  } else if (*gradcheck) {
    status = vtp_gradcheck(cfg.c_str(), sabotage.empty() ? nullptr : sabotage.c_str(), &out);
  }
  return finish(status, out);
}
