#include "core/commands.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "core/ais.hpp"
#include "core/checkpoint.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/geo.hpp"
#include "core/gradcheck.hpp"
#include "core/loss.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/pipeline.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"
#include "core/uncertainty.hpp"
#include "json.hpp"

namespace vtp {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kMetersPerNmi = 1852.0;
constexpr std::size_t kEllipseVertices = 64;

void ensure_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw ContractError("an output directory is required");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir + ": " + ec.message());
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

void write_config_echo(const RunConfig& rc, const std::string& out_dir) {
  write_text_file(fs::path(out_dir) / "config.json", rc.resolved_json + "\n");
}

// Full-precision decimal form that reads back bit-identically.
std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Tensor one_hot(int cls, std::size_t v) {
  Tensor t = Tensor::zeros({v, 1});
  t.data[static_cast<std::size_t>(cls)] = 1.0;
  return t;
}

// Windowed coordinates (normalized by `from`) back to raw meters.
std::vector<double> to_raw(const std::vector<double>& normalized, const NormStats& from) {
  std::vector<double> raw = normalized;
  for (std::size_t i = 0; i + 1 < raw.size(); i += 2) denormalize_point(from, raw[i], raw[i + 1]);
  return raw;
}

// Raw interleaved meters to model input columns under the model's statistics.
std::vector<Tensor> to_model_columns(const std::vector<double>& raw, const NormStats& to) {
  std::vector<Tensor> xs;
  xs.reserve(raw.size() / 2);
  for (std::size_t i = 0; i + 1 < raw.size(); i += 2) {
    double e = raw[i], n = raw[i + 1];
    normalize_point(to, e, n);
    xs.push_back(Tensor::column({e, n}));
  }
  return xs;
}

// ---------------------------------------------------------------------------
// Dataset assembly shared by ingest and synth.

struct AssemblyResult {
  Dataset dataset;
  std::size_t tracks_in = 0;        // resampled tracks offered for windowing
  std::size_t tracks_too_short = 0; // dropped: shorter than input_len + horizon
  std::size_t tracks_unlabeled = 0; // dropped in labeled mode: no region matched
};

AssemblyResult assemble_from_tracks(std::vector<Trajectory> tracks, const DataSettings& ds,
                                    bool labeled, int classes,
                                    std::vector<std::string> vocabulary) {
  AssemblyResult out;
  out.tracks_in = tracks.size();
  const std::size_t min_len = ds.input_len + ds.horizon;
  std::vector<Trajectory> kept;
  kept.reserve(tracks.size());
  for (Trajectory& tr : tracks) {
    if (tr.size() < min_len) {
      ++out.tracks_too_short;
      continue;
    }
    kept.push_back(std::move(tr));
  }
  if (kept.empty())
    throw DataError("no trajectory reaches input_len + horizon = " + std::to_string(min_len) +
                    " samples");
  const SplitIndices splits =
      split_trajectories(kept.size(), ds.f_train, ds.f_val, ds.f_test, ds.seed);
  out.dataset = assemble_dataset(kept, splits, ds.input_len, ds.horizon, ds.utm_zone, labeled,
                                 classes, std::move(vocabulary));
  return out;
}

std::string write_dataset_artifacts(const Dataset& d, const RunConfig& rc,
                                    const std::string& out_dir, const json& provenance) {
  ensure_out_dir(out_dir);
  save_dataset(d, (fs::path(out_dir) / "dataset.bin").string());
  json manifest = json::parse(dataset_manifest_json(d, rc.resolved_json));
  for (auto it = provenance.begin(); it != provenance.end(); ++it) manifest[it.key()] = it.value();
  manifest["files"] = json{{"dataset", "dataset.bin"}, {"manifest", "manifest.json"},
                           {"config", "config.json"}};
  const std::string text = manifest.dump(2) + "\n";
  write_text_file(fs::path(out_dir) / "manifest.json", text);
  write_config_echo(rc, out_dir);
  return text;
}

// ---------------------------------------------------------------------------
// Prediction helpers.

struct DenormalizedMoments {
  std::vector<StepMoments> steps;  // mean and covariances in raw meters
};

DenormalizedMoments denormalize_moments(const PredictionMoments& pm, const NormStats& norm) {
  DenormalizedMoments out;
  out.steps = pm.steps;
  for (StepMoments& st : out.steps) {
    denormalize_point(norm, st.mean[0], st.mean[1]);
    denormalize_covariance(norm, st.epistemic.data());
    denormalize_covariance(norm, st.epistemic_raw.data());
    denormalize_covariance(norm, st.aleatoric.data());
    denormalize_covariance(norm, st.total.data());
    denormalize_covariance(norm, st.total_raw.data());
  }
  return out;
}

json lonlat(double easting, double northing, int zone) {
  const LatLon ll = invert_utm(easting, northing, zone);
  return json::array({ll.lon, ll.lat});
}

json line_feature(const char* kind, const std::vector<double>& raw_en, int zone) {
  json coords = json::array();
  for (std::size_t i = 0; i + 1 < raw_en.size(); i += 2)
    coords.push_back(lonlat(raw_en[i], raw_en[i + 1], zone));
  return json{{"type", "Feature"},
              {"properties", {{"kind", kind}}},
              {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}};
}

// Confidence ellipse of a 2x2 covariance as a closed counter-clockwise ring.
json ellipse_feature(const StepMoments& st, std::size_t step, std::int64_t delta_s, double level,
                     int zone) {
  const double a = std::max(st.total[0], 0.0);
  const double b11 = std::sqrt(a);
  const double b21 = b11 > 0.0 ? st.total[2] / b11 : 0.0;
  const double b22 = std::sqrt(std::max(st.total[3] - b21 * b21, 0.0));
  const double r = std::sqrt(chi2_quantile_2dof(level));
  json ring = json::array();
  for (std::size_t i = 0; i <= kEllipseVertices; ++i) {
    const double th =
        2.0 * 3.14159265358979323846 * static_cast<double>(i % kEllipseVertices) /
        static_cast<double>(kEllipseVertices);
    const double z1 = std::cos(th), z2 = std::sin(th);
    const double e = st.mean[0] + r * (b11 * z1);
    const double n = st.mean[1] + r * (b21 * z1 + b22 * z2);
    ring.push_back(lonlat(e, n, zone));
  }
  return json{{"type", "Feature"},
              {"properties",
               {{"kind", "ellipse"},
                {"step", step},
                {"seconds_ahead", static_cast<std::int64_t>(step) * delta_s},
                {"level", level}}},
              {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}}};
}

// ---------------------------------------------------------------------------
// Evaluation helpers.

json coverage_json(const std::vector<EvalPair>& pairs, const std::vector<double>& levels) {
  json out = json::array();
  for (double lv : levels) {
    const CoverageResult c = coverage(pairs, lv);
    out.push_back(json{{"level", lv},
                       {"fraction", c.fraction},
                       {"covered", c.covered},
                       {"usable", c.usable},
                       {"excluded", c.excluded}});
  }
  return out;
}

json binned_json(const std::vector<EvalPair>& pairs, std::size_t k, const EvalSettings& ev,
                 bool with_cov) {
  const auto bins = distance_binned_ape(pairs, k, ev.origin_e, ev.origin_n, ev.bin_width_m);
  std::vector<GenVarBin> gv;
  if (with_cov) gv = distance_binned_gen_var(pairs, k, ev.origin_e, ev.origin_n, ev.bin_width_m);
  json out = json::array();
  for (std::size_t i = 0; i < bins.size(); ++i) {
    json row{{"lo_m", bins[i].lo},
             {"hi_m", bins[i].hi},
             {"count", bins[i].count},
             {"ape_km", bins[i].ape / 1000.0}};
    if (with_cov) row["gen_var_km2"] = gv[i].gen_var / 1e6;
    out.push_back(std::move(row));
  }
  return out;
}

// One scored predictor: step-wise errors, marked-horizon errors in both
// units, uncertainty statistics when covariances exist, and the optional
// distance-binned tables at the marked horizons.
json metric_block(const std::vector<EvalPair>& pairs, std::size_t horizon, std::size_t k1,
                  std::size_t k2, std::size_t k3, const EvalSettings& ev, bool with_cov) {
  json block;
  json ape_km = json::array();
  for (std::size_t k = 1; k <= horizon; ++k) ape_km.push_back(ape(pairs, k) / 1000.0);
  block["ape_km"] = ape_km;
  const double a1 = ape(pairs, k1), a2 = ape(pairs, k2), a3 = ape(pairs, k3);
  block["ape_1h_km"] = a1 / 1000.0;
  block["ape_2h_km"] = a2 / 1000.0;
  block["ape_3h_km"] = a3 / 1000.0;
  block["ape_1h_nmi"] = a1 / kMetersPerNmi;
  block["ape_2h_nmi"] = a2 / kMetersPerNmi;
  block["ape_3h_nmi"] = a3 / kMetersPerNmi;
  const double d = ade(pairs);
  block["ade_km"] = d / 1000.0;
  block["ade_nmi"] = d / kMetersPerNmi;
  if (with_cov) {
    json gv = json::array();
    for (std::size_t k = 1; k <= horizon; ++k)
      gv.push_back(mean_generalized_variance_at(pairs, k) / 1e6);
    block["gen_var_km2"] = gv;
    block["coverage"] = coverage_json(pairs, ev.levels);
  }
  if (ev.has_origin) {
    block["binned"] = json{{"1h", binned_json(pairs, k1, ev, with_cov)},
                           {"2h", binned_json(pairs, k2, ev, with_cov)},
                           {"3h", binned_json(pairs, k3, ev, with_cov)}};
  } else {
    block["binned"] = nullptr;
  }
  return block;
}

void append_binned_csv(std::string& csv, const std::string& block, const char* mark,
                       const json& rows) {
  for (const json& r : rows) {
    csv += block + "," + mark + "," + g17(r["lo_m"].get<double>()) + "," +
           g17(r["hi_m"].get<double>()) + "," + std::to_string(r["count"].get<std::size_t>()) +
           "," + g17(r["ape_km"].get<double>());
    csv += ",";
    if (r.contains("gen_var_km2")) csv += g17(r["gen_var_km2"].get<double>());
    csv += "\n";
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string cmd_ingest(const std::string& csv_path, const RunConfig& rc,
                       const std::string& out_dir) {
  if (csv_path.empty()) throw ContractError("ingest needs an input CSV path");
  const DataSettings& ds = rc.data;
  if (ds.labeled && ds.regions.empty())
    throw ConfigError("data.labeled requires at least one region in data.regions");

  const ParsedAis parsed = parse_ais_csv_file(csv_path, ds.ship_type);
  PipelineCounters counters;
  const std::vector<Voyage> voyages =
      segment_voyages(parsed.records, ds.gap_s, ds.utm_zone, counters);

  std::vector<Trajectory> tracks;
  std::string prev_vessel;
  int ordinal = 0;
  for (const Voyage& v : voyages) {
    if (v.vessel != prev_vessel) {
      prev_vessel = v.vessel;
      ordinal = 0;
    }
    auto tr = resample_voyage(v, ds.delta_s, ordinal++);
    if (!tr) {
      ++counters.segments_too_short;
      continue;
    }
    tracks.push_back(std::move(*tr));
  }

  int classes = 0;
  std::vector<std::string> vocabulary;
  if (ds.labeled) {
    classes = static_cast<int>(ds.regions.size());
    for (const Region& r : ds.regions) vocabulary.push_back(r.name);
    std::vector<Trajectory> labeled_tracks;
    labeled_tracks.reserve(tracks.size());
    for (Trajectory& tr : tracks) {
      const auto cls = label_by_regions(tr, ds.regions, ds.utm_zone);
      if (!cls) {
        ++counters.trajectories_unlabeled;
        continue;
      }
      tr.intention = *cls;
      labeled_tracks.push_back(std::move(tr));
    }
    tracks = std::move(labeled_tracks);
  }
  if (tracks.empty()) throw DataError("no usable trajectory after segmentation and resampling");

  AssemblyResult asm_result =
      assemble_from_tracks(std::move(tracks), ds, ds.labeled, classes, std::move(vocabulary));
  counters.segments_too_short += asm_result.tracks_too_short;

  const json provenance{
      {"ingest",
       {{"source", fs::path(csv_path).filename().string()},
        {"rows_total", parsed.stats.rows_total},
        {"rows_kept", parsed.stats.rows_kept},
        {"rows_malformed", parsed.stats.rows_malformed},
        {"rows_filtered", parsed.stats.rows_filtered},
        {"records_out_of_zone", counters.records_out_of_zone},
        {"duplicate_timestamps", counters.duplicate_timestamps},
        {"segments_total", counters.segments_total},
        {"segments_too_short", counters.segments_too_short},
        {"trajectories_unlabeled", counters.trajectories_unlabeled}}}};
  return write_dataset_artifacts(asm_result.dataset, rc, out_dir, provenance);
}

std::string cmd_synth(const RunConfig& rc, const std::string& out_dir) {
  const SynthSettings& sy = rc.synth;
  std::vector<Trajectory> tracks;
  bool labeled = false;
  int classes = 0;
  std::vector<std::string> vocabulary;
  if (sy.scenario == "lines") {
    LinesConfig cfg;
    cfg.n_tracks = sy.n_tracks;
    cfg.track_len = sy.track_len;
    cfg.noise_sigma = sy.noise_sigma;
    cfg.accel = sy.accel;
    cfg.delta_s = sy.delta_s;
    cfg.seed = sy.seed;
    tracks = synth_lines(cfg);
  } else {
    CrossroadConfig cfg;
    cfg.n_tracks = sy.n_tracks;
    cfg.approach_len = sy.approach_len;
    cfg.track_len = sy.track_len;
    cfg.noise_sigma = sy.noise_sigma;
    cfg.delta_s = sy.delta_s;
    cfg.seed = sy.seed;
    cfg.waypoint_e = sy.waypoint_e;
    cfg.waypoint_n = sy.waypoint_n;
    tracks = synth_crossroad(cfg);
    labeled = true;
    classes = 3;
    // Branch 0 turns -45 degrees (starboard), 1 holds course, 2 turns +45.
    vocabulary = {"right", "straight", "left"};
  }

  AssemblyResult asm_result =
      assemble_from_tracks(std::move(tracks), rc.data, labeled, classes, std::move(vocabulary));

  const json provenance{{"synth",
                         {{"scenario", sy.scenario},
                          {"tracks_generated", asm_result.tracks_in},
                          {"tracks_too_short", asm_result.tracks_too_short}}}};
  return write_dataset_artifacts(asm_result.dataset, rc, out_dir, provenance);
}

std::string cmd_train(const std::string& dataset_path, const RunConfig& rc,
                      const std::string& out_dir, const std::string& resume_checkpoint,
                      const ProgressFn& progress) {
  if (dataset_path.empty()) throw ContractError("train needs a dataset path");
  const Dataset data = load_dataset(dataset_path);

  ModelConfig mcfg = rc.model;
  // A labeled model with no explicit class count takes it from the dataset.
  if (mcfg.labeled && mcfg.intention_classes == 0 && data.intention_classes > 0)
    mcfg.intention_classes = static_cast<std::size_t>(data.intention_classes);
  mcfg.validate();

  Checkpoint resume;
  const Checkpoint* resume_ptr = nullptr;
  if (!resume_checkpoint.empty()) {
    resume = load_checkpoint(resume_checkpoint);
    resume_ptr = &resume;
  }

  const TrainResult result = train_model(data, mcfg, rc.train, resume_ptr, progress);

  ensure_out_dir(out_dir);
  save_checkpoint(result.best, (fs::path(out_dir) / "checkpoint.bin").string());

  std::string log_csv =
      "epoch,train_loss,val_loss,val_ape_1h,val_ape_2h,val_ape_3h,val_ade,wall_seconds\n";
  for (const EpochLog& lg : result.log) {
    log_csv += std::to_string(lg.epoch) + "," + g17(lg.train_loss) + "," + g17(lg.val_loss) + "," +
               g17(lg.val_ape_1h) + "," + g17(lg.val_ape_2h) + "," + g17(lg.val_ape_3h) + "," +
               g17(lg.val_ade) + "," + g17(lg.wall_seconds) + "\n";
  }
  write_text_file(fs::path(out_dir) / "training_log.csv", log_csv);
  write_config_echo(rc, out_dir);

  json summary{{"epochs_run", result.log.size()},
               {"best_epoch", result.best.epoch},
               {"best_val_loss", result.best.best_val_loss},
               {"early_stopped", result.early_stopped},
               {"diverged", result.diverged},
               {"stop_reason", result.stop_reason},
               {"loss", rc.train.loss == LossKind::Mae ? "mae" : "nll"},
               {"files",
                {{"checkpoint", "checkpoint.bin"},
                 {"log", "training_log.csv"},
                 {"config", "config.json"},
                 {"summary", "summary.json"}}}};
  if (!result.log.empty()) {
    summary["first_val_loss"] = result.log.front().val_loss;
    summary["final_val_loss"] = result.log.back().val_loss;
  } else {
    summary["first_val_loss"] = nullptr;
    summary["final_val_loss"] = nullptr;
  }
  const std::string text = summary.dump(2) + "\n";
  write_text_file(fs::path(out_dir) / "summary.json", text);

  if (result.diverged) throw NumericError("training diverged: " + result.stop_reason);
  return text;
}

std::string cmd_predict(const std::string& checkpoint_path, const std::string& input_csv,
                        const std::string& dataset_path, const std::string& split,
                        long window_index, const RunConfig& rc, const std::string& out_dir) {
  if (checkpoint_path.empty()) throw ContractError("predict needs a checkpoint path");
  const bool from_csv = !input_csv.empty();
  const bool from_dataset = !dataset_path.empty();
  if (from_csv == from_dataset)
    throw ContractError(
        "predict needs exactly one input: a raw track CSV or a dataset window (dataset path, "
        "split, window index)");

  Checkpoint ck = load_checkpoint(checkpoint_path);
  const std::size_t l = ck.input_len;
  const std::size_t h = ck.horizon;

  std::vector<double> raw_in;     // 2l, interleaved raw meters
  std::vector<double> raw_truth;  // 2h when known, else empty
  int intention = -1;
  json source;

  if (from_csv) {
    const ParsedAis parsed = parse_ais_csv_file(input_csv);
    PipelineCounters counters;
    const std::vector<Voyage> voyages =
        segment_voyages(parsed.records, rc.data.gap_s, ck.utm_zone, counters);
    if (voyages.empty()) throw DataError("no usable voyage in " + input_csv);
    for (const Voyage& v : voyages)
      if (v.vessel != voyages.front().vessel)
        throw ContractError("prediction input must contain a single vessel, found " +
                            voyages.front().vessel + " and " + v.vessel);
    const Voyage* latest = &voyages.front();
    for (const Voyage& v : voyages)
      if (v.t.front() > latest->t.front()) latest = &v;
    const auto track = resample_voyage(*latest, ck.delta_s, 0);
    if (!track || track->size() < l)
      throw ContractError("input track covers " +
                          std::to_string(track ? track->size() : std::size_t{0}) +
                          " grid points after resampling; the model needs " + std::to_string(l));
    const std::size_t off = track->size() - l;  // the latest l points
    for (std::size_t i = 0; i < l; ++i) {
      raw_in.push_back(track->easting[off + i]);
      raw_in.push_back(track->northing[off + i]);
    }
    source = json{{"kind", "csv"},
                  {"path", fs::path(input_csv).filename().string()},
                  {"vessel", latest->vessel}};
  } else {
    const Dataset d = load_dataset(dataset_path);
    if (d.input_len != l || d.horizon != h || d.delta_s != ck.delta_s ||
        d.utm_zone != ck.utm_zone)
      throw DimensionError("dataset geometry does not match the checkpoint");
    const auto range = d.split_range(split);
    const std::size_t count = range.second - range.first;
    if (window_index < 0 || static_cast<std::size_t>(window_index) >= count)
      throw ContractError("window index " + std::to_string(window_index) +
                          " outside split \"" + split + "\" with " + std::to_string(count) +
                          " window(s)");
    const DatasetWindow& w = d.windows[range.first + static_cast<std::size_t>(window_index)];
    raw_in = to_raw(w.x, d.norm);
    raw_truth = to_raw(w.y, d.norm);
    intention = w.intention;
    source = json{{"kind", "dataset"}, {"split", split}, {"window", window_index}};
  }

  const std::vector<Tensor> xs = to_model_columns(raw_in, ck.norm);
  Tensor psi;
  const Tensor* psi_ptr = nullptr;
  if (ck.model.labeled && intention >= 0) {
    if (static_cast<std::size_t>(intention) >= ck.model.intention_classes)
      throw ContractError("window intention " + std::to_string(intention) +
                          " outside the checkpoint's " +
                          std::to_string(ck.model.intention_classes) + " classes");
    psi = one_hot(intention, ck.model.intention_classes);
    psi_ptr = &psi;
  }

  const McBatch batch =
      mc_forward(ck.params, xs, psi_ptr, h, rc.uncertainty.mc_samples, rc.uncertainty.seed);
  const DenormalizedMoments pred = denormalize_moments(combine_moments(batch), ck.norm);

  // --- GeoJSON ---------------------------------------------------------
  json features = json::array();
  features.push_back(line_feature("input", raw_in, ck.utm_zone));
  if (!raw_truth.empty()) features.push_back(line_feature("truth", raw_truth, ck.utm_zone));
  std::vector<double> mean_track;
  for (const StepMoments& st : pred.steps) {
    mean_track.push_back(st.mean[0]);
    mean_track.push_back(st.mean[1]);
  }
  features.push_back(line_feature("mean", mean_track, ck.utm_zone));
  for (std::size_t k = 1; k <= pred.steps.size(); ++k)
    for (double lv : rc.eval.levels)
      features.push_back(ellipse_feature(pred.steps[k - 1], k, ck.delta_s, lv, ck.utm_zone));
  if (rc.predict.emit_samples) {
    for (std::size_t j = 0; j < batch.samples.size(); ++j) {
      std::vector<double> pass_track;
      for (const GaussianStep& st : batch.samples[j]) {
        double e = st.mean[0], n = st.mean[1];
        denormalize_point(ck.norm, e, n);
        pass_track.push_back(e);
        pass_track.push_back(n);
      }
      json f = line_feature("sample", pass_track, ck.utm_zone);
      f["properties"]["pass"] = j;
      features.push_back(std::move(f));
    }
  }
  const json geojson{{"type", "FeatureCollection"}, {"features", features}};

  // --- CSV -------------------------------------------------------------
  std::string csv =
      "step,seconds_ahead,mean_e,mean_n,truth_e,truth_n,total_ee,total_en,total_nn,"
      "aleatoric_ee,aleatoric_en,aleatoric_nn,epistemic_ee,epistemic_en,epistemic_nn\n";
  for (std::size_t k = 1; k <= pred.steps.size(); ++k) {
    const StepMoments& st = pred.steps[k - 1];
    csv += std::to_string(k) + "," +
           std::to_string(static_cast<std::int64_t>(k) * ck.delta_s) + "," + g17(st.mean[0]) +
           "," + g17(st.mean[1]) + ",";
    if (!raw_truth.empty())
      csv += g17(raw_truth[2 * (k - 1)]) + "," + g17(raw_truth[2 * (k - 1) + 1]);
    else
      csv += ",";
    csv += "," + g17(st.total[0]) + "," + g17(st.total[1]) + "," + g17(st.total[3]) + "," +
           g17(st.aleatoric[0]) + "," + g17(st.aleatoric[1]) + "," + g17(st.aleatoric[3]) + "," +
           g17(st.epistemic[0]) + "," + g17(st.epistemic[1]) + "," + g17(st.epistemic[3]) + "\n";
  }

  ensure_out_dir(out_dir);
  write_text_file(fs::path(out_dir) / "prediction.geojson", geojson.dump(2) + "\n");
  write_text_file(fs::path(out_dir) / "prediction.csv", csv);
  write_config_echo(rc, out_dir);

  json summary{{"source", source},
               {"steps", h},
               {"delta_s", ck.delta_s},
               {"mc_samples", rc.uncertainty.mc_samples},
               {"seed", rc.uncertainty.seed},
               {"levels", rc.eval.levels},
               {"intention", intention >= 0 && ck.model.labeled
                                 ? json(ck.vocabulary[static_cast<std::size_t>(intention)])
                                 : json(nullptr)},
               {"files",
                {{"geojson", "prediction.geojson"},
                 {"csv", "prediction.csv"},
                 {"config", "config.json"},
                 {"summary", "summary.json"}}}};
  const std::string text = summary.dump(2) + "\n";
  write_text_file(fs::path(out_dir) / "summary.json", text);
  return text;
}

std::string cmd_evaluate(const std::string& checkpoint_path, const std::string& dataset_path,
                         const std::string& split, const RunConfig& rc,
                         const std::string& out_dir) {
  if (checkpoint_path.empty()) throw ContractError("evaluate needs a checkpoint path");
  if (dataset_path.empty()) throw ContractError("evaluate needs a dataset path");
  Checkpoint ck = load_checkpoint(checkpoint_path);
  const Dataset d = load_dataset(dataset_path);

  if (d.input_len != ck.input_len)
    throw DimensionError("dataset input_len " + std::to_string(d.input_len) +
                         " does not match the checkpoint's " + std::to_string(ck.input_len));
  if (d.horizon != ck.horizon)
    throw DimensionError("dataset horizon " + std::to_string(d.horizon) +
                         " does not match the checkpoint's " + std::to_string(ck.horizon));
  if (d.delta_s != ck.delta_s)
    throw DimensionError("dataset sampling interval " + std::to_string(d.delta_s) +
                         " s does not match the checkpoint's " + std::to_string(ck.delta_s) +
                         " s");
  if (d.utm_zone != ck.utm_zone)
    throw DimensionError("dataset UTM zone " + std::to_string(d.utm_zone) +
                         " does not match the checkpoint's " + std::to_string(ck.utm_zone));
  if (ck.model.labeled) {
    if (!d.labeled) throw DimensionError("a labeled checkpoint needs a labeled dataset");
    if (static_cast<std::size_t>(d.intention_classes) != ck.model.intention_classes)
      throw DimensionError("dataset has " + std::to_string(d.intention_classes) +
                           " intention classes, the checkpoint " +
                           std::to_string(ck.model.intention_classes));
  }

  const auto range = d.split_range(split);
  if (range.first == range.second)
    throw DataError("split \"" + split + "\" has no windows to evaluate");

  const std::size_t M = rc.uncertainty.mc_samples;
  std::vector<EvalPair> model_pairs, ablate_pairs, ncv_pairs;
  for (std::size_t i = range.first; i < range.second; ++i) {
    const DatasetWindow& w = d.windows[i];
    const std::vector<double> raw_in = to_raw(w.x, d.norm);
    const std::vector<double> raw_truth = to_raw(w.y, d.norm);
    const std::vector<Tensor> xs = to_model_columns(raw_in, ck.norm);
    Tensor psi;
    const Tensor* psi_ptr = nullptr;
    if (ck.model.labeled && w.intention >= 0) {
      psi = one_hot(w.intention, ck.model.intention_classes);
      psi_ptr = &psi;
    }
    // Every window gets its own seed, stable under split slicing; the
    // ablation below reuses it so both passes see identical mask draws.
    const std::uint64_t master = mix_seed(rc.uncertainty.seed, static_cast<std::uint64_t>(i));

    const auto score = [&](const Tensor* intent) {
      const DenormalizedMoments pred =
          denormalize_moments(combine_moments(mc_forward(ck.params, xs, intent, d.horizon, M,
                                                         master)),
                              ck.norm);
      EvalPair p;
      p.truth = raw_truth;
      for (const StepMoments& st : pred.steps) {
        p.mean.push_back(st.mean[0]);
        p.mean.push_back(st.mean[1]);
        for (double c : st.total) p.cov.push_back(c);
      }
      return p;
    };
    model_pairs.push_back(score(psi_ptr));
    if (ck.model.labeled) ablate_pairs.push_back(score(nullptr));

    EvalPair base;
    base.mean = ncv_baseline(raw_in, d.delta_s, d.horizon);
    base.truth = raw_truth;
    ncv_pairs.push_back(std::move(base));
  }

  const std::size_t k1 = horizon_step(1.0, d.delta_s, d.horizon);
  const std::size_t k2 = horizon_step(2.0, d.delta_s, d.horizon);
  const std::size_t k3 = horizon_step(3.0, d.delta_s, d.horizon);

  json report{{"split", split},
              {"windows", range.second - range.first},
              {"mc_samples", M},
              {"seed", rc.uncertainty.seed},
              {"steps", {{"1h", k1}, {"2h", k2}, {"3h", k3}}},
              {"origin", rc.eval.has_origin
                             ? json(json::array({rc.eval.origin_e, rc.eval.origin_n}))
                             : json(nullptr)},
              {"bin_width_m", rc.eval.bin_width_m},
              {"model", metric_block(model_pairs, d.horizon, k1, k2, k3, rc.eval, true)},
              {"ncv", metric_block(ncv_pairs, d.horizon, k1, k2, k3, rc.eval, false)}};
  if (ck.model.labeled)
    report["model_no_intention"] =
        metric_block(ablate_pairs, d.horizon, k1, k2, k3, rc.eval, true);
  json files{{"report", "evaluation.json"},
             {"coverage", "coverage.csv"},
             {"config", "config.json"}};
  if (rc.eval.has_origin) files["binned_ape"] = "binned_ape.csv";
  report["files"] = files;

  ensure_out_dir(out_dir);
  const std::string text = report.dump(2) + "\n";
  write_text_file(fs::path(out_dir) / "evaluation.json", text);

  std::string cov_csv = "block,level,fraction,covered,usable,excluded\n";
  const auto append_cov = [&](const char* name, const json& block) {
    for (const json& c : block["coverage"])
      cov_csv += std::string(name) + "," + g17(c["level"].get<double>()) + "," +
                 g17(c["fraction"].get<double>()) + "," +
                 std::to_string(c["covered"].get<std::size_t>()) + "," +
                 std::to_string(c["usable"].get<std::size_t>()) + "," +
                 std::to_string(c["excluded"].get<std::size_t>()) + "\n";
  };
  append_cov("model", report["model"]);
  if (ck.model.labeled) append_cov("model_no_intention", report["model_no_intention"]);
  write_text_file(fs::path(out_dir) / "coverage.csv", cov_csv);

  if (rc.eval.has_origin) {
    std::string binned_csv = "block,horizon,lo_m,hi_m,count,ape_km,gen_var_km2\n";
    const auto append_block = [&](const std::string& name, const json& block) {
      for (const char* mark : {"1h", "2h", "3h"})
        append_binned_csv(binned_csv, name, mark, block["binned"][mark]);
    };
    append_block("model", report["model"]);
    if (ck.model.labeled) append_block("model_no_intention", report["model_no_intention"]);
    append_block("ncv", report["ncv"]);
    write_text_file(fs::path(out_dir) / "binned_ape.csv", binned_csv);
  }
  write_config_echo(rc, out_dir);
  return text;
}

std::string cmd_gradcheck(const RunConfig& rc, const std::string& sabotage) {
  const GradcheckSettings& gc = rc.gradcheck;
  ModelConfig cfg;
  cfg.hidden = gc.hidden;
  cfg.attention_width = gc.attention_width;
  cfg.labeled = gc.labeled;
  cfg.intention_classes = gc.labeled ? gc.intention_classes : 0;
  cfg.recurrent_dropout = 0.1;
  cfg.attention_dropout = 0.1;
  cfg.intention_dropout = 0.3;
  cfg.validate();

  ModelParams params = ModelParams::create(cfg, gc.seed);

  if (!sabotage.empty() && params.find(sabotage) == nullptr) {
    std::string names;
    for (const Parameter* p : static_cast<const ModelParams&>(params).all()) {
      if (!names.empty()) names += ", ";
      names += p->name;
    }
    throw ContractError("unknown parameter \"" + sabotage + "\"; valid names: " + names);
  }

  // Fixed random problem instance: inputs, targets, intention, and one set
  // of training-mode dropout masks shared by every graph build, so each
  // build is deterministic and the masked paths are exercised.
  Rng rng(mix_seed(gc.seed, 0xa5a5a5a5ull));
  std::vector<Tensor> xs, targets;
  for (std::size_t i = 0; i < gc.input_len; ++i)
    xs.push_back(Tensor::column({rng.normal(), rng.normal()}));
  for (std::size_t k = 0; k < gc.horizon; ++k)
    targets.push_back(Tensor::column({rng.normal(), rng.normal()}));
  Tensor psi;
  const Tensor* psi_ptr = nullptr;
  if (cfg.labeled) {
    psi = one_hot(static_cast<int>(rng.below(cfg.intention_classes)), cfg.intention_classes);
    psi_ptr = &psi;
  }
  const MaskSet masks = sample_masks(cfg, ForwardMode::Train, rng);

  json tensors = json::array();
  bool all_pass = true;
  std::string failing;
  for (Parameter* p : params.all()) {
    const std::string name = p->name;
    const auto build = [&](Tape& t, Var x) -> Var {
      const auto hook = [&](std::string_view n, Var v) -> Var {
        Var r = (n == name) ? x : v;
        if (!sabotage.empty() && n == sabotage) r = t.flip_grad(r);
        return r;
      };
      const ModelVars mv = lease_params(t, params, hook);
      const ForwardGraph g = model_forward(t, mv, cfg, xs, psi_ptr, gc.horizon, masks);
      return nll_loss(t, g, targets);
    };
    const GradCheckReport rep = grad_check(build, p->value, 1e-5, gc.tolerance);
    tensors.push_back(json{{"name", name},
                           {"max_rel_err", rep.max_rel_err},
                           {"pass", rep.pass},
                           {"deterministic", rep.deterministic}});
    if (!rep.pass) {
      all_pass = false;
      if (!failing.empty()) failing += ", ";
      failing += name;
    }
  }

  json report{{"hidden", cfg.hidden},
              {"attention_width", cfg.attention_width},
              {"input_len", gc.input_len},
              {"horizon", gc.horizon},
              {"labeled", cfg.labeled},
              {"intention_classes", cfg.intention_classes},
              {"tolerance", gc.tolerance},
              {"sabotage", sabotage.empty() ? json(nullptr) : json(sabotage)},
              {"tensors", tensors},
              {"pass", all_pass}};
  if (!all_pass)
    throw NumericError("gradient check failed for: " + failing +
                       (sabotage.empty() ? "" : " (sabotage: " + sabotage + ")"));
  return report.dump(2) + "\n";
}

}  // namespace vtp
