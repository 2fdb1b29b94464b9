#include "core/runconfig.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "core/error.hpp"
#include "json.hpp"

namespace vtp {
namespace {

using nlohmann::json;

json defaults() {
  return json{
      {"data",
       {{"delta_s", 900},
        {"input_len", 12},
        {"horizon", 12},
        {"gap_s", 3600},
        {"utm_zone", 32},
        {"ship_type", ""},
        {"labeled", false},
        {"regions", json::array()},
        {"splits", {{"train", 0.72}, {"val", 0.08}, {"test", 0.2}}},
        {"seed", 1}}},
      {"model",
       {{"hidden", 64},
        {"attention_width", 64},
        {"labeled", false},
        {"intention_classes", 0},
        {"recurrent_dropout", 0.05},
        {"attention_dropout", 0.05},
        {"intention_dropout", 0.3},
        {"forget_bias_one", true},
        {"compensated_intention_mask", false}}},
      {"train",
       {{"learning_rate", 1e-4},
        {"weight_decay", 1e-4},
        {"batch_size", 200},
        {"patience", 3000},
        {"max_epochs", 5000},
        {"loss", "nll"},
        {"grad_clip", 5.0},
        {"seed", 0},
        {"workers", 1}}},
      {"uncertainty", {{"mc_samples", 100}, {"seed", 0}}},
      {"eval", {{"origin", nullptr}, {"bin_width_m", 9260.0}, {"levels", {0.68, 0.95}}}},
      {"predict", {{"emit_samples", false}}},
      {"synth",
       {{"scenario", "lines"},
        {"n_tracks", 20},
        {"track_len", 30},
        {"noise_sigma", 50.0},
        {"accel", 0.0},
        {"delta_s", 900},
        {"seed", 1},
        {"approach_len", 16},
        {"waypoint_e", 550000.0},
        {"waypoint_n", 6150000.0}}},
      {"gradcheck",
       {{"hidden", 4},
        {"attention_width", 4},
        {"input_len", 3},
        {"horizon", 3},
        {"labeled", true},
        {"intention_classes", 2},
        {"tolerance", 1e-4},
        {"seed", 7}}}};
}

std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Overlay `src` onto `dst`. Objects merge member-wise; anything else (numbers,
// strings, booleans, arrays, null) replaces the default wholesale. A key with
// no counterpart in the defaults is a configuration error.
void merge_into(json& dst, const json& src, const std::string& prefix) {
  if (!src.is_object())
    throw ConfigError("configuration section " + (prefix.empty() ? "root" : prefix) +
                      " must be a JSON object");
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string path = join_path(prefix, it.key());
    auto slot = dst.find(it.key());
    if (slot == dst.end()) throw ConfigError("unknown configuration key: " + path);
    if (slot->is_object() && !slot->is_null()) {
      merge_into(*slot, it.value(), path);
    } else {
      *slot = it.value();
    }
  }
}

[[noreturn]] void type_error(const std::string& path, const char* wanted) {
  throw ConfigError("configuration key " + path + " must be " + wanted);
}

bool to_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) type_error(path, "a boolean");
  return v.get<bool>();
}

std::string to_string_value(const json& v, const std::string& path) {
  if (!v.is_string()) type_error(path, "a string");
  return v.get<std::string>();
}

double to_double(const json& v, const std::string& path) {
  if (!v.is_number()) type_error(path, "a number");
  return v.get<double>();
}

std::int64_t to_i64(const json& v, const std::string& path) {
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::nearbyint(d) == d && std::abs(d) <= 9.007199254740992e15)
      return static_cast<std::int64_t>(d);
  }
  type_error(path, "an integer");
}

std::uint64_t to_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const std::int64_t i = to_i64(v, path);
  if (i < 0) type_error(path, "a non-negative integer");
  return static_cast<std::uint64_t>(i);
}

std::size_t to_count(const json& v, const std::string& path, std::size_t min_value) {
  const std::uint64_t u = to_u64(v, path);
  if (u < min_value)
    throw ConfigError("configuration key " + path + " must be >= " + std::to_string(min_value));
  return static_cast<std::size_t>(u);
}

std::vector<Region> to_regions(const json& v, const std::string& path) {
  if (!v.is_array()) type_error(path, "an array of region objects");
  std::vector<Region> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    const json& r = v[i];
    if (!r.is_object()) type_error(rp, "a region object");
    static const char* kKeys[] = {"name", "min_lat", "max_lat", "min_lon", "max_lon"};
    for (auto it = r.begin(); it != r.end(); ++it) {
      bool known = false;
      for (const char* k : kKeys) known = known || it.key() == k;
      if (!known) throw ConfigError("unknown configuration key: " + rp + "." + it.key());
    }
    for (const char* k : kKeys)
      if (!r.contains(k)) throw ConfigError("configuration key " + rp + "." + k + " is required");
    Region reg;
    reg.name = to_string_value(r["name"], rp + ".name");
    reg.min_lat = to_double(r["min_lat"], rp + ".min_lat");
    reg.max_lat = to_double(r["max_lat"], rp + ".max_lat");
    reg.min_lon = to_double(r["min_lon"], rp + ".min_lon");
    reg.max_lon = to_double(r["max_lon"], rp + ".max_lon");
    if (reg.name.empty()) throw ConfigError("configuration key " + rp + ".name must be non-empty");
    if (reg.min_lat > reg.max_lat || reg.min_lon > reg.max_lon)
      throw ConfigError("region " + rp + " has min bounds above max bounds");
    for (const Region& prev : out)
      if (prev.name == reg.name)
        throw ConfigError("duplicate region name \"" + reg.name + "\" in " + path);
    out.push_back(std::move(reg));
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& user_json) {
  json merged = defaults();
  if (!user_json.empty()) {
    json user = json::parse(user_json, nullptr, false);
    if (user.is_discarded()) throw ConfigError("configuration is not valid JSON");
    if (!user.is_null()) merge_into(merged, user, "");
  }

  RunConfig rc;

  const json& d = merged["data"];
  rc.data.delta_s = to_i64(d["delta_s"], "data.delta_s");
  if (rc.data.delta_s < 1) throw ConfigError("configuration key data.delta_s must be >= 1");
  rc.data.input_len = to_count(d["input_len"], "data.input_len", 1);
  rc.data.horizon = to_count(d["horizon"], "data.horizon", 1);
  rc.data.gap_s = to_i64(d["gap_s"], "data.gap_s");
  if (rc.data.gap_s < 1) throw ConfigError("configuration key data.gap_s must be >= 1");
  rc.data.utm_zone = static_cast<int>(to_i64(d["utm_zone"], "data.utm_zone"));
  if (rc.data.utm_zone < 1 || rc.data.utm_zone > 60)
    throw ConfigError("configuration key data.utm_zone must lie in [1, 60]");
  rc.data.ship_type = to_string_value(d["ship_type"], "data.ship_type");
  rc.data.labeled = to_bool(d["labeled"], "data.labeled");
  rc.data.regions = to_regions(d["regions"], "data.regions");
  const json& sp = d["splits"];
  rc.data.f_train = to_double(sp["train"], "data.splits.train");
  rc.data.f_val = to_double(sp["val"], "data.splits.val");
  rc.data.f_test = to_double(sp["test"], "data.splits.test");
  if (rc.data.f_train < 0 || rc.data.f_val < 0 || rc.data.f_test < 0 ||
      std::abs(rc.data.f_train + rc.data.f_val + rc.data.f_test - 1.0) > 1e-9)
    throw ConfigError("data.splits fractions must be non-negative and sum to 1");
  rc.data.seed = to_u64(d["seed"], "data.seed");

  const json& m = merged["model"];
  rc.model.hidden = to_count(m["hidden"], "model.hidden", 1);
  rc.model.attention_width = to_count(m["attention_width"], "model.attention_width", 1);
  rc.model.labeled = to_bool(m["labeled"], "model.labeled");
  rc.model.intention_classes = to_count(m["intention_classes"], "model.intention_classes", 0);
  rc.model.recurrent_dropout = to_double(m["recurrent_dropout"], "model.recurrent_dropout");
  rc.model.attention_dropout = to_double(m["attention_dropout"], "model.attention_dropout");
  rc.model.intention_dropout = to_double(m["intention_dropout"], "model.intention_dropout");
  rc.model.forget_bias_one = to_bool(m["forget_bias_one"], "model.forget_bias_one");
  rc.model.compensated_intention_mask =
      to_bool(m["compensated_intention_mask"], "model.compensated_intention_mask");

  const json& t = merged["train"];
  rc.train.learning_rate = to_double(t["learning_rate"], "train.learning_rate");
  rc.train.weight_decay = to_double(t["weight_decay"], "train.weight_decay");
  rc.train.batch_size = to_count(t["batch_size"], "train.batch_size", 1);
  rc.train.patience = to_count(t["patience"], "train.patience", 0);
  rc.train.max_epochs = to_count(t["max_epochs"], "train.max_epochs", 1);
  const std::string loss = to_string_value(t["loss"], "train.loss");
  if (loss == "nll")
    rc.train.loss = LossKind::Nll;
  else if (loss == "mae")
    rc.train.loss = LossKind::Mae;
  else
    throw ConfigError("configuration key train.loss must be \"nll\" or \"mae\"");
  rc.train.grad_clip = to_double(t["grad_clip"], "train.grad_clip");
  rc.train.seed = to_u64(t["seed"], "train.seed");
  rc.train.workers = to_count(t["workers"], "train.workers", 1);

  const json& u = merged["uncertainty"];
  rc.uncertainty.mc_samples = to_count(u["mc_samples"], "uncertainty.mc_samples", 1);
  rc.uncertainty.seed = to_u64(u["seed"], "uncertainty.seed");

  const json& e = merged["eval"];
  const json& origin = e["origin"];
  if (origin.is_null()) {
    rc.eval.has_origin = false;
  } else if (origin.is_array() && origin.size() == 2) {
    rc.eval.has_origin = true;
    rc.eval.origin_e = to_double(origin[0], "eval.origin[0]");
    rc.eval.origin_n = to_double(origin[1], "eval.origin[1]");
  } else {
    type_error("eval.origin", "null or [easting, northing]");
  }
  rc.eval.bin_width_m = to_double(e["bin_width_m"], "eval.bin_width_m");
  if (!(rc.eval.bin_width_m > 0))
    throw ConfigError("configuration key eval.bin_width_m must be > 0");
  const json& levels = e["levels"];
  if (!levels.is_array() || levels.empty()) type_error("eval.levels", "a non-empty array");
  rc.eval.levels.clear();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::string lp = "eval.levels[" + std::to_string(i) + "]";
    const double lv = to_double(levels[i], lp);
    if (!(lv > 0.0 && lv < 1.0))
      throw ConfigError("configuration key " + lp + " must lie strictly between 0 and 1");
    rc.eval.levels.push_back(lv);
  }

  rc.predict.emit_samples = to_bool(merged["predict"]["emit_samples"], "predict.emit_samples");

  const json& s = merged["synth"];
  rc.synth.scenario = to_string_value(s["scenario"], "synth.scenario");
  if (rc.synth.scenario != "lines" && rc.synth.scenario != "crossroad")
    throw ConfigError("configuration key synth.scenario must be \"lines\" or \"crossroad\"");
  rc.synth.n_tracks = to_count(s["n_tracks"], "synth.n_tracks", 1);
  rc.synth.track_len = to_count(s["track_len"], "synth.track_len", 2);
  rc.synth.noise_sigma = to_double(s["noise_sigma"], "synth.noise_sigma");
  rc.synth.accel = to_double(s["accel"], "synth.accel");
  rc.synth.delta_s = to_i64(s["delta_s"], "synth.delta_s");
  if (rc.synth.delta_s < 1) throw ConfigError("configuration key synth.delta_s must be >= 1");
  rc.synth.seed = to_u64(s["seed"], "synth.seed");
  rc.synth.approach_len = to_count(s["approach_len"], "synth.approach_len", 1);
  rc.synth.waypoint_e = to_double(s["waypoint_e"], "synth.waypoint_e");
  rc.synth.waypoint_n = to_double(s["waypoint_n"], "synth.waypoint_n");

  const json& g = merged["gradcheck"];
  rc.gradcheck.hidden = to_count(g["hidden"], "gradcheck.hidden", 1);
  rc.gradcheck.attention_width = to_count(g["attention_width"], "gradcheck.attention_width", 1);
  rc.gradcheck.input_len = to_count(g["input_len"], "gradcheck.input_len", 1);
  rc.gradcheck.horizon = to_count(g["horizon"], "gradcheck.horizon", 1);
  rc.gradcheck.labeled = to_bool(g["labeled"], "gradcheck.labeled");
  rc.gradcheck.intention_classes = to_count(g["intention_classes"], "gradcheck.intention_classes",
                                            rc.gradcheck.labeled ? 1 : 0);
  rc.gradcheck.tolerance = to_double(g["tolerance"], "gradcheck.tolerance");
  if (!(rc.gradcheck.tolerance > 0))
    throw ConfigError("configuration key gradcheck.tolerance must be > 0");
  rc.gradcheck.seed = to_u64(g["seed"], "gradcheck.seed");

  rc.resolved_json = merged.dump(2);
  return rc;
}

std::string default_run_config_json() { return defaults().dump(2); }

}  // namespace vtp
