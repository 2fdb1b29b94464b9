#include "core/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "core/error.hpp"
#include "json.hpp"

namespace vtp {
namespace {

constexpr char kMagic[8] = {'V', 'T', 'P', 'D', 'S', 'E', 'T', '1'};
constexpr int kVersion = 1;

using nlohmann::json;

void append_bytes(std::string& buf, const void* data, std::size_t len) {
  buf.append(static_cast<const char*>(data), len);
}

template <typename T>
void append_pod(std::string& buf, const T& value) {
  append_bytes(buf, &value, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& buf) : buf_(buf) {}
  void read(void* out, std::size_t len) {
    if (pos_ + len > buf_.size()) throw IntegrityError("dataset file truncated");
    std::memcpy(out, buf_.data() + pos_, len);
    pos_ += len;
  }
  template <typename T>
  T pod() {
    T v{};
    read(&v, sizeof(T));
    return v;
  }
  std::string bytes(std::size_t len) {
    std::string s(len, '\0');
    read(s.data(), len);
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& buf_;
  std::size_t pos_ = 0;
};

json norm_to_json(const NormStats& s) {
  return json{{"mean_e", s.mean_e}, {"mean_n", s.mean_n}, {"std_e", s.std_e}, {"std_n", s.std_n}};
}

NormStats norm_from_json(const json& j) {
  NormStats s;
  s.mean_e = j.at("mean_e").get<double>();
  s.mean_n = j.at("mean_n").get<double>();
  s.std_e = j.at("std_e").get<double>();
  s.std_n = j.at("std_n").get<double>();
  return s;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::pair<std::size_t, std::size_t> Dataset::split_range(const std::string& split) const {
  if (split == "train") return {0, n_train};
  if (split == "val") return {n_train, n_train + n_val};
  if (split == "test") return {n_train + n_val, n_train + n_val + n_test};
  throw ContractError("unknown split name: " + split + " (expected train|val|test)");
}

Dataset assemble_dataset(const std::vector<Trajectory>& trajectories, const SplitIndices& splits,
                         std::size_t input_len, std::size_t horizon, int utm_zone, bool labeled,
                         int intention_classes, std::vector<std::string> vocabulary) {
  if (input_len == 0 || horizon == 0) throw ConfigError("window lengths must be positive");
  if (labeled && intention_classes < 2)
    throw ConfigError("labeled datasets need at least 2 intention classes");
  if (labeled && vocabulary.empty())
    for (int i = 0; i < intention_classes; ++i) vocabulary.push_back("class-" + std::to_string(i));
  if (labeled && vocabulary.size() != static_cast<std::size_t>(intention_classes))
    throw ConfigError("intention vocabulary size disagrees with the class count");
  if (!labeled) vocabulary.clear();
  const std::size_t total = splits.train.size() + splits.val.size() + splits.test.size();
  if (total != trajectories.size())
    throw ContractError("split does not cover the trajectory list exactly");

  Dataset d;
  d.input_len = input_len;
  d.horizon = horizon;
  d.utm_zone = utm_zone;
  d.labeled = labeled;
  d.intention_classes = labeled ? intention_classes : 0;
  d.vocabulary = std::move(vocabulary);

  // Validate lengths and labels up front.
  for (const Trajectory& tr : trajectories) {
    if (tr.size() < input_len + horizon)
      throw ContractError("trajectory " + tr.id + " shorter than input_len+horizon; drop it upstream");
    if (labeled && (tr.intention < 0 || tr.intention >= intention_classes))
      throw ContractError("trajectory " + tr.id + " lacks a valid intention class in labeled mode");
  }
  if (!trajectories.empty()) d.delta_s = trajectories.front().delta_s;
  for (const Trajectory& tr : trajectories)
    if (tr.delta_s != d.delta_s)
      throw ContractError("mixed sampling intervals in one dataset (" + std::to_string(tr.delta_s) +
                          " vs " + std::to_string(d.delta_s) + " s)");

  // Training-split statistics only; test data is always normalized with them.
  std::vector<Trajectory> train_trajs;
  train_trajs.reserve(splits.train.size());
  for (std::size_t i : splits.train) train_trajs.push_back(trajectories.at(i));
  d.norm = compute_norm_stats(train_trajs);

  // Trajectory table in original (vessel id, time) order.
  d.trajectories.resize(trajectories.size());
  auto fill_meta = [&](const std::vector<std::size_t>& idx, const char* split) {
    for (std::size_t i : idx) {
      TrajectoryMeta& m = d.trajectories.at(i);
      const Trajectory& tr = trajectories.at(i);
      m.id = tr.id;
      m.split = split;
      m.intention = tr.intention;
      m.len = static_cast<std::uint32_t>(tr.size());
      m.t0 = tr.t0;
    }
  };
  fill_meta(splits.train, "train");
  fill_meta(splits.val, "val");
  fill_meta(splits.test, "test");

  // Windows: per split, trajectories in deterministic original order, then
  // stride-1 start order. Coordinates are z-scored with the train stats.
  auto emit_split = [&](std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    std::size_t emitted = 0;
    for (std::size_t ti : idx) {
      const Trajectory& tr = trajectories.at(ti);
      for (std::size_t s : window_starts(tr.size(), input_len, horizon)) {
        DatasetWindow w;
        w.traj = static_cast<std::uint32_t>(ti);
        w.start = static_cast<std::uint32_t>(s);
        w.intention = labeled ? tr.intention : -1;
        w.x.resize(2 * input_len);
        w.y.resize(2 * horizon);
        for (std::size_t k = 0; k < input_len; ++k) {
          double e = tr.easting[s + k], n = tr.northing[s + k];
          normalize_point(d.norm, e, n);
          w.x[2 * k] = e;
          w.x[2 * k + 1] = n;
        }
        for (std::size_t k = 0; k < horizon; ++k) {
          double e = tr.easting[s + input_len + k], n = tr.northing[s + input_len + k];
          normalize_point(d.norm, e, n);
          w.y[2 * k] = e;
          w.y[2 * k + 1] = n;
        }
        d.windows.push_back(std::move(w));
        ++emitted;
      }
    }
    return emitted;
  };
  d.n_train = emit_split(splits.train);
  d.n_val = emit_split(splits.val);
  d.n_test = emit_split(splits.test);
  return d;
}

void save_dataset(const Dataset& d, const std::string& path) {
  json header;
  header["version"] = kVersion;
  header["delta_s"] = d.delta_s;
  header["input_len"] = d.input_len;
  header["horizon"] = d.horizon;
  header["utm_zone"] = d.utm_zone;
  header["labeled"] = d.labeled;
  header["intention_classes"] = d.intention_classes;
  header["vocabulary"] = d.vocabulary;
  header["norm"] = norm_to_json(d.norm);
  header["window_counts"] = json{{"train", d.n_train}, {"val", d.n_val}, {"test", d.n_test}};
  json trajs = json::array();
  for (const TrajectoryMeta& m : d.trajectories)
    trajs.push_back(json{{"id", m.id},
                         {"split", m.split},
                         {"intention", m.intention},
                         {"len", m.len},
                         {"t0", m.t0}});
  header["trajectories"] = std::move(trajs);
  const std::string header_text = header.dump();

  std::string buf;
  append_bytes(buf, kMagic, sizeof(kMagic));
  append_pod(buf, static_cast<std::uint64_t>(header_text.size()));
  buf += header_text;
  append_pod(buf, static_cast<std::uint64_t>(d.windows.size()));
  for (const DatasetWindow& w : d.windows) append_pod(buf, w.traj);
  for (const DatasetWindow& w : d.windows) append_pod(buf, w.start);
  for (const DatasetWindow& w : d.windows) append_pod(buf, w.intention);
  for (const DatasetWindow& w : d.windows) {
    if (w.x.size() != 2 * d.input_len) throw ContractError("window input length mismatch");
    append_bytes(buf, w.x.data(), w.x.size() * sizeof(double));
  }
  for (const DatasetWindow& w : d.windows) {
    if (w.y.size() != 2 * d.horizon) throw ContractError("window target length mismatch");
    append_bytes(buf, w.y.data(), w.y.size() * sizeof(double));
  }
  append_pod(buf, fnv1a64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open dataset file for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("failed writing dataset file: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kMagic) + sizeof(std::uint64_t) * 2)
    throw IntegrityError("dataset file truncated");
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a dataset file (bad magic)");
  // Checksum covers everything before the trailing hash.
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + buf.size() - sizeof(std::uint64_t), sizeof(std::uint64_t));
  const std::uint64_t computed = fnv1a64(buf.data(), buf.size() - sizeof(std::uint64_t));
  if (stored != computed) throw IntegrityError("dataset checksum mismatch (corrupt file)");

  Reader r(buf);
  char magic[8];
  r.read(magic, sizeof(magic));
  const std::uint64_t header_len = r.pod<std::uint64_t>();
  if (header_len > buf.size()) throw IntegrityError("dataset file truncated");
  json header;
  try {
    header = json::parse(r.bytes(header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset header is not valid JSON: ") + e.what());
  }
  try {
    if (header.at("version").get<int>() != kVersion)
      throw FormatError("unsupported dataset version " + header.at("version").dump());
    Dataset d;
    d.delta_s = header.at("delta_s").get<std::int64_t>();
    d.input_len = header.at("input_len").get<std::size_t>();
    d.horizon = header.at("horizon").get<std::size_t>();
    d.utm_zone = header.at("utm_zone").get<int>();
    d.labeled = header.at("labeled").get<bool>();
    d.intention_classes = header.at("intention_classes").get<int>();
    d.vocabulary = header.at("vocabulary").get<std::vector<std::string>>();
    d.norm = norm_from_json(header.at("norm"));
    d.n_train = header.at("window_counts").at("train").get<std::size_t>();
    d.n_val = header.at("window_counts").at("val").get<std::size_t>();
    d.n_test = header.at("window_counts").at("test").get<std::size_t>();
    for (const json& j : header.at("trajectories")) {
      TrajectoryMeta m;
      m.id = j.at("id").get<std::string>();
      m.split = j.at("split").get<std::string>();
      m.intention = j.at("intention").get<int>();
      m.len = j.at("len").get<std::uint32_t>();
      m.t0 = j.at("t0").get<std::int64_t>();
      d.trajectories.push_back(std::move(m));
    }

    const std::uint64_t w_count = r.pod<std::uint64_t>();
    if (w_count != d.n_train + d.n_val + d.n_test)
      throw IntegrityError("window count disagrees with the header split counts");
    d.windows.resize(w_count);
    for (DatasetWindow& w : d.windows) w.traj = r.pod<std::uint32_t>();
    for (DatasetWindow& w : d.windows) w.start = r.pod<std::uint32_t>();
    for (DatasetWindow& w : d.windows) w.intention = r.pod<std::int32_t>();
    for (DatasetWindow& w : d.windows) {
      w.x.resize(2 * d.input_len);
      r.read(w.x.data(), w.x.size() * sizeof(double));
    }
    for (DatasetWindow& w : d.windows) {
      w.y.resize(2 * d.horizon);
      r.read(w.y.data(), w.y.size() * sizeof(double));
    }
    if (r.pos() + sizeof(std::uint64_t) != buf.size())
      throw IntegrityError("dataset file has trailing bytes");
    return d;
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset header missing fields: ") + e.what());
  }
}

std::string dataset_manifest_json(const Dataset& d, const std::string& config_echo_json) {
  json m;
  m["container"] = "VTPDSET1";
  m["delta_s"] = d.delta_s;
  m["input_len"] = d.input_len;
  m["horizon"] = d.horizon;
  m["utm_zone"] = d.utm_zone;
  m["labeled"] = d.labeled;
  m["intention_classes"] = d.intention_classes;
  m["vocabulary"] = d.vocabulary;
  m["norm"] = norm_to_json(d.norm);
  m["trajectory_counts"] = json{{"total", d.trajectories.size()}};
  std::size_t tr_train = 0, tr_val = 0, tr_test = 0;
  for (const TrajectoryMeta& t : d.trajectories) {
    if (t.split == "train") ++tr_train;
    else if (t.split == "val") ++tr_val;
    else ++tr_test;
  }
  m["trajectory_counts"]["train"] = tr_train;
  m["trajectory_counts"]["val"] = tr_val;
  m["trajectory_counts"]["test"] = tr_test;
  m["window_counts"] = json{{"train", d.n_train}, {"val", d.n_val}, {"test", d.n_test}};
  if (!config_echo_json.empty()) {
    try {
      m["config"] = json::parse(config_echo_json);
    } catch (const json::exception&) {
      throw ContractError("config echo passed to the manifest is not valid JSON");
    }
  }
  return m.dump(2) + "\n";
}

}  // namespace vtp
