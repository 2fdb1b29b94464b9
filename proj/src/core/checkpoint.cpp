#include "core/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "core/dataset.hpp"  // fnv1a64
#include "core/error.hpp"
#include "json.hpp"

namespace vtp {
namespace {

constexpr char kMagic[8] = {'V', 'T', 'P', 'C', 'K', 'P', 'T', '1'};
constexpr int kVersion = 1;

using nlohmann::json;

json model_to_json(const ModelConfig& m) {
  return json{{"hidden", m.hidden},
              {"attention_width", m.attention_width},
              {"intention_classes", m.intention_classes},
              {"labeled", m.labeled},
              {"recurrent_dropout", m.recurrent_dropout},
              {"attention_dropout", m.attention_dropout},
              {"intention_dropout", m.intention_dropout},
              {"forget_bias_one", m.forget_bias_one},
              {"compensated_intention_mask", m.compensated_intention_mask}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  m.hidden = j.at("hidden").get<std::size_t>();
  m.attention_width = j.at("attention_width").get<std::size_t>();
  m.intention_classes = j.at("intention_classes").get<std::size_t>();
  m.labeled = j.at("labeled").get<bool>();
  m.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  m.attention_dropout = j.at("attention_dropout").get<double>();
  m.intention_dropout = j.at("intention_dropout").get<double>();
  m.forget_bias_one = j.at("forget_bias_one").get<bool>();
  m.compensated_intention_mask = j.at("compensated_intention_mask").get<bool>();
  return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  json header;
  header["version"] = kVersion;
  header["model"] = model_to_json(c.model);
  header["norm"] = json{{"mean_e", c.norm.mean_e},
                        {"mean_n", c.norm.mean_n},
                        {"std_e", c.norm.std_e},
                        {"std_n", c.norm.std_n}};
  header["vocabulary"] = c.vocabulary;
  header["best_val_loss"] = c.best_val_loss;
  header["epoch"] = c.epoch;
  header["delta_s"] = c.delta_s;
  header["input_len"] = c.input_len;
  header["horizon"] = c.horizon;
  header["utm_zone"] = c.utm_zone;
  if (!c.train_config_json.empty()) {
    try {
      header["train_config"] = json::parse(c.train_config_json);
    } catch (const json::exception&) {
      throw ContractError("train_config_json on the checkpoint is not valid JSON");
    }
  }
  json table = json::array();
  for (const Parameter* p : c.params.all())
    table.push_back(json{{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  header["tensors"] = std::move(table);
  const std::string header_text = header.dump();

  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  const std::uint64_t hlen = header_text.size();
  buf.append(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  buf += header_text;
  for (const Parameter* p : c.params.all())
    buf.append(reinterpret_cast<const char*>(p->value.data.data()),
               p->value.data.size() * sizeof(double));
  const std::uint64_t sum = fnv1a64(buf.data(), buf.size());
  buf.append(reinterpret_cast<const char*>(&sum), sizeof(sum));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kMagic) + 2 * sizeof(std::uint64_t))
    throw IntegrityError("checkpoint truncated");
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a checkpoint file (bad magic)");
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + buf.size() - sizeof(stored), sizeof(stored));
  if (stored != fnv1a64(buf.data(), buf.size() - sizeof(stored)))
    throw IntegrityError("checkpoint checksum mismatch (corrupt file)");

  std::size_t pos = sizeof(kMagic);
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, buf.data() + pos, sizeof(hlen));
  pos += sizeof(hlen);
  if (pos + hlen > buf.size()) throw IntegrityError("checkpoint truncated");
  json header;
  try {
    header = json::parse(buf.substr(pos, hlen));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  pos += hlen;

  try {
    if (header.at("version").get<int>() != kVersion)
      throw FormatError("unsupported checkpoint version " + header.at("version").dump());
    Checkpoint c;
    c.model = model_from_json(header.at("model"));
    const json& n = header.at("norm");
    c.norm.mean_e = n.at("mean_e").get<double>();
    c.norm.mean_n = n.at("mean_n").get<double>();
    c.norm.std_e = n.at("std_e").get<double>();
    c.norm.std_n = n.at("std_n").get<double>();
    c.vocabulary = header.at("vocabulary").get<std::vector<std::string>>();
    c.best_val_loss = header.at("best_val_loss").get<double>();
    c.epoch = header.at("epoch").get<int>();
    c.delta_s = header.at("delta_s").get<std::int64_t>();
    c.input_len = header.at("input_len").get<std::size_t>();
    c.horizon = header.at("horizon").get<std::size_t>();
    c.utm_zone = header.at("utm_zone").get<int>();
    if (header.contains("train_config")) c.train_config_json = header.at("train_config").dump();

    // Rebuild parameters with the canonical layout, then overwrite values.
    c.params = ModelParams::create(c.model, /*seed=*/0);
    const json& table = header.at("tensors");
    std::vector<Parameter*> live = c.params.all();
    if (table.size() != live.size())
      throw FormatError("checkpoint tensor table size " + std::to_string(table.size()) +
                        " does not match the model's " + std::to_string(live.size()) +
                        " parameter tensors");
    for (std::size_t i = 0; i < live.size(); ++i) {
      const json& row = table.at(i);
      const std::string name = row.at("name").get<std::string>();
      const std::size_t r = row.at("rows").get<std::size_t>(),
                        cl = row.at("cols").get<std::size_t>();
      if (name != live[i]->name)
        throw FormatError("checkpoint tensor order mismatch: expected " + live[i]->name +
                          ", found " + name);
      if (r != live[i]->value.rows() || cl != live[i]->value.cols())
        throw DimensionError("checkpoint tensor " + name + " has shape (" + std::to_string(r) +
                             "x" + std::to_string(cl) + "), model expects " +
                             live[i]->value.shape_str());
      const std::size_t bytes = r * cl * sizeof(double);
      if (pos + bytes + sizeof(std::uint64_t) > buf.size())
        throw IntegrityError("checkpoint truncated");
      std::memcpy(live[i]->value.data.data(), buf.data() + pos, bytes);
      pos += bytes;
    }
    if (pos + sizeof(std::uint64_t) != buf.size())
      throw IntegrityError("checkpoint has trailing bytes");
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header missing fields: ") + e.what());
  }
}

void require_matching_extents(const Checkpoint& c, const ModelConfig& expected) {
  if (c.model.hidden != expected.hidden)
    throw DimensionError("checkpoint hidden width " + std::to_string(c.model.hidden) +
                         " does not match the requested " + std::to_string(expected.hidden));
  if (c.model.attention_width != expected.attention_width)
    throw DimensionError("checkpoint attention width " + std::to_string(c.model.attention_width) +
                         " does not match the requested " +
                         std::to_string(expected.attention_width));
  if (c.model.labeled != expected.labeled || c.model.intention_classes != expected.intention_classes)
    throw DimensionError(
        "checkpoint intention vocabulary (" + std::to_string(c.model.intention_classes) +
        " classes, labeled=" + (c.model.labeled ? "true" : "false") +
        ") does not match the requested (" + std::to_string(expected.intention_classes) +
        " classes, labeled=" + (expected.labeled ? "true" : "false") + ")");
}

}  // namespace vtp
