#include "hgcn/checkpoint.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hgcn {

using nlohmann::json;

namespace {

json vocab_json(const Vocabulary& v) { return v.entries(); }

Vocabulary vocab_from(const json& j, const char* key, bool with_unknown) {
  if (!j.contains(key) || !j.at(key).is_array()) throw CheckpointError(std::string("checkpoint: missing vocabulary '") + key + "'");
  auto entries = j.at(key).get<std::vector<std::string>>();
  std::optional<std::string> unk;
  if (with_unknown) {
    if (entries.empty()) throw CheckpointError(std::string("checkpoint: vocabulary '") + key + "' is empty");
    unk = entries.front();
  }
  try {
    return Vocabulary::from_list(std::move(entries), unk);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint: vocabulary '") + key + "': " + e.what());
  }
}

}  // namespace

std::string serialize_checkpoint(HgcnModel& model) {
  json j;
  j["format"] = "hgcn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = json::parse(config_to_json(model.config()));
  const auto& v = model.vocabularies();
  j["vocabularies"] = {{"words", vocab_json(v.words)}, {"labels", vocab_json(v.labels)},
                       {"relations", vocab_json(v.relations)}};
  json params = json::array();
  for (const auto& nt : model.parameters().named()) {
    for (double x : nt.tensor->values)
      if (!std::isfinite(x)) throw CheckpointError("checkpoint: non-finite value in " + nt.name);
    params.push_back({{"name", nt.name}, {"shape", nt.tensor->shape}, {"values", nt.tensor->values}});
  }
  j["parameters"] = std::move(params);
  return j.dump();
}

std::unique_ptr<HgcnModel> parse_checkpoint(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "hgcn-checkpoint") throw CheckpointError("checkpoint: not an hgcn checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported version " + j.value("version", json()).dump());
  ModelConfig config;
  try {
    config = parse_config(j.at("config").dump());
  } catch (const std::exception& e) {
    throw CheckpointError(e.what());
  }
  const json& vj = j.at("vocabularies");
  Vocabularies vocabs{vocab_from(vj, "words", true), vocab_from(vj, "labels", true), vocab_from(vj, "relations", true)};

  Tensor embeddings(Shape{vocabs.words.size(), config.embedding_dim});
  auto params = init_parameters(config, vocabs, std::move(embeddings));
  std::map<std::string, const json*> stored;
  for (const auto& p : j.at("parameters")) stored[p.at("name").get<std::string>()] = &p;
  std::set<std::string> seen;
  for (auto& nt : params.named()) {
    auto it = stored.find(nt.name);
    if (it == stored.end()) throw CheckpointError("checkpoint: missing parameter " + nt.name);
    const auto shape = it->second->at("shape").get<Shape>();
    if (shape != nt.tensor->shape)
      throw CheckpointError("checkpoint: parameter " + nt.name + " has shape " + to_string(shape) + ", config expects " +
                            to_string(nt.tensor->shape));
    auto values = it->second->at("values").get<std::vector<double>>();
    if (values.size() != nt.tensor->size())
      throw CheckpointError("checkpoint: parameter " + nt.name + " holds " + std::to_string(values.size()) + " values");
    nt.tensor->values = std::move(values);
    seen.insert(nt.name);
  }
  for (const auto& [name, _] : stored)
    if (!seen.count(name)) throw CheckpointError("checkpoint: unexpected parameter " + name);
  return std::make_unique<HgcnModel>(config, std::move(vocabs), std::move(params));
}

void save_checkpoint(HgcnModel& model, const std::string& path) {
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + tmp);
    out << serialize_checkpoint(model);
    if (!out) throw CheckpointError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<HgcnModel> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace hgcn
