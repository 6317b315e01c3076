#include "jeit/config.hpp"

#include <fstream>

#include "jeit/errors.hpp"
#include "jeit/json_util.hpp"

namespace jeit {

nlohmann::json to_json(const AppConfig& c) {
  return {{"corpus", c.corpus},
          {"model", c.model},
          {"train", c.train},
          {"decode", {{"cap_threshold", c.decode.cap_threshold},
                      {"max_emissions", c.decode.max_emissions}}},
          {"experiment", {{"seeds", c.experiment.seeds},
                          {"regimes", c.experiment.regimes},
                          {"data_dir", c.experiment.data_dir},
                          {"out_dir", c.experiment.out_dir}}}};
}

AppConfig app_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, "config", {"corpus", "model", "train", "decode", "experiment"});
  AppConfig c;
  try {
    if (j.contains("corpus")) c.corpus = j.at("corpus").get<CorpusSpec>();
    if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  if (auto it = j.find("decode"); it != j.end()) {
    reject_unknown_keys(*it, "decode", {"cap_threshold", "max_emissions"});
    read_key(*it, "decode", "cap_threshold", c.decode.cap_threshold);
    read_key(*it, "decode", "max_emissions", c.decode.max_emissions);
  }
  if (auto it = j.find("experiment"); it != j.end()) {
    reject_unknown_keys(*it, "experiment", {"seeds", "regimes", "data_dir", "out_dir"});
    read_key(*it, "experiment", "seeds", c.experiment.seeds);
    read_key(*it, "experiment", "regimes", c.experiment.regimes);
    read_key(*it, "experiment", "data_dir", c.experiment.data_dir);
    read_key(*it, "experiment", "out_dir", c.experiment.out_dir);
  }
  c.corpus.validate();
  c.model.validate();
  c.train.validate();
  c.decode.validate();
  if (c.experiment.seeds.empty()) throw ConfigError("experiment.seeds must be nonempty");
  for (const std::string& r : c.experiment.regimes) parse_regime(r);
  return c;
}

void apply_override(nlohmann::json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object() || !node->contains(part)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  *node = std::move(value);
}

AppConfig load_config(const std::optional<std::filesystem::path>& path,
                      std::span<const std::string> overrides) {
  nlohmann::json doc = to_json(AppConfig{});
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + path->string());
    nlohmann::json file;
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("cannot parse " + path->string() + ": " + e.what());
    }
    // Validate the file on its own so unknown keys are named as written.
    app_config_from_json(file);
    doc.merge_patch(file);
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  return app_config_from_json(doc);
}

}  // namespace jeit
