#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jeit/corpus.hpp"
#include "jeit/decode.hpp"
#include "jeit/model.hpp"
#include "jeit/train.hpp"

namespace jeit {

struct ExperimentConfig {
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<std::string> regimes = {"paired_only", "jeit"};
  std::string data_dir = "data";
  std::string out_dir = "runs";
};

struct AppConfig {
  CorpusSpec corpus;
  ModelConfig model;
  TrainConfig train;
  DecodeOptions decode;
  ExperimentConfig experiment;
};

nlohmann::json to_json(const AppConfig& c);
AppConfig app_config_from_json(const nlohmann::json& j);

// Sets a dotted key ("train.steps=10") in a config document. The value is
// parsed as JSON when possible and taken as a string otherwise. Keys absent
// from the document are rejected.
void apply_override(nlohmann::json& doc, std::string_view assignment);

// Defaults, then the file (if any), then the overrides in order.
AppConfig load_config(const std::optional<std::filesystem::path>& path,
                      std::span<const std::string> overrides = {});

}  // namespace jeit
