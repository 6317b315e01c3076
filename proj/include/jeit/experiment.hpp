#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "jeit/config.hpp"
#include "jeit/corpus.hpp"
#include "jeit/metrics.hpp"
#include "jeit/train.hpp"

namespace jeit {

// Splits of one corpus converted to training and evaluation examples.
struct Prepared {
  Vocab vocab;
  std::vector<PairedExample> paired;
  std::vector<UnpairedExample> unpaired;
  std::vector<PairedExample> head_eval, tail_eval, pause_eval;
};

Prepared prepare(const Corpus& corpus);
// Reads a corpus directory written by write_corpus.
Prepared load_prepared(const std::filesystem::path& dir);

// The model config with its vocabulary size taken from the corpus.
ModelConfig model_for(const ModelConfig& base, const Vocab& vocab);

struct SetScores {
  EvalSummary head, tail, pause;
};
void to_json(nlohmann::json& j, const SetScores& s);

SetScores score_sets(const ModelParams& params, const Prepared& data, const DecodeOptions& options);

// Rows of WER / head UER / tail UER / eos precision / eos recall.
std::string comparison_table(std::span<const std::pair<std::string, SetScores>> rows);

// Trains every (seed, regime) pair on one corpus and scores each run. When
// `out_dir` is set, per-run logs and checkpoints are written under it.
nlohmann::json run_experiment(const AppConfig& config, const Prepared& data,
                              const std::optional<std::filesystem::path>& out_dir = {});
std::string report_text(const nlohmann::json& report);

double median(std::vector<double> v);

}  // namespace jeit
