#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jeit/corpus.hpp"
#include "jeit/decode.hpp"
#include "jeit/example.hpp"
#include "jeit/loss.hpp"
#include "jeit/metrics.hpp"
#include "jeit/model.hpp"

namespace jeit {

enum class Regime { kPairedOnly, kJeit };
std::string_view to_string(Regime r);
Regime parse_regime(std::string_view s);

struct TrainConfig {
  Regime regime = Regime::kJeit;
  JeitWeights weights;
  double learning_rate = 0.02;
  double momentum = 0.9;
  std::size_t steps = 6000;
  std::size_t paired_batch = 8;
  std::size_t unpaired_batch = 8;
  std::uint64_t seed = 1;
  std::size_t checkpoint_interval = 0;  // 0: final checkpoint only
  double clip_norm = 5.0;               // 0 leaves the parameters untouched
  double init_scale = 1.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Parameters plus optimizer state.
struct TrainState {
  ModelParams params;
  ParamList velocity;
  std::size_t step = 0;

  static TrainState fresh(const ModelConfig& model, std::uint64_t seed, double init_scale);
};

struct StepResult {
  LossReport report;
  double tape_total = 0.0;  // objective value that was differentiated
  double grad_norm = 0.0;   // before clipping
};

// One optimizer step. The unpaired batch must be present exactly when the
// regime is jeit.
StepResult train_step(TrainState& state, std::span<const PairedExample* const> paired,
                      std::optional<std::span<const UnpairedExample* const>> unpaired,
                      const TrainConfig& config);

struct TrainData {
  std::span<const PairedExample> paired;
  std::span<const UnpairedExample> unpaired;
};

using StepCallback = std::function<void(const StepResult&, const TrainState&)>;

// Trains from a fresh initialization keyed by config.seed.
TrainState run_training(const ModelConfig& model, const TrainConfig& config, TrainData data,
                        const StepCallback& on_step = {});

struct EvalOutput {
  EvalSummary summary;
  std::vector<nlohmann::json> records;  // one decode record per utterance
};

EvalOutput evaluate(const ModelParams& params, const Vocab& vocab,
                    std::span<const PairedExample> examples, const DecodeOptions& options);

}  // namespace jeit
