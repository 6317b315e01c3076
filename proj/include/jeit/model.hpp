#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "jeit/numerics.hpp"
#include "jeit/tape.hpp"
#include "jeit/tensor.hpp"
#include "jeit/vocab.hpp"

namespace jeit {

enum class Head : std::uint8_t { kAsr = 0, kCap = 1, kPause = 2 };
inline constexpr std::array<Head, 3> kHeads = {Head::kAsr, Head::kCap, Head::kPause};
std::string_view to_string(Head h);

// Number of previous ASR tokens the prediction network sees.
inline constexpr std::size_t kContextSize = 2;
// Embedding row used for "no token yet" context slots. Row 0 is otherwise
// unused because id 0 is the blank.
inline constexpr TokenId kSentinelId = 0;

struct ModelConfig {
  std::size_t vocab_size = 256;    // V real wordpieces
  std::size_t feature_dim = 24;    // F
  std::size_t encoder_width = 32;
  std::size_t encoder_dim = 16;    // D_a
  std::size_t embed_dim = 32;      // per context slot
  std::size_t pred_dim = 32;       // D_p
  std::size_t joint_dim = 32;      // D_h

  static constexpr std::size_t kCapOutputs = 2;    // no blank slot of its own
  static constexpr std::size_t kPauseOutputs = 4;  // blank, non-pause, pause, eos

  std::size_t head_outputs(Head h) const;
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// All learnable weights, stored as named tensors in a fixed order.
class ModelParams {
 public:
  ModelParams() = default;
  static ModelParams zeros(const ModelConfig& config);
  // Gaussian init with std = scale/sqrt(fan_in) for matrices, zero biases.
  // Each tensor draws from its own stream keyed by (seed, name).
  static ModelParams init(const ModelConfig& config, std::uint64_t seed, double scale = 1.0);

  const ModelConfig& config() const { return config_; }
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  ParamList& tensors() { return tensors_; }
  const ParamList& tensors() const { return tensors_; }
  std::size_t scalar_count() const;
  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ModelConfig config_;
  ParamList tensors_;
};

// Parameter names in storage order.
std::vector<std::string> parameter_names();
std::string head_param(Head h, std::string_view field);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);
// Fails with LoadError when the stored config differs from `expected`.
ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

// ---------------------------------------------------------------------------
// Tape-bound forward pass, used for training.

struct HeadVars {
  Var P, Q, bh, A, bs;
};

class ParamVars {
 public:
  ParamVars(Tape& tape, const ModelParams& params, bool trainable);
  // Binds variables already on a tape, one per tensor in storage order.
  ParamVars(const ModelParams& params, std::vector<Var> vars);
  Var operator[](std::string_view name) const;
  HeadVars head(Head h) const;
  std::span<const Var> all() const { return vars_; }

 private:
  const ModelParams* params_;
  std::vector<Var> vars_;
};

// f(X): T×D_a, row t depends on frames t-1 and t only.
Var encode(Tape& tape, const ParamVars& p, const ModelConfig& c, const Tensor& features);
// g_0..g_U for a label sequence of length U: (U+1)×D_p, row u uses y_{u-2}, y_{u-1}.
Var predict_all(Tape& tape, const ParamVars& p, const ModelConfig& c,
                std::span<const TokenId> labels);
// One prediction row per context {y_{u-1}, y_{u-2}}, kSentinelId where absent.
using Context = std::array<TokenId, kContextSize>;
Var predict_contexts(Tape& tape, const ParamVars& p, const ModelConfig& c,
                     std::span<const Context> contexts);
// Contexts for g_0..g_{rows-1} of a label sequence.
std::vector<Context> label_contexts(std::span<const TokenId> labels, std::size_t rows);

// ---------------------------------------------------------------------------
// Plain inference path.

Tensor encode(const ModelParams& params, const Tensor& features);
// g for the given history; only the last kContextSize tokens matter.
Tensor predict(const ModelParams& params, std::span<const TokenId> history);
// s_{t,u} = A·tanh(P·f + Q·g + b_h) + b_s for the given head.
Tensor joint(const ModelParams& params, const Tensor& f, const Tensor& g, Head head);
Tensor joint(const ModelParams& params, const Tensor& f, const Tensor& g, int head);

struct PosteriorSlice {
  std::vector<double> asr;    // [blank, tokens 1..V]
  std::vector<double> cap;    // [shared blank, cap, non-cap]
  std::vector<double> pause;  // [blank, non-pause, pause, eos]
  Tensor s_asr, s_cap, s_pause;
};

// HAT factorization: blank = σ(s[0]); tokens = (1-blank)·softmax(s[1:]). The
// cap head reuses the ASR blank; the pause head owns its blank.
PosteriorSlice posterior(const Tensor& s_asr, const Tensor& s_cap, const Tensor& s_pause);

// Next-symbol distribution with the encoder output replaced by zeros and the
// blank slot dropped: V entries for ASR, 2 for Cap, 3 for Pause.
std::vector<double> ilm_next_token_distribution(const ModelParams& params,
                                                std::span<const TokenId> history,
                                                Head head);

}  // namespace jeit
