#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jeit/labels.hpp"
#include "jeit/model.hpp"

namespace jeit {

// Per-step view of the three heads at frame t for a given ASR history.
class DecodeScorer {
 public:
  virtual ~DecodeScorer() = default;
  virtual std::size_t frames() const = 0;
  // [blank, tokens 1..V]
  virtual std::vector<double> asr(std::size_t t, std::span<const TokenId> history) = 0;
  // P(⟨cap⟩ | emission) for the token just emitted from this history.
  virtual double cap(std::size_t t, std::span<const TokenId> history) = 0;
  // [blank, non-pause, pause, eos]
  virtual std::vector<double> pause(std::size_t t, std::span<const TokenId> history) = 0;
};

// Scores with a trained model. Encoder projections are computed once per
// utterance and prediction projections once per distinct history.
class ModelScorer final : public DecodeScorer {
 public:
  ModelScorer(const ModelParams& params, const Tensor& features);
  std::size_t frames() const override { return frames_; }
  std::vector<double> asr(std::size_t t, std::span<const TokenId> history) override;
  double cap(std::size_t t, std::span<const TokenId> history) override;
  std::vector<double> pause(std::size_t t, std::span<const TokenId> history) override;

 private:
  std::vector<double> logits(Head h, std::size_t t, std::span<const TokenId> history);

  const ModelParams& params_;
  std::size_t frames_ = 0;
  std::array<std::vector<double>, 3> enc_proj_;  // T×D_h per head, bias included
  std::map<std::vector<TokenId>, std::array<std::vector<double>, 3>> pred_proj_;
};

struct DecodeOptions {
  double cap_threshold = 0.5;
  std::size_t max_emissions = 8;
  void validate() const;
};

struct PauseEvent {
  std::size_t frame = 0;
  PauseKind kind = PauseKind::kPause;
  std::size_t token = 0;  // index of the token the event follows
  friend bool operator==(const PauseEvent&, const PauseEvent&) = default;
};

struct DecodeResult {
  std::vector<TokenId> tokens;
  std::vector<std::size_t> frames;  // emission frame per token
  std::vector<bool> cap;
  std::vector<double> cap_prob;
  std::vector<PauseTag> pause;      // per token; ⟨non-pause⟩ unless an event fired
  std::vector<PauseEvent> events;
  std::string cased_text;

  std::vector<CapTag> cap_tags() const;
};

DecodeResult greedy_decode(DecodeScorer& scorer, const DecodeOptions& options = {});
DecodeResult greedy_decode(const Tensor& features, const ModelParams& params,
                           const Vocab& vocab, const DecodeOptions& options = {});

// Decode output record: {id, hypothesis, events[{frame, kind, token}]}.
nlohmann::json decode_record(const std::string& id, const DecodeResult& r);

}  // namespace jeit
