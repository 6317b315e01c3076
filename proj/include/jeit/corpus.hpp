#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jeit/errors.hpp"
#include "jeit/example.hpp"
#include "jeit/labels.hpp"
#include "jeit/vocab.hpp"

namespace jeit {

// Template syntax: words separated by spaces; "{E}" is an entity slot, "{N}"
// a lowercase noun slot and "{P}" a candidate pause gap after the previous
// word.
struct CorpusSpec {
  std::uint64_t seed = 17;

  // Capitalized names. When empty they are built from syllables.
  std::vector<std::string> head_entities;
  std::vector<std::string> tail_entities;
  std::size_t head_entity_count = 40;
  std::size_t tail_entity_count = 40;
  std::vector<std::string> generic_nouns = {"music", "coffee", "news", "weather",
                                            "rain", "bread", "tea", "jazz"};

  std::vector<std::string> entity_templates = {
      "call {E}", "directions to {E}", "text {E}", "navigate to {E}",
      "call {E} {P} and {E}", "text {E} {P} and {E}"};
  std::vector<std::string> noun_templates = {"play {N} now", "buy {N} today", "is {N} open",
                                             "show me {N} please"};
  std::vector<std::string> query_templates = {"call {E}", "directions to {E}", "text {E}",
                                              "navigate to {E}"};

  double pause_probability = 0.5;
  double entity_template_fraction = 0.5;  // paired utterances using entity templates
  double unpaired_tail_fraction = 0.8;

  std::size_t feature_dim = 24;
  std::size_t min_frames_per_piece = 1;
  std::size_t max_frames_per_piece = 2;
  std::size_t pause_frames = 2;
  std::size_t eos_frames = 2;
  double noise = 0.1;
  std::size_t vocab_size = 256;

  std::size_t paired_train = 2000;
  std::size_t unpaired_train = 4000;
  std::size_t head_eval = 200;
  std::size_t tail_eval = 200;
  std::size_t pause_eval = 200;

  void validate() const;
};

void to_json(nlohmann::json& j, const CorpusSpec& s);
void from_json(const nlohmann::json& j, CorpusSpec& s);

inline constexpr std::array<std::string_view, 5> kSplits = {
    "paired_train", "unpaired_train", "head_eval", "tail_eval", "pause_eval"};

// One line of a split file. Features are absent for text-only records.
struct Record {
  std::string id;
  AnnotatedTranscript transcript;
  std::optional<Tensor> features;
};

struct Corpus {
  Vocab vocab;
  std::vector<std::string> head_entities;
  std::vector<std::string> tail_entities;
  std::map<std::string, std::vector<Record>, std::less<>> splits;
};

// Builds every split in memory. Deterministic in the spec.
Corpus generate_corpus(const CorpusSpec& spec);
// Writes {split}.jsonl for each split plus vocab.txt and entities.json.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Token-signature frames: each piece holds its own fixed vector for k frames,
// a pause inserts `pause_frames` of silence after its word, and ⟨eos⟩
// appends `eos_frames` of silence. `stream` seeds the duration and noise draws.
Tensor synthesize_features(const LabelBundle& bundle, const CorpusSpec& spec,
                           std::uint64_t stream);

std::vector<Record> load_split(const std::filesystem::path& dir, std::string_view split);
nlohmann::json record_to_json(const Record& r);
Record record_from_json(const nlohmann::json& j);

std::vector<PairedExample> to_paired(std::span<const Record> records, const Vocab& vocab);
std::vector<UnpairedExample> to_unpaired(std::span<const Record> records, const Vocab& vocab);

// Endless batches over a fixed set of items. Each epoch is a Fisher-Yates
// permutation drawn from a generator keyed by (seed, epoch).
template <typename T>
class Batcher {
 public:
  Batcher(std::span<const T> items, std::size_t batch_size, std::uint64_t seed)
      : items_(items), batch_size_(batch_size), seed_(seed) {
    if (items_.empty()) throw ContractError("batcher over an empty split");
    if (batch_size_ == 0) throw ContractError("batch size must be positive");
    reshuffle();
  }

  std::vector<const T*> next() {
    if (pos_ >= order_.size()) {
      ++epoch_;
      reshuffle();
    }
    std::vector<const T*> batch;
    const std::size_t end = std::min(order_.size(), pos_ + batch_size_);
    for (; pos_ < end; ++pos_) batch.push_back(&items_[order_[pos_]]);
    return batch;
  }

  std::size_t epoch() const { return epoch_; }
  std::size_t batches_per_epoch() const {
    return (items_.size() + batch_size_ - 1) / batch_size_;
  }

 private:
  void reshuffle() {
    order_.resize(items_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    std::mt19937_64 rng(seed_ * 0x9E3779B97F4A7C15ULL + epoch_);
    for (std::size_t i = order_.size(); i-- > 1;) {
      std::swap(order_[i], order_[rng() % (i + 1)]);
    }
    pos_ = 0;
  }

  std::span<const T> items_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
  std::size_t pos_ = 0;
  std::vector<std::size_t> order_;
};

}  // namespace jeit
