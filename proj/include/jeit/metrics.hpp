#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace jeit {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t reference = 0;

  std::size_t errors() const { return substitutions + insertions + deletions; }
  // errors / max(reference, 1)
  double rate() const;
  EditCounts& operator+=(const EditCounts& o);
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

// One step of a minimum-cost alignment. Index -1 marks the empty side.
struct AlignedPair {
  long ref = -1;
  long hyp = -1;
};

// Levenshtein alignment with unit costs. On equal cost a diagonal step
// (match or substitution) wins over a deletion, and a deletion over an
// insertion.
std::vector<AlignedPair> align(std::span<const std::string> ref, std::span<const std::string> hyp);
EditCounts edit_counts(std::span<const std::string> ref, std::span<const std::string> hyp);

std::vector<std::string> split_words(std::string_view text);

struct RateResult {
  double rate = 0.0;
  EditCounts counts;
};

RateResult wer(std::span<const std::string> ref, std::span<const std::string> hyp);
RateResult wer(std::string_view ref, std::string_view hyp);

// Uppercase residue of each word; words without any uppercase letter vanish.
std::vector<std::string> uppercase_residue(std::string_view text);
// WER over the uppercase residues. With an empty reference residue the
// rate is insertions / 1, and 0 when the hypothesis residue is empty too.
RateResult uer(std::string_view ref, std::string_view hyp);

struct EosCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
  EosCounts& operator+=(const EosCounts& o);
  // 0/0 is taken as 1.
  double precision() const;
  double recall() const;
  friend bool operator==(const EosCounts&, const EosCounts&) = default;
};

// Reference and hypothesis as token sequences with an ⟨eos⟩ flag per token.
// A hypothesis ⟨eos⟩ counts as a hit when it is aligned (by the token edit
// alignment) to a reference token carrying ⟨eos⟩, or lies within `window`
// aligned positions of one. Each reference ⟨eos⟩ is matched at most once.
EosCounts eos_counts(std::span<const std::string> ref_tokens, const std::vector<bool>& ref_eos,
                     std::span<const std::string> hyp_tokens, const std::vector<bool>& hyp_eos,
                     std::size_t window = 0);

struct EvalSummary {
  std::size_t utterances = 0;
  EditCounts word;
  EditCounts upper;
  EosCounts eos;
  double eos_precision_macro = 1.0;
  double eos_recall_macro = 1.0;

  double wer() const { return word.rate(); }
  double uer() const { return upper.rate(); }
};

// Per-utterance inputs to a summary.
struct EvalItem {
  std::string ref_text;  // cased
  std::string hyp_text;  // cased
  std::vector<std::string> ref_tokens;
  std::vector<bool> ref_eos;
  std::vector<std::string> hyp_tokens;
  std::vector<bool> hyp_eos;
};

// WER is scored on the lowercased words, UER on the cased text.
EvalSummary summarize(std::span<const EvalItem> items, std::size_t eos_window = 0);

void to_json(nlohmann::json& j, const EvalSummary& s);
void from_json(const nlohmann::json& j, EvalSummary& s);

}  // namespace jeit
