#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jeit/vocab.hpp"

namespace jeit {

// Tag values double as symbol indices in the corresponding posterior
// vectors, where slot 0 is the blank.
enum class CapTag : std::uint8_t { kCap = 1, kNonCap = 2 };
enum class PauseTag : std::uint8_t { kNonPause = 1, kPause = 2, kEos = 3 };
enum class PauseKind : std::uint8_t { kPause, kEos };

std::string_view to_string(CapTag t);
std::string_view to_string(PauseTag t);
std::string_view to_string(PauseKind k);
PauseKind parse_pause_kind(std::string_view s);

// A pause after word `word` (0-based index of the preceding word).
struct PauseMark {
  std::size_t word = 0;
  PauseKind kind = PauseKind::kPause;
  friend bool operator==(const PauseMark&, const PauseMark&) = default;
};

struct AnnotatedTranscript {
  std::string cased_text;
  std::vector<PauseMark> marks;

  std::size_t word_count() const;
  // Marks sorted, one per gap, eos only after the final word, all in range.
  void validate() const;
};

// Text-only annotation: the transcript with ⟨eos⟩ appended after its last word.
AnnotatedTranscript annotate_unpaired(std::string cased_text);

// Three equal-length parallel label sequences.
struct LabelBundle {
  std::vector<TokenId> asr;
  std::vector<CapTag> cap;
  std::vector<PauseTag> pause;
  std::string transcript;

  std::size_t size() const { return asr.size(); }
  void validate() const;
};

LabelBundle factorize(const AnnotatedTranscript& t, const Vocab& vocab);

// Detokenizes, upper-casing the first character of every ⟨cap⟩ piece.
std::string render(std::span<const TokenId> asr, std::span<const CapTag> cap,
                   const Vocab& vocab);

// Reconstructs pause marks from the pause channel.
std::vector<PauseMark> pause_marks(const LabelBundle& bundle, const Vocab& vocab);

}  // namespace jeit
