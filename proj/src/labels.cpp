#include "jeit/labels.hpp"

#include <cctype>
#include <sstream>

#include "jeit/errors.hpp"

namespace jeit {
namespace {

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace

std::string_view to_string(CapTag t) {
  return t == CapTag::kCap ? "<cap>" : "<non-cap>";
}

std::string_view to_string(PauseTag t) {
  switch (t) {
    case PauseTag::kNonPause: return "<non-pause>";
    case PauseTag::kPause: return "<pause>";
    case PauseTag::kEos: return "<eos>";
  }
  return "?";
}

std::string_view to_string(PauseKind k) { return k == PauseKind::kEos ? "eos" : "pause"; }

PauseKind parse_pause_kind(std::string_view s) {
  if (s == "pause") return PauseKind::kPause;
  if (s == "eos") return PauseKind::kEos;
  throw AnnotationError("unknown pause kind '" + std::string(s) + "'");
}

std::size_t AnnotatedTranscript::word_count() const { return count_words(cased_text); }

void AnnotatedTranscript::validate() const {
  const std::size_t words = word_count();
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const PauseMark& m = marks[i];
    if (m.word >= words) {
      throw AnnotationError("pause mark after word " + std::to_string(m.word) +
                            " but transcript has " + std::to_string(words) + " words");
    }
    if (i > 0 && marks[i - 1].word >= m.word) {
      throw AnnotationError("pause marks must be sorted with at most one per gap");
    }
    if (m.kind == PauseKind::kEos && m.word + 1 != words) {
      throw AnnotationError("eos mark must follow the final word");
    }
  }
}

AnnotatedTranscript annotate_unpaired(std::string cased_text) {
  AnnotatedTranscript t{std::move(cased_text), {}};
  const std::size_t words = t.word_count();
  if (words > 0) t.marks.push_back(PauseMark{words - 1, PauseKind::kEos});
  return t;
}

void LabelBundle::validate() const {
  if (cap.size() != asr.size() || pause.size() != asr.size()) {
    throw ContractError("label bundle channels differ in length: asr=" +
                        std::to_string(asr.size()) + " cap=" + std::to_string(cap.size()) +
                        " pause=" + std::to_string(pause.size()));
  }
}

LabelBundle factorize(const AnnotatedTranscript& t, const Vocab& vocab) {
  t.validate();
  std::string lowered = t.cased_text;
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto segments = segment(lowered, vocab);

  LabelBundle b;
  b.transcript = t.cased_text;
  b.asr.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    b.asr.push_back(s.id);
    const bool upper = std::isupper(static_cast<unsigned char>(t.cased_text[s.offset]));
    b.cap.push_back(upper ? CapTag::kCap : CapTag::kNonCap);
    b.pause.push_back(PauseTag::kNonPause);
  }
  // Tag the last piece of each marked word.
  for (const PauseMark& m : t.marks) {
    for (std::size_t i = segments.size(); i-- > 0;) {
      if (segments[i].word == m.word) {
        b.pause[i] = m.kind == PauseKind::kEos ? PauseTag::kEos : PauseTag::kPause;
        break;
      }
    }
  }
  return b;
}

std::string render(std::span<const TokenId> asr, std::span<const CapTag> cap,
                   const Vocab& vocab) {
  if (asr.size() != cap.size()) {
    throw ContractError("render: " + std::to_string(asr.size()) + " pieces but " +
                        std::to_string(cap.size()) + " cap tags");
  }
  std::string out;
  for (std::size_t i = 0; i < asr.size(); ++i) {
    const std::string& p = vocab.piece(asr[i]);
    std::size_t start = 0;
    if (p.front() == kBoundary) {
      if (!out.empty()) out.push_back(' ');
      start = 1;
    }
    const std::size_t first = out.size();
    out.append(p, start);
    if (cap[i] == CapTag::kCap) {
      out[first] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[first])));
    }
  }
  return out;
}

std::vector<PauseMark> pause_marks(const LabelBundle& bundle, const Vocab& vocab) {
  bundle.validate();
  std::vector<PauseMark> marks;
  std::size_t word = 0;
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    if (i > 0 && vocab.piece(bundle.asr[i]).front() == kBoundary) ++word;
    if (bundle.pause[i] == PauseTag::kPause) marks.push_back({word, PauseKind::kPause});
    if (bundle.pause[i] == PauseTag::kEos) marks.push_back({word, PauseKind::kEos});
  }
  return marks;
}

}  // namespace jeit
