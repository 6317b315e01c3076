#include "jeit/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "jeit/errors.hpp"

namespace jeit {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

void validate_piece(const std::string& p) {
  std::string_view body = p;
  if (!body.empty() && body.front() == kBoundary) body.remove_prefix(1);
  if (body.empty()) throw ContractError("wordpiece '" + p + "' has no characters");
  for (char c : body) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isupper(u) || std::isspace(u) || c == kBoundary) {
      throw ContractError("wordpiece '" + p + "' is not a lowercase piece");
    }
  }
}

}  // namespace

Vocab Vocab::from_pieces(std::vector<std::string> pieces) {
  Vocab v;
  for (auto& p : pieces) {
    validate_piece(p);
    if (v.index_.count(p)) throw ContractError("duplicate wordpiece '" + p + "'");
    v.index_.emplace(p, static_cast<TokenId>(v.pieces_.size()));
    v.max_len_ = std::max(v.max_len_, p.size());
    v.pieces_.push_back(std::move(p));
  }
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open vocab file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kBlankPiece) {
    throw LoadError("vocab file " + path.string() + " must start with " +
                    std::string(kBlankPiece));
  }
  std::vector<std::string> pieces;
  while (std::getline(in, line)) pieces.push_back(line);
  try {
    return from_pieces(std::move(pieces));
  } catch (const ContractError& e) {
    throw LoadError("vocab file " + path.string() + ": " + e.what());
  }
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write vocab file " + path.string());
  for (const auto& p : pieces_) out << p << '\n';
}

const std::string& Vocab::piece(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw ContractError("token id " + std::to_string(id) + " outside vocab of size " +
                        std::to_string(size()));
  }
  return pieces_[id];
}

std::optional<TokenId> Vocab::find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocab build_vocab(std::span<const std::string> corpus, std::size_t target_size) {
  if (corpus.empty()) throw ConfigError("build_vocab: empty corpus");
  if (target_size < 30) throw ConfigError("build_vocab: target size must be at least 30");

  std::map<std::string, long> word_freq;
  for (const auto& line : corpus) {
    const std::string l = lower(line);
    for (auto w : split_words(l)) ++word_freq[std::string(w)];
  }

  std::set<std::string> alphabet;
  std::vector<std::pair<std::vector<std::string>, long>> words;
  for (const auto& [w, n] : word_freq) {
    std::vector<std::string> symbols;
    for (std::size_t i = 0; i < w.size(); ++i) {
      alphabet.insert(std::string(1, w[i]));
      alphabet.insert(std::string(1, kBoundary) + w[i]);
      symbols.push_back(i == 0 ? std::string(1, kBoundary) + w[i] : std::string(1, w[i]));
    }
    words.emplace_back(std::move(symbols), n);
  }
  if (alphabet.empty()) throw ConfigError("build_vocab: corpus has no characters");
  if (target_size < alphabet.size()) {
    throw ConfigError("build_vocab: target size " + std::to_string(target_size) +
                      " is smaller than the alphabet (" + std::to_string(alphabet.size()) +
                      ")");
  }

  std::vector<std::string> pieces(alphabet.begin(), alphabet.end());
  std::set<std::string> known(alphabet.begin(), alphabet.end());

  while (pieces.size() < target_size) {
    std::map<std::pair<std::string, std::string>, long> pairs;
    for (const auto& [symbols, n] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        pairs[{symbols[i], symbols[i + 1]}] += n;
      }
    }
    if (pairs.empty()) break;
    // std::map iterates pairs in lexicographic order, so the first maximum wins.
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto [left, right] = best->first;
    const std::string merged = left + right;
    for (auto& [symbols, n] : words) {
      std::vector<std::string> next;
      next.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(symbols[i]);
        }
      }
      symbols = std::move(next);
    }
    if (known.insert(merged).second) pieces.push_back(merged);
  }
  return Vocab::from_pieces(std::move(pieces));
}

std::vector<Segment> segment(std::string_view text, const Vocab& vocab) {
  std::vector<Segment> out;
  std::size_t word_index = 0;
  std::size_t i = 0;
  std::string candidate;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t end = i;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;

    std::size_t pos = i;
    while (pos < end) {
      const bool initial = pos == i;
      const std::size_t prefix = initial ? 1 : 0;
      const std::size_t longest =
          std::min(end - pos, vocab.max_piece_length() > prefix
                                  ? vocab.max_piece_length() - prefix
                                  : std::size_t{0});
      bool matched = false;
      for (std::size_t len = longest; len >= 1; --len) {
        candidate.clear();
        if (initial) candidate.push_back(kBoundary);
        candidate.append(text.substr(pos, len));
        if (auto id = vocab.find(candidate)) {
          out.push_back(Segment{*id, word_index, pos});
          pos += len;
          matched = true;
          break;
        }
      }
      if (!matched) {
        const char c = text[pos];
        if (std::isupper(static_cast<unsigned char>(c))) {
          throw TokenizationError(std::string("tokenize: uppercase character '") + c +
                                  "' in text; tokenize expects lowercase input");
        }
        throw TokenizationError(std::string("tokenize: character '") + c +
                                "' is not covered by the vocabulary");
      }
    }
    ++word_index;
    i = end;
  }
  return out;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocab& vocab) {
  std::vector<TokenId> ids;
  for (const auto& s : segment(text, vocab)) ids.push_back(s.id);
  return ids;
}

std::string detokenize(std::span<const TokenId> ids, const Vocab& vocab) {
  std::string out;
  for (TokenId id : ids) {
    if (id == kBlankId) throw ContractError("detokenize: blank id in token sequence");
    const std::string& p = vocab.piece(id);
    if (p.front() == kBoundary) {
      if (!out.empty()) out.push_back(' ');
      out.append(p, 1);
    } else {
      out.append(p);
    }
  }
  return out;
}

}  // namespace jeit
