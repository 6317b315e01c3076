#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace jeit {

using TokenId = std::int32_t;

inline constexpr TokenId kBlankId = 0;
inline constexpr std::string_view kBlankPiece = "⟨blank⟩";
// Prefix marking a word-initial wordpiece ("_san", "_fran", "cisco").
inline constexpr char kBoundary = '_';

// Wordpiece inventory. Index 0 is the reserved blank; real pieces occupy
// 1..size().
class Vocab {
 public:
  Vocab() = default;
  static Vocab from_pieces(std::vector<std::string> pieces);
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Number of real pieces (excluding blank).
  std::size_t size() const { return pieces_.size() - 1; }
  const std::string& piece(TokenId id) const;
  std::optional<TokenId> find(std::string_view piece) const;
  bool contains(std::string_view piece) const { return find(piece).has_value(); }
  std::span<const std::string> pieces() const { return pieces_; }
  std::size_t max_piece_length() const { return max_len_; }

 private:
  std::vector<std::string> pieces_{std::string(kBlankPiece)};
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_len_ = 0;
};

// Byte-pair-style merges over the lowercased corpus until `target_size` real
// pieces exist or no pair remains. The base alphabet is every observed
// character both bare and boundary-marked. Ties go to the lexicographically
// smallest (left, right) pair.
Vocab build_vocab(std::span<const std::string> corpus, std::size_t target_size);

// Greedy longest-match segmentation of lowercase text.
std::vector<TokenId> tokenize(std::string_view text, const Vocab& vocab);
std::string detokenize(std::span<const TokenId> ids, const Vocab& vocab);

// One wordpiece with the word it belongs to and its character offset in the
// source text.
struct Segment {
  TokenId id;
  std::size_t word;
  std::size_t offset;
};
std::vector<Segment> segment(std::string_view text, const Vocab& vocab);

}  // namespace jeit
