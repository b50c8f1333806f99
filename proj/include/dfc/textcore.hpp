#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dfc {

// ---------------------------------------------------------------------------
// Words
// ---------------------------------------------------------------------------

struct WordToken {
  std::string text;
  std::size_t index = 0;

  bool operator==(const WordToken&) const = default;
};

// Splits UTF-8 text into code points.
std::vector<std::string> utf8_chars(std::string_view text);

// Whitespace split (ASCII and the common Unicode space separators), with
// trailing punctuation detached into one token per mark.
std::vector<WordToken> word_tokenize(std::string_view text);

// True for a non-empty token made only of detachable punctuation marks.
bool is_punctuation_token(std::string_view word);

std::vector<std::string> word_texts(std::span<const WordToken> words);
std::vector<WordToken> make_words(std::span<const std::string> texts);

// Tokens joined by single spaces.
std::string normalize(std::string_view text);
std::string join_words(std::span<const std::string> words);

// ---------------------------------------------------------------------------
// Subword vocabulary
// ---------------------------------------------------------------------------

// Non-initial pieces of a word carry this prefix, so decoding knows where
// words begin.
inline constexpr std::string_view kContinuation = "##";

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kSep = 4;
  static constexpr int kSpecialCount = 5;

  static const std::vector<std::string>& special_pieces();

  Vocabulary();
  Vocabulary(std::vector<std::string> pieces, std::vector<std::pair<std::string, std::string>> merges);

  int size() const { return static_cast<int>(pieces_.size()); }
  const std::string& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& pieces() const { return pieces_; }
  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
  std::optional<int> find(std::string_view piece) const;
  bool is_special(int id) const { return id >= 0 && id < kSpecialCount; }

  // Piece ids for a single word, merges applied lowest rank first.
  std::vector<int> encode_word(std::string_view word) const;

  // Line format: header "dfc-vocab 1 <pieces> <merges>", then one piece per
  // line (specials first), then one "left right" merge per line.
  std::string to_text() const;
  static Vocabulary from_text(std::string_view text);

  bool operator==(const Vocabulary& other) const {
    return pieces_ == other.pieces_ && merges_ == other.merges_;
  }

 private:
  void rebuild_index();

  std::vector<std::string> pieces_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::unordered_map<std::string, int> index_;
  std::unordered_map<std::string, int> merge_rank_;  // key: left + ' ' + right
};

// Greedy pair-merge training. Fails when target_size is below the character
// floor (distinct symbols + specials). Pairs seen fewer than min_frequency
// times are never merged.
Vocabulary train_subwords(std::span<const std::string> corpus, std::size_t target_size,
                          std::size_t min_frequency = 2);

struct SubwordPiece {
  int id = 0;
  std::size_t parent_word = 0;
  std::size_t rank_in_word = 0;

  bool operator==(const SubwordPiece&) const = default;
};

std::vector<SubwordPiece> encode(std::span<const WordToken> words, const Vocabulary& vocab);
std::vector<int> piece_ids(std::span<const SubwordPiece> pieces);

// Inverse of encode on ids; special ids are dropped.
std::vector<std::string> decode_words(std::span<const int> ids, const Vocabulary& vocab);
std::string decode(std::span<const int> ids, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Sub-token decay weights
// ---------------------------------------------------------------------------

struct DecayedPenaltyEntry {
  int token_id = 0;
  double weight = 1.0;

  bool operator==(const DecayedPenaltyEntry&) const = default;
};

// weight = decay_base^rank for the pieces of one word.
std::vector<DecayedPenaltyEntry> decay_weights(std::span<const SubwordPiece> word_pieces,
                                               double decay_base = 0.5);

}  // namespace dfc
