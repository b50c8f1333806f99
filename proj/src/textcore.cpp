#include "dfc/textcore.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "dfc/error.hpp"

namespace dfc {

namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

char32_t decode_code_point(std::string_view s) {
  const auto b = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  switch (s.size()) {
    case 1: return b(0);
    case 2: return ((b(0) & 0x1F) << 6) | (b(1) & 0x3F);
    case 3: return ((b(0) & 0x0F) << 12) | ((b(1) & 0x3F) << 6) | (b(2) & 0x3F);
    case 4: return ((b(0) & 0x07) << 18) | ((b(1) & 0x3F) << 12) | ((b(2) & 0x3F) << 6) | (b(3) & 0x3F);
    default: return 0xFFFD;
  }
}

bool is_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

bool is_terminal_punct(char32_t c) {
  switch (c) {
    case U'.': case U',': case U'!': case U'?': case U';': case U':':
    case 0x0964:  // devanagari danda
    case 0x0965:  // double danda
    case 0x2026:  // ellipsis
      return true;
    default:
      return false;
  }
}

std::string merged_symbol(const std::string& left, const std::string& right) {
  return left + right.substr(kContinuation.size());
}

std::vector<std::string> word_symbols(std::string_view word) {
  auto chars = utf8_chars(word);
  for (std::size_t i = 1; i < chars.size(); ++i) {
    chars[i] = std::string(kContinuation) + chars[i];
  }
  return chars;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t n = utf8_length(static_cast<unsigned char>(text[i]));
    if (i + n > text.size()) n = 1;
    out.emplace_back(text.substr(i, n));
    i += n;
  }
  return out;
}

std::vector<WordToken> word_tokenize(std::string_view text) {
  std::vector<WordToken> words;
  auto emit = [&](std::string s) { words.push_back({std::move(s), words.size()}); };

  std::vector<std::string> current;
  auto flush = [&] {
    if (current.empty()) return;
    std::size_t end = current.size();
    while (end > 0 && is_terminal_punct(decode_code_point(current[end - 1]))) --end;
    std::string body;
    for (std::size_t i = 0; i < end; ++i) body += current[i];
    if (!body.empty()) emit(std::move(body));
    for (std::size_t i = end; i < current.size(); ++i) emit(current[i]);
    current.clear();
  };

  for (auto& ch : utf8_chars(text)) {
    if (is_space(decode_code_point(ch))) {
      flush();
    } else {
      current.push_back(std::move(ch));
    }
  }
  flush();
  return words;
}

bool is_punctuation_token(std::string_view word) {
  if (word.empty()) return false;
  for (const auto& ch : utf8_chars(word)) {
    if (!is_terminal_punct(decode_code_point(ch))) return false;
  }
  return true;
}

std::vector<std::string> word_texts(std::span<const WordToken> words) {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(w.text);
  return out;
}

std::vector<WordToken> make_words(std::span<const std::string> texts) {
  std::vector<WordToken> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({texts[i], i});
  return out;
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::string normalize(std::string_view text) {
  const auto words = word_tokenize(text);
  const auto texts = word_texts(words);
  return join_words(texts);
}

// ---------------------------------------------------------------------------
// Vocabulary

const std::vector<std::string>& Vocabulary::special_pieces() {
  static const std::vector<std::string> specials{"<pad>", "<bos>", "<eos>", "<unk>", "<sep>"};
  return specials;
}

Vocabulary::Vocabulary() : pieces_(special_pieces()) { rebuild_index(); }

Vocabulary::Vocabulary(std::vector<std::string> pieces,
                       std::vector<std::pair<std::string, std::string>> merges)
    : pieces_(std::move(pieces)), merges_(std::move(merges)) {
  const auto& specials = special_pieces();
  if (pieces_.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), pieces_.begin())) {
    fail(ErrorKind::data, "vocabulary must start with the special pieces");
  }
  rebuild_index();
  if (index_.size() != pieces_.size()) fail(ErrorKind::data, "vocabulary contains duplicate pieces");
}

void Vocabulary::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < pieces_.size(); ++i) index_.emplace(pieces_[i], static_cast<int>(i));
  merge_rank_.clear();
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    merge_rank_.emplace(merges_[i].first + ' ' + merges_[i].second, static_cast<int>(i));
  }
}

std::optional<int> Vocabulary::find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> Vocabulary::encode_word(std::string_view word) const {
  struct Sym {
    std::string text;
    bool known;
  };
  std::vector<Sym> syms;
  for (auto& s : word_symbols(word)) {
    const bool known = index_.count(s) > 0;
    syms.push_back({std::move(s), known});
  }

  while (syms.size() > 1) {
    int best_rank = -1;
    std::size_t best_at = 0;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      if (!syms[i].known || !syms[i + 1].known) continue;
      auto it = merge_rank_.find(syms[i].text + ' ' + syms[i + 1].text);
      if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank)) {
        best_rank = it->second;
        best_at = i;
      }
    }
    if (best_rank < 0) break;
    syms[best_at].text = merged_symbol(syms[best_at].text, syms[best_at + 1].text);
    syms.erase(syms.begin() + static_cast<std::ptrdiff_t>(best_at) + 1);
  }

  std::vector<int> ids;
  ids.reserve(syms.size());
  for (const auto& s : syms) {
    auto it = index_.find(s.text);
    ids.push_back(s.known && it != index_.end() ? it->second : kUnk);
  }
  return ids;
}

std::string Vocabulary::to_text() const {
  std::ostringstream out;
  out << "dfc-vocab 1 " << pieces_.size() << ' ' << merges_.size() << '\n';
  for (const auto& p : pieces_) out << p << '\n';
  for (const auto& [l, r] : merges_) out << l << ' ' << r << '\n';
  return out.str();
}

Vocabulary Vocabulary::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  int version = 0;
  std::size_t n_pieces = 0, n_merges = 0;
  if (!(in >> magic >> version >> n_pieces >> n_merges) || magic != "dfc-vocab" || version != 1) {
    fail(ErrorKind::data, "malformed vocabulary header");
  }
  std::string line;
  std::getline(in, line);
  std::vector<std::string> pieces;
  for (std::size_t i = 0; i < n_pieces; ++i) {
    if (!std::getline(in, line) || line.empty()) fail(ErrorKind::data, "truncated vocabulary pieces");
    pieces.push_back(line);
  }
  std::vector<std::pair<std::string, std::string>> merges;
  for (std::size_t i = 0; i < n_merges; ++i) {
    if (!std::getline(in, line)) fail(ErrorKind::data, "truncated vocabulary merges");
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size()) {
      fail(ErrorKind::data, "malformed merge rule: " + line);
    }
    merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  return Vocabulary(std::move(pieces), std::move(merges));
}

// ---------------------------------------------------------------------------
// Training

Vocabulary train_subwords(std::span<const std::string> corpus, std::size_t target_size,
                          std::size_t min_frequency) {
  // Symbols are interned so pair counting works on integer keys.
  std::vector<std::string> symbol_text;
  std::unordered_map<std::string, int> symbol_id;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = symbol_id.emplace(s, static_cast<int>(symbol_text.size()));
    if (inserted) symbol_text.push_back(s);
    return it->second;
  };

  std::map<std::string, std::size_t> freq;
  for (const auto& sentence : corpus) {
    for (const auto& w : word_tokenize(sentence)) ++freq[w.text];
  }

  struct Word {
    std::vector<int> syms;
    std::size_t count;
  };
  std::vector<Word> words;
  std::set<std::string> alphabet;
  for (const auto& [text, count] : freq) {
    Word w{{}, count};
    for (const auto& s : word_symbols(text)) {
      alphabet.insert(s);
      w.syms.push_back(intern(s));
    }
    words.push_back(std::move(w));
  }

  const std::size_t floor = alphabet.size() + Vocabulary::kSpecialCount;
  if (target_size < floor) {
    fail(ErrorKind::config, "subword target size " + std::to_string(target_size) +
                                " is below the character floor " + std::to_string(floor) + " (" +
                                std::to_string(alphabet.size()) + " symbols + " +
                                std::to_string(Vocabulary::kSpecialCount) + " specials)");
  }

  std::vector<std::string> pieces = Vocabulary::special_pieces();
  pieces.insert(pieces.end(), alphabet.begin(), alphabet.end());
  std::set<std::string> piece_set(pieces.begin(), pieces.end());
  const std::set<std::string> specials(Vocabulary::special_pieces().begin(),
                                       Vocabulary::special_pieces().end());
  std::vector<std::pair<std::string, std::string>> merges;
  std::set<std::uint64_t> banned;

  auto key = [](int a, int b) { return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b); };

  while (pieces.size() < target_size) {
    std::unordered_map<std::uint64_t, std::size_t> counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) counts[key(w.syms[i], w.syms[i + 1])] += w.count;
    }
    std::uint64_t best = 0;
    std::size_t best_count = 0;
    bool found = false;
    for (const auto& [k, c] : counts) {
      if (c < min_frequency || banned.count(k)) continue;
      const auto l = static_cast<int>(k >> 32), r = static_cast<int>(k & 0xFFFFFFFFu);
      bool better = c > best_count;
      if (found && c == best_count) {
        const auto bl = static_cast<int>(best >> 32), br = static_cast<int>(best & 0xFFFFFFFFu);
        better = std::tie(symbol_text[l], symbol_text[r]) < std::tie(symbol_text[bl], symbol_text[br]);
      }
      if (!found || better) {
        best = k;
        best_count = c;
        found = true;
      }
    }
    if (!found) break;

    const int left = static_cast<int>(best >> 32), right = static_cast<int>(best & 0xFFFFFFFFu);
    const std::string merged = merged_symbol(symbol_text[left], symbol_text[right]);
    if (specials.count(merged)) {
      banned.insert(best);
      continue;
    }
    merges.emplace_back(symbol_text[left], symbol_text[right]);
    if (piece_set.insert(merged).second) pieces.push_back(merged);
    const int merged_id = intern(merged);

    for (auto& w : words) {
      std::vector<int> next;
      next.reserve(w.syms.size());
      for (std::size_t i = 0; i < w.syms.size(); ++i) {
        if (i + 1 < w.syms.size() && w.syms[i] == left && w.syms[i + 1] == right) {
          next.push_back(merged_id);
          ++i;
        } else {
          next.push_back(w.syms[i]);
        }
      }
      w.syms = std::move(next);
    }
  }
  return Vocabulary(std::move(pieces), std::move(merges));
}

// ---------------------------------------------------------------------------

std::vector<SubwordPiece> encode(std::span<const WordToken> words, const Vocabulary& vocab) {
  std::vector<SubwordPiece> out;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto ids = vocab.encode_word(words[w].text);
    for (std::size_t r = 0; r < ids.size(); ++r) out.push_back({ids[r], w, r});
  }
  return out;
}

std::vector<int> piece_ids(std::span<const SubwordPiece> pieces) {
  std::vector<int> ids;
  ids.reserve(pieces.size());
  for (const auto& p : pieces) ids.push_back(p.id);
  return ids;
}

std::vector<std::string> decode_words(std::span<const int> ids, const Vocabulary& vocab) {
  std::vector<std::string> words;
  for (int id : ids) {
    if (id < 0 || id >= vocab.size()) continue;
    if (id == Vocabulary::kUnk) {
      words.push_back(vocab.piece(id));
      continue;
    }
    if (vocab.is_special(id)) continue;
    const std::string& p = vocab.piece(id);
    if (p.size() > kContinuation.size() && p.starts_with(kContinuation) && !words.empty()) {
      words.back() += p.substr(kContinuation.size());
    } else {
      words.push_back(p);
    }
  }
  return words;
}

std::string decode(std::span<const int> ids, const Vocabulary& vocab) {
  const auto words = decode_words(ids, vocab);
  return join_words(words);
}

// ---------------------------------------------------------------------------

std::vector<DecayedPenaltyEntry> decay_weights(std::span<const SubwordPiece> word_pieces,
                                               double decay_base) {
  if (!(decay_base > 0.0 && decay_base <= 1.0)) {
    fail(ErrorKind::config, "decay_base must lie in (0, 1]");
  }
  std::vector<DecayedPenaltyEntry> out;
  out.reserve(word_pieces.size());
  for (std::size_t i = 0; i < word_pieces.size(); ++i) {
    const auto& p = word_pieces[i];
    if (p.parent_word != word_pieces.front().parent_word || p.rank_in_word != i) {
      fail(ErrorKind::data, "decay_weights expects the pieces of exactly one word, ranks 0..k");
    }
    out.push_back({p.id, std::pow(decay_base, static_cast<double>(p.rank_in_word))});
  }
  return out;
}

}  // namespace dfc
