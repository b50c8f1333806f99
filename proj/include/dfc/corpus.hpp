#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dfc/rng.hpp"
#include "dfc/textcore.hpp"
#include "json.hpp"

namespace dfc {

// ---------------------------------------------------------------------------
// Synthetic languages
// ---------------------------------------------------------------------------

enum class WordClass { det, adj, noun, verb, prep, adv, any };

std::string_view to_string(WordClass c);

// Pseudo-word inventory of one synthetic language: words are built from
// onset+vowel syllables and partitioned into grammatical classes.
struct LanguageSpec {
  std::string tag;
  std::string name;
  std::vector<std::string> onsets;
  std::vector<std::string> vowels;
  std::size_t words_per_class = 40;
};

class LanguageInventory {
 public:
  LanguageInventory() = default;

  static LanguageInventory build(const LanguageSpec& spec, std::uint64_t seed,
                                 std::span<const std::string> reserved = {});
  // Classless inventory over an explicit word list.
  static LanguageInventory from_words(std::string tag, std::vector<std::string> words);

  const std::string& tag() const { return tag_; }
  const std::string& name() const { return name_; }

  std::optional<WordClass> class_of(std::string_view word) const;
  const std::vector<std::string>& words(WordClass c) const;
  std::vector<std::string> all_words() const;

  std::string draw(WordClass c, Rng& rng) const;

  // A fluent sentence from a small phrase grammar in which no two adjacent
  // words share a class:
  //   S -> NP VERB [NP] [ADV] "."      NP -> DET [ADJ] NOUN [PREP DET [ADJ] NOUN]
  std::string generate_sentence(Rng& rng) const;

  // Word sequence of a grammatical sentence prefix of length n.
  std::vector<std::string> sentence_prefix(std::size_t n, Rng& rng) const;

 private:
  std::vector<WordClass> sample_classes(Rng& rng) const;

  std::string tag_;
  std::string name_;
  std::map<WordClass, std::vector<std::string>> classes_;
  std::map<std::string, WordClass, std::less<>> class_index_;
};

// ---------------------------------------------------------------------------
// Disfluency injection
// ---------------------------------------------------------------------------

enum class DisfluencyCategory { filler, repetition, correction, false_start };

std::string_view to_string(DisfluencyCategory c);
DisfluencyCategory category_from_string(std::string_view s);

struct InjectionRecord {
  DisfluencyCategory category = DisfluencyCategory::filler;
  std::size_t start = 0;  // [start, end) over disfluent words
  std::size_t end = 0;

  bool operator==(const InjectionRecord&) const = default;
};

struct SentencePair {
  std::string id;
  std::string lang;
  std::string fluent;
  std::string disfluent;
  std::vector<InjectionRecord> injected;

  bool operator==(const SentencePair&) const = default;
};

struct CategoryProbs {
  double filler = 0.40;
  double repetition = 0.30;
  double correction = 0.15;
  double false_start = 0.15;
};

struct InjectionConfig {
  std::map<std::string, std::vector<std::string>> filler_lexicon;
  CategoryProbs category_probs;
  double prevalence = 0.30;
  std::size_t max_injections = 3;
  std::size_t max_phrase = 3;
  std::uint64_t seed = 0;

  void validate_for(std::string_view lang) const;
};

// Applies insertion-only disfluencies to a fluent word sequence while
// tracking which words were inserted by which injection.
class DisfluentBuilder {
 public:
  explicit DisfluentBuilder(std::vector<std::string> fluent_words);

  // before_fluent == fluent size inserts at the very end.
  void insert_filler(std::size_t before_fluent, std::string filler);
  // Copies fluent words [start, start+length) immediately before themselves.
  void repeat(std::size_t fluent_start, std::size_t length);
  // Reparandum: a wrong word placed immediately before the true word.
  void correct(std::size_t fluent_index, std::string wrong_word);
  // Abandoned fragment at the sentence start.
  void false_start(std::vector<std::string> fragment);

  std::vector<std::string> words() const;
  std::vector<int> inserted_mask() const;
  std::vector<InjectionRecord> provenance() const;
  std::size_t injection_count() const { return categories_.size(); }
  std::size_t fluent_size() const { return fluent_size_; }
  // Index of the word preceding fluent word i in the current sequence.
  std::optional<std::string> word_before_fluent(std::size_t i) const;

 private:
  struct Slot {
    std::string text;
    int injection;  // -1 for fluent words
  };
  std::size_t position_of_fluent(std::size_t i) const;
  void insert(std::size_t pos, std::vector<std::string> words, DisfluencyCategory c);

  std::vector<Slot> slots_;
  std::vector<DisfluencyCategory> categories_;
  std::size_t fluent_size_;
};

// Rightmost embedding of `needle` in `haystack` by a right-to-left greedy
// scan; nullopt when needle is not a subsequence.
std::optional<std::vector<std::size_t>> rightmost_embedding(std::span<const std::string> haystack,
                                                            std::span<const std::string> needle);

SentencePair inject_disfluencies(std::string_view fluent, const InjectionConfig& config,
                                 std::uint64_t stream_id, const LanguageInventory& inventory);

struct CorpusConfig {
  std::vector<LanguageSpec> languages;
  std::size_t sentences_per_language = 1000;
};

std::vector<LanguageInventory> build_inventories(const CorpusConfig& corpus,
                                                 const InjectionConfig& injection);

std::vector<SentencePair> generate_corpus(const CorpusConfig& corpus, const InjectionConfig& injection);

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  bool operator==(const DatasetSplit&) const = default;
};

// Seeded shuffle, then floor(0.8 n) train and the remainder halved into
// validation (floor) and test.
DatasetSplit split_corpus(std::span<const SentencePair> pairs, std::uint64_t seed);

// Per-language 80/10/10 splits; `lang` = "pooled" unions every language.
DatasetSplit split_by_language(std::span<const SentencePair> pairs, std::uint64_t seed,
                               std::string_view lang);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::json to_json(const SentencePair& pair);
SentencePair pair_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& j);

}  // namespace dfc
