#include "dfc/corpus.hpp"

#include <algorithm>
#include <set>

#include "dfc/error.hpp"
#include "dfc/textcore.hpp"

namespace dfc {

using nlohmann::json;

std::string_view to_string(WordClass c) {
  switch (c) {
    case WordClass::det: return "det";
    case WordClass::adj: return "adj";
    case WordClass::noun: return "noun";
    case WordClass::verb: return "verb";
    case WordClass::prep: return "prep";
    case WordClass::adv: return "adv";
    case WordClass::any: return "any";
  }
  return "any";
}

std::string_view to_string(DisfluencyCategory c) {
  switch (c) {
    case DisfluencyCategory::filler: return "filler";
    case DisfluencyCategory::repetition: return "repetition";
    case DisfluencyCategory::correction: return "correction";
    case DisfluencyCategory::false_start: return "false_start";
  }
  return "filler";
}

DisfluencyCategory category_from_string(std::string_view s) {
  if (s == "filler") return DisfluencyCategory::filler;
  if (s == "repetition") return DisfluencyCategory::repetition;
  if (s == "correction") return DisfluencyCategory::correction;
  if (s == "false_start") return DisfluencyCategory::false_start;
  fail(ErrorKind::data, "unknown disfluency category: " + std::string(s));
}

// ---------------------------------------------------------------------------
// LanguageInventory

LanguageInventory LanguageInventory::build(const LanguageSpec& spec, std::uint64_t seed,
                                           std::span<const std::string> reserved) {
  if (spec.onsets.empty() || spec.vowels.empty()) {
    fail(ErrorKind::config, "language " + spec.tag + " needs non-empty onsets and vowels");
  }
  LanguageInventory inv;
  inv.tag_ = spec.tag;
  inv.name_ = spec.name.empty() ? spec.tag : spec.name;

  Rng rng(derive_seed(seed, "inventory:" + spec.tag));
  std::set<std::string> taken(reserved.begin(), reserved.end());

  auto syllable = [&] {
    return spec.onsets[rng.below(spec.onsets.size())] + spec.vowels[rng.below(spec.vowels.size())];
  };
  auto fill = [&](WordClass c, std::size_t count, int min_syl, int max_syl) {
    auto& bucket = inv.classes_[c];
    std::size_t attempts = 0;
    while (bucket.size() < count) {
      if (++attempts > 100000) {
        fail(ErrorKind::config, "syllable inventory of " + spec.tag + " too small for requested lexicon");
      }
      std::string w;
      const auto n = rng.between(min_syl, max_syl);
      for (std::int64_t i = 0; i < n; ++i) w += syllable();
      if (!taken.insert(w).second) continue;
      bucket.push_back(w);
      inv.class_index_.emplace(w, c);
    }
  };

  const std::size_t n = std::max<std::size_t>(spec.words_per_class, 4);
  fill(WordClass::det, 3, 1, 1);
  fill(WordClass::prep, 4, 1, 2);
  fill(WordClass::noun, n, 2, 3);
  fill(WordClass::verb, n, 2, 3);
  fill(WordClass::adj, std::max<std::size_t>(n / 2, 2), 2, 3);
  fill(WordClass::adv, std::max<std::size_t>(n / 4, 2), 2, 3);
  return inv;
}

LanguageInventory LanguageInventory::from_words(std::string tag, std::vector<std::string> words) {
  LanguageInventory inv;
  inv.tag_ = tag;
  inv.name_ = std::move(tag);
  for (const auto& w : words) inv.class_index_.emplace(w, WordClass::any);
  inv.classes_[WordClass::any] = std::move(words);
  return inv;
}

std::optional<WordClass> LanguageInventory::class_of(std::string_view word) const {
  auto it = class_index_.find(word);
  if (it == class_index_.end() || it->second == WordClass::any) return std::nullopt;
  return it->second;
}

const std::vector<std::string>& LanguageInventory::words(WordClass c) const {
  static const std::vector<std::string> empty;
  auto it = classes_.find(c);
  return it == classes_.end() ? empty : it->second;
}

std::vector<std::string> LanguageInventory::all_words() const {
  std::vector<std::string> out;
  for (const auto& [c, ws] : classes_) out.insert(out.end(), ws.begin(), ws.end());
  return out;
}

std::string LanguageInventory::draw(WordClass c, Rng& rng) const {
  const auto& bucket = words(c);
  if (!bucket.empty()) return bucket[rng.below(bucket.size())];
  const auto all = all_words();
  if (all.empty()) fail(ErrorKind::config, "language " + tag_ + " has an empty inventory");
  return all[rng.below(all.size())];
}

std::vector<WordClass> LanguageInventory::sample_classes(Rng& rng) const {
  std::vector<WordClass> seq;
  auto noun_phrase = [&](bool allow_pp) {
    seq.push_back(WordClass::det);
    if (rng.bernoulli(0.4)) seq.push_back(WordClass::adj);
    seq.push_back(WordClass::noun);
    if (allow_pp && rng.bernoulli(0.25)) {
      seq.push_back(WordClass::prep);
      seq.push_back(WordClass::det);
      if (rng.bernoulli(0.4)) seq.push_back(WordClass::adj);
      seq.push_back(WordClass::noun);
    }
  };
  noun_phrase(true);
  seq.push_back(WordClass::verb);
  if (rng.bernoulli(0.6)) noun_phrase(false);
  if (rng.bernoulli(0.3)) seq.push_back(WordClass::adv);
  return seq;
}

std::string LanguageInventory::generate_sentence(Rng& rng) const {
  std::vector<std::string> words;
  if (classes_.count(WordClass::any)) {
    const auto n = rng.between(3, 8);
    for (std::int64_t i = 0; i < n; ++i) words.push_back(draw(WordClass::any, rng));
  } else {
    for (auto c : sample_classes(rng)) words.push_back(draw(c, rng));
  }
  words.emplace_back(".");
  return join_words(words);
}

std::vector<std::string> LanguageInventory::sentence_prefix(std::size_t n, Rng& rng) const {
  std::vector<std::string> words;
  if (classes_.count(WordClass::any)) {
    for (std::size_t i = 0; i < n; ++i) words.push_back(draw(WordClass::any, rng));
    return words;
  }
  std::vector<WordClass> seq;
  while (seq.size() < n) {
    auto more = sample_classes(rng);
    seq.insert(seq.end(), more.begin(), more.end());
  }
  for (std::size_t i = 0; i < n; ++i) words.push_back(draw(seq[i], rng));
  return words;
}

// ---------------------------------------------------------------------------
// Injection

void InjectionConfig::validate_for(std::string_view lang) const {
  const auto& p = category_probs;
  for (double v : {p.filler, p.repetition, p.correction, p.false_start, prevalence}) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::config, "injection probabilities must lie in [0, 1]");
  }
  if (p.filler + p.repetition + p.correction + p.false_start <= 0.0 && prevalence > 0.0) {
    fail(ErrorKind::config, "all category probabilities are zero");
  }
  if (max_injections == 0 || max_phrase == 0) {
    fail(ErrorKind::config, "max_injections and max_phrase must be positive");
  }
  if (p.filler > 0.0) {
    auto it = filler_lexicon.find(std::string(lang));
    if (it == filler_lexicon.end() || it->second.empty()) {
      fail(ErrorKind::config, "empty filler lexicon for language '" + std::string(lang) +
                                  "' with nonzero filler probability");
    }
  }
}

DisfluentBuilder::DisfluentBuilder(std::vector<std::string> fluent_words)
    : fluent_size_(fluent_words.size()) {
  for (auto& w : fluent_words) slots_.push_back({std::move(w), -1});
}

std::size_t DisfluentBuilder::position_of_fluent(std::size_t i) const {
  std::size_t seen = 0;
  for (std::size_t p = 0; p < slots_.size(); ++p) {
    if (slots_[p].injection < 0) {
      if (seen == i) return p;
      ++seen;
    }
  }
  return slots_.size();
}

void DisfluentBuilder::insert(std::size_t pos, std::vector<std::string> words, DisfluencyCategory c) {
  const int id = static_cast<int>(categories_.size());
  categories_.push_back(c);
  std::vector<Slot> fresh;
  for (auto& w : words) fresh.push_back({std::move(w), id});
  slots_.insert(slots_.begin() + static_cast<std::ptrdiff_t>(pos), fresh.begin(), fresh.end());
}

void DisfluentBuilder::insert_filler(std::size_t before_fluent, std::string filler) {
  if (before_fluent > fluent_size_) fail(ErrorKind::data, "filler position out of range");
  insert(position_of_fluent(before_fluent), {std::move(filler)}, DisfluencyCategory::filler);
}

void DisfluentBuilder::repeat(std::size_t fluent_start, std::size_t length) {
  if (length == 0 || fluent_start + length > fluent_size_) fail(ErrorKind::data, "repetition span out of range");
  std::vector<std::string> copy;
  for (std::size_t i = 0; i < length; ++i) copy.push_back(slots_[position_of_fluent(fluent_start + i)].text);
  insert(position_of_fluent(fluent_start), std::move(copy), DisfluencyCategory::repetition);
}

void DisfluentBuilder::correct(std::size_t fluent_index, std::string wrong_word) {
  if (fluent_index >= fluent_size_) fail(ErrorKind::data, "correction index out of range");
  insert(position_of_fluent(fluent_index), {std::move(wrong_word)}, DisfluencyCategory::correction);
}

void DisfluentBuilder::false_start(std::vector<std::string> fragment) {
  if (fragment.empty()) fail(ErrorKind::data, "empty false-start fragment");
  insert(0, std::move(fragment), DisfluencyCategory::false_start);
}

std::vector<std::string> DisfluentBuilder::words() const {
  std::vector<std::string> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_) out.push_back(s.text);
  return out;
}

std::vector<int> DisfluentBuilder::inserted_mask() const {
  std::vector<int> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_) out.push_back(s.injection >= 0 ? 1 : 0);
  return out;
}

std::vector<InjectionRecord> DisfluentBuilder::provenance() const {
  std::vector<InjectionRecord> out;
  std::size_t p = 0;
  while (p < slots_.size()) {
    const int id = slots_[p].injection;
    std::size_t q = p + 1;
    while (q < slots_.size() && slots_[q].injection == id) ++q;
    if (id >= 0) out.push_back({categories_[static_cast<std::size_t>(id)], p, q});
    p = q;
  }
  return out;
}

std::optional<std::string> DisfluentBuilder::word_before_fluent(std::size_t i) const {
  const auto pos = position_of_fluent(i);
  if (pos == 0 || pos > slots_.size()) return std::nullopt;
  return slots_[pos - 1].text;
}

std::optional<std::vector<std::size_t>> rightmost_embedding(std::span<const std::string> haystack,
                                                            std::span<const std::string> needle) {
  std::vector<std::size_t> pos(needle.size());
  std::size_t h = haystack.size();
  for (std::size_t k = needle.size(); k-- > 0;) {
    while (h > 0 && haystack[h - 1] != needle[k]) --h;
    if (h == 0) return std::nullopt;
    pos[k] = --h;
  }
  return pos;
}

namespace {

// The injected words must be exactly the words left over by the rightmost
// embedding of the fluent sentence; otherwise gold labels would be ambiguous.
bool provenance_is_canonical(const DisfluentBuilder& b, std::span<const std::string> fluent) {
  const auto words = b.words();
  const auto emb = rightmost_embedding(words, fluent);
  if (!emb) return false;
  std::vector<int> mask(words.size(), 1);
  for (auto p : *emb) mask[p] = 0;
  return mask == b.inserted_mask();
}

}  // namespace

SentencePair inject_disfluencies(std::string_view fluent, const InjectionConfig& config,
                                 std::uint64_t stream_id, const LanguageInventory& inventory) {
  const std::string& lang = inventory.tag();
  config.validate_for(lang);
  const auto fluent_words = word_texts(word_tokenize(fluent));
  if (fluent_words.empty()) fail(ErrorKind::data, "cannot inject into an empty sentence");

  SentencePair pair;
  pair.lang = lang;
  pair.fluent = join_words(fluent_words);

  Rng rng(derive_seed(config.seed, stream_id));
  DisfluentBuilder builder(fluent_words);

  std::vector<std::size_t> content;
  for (std::size_t i = 0; i < fluent_words.size(); ++i) {
    if (!is_punctuation_token(fluent_words[i])) content.push_back(i);
  }
  // Boundary before the trailing punctuation run.
  std::size_t tail = fluent_words.size();
  while (tail > 0 && is_punctuation_token(fluent_words[tail - 1])) --tail;

  const bool disfluent = !content.empty() && rng.bernoulli(config.prevalence);
  if (disfluent) {
    const auto& cp = config.category_probs;
    const std::vector<double> weights{cp.filler, cp.repetition, cp.correction, cp.false_start};
    const auto count = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(config.max_injections)));
    std::vector<std::string> pool = inventory.all_words();
    if (pool.empty()) pool = fluent_words;

    for (std::size_t k = 0; k < count; ++k) {
      for (int attempt = 0; attempt < 8; ++attempt) {
        DisfluentBuilder trial = builder;
        const auto category = static_cast<DisfluencyCategory>(rng.weighted(weights));
        switch (category) {
          case DisfluencyCategory::filler: {
            const auto& lex = config.filler_lexicon.at(lang);
            const auto slot = rng.below(content.size() + 1);
            const std::size_t before = slot < content.size() ? content[slot] : tail;
            trial.insert_filler(before, lex[rng.below(lex.size())]);
            break;
          }
          case DisfluencyCategory::repetition: {
            const auto at = rng.below(content.size());
            std::size_t run = 1;
            while (at + run < content.size() && content[at + run] == content[at] + run) ++run;
            const auto len = static_cast<std::size_t>(
                rng.between(1, static_cast<std::int64_t>(std::min(run, config.max_phrase))));
            trial.repeat(content[at], len);
            break;
          }
          case DisfluencyCategory::correction: {
            const std::size_t target = content[rng.below(content.size())];
            const auto cls = inventory.class_of(fluent_words[target]);
            const auto before = trial.word_before_fluent(target);
            std::string wrong;
            for (int draw = 0; draw < 8; ++draw) {
              std::string w = cls ? inventory.draw(*cls, rng) : pool[rng.below(pool.size())];
              if (w != fluent_words[target] && (!before || w != *before)) {
                wrong = std::move(w);
                break;
              }
            }
            if (wrong.empty()) continue;
            trial.correct(target, std::move(wrong));
            break;
          }
          case DisfluencyCategory::false_start: {
            const auto len = static_cast<std::size_t>(
                rng.between(1, static_cast<std::int64_t>(std::min(config.max_phrase, content.size()))));
            std::vector<std::string> fragment;
            if (content.size() > len && rng.bernoulli(0.5)) {
              const auto from = 1 + rng.below(content.size() - len);
              for (std::size_t i = 0; i < len; ++i) fragment.push_back(fluent_words[content[from + i]]);
            } else {
              fragment = inventory.sentence_prefix(len, rng);
            }
            trial.false_start(std::move(fragment));
            break;
          }
        }
        if (provenance_is_canonical(trial, fluent_words)) {
          builder = std::move(trial);
          break;
        }
      }
    }
  }

  pair.disfluent = join_words(builder.words());
  pair.injected = builder.provenance();
  return pair;
}

std::vector<LanguageInventory> build_inventories(const CorpusConfig& corpus,
                                                 const InjectionConfig& injection) {
  std::vector<std::string> reserved;
  for (const auto& [lang, lex] : injection.filler_lexicon) reserved.insert(reserved.end(), lex.begin(), lex.end());
  std::vector<LanguageInventory> out;
  for (const auto& spec : corpus.languages) out.push_back(LanguageInventory::build(spec, injection.seed, reserved));
  return out;
}

std::vector<SentencePair> generate_corpus(const CorpusConfig& corpus, const InjectionConfig& injection) {
  const auto inventories = build_inventories(corpus, injection);
  std::vector<SentencePair> pairs;
  pairs.reserve(inventories.size() * corpus.sentences_per_language);
  for (std::size_t l = 0; l < inventories.size(); ++l) {
    const auto& inv = inventories[l];
    const auto fluent_seed = derive_seed(injection.seed, "fluent:" + inv.tag());
    for (std::size_t i = 0; i < corpus.sentences_per_language; ++i) {
      Rng rng(derive_seed(fluent_seed, i));
      const std::string fluent = inv.generate_sentence(rng);
      const std::uint64_t stream = (static_cast<std::uint64_t>(l) << 32) | i;
      SentencePair pair = inject_disfluencies(fluent, injection, stream, inv);
      char id[32];
      std::snprintf(id, sizeof id, "-%06zu", i);
      pair.id = inv.tag() + id;
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Splits

DatasetSplit split_corpus(std::span<const SentencePair> pairs, std::uint64_t seed) {
  if (pairs.size() < 10) {
    fail(ErrorKind::data, "split needs at least 10 pairs, got " + std::to_string(pairs.size()));
  }
  std::vector<std::string> ids;
  ids.reserve(pairs.size());
  for (const auto& p : pairs) ids.push_back(p.id);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(std::span<std::string>(ids));

  const std::size_t n = ids.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t rest = n - n_train;
  const std::size_t n_val = rest / 2;

  DatasetSplit split;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                          ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
  return split;
}

DatasetSplit split_by_language(std::span<const SentencePair> pairs, std::uint64_t seed,
                               std::string_view lang) {
  std::vector<std::string> langs;
  for (const auto& p : pairs) {
    if (std::find(langs.begin(), langs.end(), p.lang) == langs.end()) langs.push_back(p.lang);
  }
  if (lang != "pooled" && std::find(langs.begin(), langs.end(), lang) == langs.end()) {
    fail(ErrorKind::config, "language '" + std::string(lang) + "' not present in corpus");
  }
  DatasetSplit out;
  for (const auto& l : langs) {
    if (lang != "pooled" && l != lang) continue;
    std::vector<SentencePair> subset;
    for (const auto& p : pairs) {
      if (p.lang == l) subset.push_back(p);
    }
    const auto s = split_corpus(subset, derive_seed(seed, l));
    out.train.insert(out.train.end(), s.train.begin(), s.train.end());
    out.validation.insert(out.validation.end(), s.validation.begin(), s.validation.end());
    out.test.insert(out.test.end(), s.test.begin(), s.test.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

json to_json(const SentencePair& pair) {
  json injected = json::array();
  for (const auto& r : pair.injected) {
    injected.push_back({{"category", to_string(r.category)}, {"start", r.start}, {"end", r.end}});
  }
  return {{"id", pair.id},
          {"lang", pair.lang},
          {"fluent", pair.fluent},
          {"disfluent", pair.disfluent},
          {"injected", injected}};
}

SentencePair pair_from_json(const json& j) {
  try {
    SentencePair p;
    p.id = j.at("id").get<std::string>();
    p.lang = j.at("lang").get<std::string>();
    p.fluent = j.at("fluent").get<std::string>();
    p.disfluent = j.at("disfluent").get<std::string>();
    for (const auto& r : j.at("injected")) {
      p.injected.push_back({category_from_string(r.at("category").get<std::string>()),
                            r.at("start").get<std::size_t>(), r.at("end").get<std::size_t>()});
    }
    return p;
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("malformed pair record: ") + e.what());
  }
}

json to_json(const DatasetSplit& split) {
  return {{"train", split.train}, {"validation", split.validation}, {"test", split.test}};
}

DatasetSplit split_from_json(const json& j) {
  try {
    return {j.at("train").get<std::vector<std::string>>(), j.at("validation").get<std::vector<std::string>>(),
            j.at("test").get<std::vector<std::string>>()};
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("malformed split: ") + e.what());
  }
}

}  // namespace dfc
