#include "dfc/align.hpp"

#include <algorithm>
#include <set>

#include "dfc/error.hpp"

namespace dfc {

using nlohmann::json;

AlignmentResult align_and_label(std::span<const std::string> disfluent,
                                std::span<const std::string> fluent) {
  const std::size_t n = disfluent.size(), m = fluent.size();
  // lcs[i][j]: LCS length of disfluent[0,i) and fluent[0,j).
  std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      lcs[i][j] = disfluent[i - 1] == fluent[j - 1] ? lcs[i - 1][j - 1] + 1
                                                    : std::max(lcs[i - 1][j], lcs[i][j - 1]);
    }
  }

  AlignmentResult result;
  result.labels.assign(n, 1);
  // Backtrack from the end, skipping fluent words before disfluent ones so
  // each match lands on the latest feasible disfluent position.
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (disfluent[i - 1] == fluent[j - 1]) {
      result.labels[i - 1] = 0;
      --i;
      --j;
    } else if (lcs[i][j - 1] == lcs[i][j]) {
      --j;
    } else {
      --i;
    }
  }
  result.fluent_is_subsequence = lcs[n][m] == m;
  return result;
}

std::vector<int> project_labels_to_subwords(std::span<const int> labels,
                                            std::span<const SubwordPiece> pieces) {
  std::vector<int> out;
  out.reserve(pieces.size());
  for (const auto& p : pieces) {
    if (p.parent_word >= labels.size()) {
      fail(ErrorKind::data, "subword parent index " + std::to_string(p.parent_word) +
                                " out of range for " + std::to_string(labels.size()) + " labels");
    }
    out.push_back(labels[p.parent_word]);
  }
  return out;
}

LabeledExample label_pair(const SentencePair& pair, const Vocabulary& vocab) {
  LabeledExample ex;
  ex.pair_id = pair.id;
  ex.lang = pair.lang;
  ex.disfluent = pair.disfluent;
  ex.fluent = pair.fluent;
  ex.tokens = word_tokenize(pair.disfluent);
  const auto fluent_words = word_texts(word_tokenize(pair.fluent));
  const auto disfluent_words = word_texts(ex.tokens);
  auto aligned = align_and_label(disfluent_words, fluent_words);
  ex.labels = std::move(aligned.labels);
  ex.alignment_exact = aligned.fluent_is_subsequence;
  ex.subword_labels = project_labels_to_subwords(ex.labels, encode(ex.tokens, vocab));
  return ex;
}

std::vector<std::string> disfluent_tokens(std::span<const WordToken> tokens, std::span<const int> labels) {
  if (tokens.size() != labels.size()) {
    fail(ErrorKind::data, "token/label length mismatch: " + std::to_string(tokens.size()) + " vs " +
                              std::to_string(labels.size()));
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (labels[i] == 1) out.push_back(tokens[i].text);
  }
  return out;
}

PenaltySet extract_penalty_set(const LabeledExample& labeled, const Vocabulary& vocab,
                               bool exclude_reference_tokens, double decay_base) {
  PenaltySet set;
  const auto fluent_tokens = word_tokenize(labeled.fluent);
  std::set<std::string> fluent_types;
  std::set<int> fluent_ids;
  for (const auto& w : fluent_tokens) fluent_types.insert(w.text);
  for (const auto& p : encode(fluent_tokens, vocab)) fluent_ids.insert(p.id);

  std::set<std::string> seen;
  for (const auto& word : disfluent_tokens(labeled.tokens, labeled.labels)) {
    if (!seen.insert(word).second) continue;
    if (exclude_reference_tokens && fluent_types.count(word)) continue;
    const WordToken token{word, 0};
    const auto pieces = encode(std::span<const WordToken>(&token, 1), vocab);
    bool contributed = false;
    for (const auto& e : decay_weights(pieces, decay_base)) {
      if (exclude_reference_tokens && fluent_ids.count(e.token_id)) continue;
      auto it = std::find_if(set.entries.begin(), set.entries.end(),
                             [&](const DecayedPenaltyEntry& x) { return x.token_id == e.token_id; });
      if (it == set.entries.end()) {
        set.entries.push_back(e);
      } else {
        it->weight = std::max(it->weight, e.weight);
      }
      contributed = true;
    }
    if (contributed) set.source_words.push_back(word);
  }
  return set;
}

json to_json(const LabeledExample& ex) {
  json j{{"id", ex.pair_id},
         {"lang", ex.lang},
         {"disfluent", ex.disfluent},
         {"fluent", ex.fluent},
         {"tokens", word_texts(ex.tokens)},
         {"labels", ex.labels},
         {"disfluent_tokens", disfluent_tokens(ex.tokens, ex.labels)},
         {"alignment_exact", ex.alignment_exact}};
  if (!ex.predicted_labels.empty()) j["predicted_labels"] = ex.predicted_labels;
  return j;
}

LabeledExample labeled_from_json(const json& j, const Vocabulary& vocab) {
  try {
    LabeledExample ex;
    ex.pair_id = j.at("id").get<std::string>();
    ex.lang = j.at("lang").get<std::string>();
    ex.disfluent = j.at("disfluent").get<std::string>();
    ex.fluent = j.at("fluent").get<std::string>();
    const auto texts = j.at("tokens").get<std::vector<std::string>>();
    ex.tokens = make_words(texts);
    ex.labels = j.at("labels").get<std::vector<int>>();
    if (ex.labels.size() != ex.tokens.size()) fail(ErrorKind::data, "labels/tokens length mismatch in " + ex.pair_id);
    if (j.contains("predicted_labels")) ex.predicted_labels = j.at("predicted_labels").get<std::vector<int>>();
    ex.alignment_exact = j.value("alignment_exact", true);
    ex.subword_labels = project_labels_to_subwords(ex.labels, encode(ex.tokens, vocab));
    return ex;
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("malformed labeled record: ") + e.what());
  }
}

}  // namespace dfc
