#pragma once

#include <span>
#include <string>
#include <vector>

#include "dfc/corpus.hpp"
#include "dfc/textcore.hpp"
#include "json.hpp"

namespace dfc {

struct AlignmentResult {
  std::vector<int> labels;  // 1 = disfluent (unmatched), 0 = aligned
  bool fluent_is_subsequence = true;
};

// LCS alignment of disfluent against fluent words. Among maximal alignments
// the one matching the latest disfluent positions wins, so earlier copies of
// repeated material are the ones labeled disfluent.
AlignmentResult align_and_label(std::span<const std::string> disfluent,
                                std::span<const std::string> fluent);

std::vector<int> project_labels_to_subwords(std::span<const int> labels,
                                            std::span<const SubwordPiece> pieces);

struct LabeledExample {
  std::string pair_id;
  std::string lang;
  std::string disfluent;
  std::string fluent;
  std::vector<WordToken> tokens;  // disfluent side
  std::vector<int> labels;        // gold, aligned to tokens
  std::vector<int> subword_labels;
  std::vector<int> predicted_labels;  // tagger output; empty when untagged
  bool alignment_exact = true;

  // Labels shown to the corrector: tagger predictions when present.
  const std::vector<int>& prompt_labels() const {
    return predicted_labels.empty() ? labels : predicted_labels;
  }
};

LabeledExample label_pair(const SentencePair& pair, const Vocabulary& vocab);

// Words whose label is 1, in sentence order.
std::vector<std::string> disfluent_tokens(std::span<const WordToken> tokens, std::span<const int> labels);

struct PenaltySet {
  std::vector<DecayedPenaltyEntry> entries;
  std::vector<std::string> source_words;

  bool empty() const { return entries.empty(); }
};

// Expands label-1 word types into weighted subword ids. With
// exclude_reference_tokens, word types present in the fluent reference are
// dropped, as are any ids that also occur in the encoded reference.
PenaltySet extract_penalty_set(const LabeledExample& labeled, const Vocabulary& vocab,
                               bool exclude_reference_tokens, double decay_base = 0.5);

nlohmann::json to_json(const LabeledExample& ex);
LabeledExample labeled_from_json(const nlohmann::json& j, const Vocabulary& vocab);

}  // namespace dfc
