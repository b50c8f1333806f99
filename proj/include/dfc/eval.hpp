#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace dfc {

// ---------------------------------------------------------------------------
// Corpus metrics (word-level metrics use word_tokenize)
// ---------------------------------------------------------------------------

struct BleuOptions {
  int max_order = 4;
  bool add_one = false;  // add-one smoothing of orders >= 2
};

double bleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
            BleuOptions options = {});

// Character n-gram F-beta (beta 2, orders 1..6) over whitespace-free text,
// statistics summed over the corpus.
double chrf2(std::span<const std::string> hypotheses, std::span<const std::string> references);

// Sentence-level convenience forms.
double sentence_chrf2(std::string_view hypothesis, std::string_view reference);

struct TerStats {
  double edits = 0.0;
  double reference_words = 0.0;
};

// Word edits with greedy block shifts (span <= 10) for one sentence.
TerStats ter_sentence(std::span<const std::string> hypothesis, std::span<const std::string> reference);

// 100 x total edits / total reference words.
double ter(std::span<const std::string> hypotheses, std::span<const std::string> references);

// Plain word-level Levenshtein distance.
std::size_t word_edit_distance(std::span<const std::string> a, std::span<const std::string> b);

struct TaggingMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double sentence_accuracy = 0.0;
};

// Disfluent class (label 1), counts pooled over tokens.
TaggingMetrics tagging_metrics(std::span<const std::vector<int>> predicted, std::span<const std::vector<int>> gold);

struct MetricsReport {
  double bleu = 0.0;
  double chrf2 = 0.0;
  double ter = 0.0;
  double tag_precision = 0.0;
  double tag_recall = 0.0;
  double tag_f1 = 0.0;
  double sentence_accuracy = 0.0;
  std::size_t n_sentences = 0;
  bool has_tagging = false;
};

MetricsReport evaluate_corpus(std::span<const std::string> hypotheses, std::span<const std::string> references);
nlohmann::json to_json(const MetricsReport& r);
MetricsReport metrics_from_json(const nlohmann::json& j);

// Aligned plain-text table, one column per named report.
std::string format_table(std::span<const std::pair<std::string, MetricsReport>> columns);

// ---------------------------------------------------------------------------
// Pairwise judge
// ---------------------------------------------------------------------------

enum class Preference { first, second, draw };

struct JudgeItem {
  std::string_view instruction;
  std::string_view reference;
  std::string_view first;
  std::string_view second;
};

// Must be safe to call concurrently.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::string name() const = 0;
  virtual Preference compare(const JudgeItem& item) = 0;
};

// Prefers the candidate with the higher sentence chrF2 to the reference.
class OracleJudge final : public JudgeBackend {
 public:
  std::string name() const override { return "oracle"; }
  Preference compare(const JudgeItem& item) override;
};

// Always prefers whichever candidate is shown first.
class PositionBiasedJudge final : public JudgeBackend {
 public:
  std::string name() const override { return "position-biased"; }
  Preference compare(const JudgeItem&) override { return Preference::first; }
};

struct RemoteJudgeConfig {
  std::string endpoint;  // http://host:port/path
  double timeout_seconds = 30.0;
  std::size_t retries = 2;
  std::size_t concurrency = 4;
  std::string evaluator_prompt;
};

void to_json(nlohmann::json& j, const RemoteJudgeConfig& c);
void from_json(const nlohmann::json& j, RemoteJudgeConfig& c);

// POSTs {"instruction", "candidate_a", "candidate_b"} and reads
// {"winner": "a" | "b" | "draw"}.
class RemoteJudge final : public JudgeBackend {
 public:
  explicit RemoteJudge(RemoteJudgeConfig config);
  std::string name() const override { return "remote"; }
  Preference compare(const JudgeItem& item) override;

 private:
  RemoteJudgeConfig config_;
  std::string host_;
  std::string path_;
};

std::unique_ptr<JudgeBackend> make_judge(std::string_view name, const RemoteJudgeConfig& remote);

struct JudgeVerdict {
  double a_win_pct = 0.0;
  double b_win_pct = 0.0;
  double draw_pct = 0.0;
  std::size_t n = 0;
  std::size_t failures = 0;
};

nlohmann::json to_json(const JudgeVerdict& v);

// Each item is judged with A first and with B first; a system wins only
// when preferred in both orders. Backend errors count as draws.
JudgeVerdict judge_pairwise(std::span<const std::string> outputs_a, std::span<const std::string> outputs_b,
                            std::span<const std::string> references, JudgeBackend& backend,
                            std::span<const std::string> instructions = {}, std::size_t concurrency = 1);

}  // namespace dfc
