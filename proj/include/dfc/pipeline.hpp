#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dfc/corpus.hpp"
#include "dfc/eval.hpp"
#include "dfc/model.hpp"
#include "dfc/num/gradcheck.hpp"
#include "dfc/trainer.hpp"
#include "json.hpp"

namespace dfc {

// Built-in defaults; config/default.json mirrors them.
nlohmann::json default_config();

// Sets a dotted key ("corrector.train.lr") to `value`, parsed as JSON when
// possible and kept as a string otherwise. Unknown keys are rejected.
void apply_override(nlohmann::json& config, const std::string& key, const std::string& value);

// Every key of `patch` must already exist in `base`.
void merge_config(nlohmann::json& base, const nlohmann::json& patch, const std::string& where = "");

class PipelineConfig {
 public:
  PipelineConfig();
  explicit PipelineConfig(nlohmann::json raw);

  static PipelineConfig load(const std::filesystem::path* file,
                             const std::vector<std::pair<std::string, std::string>>& overrides);

  const nlohmann::json& raw() const { return raw_; }
  nlohmann::json& raw() { return raw_; }

  std::uint64_t seed() const;
  std::string lang() const;
  std::filesystem::path out() const;
  std::filesystem::path artifact(const std::string& name) const { return out() / name; }

  CorpusConfig corpus() const;
  InjectionConfig injection() const;
  std::size_t vocab_target() const;
  std::size_t vocab_min_frequency() const;
  double decay_base() const;
  PromptFormat prompt_format() const;
  std::string language_name(const std::string& tag) const;

  TransformerConfig tagger_model(int vocab_size) const;
  TrainConfig tagger_train() const;
  TransformerConfig corrector_model(int vocab_size) const;
  TrainConfig corrector_train() const;
  std::size_t max_new_tokens() const;

 private:
  nlohmann::json raw_;
};

// ---------------------------------------------------------------------------
// Stages. Each reads and writes fixed artifact names under config.out().
// ---------------------------------------------------------------------------

struct LoadedData {
  std::vector<SentencePair> pairs;
  Vocabulary vocab;
  std::vector<LabeledExample> labeled;  // corpus order
  DatasetSplit split;
};

void gen_corpus(const PipelineConfig& cfg);
void label_corpus(const PipelineConfig& cfg);
LoadedData load_labeled(const PipelineConfig& cfg, const std::string& labeled_name = "labeled.jsonl");

// Subsets of `labeled` by split membership, in split order.
std::vector<LabeledExample> select(const std::vector<LabeledExample>& labeled, const std::vector<std::string>& ids);

TrainReport train_tagger_stage(const PipelineConfig& cfg);
TaggingMetrics tag_stage(const PipelineConfig& cfg);
TrainReport train_corrector_stage(const PipelineConfig& cfg);

struct CorrectionResult {
  std::vector<std::string> ids;
  std::vector<std::string> hypotheses;
  std::vector<std::string> references;
  double penalty_mass = 0.0;
};

// Greedy decoding of the test split plus teacher-forced penalty mass.
CorrectionResult correct_examples(CorrectorModel<float>& model, const Vocabulary& vocab,
                                  std::span<const EncodedExample> examples, std::size_t max_new);
void correct_stage(const PipelineConfig& cfg);
MetricsReport evaluate_stage(const PipelineConfig& cfg, const std::filesystem::path& hypotheses_file,
                             const std::filesystem::path* references_file);
JudgeVerdict judge_stage(const PipelineConfig& cfg, const std::filesystem::path& a, const std::filesystem::path& b);

// Mean teacher-forced probability of penalty ids at response positions over
// examples with a non-empty penalty set.
double mean_penalty_mass(CorrectorModel<float>& model, std::span<const EncodedExample> examples);

struct GradcheckReport {
  num::GradcheckResult result;
  double tolerance = 1e-4;
  bool passed = false;
};

GradcheckReport gradcheck_stage(const PipelineConfig& cfg);

struct AblationSeed {
  std::uint64_t seed = 0;
  MetricsReport ce_only;
  MetricsReport contrastive;
  double ce_only_penalty_mass = 0.0;
  double contrastive_penalty_mass = 0.0;
};

struct AblationResult {
  std::vector<AblationSeed> seeds;
  double mean_bleu_ce_only = 0.0;
  double mean_bleu_contrastive = 0.0;
  TaggingMetrics tagger;
};

nlohmann::json to_json(const AblationResult& r);

// gen-corpus, label, train-tagger, tag, then CE-only and CE+contrastive
// correctors per seed from identical initializations.
AblationResult ablate(const PipelineConfig& cfg);

}  // namespace dfc
