#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dfc/model.hpp"
#include "dfc/num/optim.hpp"
#include "dfc/num/schedule.hpp"
#include "dfc/objectives.hpp"
#include "json.hpp"

namespace dfc {

struct TrainConfig {
  std::size_t micro_batch = 8;
  std::size_t accumulation = 2;
  std::size_t max_epochs = 30;
  std::size_t patience = 3;
  double lr = 3e-4;
  double warmup_fraction = 0.1;
  double lambda = 0.3;
  double lambda_warmup_fraction = 0.1;
  double smoothing = 0.01;
  std::uint64_t seed = 0;
  bool contrastive = true;
  ContrastiveNorm contrastive_norm = ContrastiveNorm::full;
  bool exclude_reference_tokens = true;
  num::AdamWConfig adamw;

  std::size_t effective_batch() const { return micro_batch * accumulation; }
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Stops once the monitored value has failed to improve for `patience`
// consecutive epochs. Epochs are 1-based.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  // Returns true when training should stop after this epoch.
  bool update(std::size_t epoch, double value);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_ = 0.0;
  bool improved_ = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::string best_checkpoint;
  std::size_t steps = 0;
  std::size_t skipped = 0;
  bool early_stopped = false;
  double wall_seconds = 0.0;  // not serialized, so reports stay reproducible
};

nlohmann::json to_json(const TrainReport& r);

struct TrainOutputs {
  std::optional<std::filesystem::path> checkpoint_stem;
  std::optional<std::filesystem::path> step_log;
  std::string vocab_ref;
};

// Optimizer-step schedules for a run of `total_steps`.
num::Schedule lr_schedule(const TrainConfig& c, std::size_t total_steps);
num::Schedule lambda_schedule(const TrainConfig& c, std::size_t total_steps);

// One optimizer step's worth of gradients for the corrector, accumulated
// into the parameter gradients (not zeroed here). Each example contributes
// its loss scaled by 1/batch_size.
LossBreakdown accumulate_corrector_gradients(CorrectorModel<float>& model, std::span<const EncodedExample* const> batch,
                                             std::size_t batch_size, double lambda, const TrainConfig& c);

// Loss of one example on `tape`; `node` receives weight x (ce + lambda x
// contrastive), with lambda forced to 0 when the contrastive term is off.
// The returned breakdown is unweighted.
template <typename S>
LossBreakdown corrector_example_loss(CorrectorModel<S>& model, num::Tape<S>& tape, const EncodedExample& ex,
                                     double weight, double lambda, const TrainConfig& c, num::Var<S>* node) {
  const std::vector<int> z = ex.sequence();
  const std::size_t r0 = ex.response_start;
  if (r0 == 0 || ex.target_ids.empty()) fail(ErrorKind::data, "example " + ex.id + " has an empty prompt or target");
  const std::span<const int> ids(z.data(), z.size() - 1);
  num::Var<S> logits = model.logits(tape, ids, r0 - 1);
  const double lam = c.contrastive ? lambda : 0.0;
  const double normalizer = c.contrastive_norm == ContrastiveNorm::full ? static_cast<double>(z.size())
                                                                        : static_cast<double>(ex.target_ids.size());
  double ce = 0.0, con = 0.0;
  num::Var<S> ce_var = ce_node(logits, ex.target_ids, c.smoothing, weight, &ce);
  num::Var<S> con_var = contrastive_node(logits, ex.penalty.entries, normalizer, weight * lam, &con);
  if (node) *node = num::add(ce_var, con_var);
  return total_loss(ce, con, lam);
}

// Validation objective: CE for the CE-only run, CE + base lambda x
// contrastive otherwise.
double corrector_validation_loss(CorrectorModel<float>& model, std::span<const EncodedExample> examples,
                                 const TrainConfig& c);

TrainReport train_corrector(CorrectorModel<float>& model, std::span<const EncodedExample> train,
                            std::span<const EncodedExample> validation, const TrainConfig& c,
                            const TrainOutputs& outputs);

double tagger_validation_loss(TaggerModel<float>& model, std::span<const TaggerExample> examples);

TrainReport train_tagger(TaggerModel<float>& model, std::span<const TaggerExample> train,
                         std::span<const TaggerExample> validation, const TrainConfig& c,
                         const TrainOutputs& outputs);

}  // namespace dfc
