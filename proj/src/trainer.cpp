#include "dfc/trainer.hpp"

#include <chrono>
#include <numeric>

#include "dfc/io.hpp"
#include "dfc/num/checkpoint.hpp"
#include "dfc/rng.hpp"

namespace dfc {

using nlohmann::json;

void TrainConfig::validate() const {
  if (micro_batch < 1 || accumulation < 1) fail(ErrorKind::config, "micro_batch and accumulation must be >= 1");
  if (patience < 1) fail(ErrorKind::config, "patience must be >= 1");
  if (max_epochs < 1) fail(ErrorKind::config, "max_epochs must be >= 1");
  if (lr < 0.0) fail(ErrorKind::config, "lr must be non-negative");
  if (smoothing < 0.0 || smoothing >= 1.0) fail(ErrorKind::config, "smoothing must be in [0, 1)");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0 || lambda_warmup_fraction < 0.0 || lambda_warmup_fraction > 1.0) {
    fail(ErrorKind::config, "warmup fractions must be in [0, 1]");
  }
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"micro_batch", c.micro_batch},
           {"accumulation", c.accumulation},
           {"max_epochs", c.max_epochs},
           {"patience", c.patience},
           {"lr", c.lr},
           {"warmup_fraction", c.warmup_fraction},
           {"lambda", c.lambda},
           {"lambda_warmup_fraction", c.lambda_warmup_fraction},
           {"smoothing", c.smoothing},
           {"seed", c.seed},
           {"contrastive", c.contrastive},
           {"contrastive_norm", to_string(c.contrastive_norm)},
           {"exclude_reference_tokens", c.exclude_reference_tokens},
           {"adamw", c.adamw}};
}

void from_json(const json& j, TrainConfig& c) {
  c.micro_batch = j.value("micro_batch", c.micro_batch);
  c.accumulation = j.value("accumulation", c.accumulation);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.lr = j.value("lr", c.lr);
  c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
  c.lambda = j.value("lambda", c.lambda);
  c.lambda_warmup_fraction = j.value("lambda_warmup_fraction", c.lambda_warmup_fraction);
  c.smoothing = j.value("smoothing", c.smoothing);
  c.seed = j.value("seed", c.seed);
  c.contrastive = j.value("contrastive", c.contrastive);
  if (j.contains("contrastive_norm")) c.contrastive_norm = contrastive_norm_from_string(j.at("contrastive_norm").get<std::string>());
  c.exclude_reference_tokens = j.value("exclude_reference_tokens", c.exclude_reference_tokens);
  if (j.contains("adamw")) c.adamw = j.at("adamw").get<num::AdamWConfig>();
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience < 1) fail(ErrorKind::config, "patience must be >= 1");
}

bool EarlyStopping::update(std::size_t epoch, double value) {
  improved_ = best_epoch_ == 0 || value < best_;
  if (improved_) {
    best_ = value;
    best_epoch_ = epoch;
    stale_ = 0;
    return false;
  }
  return ++stale_ >= patience_;
}

json to_json(const TrainReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_loss", e.validation_loss}});
  }
  return {{"epochs", epochs},         {"best_epoch", r.best_epoch},   {"best_checkpoint", r.best_checkpoint},
          {"steps", r.steps},         {"skipped", r.skipped},         {"early_stopped", r.early_stopped}};
}

num::Schedule lr_schedule(const TrainConfig& c, std::size_t total_steps) {
  return {c.lr, c.warmup_fraction, total_steps, num::ScheduleShape::cosine_decay};
}

num::Schedule lambda_schedule(const TrainConfig& c, std::size_t total_steps) {
  return {c.lambda, c.lambda_warmup_fraction, total_steps, num::ScheduleShape::constant_after_warmup};
}

namespace {

using Clock = std::chrono::steady_clock;

// Shared epoch loop. `step` fills gradients for one effective batch and
// returns its loss; `validate` returns the monitored validation value.
template <typename StepFn, typename ValidateFn>
TrainReport run_training(num::ParameterSet<float>& params, std::size_t n_train, const TrainConfig& c, StepFn step,
                         ValidateFn validate, std::vector<json>& log) {
  c.validate();
  const auto start = Clock::now();
  const std::size_t per_epoch = (n_train + c.effective_batch() - 1) / c.effective_batch();
  const std::size_t total = per_epoch * c.max_epochs;
  const auto lr = lr_schedule(c, total);
  const auto lam = lambda_schedule(c, total);
  num::AdamW<float> opt(params, c.adamw);
  EarlyStopping stopper(c.patience);
  std::vector<num::Matrix<float>> best = params.snapshot();
  TrainReport report;

  for (std::size_t epoch = 1; epoch <= c.max_epochs; ++epoch) {
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(c.seed, "epoch:" + std::to_string(epoch)));
    rng.shuffle(std::span<std::size_t>(order));

    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      const std::size_t lo = b * c.effective_batch();
      const std::size_t hi = std::min(n_train, lo + c.effective_batch());
      const std::span<const std::size_t> batch(order.data() + lo, hi - lo);
      const double lambda = lam.value(report.steps);
      const double rate = lr.value(report.steps);
      params.zero_grad();
      const LossBreakdown loss = step(batch, lambda);
      opt.step(rate);
      epoch_loss += loss.total * static_cast<double>(batch.size());
      json rec{{"step", report.steps}, {"epoch", epoch}, {"lr", rate}};
      rec.update(json(loss));
      log.push_back(std::move(rec));
      ++report.steps;
    }

    const double val = validate();
    report.epochs.push_back({epoch, epoch_loss / static_cast<double>(n_train), val});
    const bool stop = stopper.update(epoch, val);
    if (stopper.improved()) best = params.snapshot();
    if (stop) {
      report.early_stopped = true;
      break;
    }
  }
  params.restore(best);
  report.best_epoch = stopper.best_epoch();
  report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

void finish(TrainReport& report, const num::ParameterSet<float>& params, const json& model_config,
            const TrainOutputs& outputs, const std::vector<json>& log) {
  if (outputs.checkpoint_stem) {
    num::save_checkpoint(*outputs.checkpoint_stem, params, model_config, outputs.vocab_ref);
    report.best_checkpoint = outputs.checkpoint_stem->filename().string();
  }
  if (outputs.step_log) io::write_jsonl(*outputs.step_log, log);
}

}  // namespace

LossBreakdown accumulate_corrector_gradients(CorrectorModel<float>& model, std::span<const EncodedExample* const> batch,
                                             std::size_t batch_size, double lambda, const TrainConfig& c) {
  LossBreakdown sum;
  const double weight = 1.0 / static_cast<double>(batch_size);
  for (const EncodedExample* ex : batch) {
    num::Tape<float> tape;
    num::Var<float> node;
    const LossBreakdown l = corrector_example_loss(model, tape, *ex, weight, lambda, c, &node);
    tape.backward(node);
    sum.ce += l.ce * weight;
    sum.contrastive += l.contrastive * weight;
    sum.lambda_effective = l.lambda_effective;
  }
  return total_loss(sum.ce, sum.contrastive, sum.lambda_effective);
}

double corrector_validation_loss(CorrectorModel<float>& model, std::span<const EncodedExample> examples,
                                 const TrainConfig& c) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) {
    num::Tape<float> tape(false);
    const LossBreakdown l = corrector_example_loss(model, tape, ex, 1.0, c.lambda, c, static_cast<num::Var<float>*>(nullptr));
    total += l.total;
  }
  return total / static_cast<double>(examples.size());
}

TrainReport train_corrector(CorrectorModel<float>& model, std::span<const EncodedExample> train,
                            std::span<const EncodedExample> validation, const TrainConfig& c,
                            const TrainOutputs& outputs) {
  const auto limit = static_cast<std::size_t>(model.config().max_seq_len);
  std::vector<const EncodedExample*> kept;
  std::size_t skipped = 0;
  for (const auto& ex : train) {
    if (ex.length() <= limit) {
      kept.push_back(&ex);
    } else {
      ++skipped;
    }
  }
  std::vector<EncodedExample> val;
  for (const auto& ex : validation) {
    if (ex.length() <= limit) {
      val.push_back(ex);
    } else {
      ++skipped;
    }
  }
  if (kept.empty()) fail(ErrorKind::data, "every training example exceeds max_seq_len " + std::to_string(limit));
  if (val.empty()) fail(ErrorKind::data, "empty validation split");

  std::vector<json> log;
  auto step = [&](std::span<const std::size_t> batch, double lambda) {
    std::vector<const EncodedExample*> items;
    for (std::size_t i : batch) items.push_back(kept[i]);
    return accumulate_corrector_gradients(model, items, items.size(), lambda, c);
  };
  auto validate = [&] { return corrector_validation_loss(model, val, c); };
  TrainReport report = run_training(model.parameters(), kept.size(), c, step, validate, log);
  report.skipped = skipped;
  json cfg = model.config();
  cfg["kind"] = "corrector";
  finish(report, model.parameters(), cfg, outputs, log);
  return report;
}

double tagger_validation_loss(TaggerModel<float>& model, std::span<const TaggerExample> examples) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : examples) {
    num::Tape<float> tape(false);
    double raw = 0.0;
    detection_node(model.logits(tape, ex.ids), ex.piece_labels, 1.0, &raw);
    total += raw;
    tokens += ex.ids.size();
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

TrainReport train_tagger(TaggerModel<float>& model, std::span<const TaggerExample> train,
                         std::span<const TaggerExample> validation, const TrainConfig& c,
                         const TrainOutputs& outputs) {
  if (train.empty()) fail(ErrorKind::data, "empty training split");
  if (validation.empty()) fail(ErrorKind::data, "empty validation split");
  std::vector<json> log;
  auto step = [&](std::span<const std::size_t> batch, double) {
    std::size_t tokens = 0;
    for (std::size_t i : batch) tokens += train[i].ids.size();
    const double weight = 1.0 / static_cast<double>(tokens);
    double sum = 0.0;
    for (std::size_t i : batch) {
      num::Tape<float> tape;
      double raw = 0.0;
      auto node = detection_node(model.logits(tape, train[i].ids), train[i].piece_labels, weight, &raw);
      tape.backward(node);
      sum += raw;
    }
    return total_loss(sum * weight, 0.0, 0.0);
  };
  auto validate = [&] { return tagger_validation_loss(model, validation); };
  TrainReport report = run_training(model.parameters(), train.size(), c, step, validate, log);
  json cfg = model.config();
  cfg["kind"] = "tagger";
  finish(report, model.parameters(), cfg, outputs, log);
  return report;
}

}  // namespace dfc
