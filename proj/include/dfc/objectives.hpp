#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dfc/num/ops.hpp"
#include "dfc/textcore.hpp"
#include "json.hpp"

namespace dfc {

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kPenaltyCeiling = 1.0 - 1e-6;

enum class ContrastiveNorm { full, response };

std::string_view to_string(ContrastiveNorm n);
ContrastiveNorm contrastive_norm_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Reference evaluations over explicit probability tables
// ---------------------------------------------------------------------------

struct DetectionLoss {
  double sum = 0.0;
  double mean = 0.0;
  std::size_t tokens = 0;
  std::size_t clamped = 0;  // gold probabilities raised to the floor
};

// probs[i] is (n_i x 2); labels[i] has n_i entries in {0, 1}.
DetectionLoss detection_loss(std::span<const num::Matrix<double>> probs, std::span<const std::vector<int>> labels);

// `dists` row t-1 is the distribution for target position t (1-based,
// t = 1..T); positions r..T are scored against smoothed one-hot targets and
// averaged.
double generation_ce(const num::Matrix<double>& dists, std::span<const int> targets, std::size_t response_start,
                     double smoothing);

struct ContrastiveInstance {
  const num::Matrix<double>* dists = nullptr;  // T x V, row t-1 for position t
  std::span<const DecayedPenaltyEntry> penalty;
  std::size_t response_start = 1;  // r, 1-based
};

// Per-example (1/Z) sum_{t=r..T} -log(1 - s_t), s_t = sum_v w_v P(v) clamped
// to [0, 1 - 1e-6]; Z = T (full) or T - r + 1 (response).
double contrastive_example_loss(const ContrastiveInstance& inst, ContrastiveNorm norm);

// Mean of the per-example values.
double contrastive_loss(std::span<const ContrastiveInstance> batch, ContrastiveNorm norm);

// Mean over rows of the unweighted probability of the penalty ids.
double penalty_mass(const num::Matrix<double>& dists, std::span<const DecayedPenaltyEntry> penalty);

void validate_penalty(std::span<const DecayedPenaltyEntry> penalty, int vocab_size);

struct LossBreakdown {
  double ce = 0.0;
  double contrastive = 0.0;
  double lambda_effective = 0.0;
  double total = 0.0;
};

void to_json(nlohmann::json& j, const LossBreakdown& b);

LossBreakdown total_loss(double ce, double contrastive, double lambda_effective);

// ---------------------------------------------------------------------------
// Differentiable graph nodes over logits
// ---------------------------------------------------------------------------

// weight * mean over rows of the smoothed cross-entropy of softmax(logits).
template <typename S>
num::Var<S> ce_node(num::Var<S> logits, std::span<const int> targets, double smoothing, double weight,
                    double* raw = nullptr) {
  const auto& z = logits.value();
  const num::Index rows = z.rows(), vocab = z.cols();
  if (static_cast<std::size_t>(rows) != targets.size()) {
    fail(ErrorKind::shape, "ce: " + std::to_string(rows) + " logit rows for " + std::to_string(targets.size()) +
                               " targets");
  }
  const num::Matrix<S> logp = num::log_softmax_rows(z);
  const S off = static_cast<S>(smoothing / static_cast<double>(vocab));
  const S on = static_cast<S>(1.0 - smoothing) + off;
  S total = 0;
  for (num::Index j = 0; j < rows; ++j) {
    total -= off * logp.row(j).sum() + (on - off) * logp(j, targets[static_cast<std::size_t>(j)]);
  }
  const S mean = rows ? total / static_cast<S>(rows) : S(0);
  if (raw) *raw = static_cast<double>(mean);
  num::Matrix<S> out(1, 1);
  out(0, 0) = mean * static_cast<S>(weight);
  std::vector<int> tg(targets.begin(), targets.end());
  return logits.tape->record(
      "ce", std::move(out), {logits},
      [logits, tg = std::move(tg), logp, on, off, weight](num::Tape<S>& t, const num::Matrix<S>& g) {
        if (!t.needs_grad(logits.id)) return;
        const num::Index rows = logp.rows();
        const S k = g(0, 0) * static_cast<S>(weight) / static_cast<S>(rows);
        num::Matrix<S> d = logp.array().exp().matrix();
        d.array() -= off;
        for (num::Index j = 0; j < rows; ++j) d(j, tg[static_cast<std::size_t>(j)]) -= on - off;
        t.grad(logits.id) += k * d;
      });
}

// weight * (1/normalizer) sum over rows of -log(1 - s_j).
template <typename S>
num::Var<S> contrastive_node(num::Var<S> logits, std::span<const DecayedPenaltyEntry> penalty, double normalizer,
                             double weight, double* raw = nullptr) {
  const auto& z = logits.value();
  validate_penalty(penalty, static_cast<int>(z.cols()));
  num::RowVector<S> w = num::RowVector<S>::Zero(z.cols());
  for (const auto& e : penalty) w(e.token_id) = std::max(w(e.token_id), static_cast<S>(e.weight));
  const num::Matrix<S> p = num::softmax_rows(z);
  Eigen::Matrix<S, Eigen::Dynamic, 1> s = p * w.transpose();
  const S ceiling = static_cast<S>(kPenaltyCeiling);
  std::vector<bool> active(static_cast<std::size_t>(s.size()));
  S total = 0;
  for (num::Index j = 0; j < s.size(); ++j) {
    active[static_cast<std::size_t>(j)] = s(j) <= ceiling;
    s(j) = std::clamp(s(j), S(0), ceiling);
    total -= std::log1p(-s(j));
  }
  const S value = penalty.empty() ? S(0) : total / static_cast<S>(normalizer);
  if (raw) *raw = static_cast<double>(value);
  num::Matrix<S> out(1, 1);
  out(0, 0) = value * static_cast<S>(weight);
  return logits.tape->record(
      "contrastive", std::move(out), {logits},
      [logits, p, w, s, active = std::move(active), normalizer, weight,
       empty = penalty.empty()](num::Tape<S>& t, const num::Matrix<S>& g) {
        if (empty || !t.needs_grad(logits.id)) return;
        auto& gz = t.grad(logits.id);
        const S k = g(0, 0) * static_cast<S>(weight / normalizer);
        for (num::Index j = 0; j < p.rows(); ++j) {
          if (!active[static_cast<std::size_t>(j)]) continue;
          const S c = k / (S(1) - s(j));
          gz.row(j).array() += c * p.row(j).array() * (w.array() - s(j));
        }
      });
}

// weight * sum over rows of -log P(label); rows with label < 0 are skipped.
template <typename S>
num::Var<S> detection_node(num::Var<S> logits, std::span<const int> labels, double weight, double* raw = nullptr) {
  const auto& z = logits.value();
  if (z.cols() != 2 || static_cast<std::size_t>(z.rows()) != labels.size()) {
    fail(ErrorKind::shape, "detection: logits " + num::shape_string(num::shape_of(z)) + " for " +
                               std::to_string(labels.size()) + " labels");
  }
  const num::Matrix<S> logp = num::log_softmax_rows(z);
  S total = 0;
  for (num::Index j = 0; j < z.rows(); ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y >= 0) total -= logp(j, y);
  }
  if (raw) *raw = static_cast<double>(total);
  num::Matrix<S> out(1, 1);
  out(0, 0) = total * static_cast<S>(weight);
  std::vector<int> ys(labels.begin(), labels.end());
  return logits.tape->record(
      "detection", std::move(out), {logits},
      [logits, logp, ys = std::move(ys), weight](num::Tape<S>& t, const num::Matrix<S>& g) {
        if (!t.needs_grad(logits.id)) return;
        auto& gz = t.grad(logits.id);
        const S k = g(0, 0) * static_cast<S>(weight);
        for (num::Index j = 0; j < logp.rows(); ++j) {
          const int y = ys[static_cast<std::size_t>(j)];
          if (y < 0) continue;
          gz.row(j) += k * logp.row(j).array().exp().matrix();
          gz(j, y) -= k;
        }
      });
}

}  // namespace dfc
