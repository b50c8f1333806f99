#include "dfc/objectives.hpp"

#include <algorithm>
#include <map>

namespace dfc {

using nlohmann::json;

std::string_view to_string(ContrastiveNorm n) { return n == ContrastiveNorm::full ? "full" : "response"; }

ContrastiveNorm contrastive_norm_from_string(std::string_view s) {
  if (s == "full") return ContrastiveNorm::full;
  if (s == "response") return ContrastiveNorm::response;
  fail(ErrorKind::config, "unknown contrastive_norm: " + std::string(s) + " (expected full or response)");
}

DetectionLoss detection_loss(std::span<const num::Matrix<double>> probs, std::span<const std::vector<int>> labels) {
  if (probs.size() != labels.size()) fail(ErrorKind::shape, "detection_loss: batch sizes differ");
  DetectionLoss out;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& p = probs[i];
    if (p.cols() != 2 || static_cast<std::size_t>(p.rows()) != labels[i].size()) {
      fail(ErrorKind::shape, "detection_loss: probabilities " + num::shape_string(num::shape_of(p)) + " for " +
                                 std::to_string(labels[i].size()) + " labels");
    }
    for (std::size_t t = 0; t < labels[i].size(); ++t) {
      const int y = labels[i][t];
      if (y != 0 && y != 1) fail(ErrorKind::data, "detection_loss: label " + std::to_string(y) + " not in {0, 1}");
      double g = p(static_cast<num::Index>(t), y);
      if (g < kProbabilityFloor) {
        g = kProbabilityFloor;
        ++out.clamped;
      }
      out.sum -= std::log(g);
      ++out.tokens;
    }
  }
  out.mean = out.tokens ? out.sum / static_cast<double>(out.tokens) : 0.0;
  return out;
}

double generation_ce(const num::Matrix<double>& dists, std::span<const int> targets, std::size_t response_start,
                     double smoothing) {
  const std::size_t T = targets.size();
  if (smoothing < 0.0 || smoothing >= 1.0) fail(ErrorKind::config, "label smoothing must be in [0, 1)");
  if (response_start < 1 || response_start > T) {
    fail(ErrorKind::shape, "response_start " + std::to_string(response_start) + " beyond sequence of " +
                               std::to_string(T));
  }
  if (static_cast<std::size_t>(dists.rows()) != T) {
    fail(ErrorKind::shape, "generation_ce: " + std::to_string(dists.rows()) + " rows for " + std::to_string(T) +
                               " targets");
  }
  const double V = static_cast<double>(dists.cols());
  double total = 0.0;
  for (std::size_t t = response_start; t <= T; ++t) {
    const auto row = dists.row(static_cast<num::Index>(t - 1));
    for (num::Index v = 0; v < row.size(); ++v) {
      const double q = (v == targets[t - 1] ? 1.0 - smoothing : 0.0) + smoothing / V;
      if (q > 0.0) total -= q * std::log(std::max(row(v), kProbabilityFloor));
    }
  }
  return total / static_cast<double>(T - response_start + 1);
}

void validate_penalty(std::span<const DecayedPenaltyEntry> penalty, int vocab_size) {
  for (const auto& e : penalty) {
    if (!(e.weight > 0.0 && e.weight <= 1.0)) {
      fail(ErrorKind::data, "penalty weight " + std::to_string(e.weight) + " outside (0, 1]");
    }
    if (e.token_id < 0 || e.token_id >= vocab_size) {
      fail(ErrorKind::data, "penalty token " + std::to_string(e.token_id) + " outside vocabulary");
    }
  }
}

double contrastive_example_loss(const ContrastiveInstance& inst, ContrastiveNorm norm) {
  const auto& P = *inst.dists;
  const std::size_t T = static_cast<std::size_t>(P.rows());
  const std::size_t r = inst.response_start;
  validate_penalty(inst.penalty, static_cast<int>(P.cols()));
  if (r < 1 || r > T) fail(ErrorKind::shape, "response_start " + std::to_string(r) + " outside 1.." + std::to_string(T));
  if (inst.penalty.empty()) return 0.0;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(P.cols());
  for (const auto& e : inst.penalty) w(e.token_id) = std::max(w(e.token_id), e.weight);
  const Eigen::VectorXd s = P.middleRows(static_cast<num::Index>(r - 1), static_cast<num::Index>(T - r + 1)) * w;
  const double sum = -(1.0 - s.array().min(kPenaltyCeiling).max(0.0)).log().sum();
  const double z = norm == ContrastiveNorm::full ? static_cast<double>(T) : static_cast<double>(T - r + 1);
  return sum / z;
}

double contrastive_loss(std::span<const ContrastiveInstance> batch, ContrastiveNorm norm) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& inst : batch) total += contrastive_example_loss(inst, norm);
  return total / static_cast<double>(batch.size());
}

double penalty_mass(const num::Matrix<double>& dists, std::span<const DecayedPenaltyEntry> penalty) {
  if (dists.rows() == 0) return 0.0;
  std::vector<int> ids;
  for (const auto& e : penalty) ids.push_back(e.token_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  double total = 0.0;
  for (int id : ids) total += dists.col(id).sum();
  return total / static_cast<double>(dists.rows());
}

void to_json(json& j, const LossBreakdown& b) {
  j = json{{"ce", b.ce}, {"contrastive", b.contrastive}, {"lambda", b.lambda_effective}, {"total", b.total}};
}

LossBreakdown total_loss(double ce, double contrastive, double lambda_effective) {
  if (!std::isfinite(ce) || !std::isfinite(contrastive) || !std::isfinite(lambda_effective)) {
    fail(ErrorKind::numeric, "non-finite loss component: ce=" + std::to_string(ce) +
                                 " contrastive=" + std::to_string(contrastive) +
                                 " lambda=" + std::to_string(lambda_effective));
  }
  return {ce, contrastive, lambda_effective, ce + lambda_effective * contrastive};
}

}  // namespace dfc
