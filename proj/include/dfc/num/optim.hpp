#pragma once

#include <cmath>
#include <vector>

#include "dfc/num/autograd.hpp"
#include "json.hpp"

namespace dfc::num {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

void to_json(nlohmann::json& j, const AdamWConfig& c);
void from_json(const nlohmann::json& j, AdamWConfig& c);

// Adam with decoupled weight decay: p <- p (1 - lr wd) for decaying
// parameters, then the bias-corrected moment update.
template <typename S>
class AdamW {
 public:
  AdamW(ParameterSet<S>& params, AdamWConfig config) : params_(&params), config_(config) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.push_back(Matrix<S>::Zero(params[i].value.rows(), params[i].value.cols()));
      v_.push_back(Matrix<S>::Zero(params[i].value.rows(), params[i].value.cols()));
    }
  }

  long step_count() const { return t_; }
  const AdamWConfig& config() const { return config_; }

  void step(double lr) {
    if (!(lr >= 0.0)) fail(ErrorKind::config, "learning rate must be non-negative, got " + std::to_string(lr));
    ++t_;
    const S b1 = static_cast<S>(config_.beta1), b2 = static_cast<S>(config_.beta2);
    const S c1 = static_cast<S>(1.0 - std::pow(config_.beta1, static_cast<double>(t_)));
    const S c2 = static_cast<S>(1.0 - std::pow(config_.beta2, static_cast<double>(t_)));
    const S step_size = static_cast<S>(lr) / c1;
    const S eps = static_cast<S>(config_.eps);
    for (std::size_t i = 0; i < params_->size(); ++i) {
      auto& p = (*params_)[i];
      if (p.decay && config_.weight_decay != 0.0) p.value *= static_cast<S>(1.0 - lr * config_.weight_decay);
      m_[i] = b1 * m_[i] + (S(1) - b1) * p.grad;
      v_[i].array() = b2 * v_[i].array() + (S(1) - b2) * p.grad.array().square();
      p.value.array() -= step_size * m_[i].array() / ((v_[i].array() / c2).sqrt() + eps);
    }
  }

 private:
  ParameterSet<S>* params_;
  AdamWConfig config_;
  std::vector<Matrix<S>> m_;
  std::vector<Matrix<S>> v_;
  long t_ = 0;
};

}  // namespace dfc::num
