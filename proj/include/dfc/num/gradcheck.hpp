#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "dfc/num/autograd.hpp"

namespace dfc::num {

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Index worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Compares Parameter::grad (already populated by one backward pass) against
// central differences of `loss` with step h, for every scalar parameter.
// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradcheckResult gradcheck(ParameterSet<double>& params, const std::function<double()>& loss,
                                 double h = 1e-5, double floor = 1e-6) {
  GradcheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    for (Index k = 0; k < p.value.size(); ++k) {
      double& x = p.value.data()[k];
      const double saved = x;
      x = saved + h;
      const double up = loss();
      x = saved - h;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p.grad.data()[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = std::max(rel, result.max_relative_error);
        result.worst_parameter = p.name;
        result.worst_index = k;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace dfc::num
