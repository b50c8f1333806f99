#pragma once

#include <cstddef>
#include <string_view>

#include "json.hpp"

namespace dfc::num {

enum class ScheduleShape { cosine_decay, constant_after_warmup };

std::string_view to_string(ScheduleShape s);
ScheduleShape schedule_shape_from_string(std::string_view s);

// Linear ramp from 0 to base_value over the first warmup_steps() steps, then
// either a half-cosine down to 0 at total_steps or a flat base_value.
struct Schedule {
  double base_value = 0.0;
  double warmup_fraction = 0.1;
  std::size_t total_steps = 0;
  ScheduleShape shape = ScheduleShape::cosine_decay;

  std::size_t warmup_steps() const;
  double value(std::size_t step) const;
};

}  // namespace dfc::num
