#include "nli/train/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "nli/errors.hpp"

namespace nli {

LinearWarmupSchedule::LinearWarmupSchedule(double base_lr, double warmup_fraction, std::size_t total_steps)
    : base_lr_(base_lr), total_steps_(total_steps) {
  if (!(base_lr >= 0)) throw ConfigError("learning rate must be non-negative");
  if (!(warmup_fraction > 0 && warmup_fraction < 1)) throw ConfigError("warmup_fraction must lie in (0, 1)");
  const auto rounded = static_cast<std::size_t>(std::llround(warmup_fraction * static_cast<double>(total_steps)));
  // Keep at least one warmup step and at least one decay step.
  warmup_steps_ = total_steps < 2 ? total_steps : std::clamp<std::size_t>(rounded, 1, total_steps - 1);
}

double LinearWarmupSchedule::at(std::size_t step) const {
  if (step > total_steps_) {
    if (overshoots_++ == 0) {
      std::clog << "warning: learning-rate step " << step << " beyond schedule end " << total_steps_
                << "; using 0\n";
    }
    return 0.0;
  }
  if (total_steps_ == 0) return 0.0;
  if (step < warmup_steps_) {
    return base_lr_ * static_cast<double>(step) / static_cast<double>(warmup_steps_);
  }
  if (total_steps_ == warmup_steps_) return step == total_steps_ ? base_lr_ : 0.0;
  return base_lr_ * static_cast<double>(total_steps_ - step) / static_cast<double>(total_steps_ - warmup_steps_);
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& config) {
  return LinearWarmupSchedule(config.base_lr, config.warmup_fraction, total_steps).at(step);
}

}  // namespace nli
