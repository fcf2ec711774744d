#pragma once

#include <cstddef>

#include "nli/train/train_config.hpp"

namespace nli {

// Linear ramp from 0 to base_lr over the warmup steps, then linear decay to 0
// at total_steps.
class LinearWarmupSchedule {
 public:
  LinearWarmupSchedule(double base_lr, double warmup_fraction, std::size_t total_steps);

  // Steps beyond total_steps clamp to 0 and bump overshoot_count().
  double at(std::size_t step) const;

  std::size_t warmup_steps() const { return warmup_steps_; }
  std::size_t total_steps() const { return total_steps_; }
  std::size_t overshoot_count() const { return overshoots_; }

 private:
  double base_lr_;
  std::size_t warmup_steps_;
  std::size_t total_steps_;
  mutable std::size_t overshoots_ = 0;
};

// total_steps = max_epochs x batches_per_epoch.
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& config);

}  // namespace nli
