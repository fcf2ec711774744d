#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nli/autograd/tensor.hpp"

namespace nli {

// Clamps every value into [-bound, bound].
template <typename Real>
void clip_values(std::span<Real> values, Real bound);

// Elementwise clamp of each tensor's gradient; tensors without a gradient are skipped.
template <typename Real>
void clip_gradients(std::span<Tensor<Real>> params, Real bound);

template <typename Real>
struct OptimizerState {
  std::vector<std::vector<Real>> first_moment;
  std::vector<std::vector<Real>> second_moment;
  std::size_t step = 0;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias-corrected moments.
template <typename Real>
class Adam {
 public:
  Adam(std::span<const Tensor<Real>> params, AdamHyper hyper);

  // One update using the gradients currently stored on `params` (missing
  // gradients count as zero). Throws NumericError before touching any state
  // if a gradient is NaN or infinite.
  void step(std::span<Tensor<Real>> params, double lr);

  const OptimizerState<Real>& state() const { return state_; }
  const AdamHyper& hyper() const { return hyper_; }

 private:
  AdamHyper hyper_;
  OptimizerState<Real> state_;
};

template <typename Real>
void zero_gradients(std::span<Tensor<Real>> params);

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace nli
