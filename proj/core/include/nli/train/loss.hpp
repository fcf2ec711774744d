#pragma once

#include <span>

#include "nli/autograd/tensor.hpp"
#include "nli/model/transformer.hpp"
#include "nli/text/labels.hpp"

namespace nli {

// Probabilities below this are clamped before the log so the loss stays finite.
inline constexpr double kProbabilityFloor = 1e-12;

// -log p(gold) for one prediction, clamped at the floor.
double nll_loss(const ClassProbabilities& probs, NliLabel gold);

// Mean over rows of -log p[row, gold[row]] for a [batch x classes]
// probability tensor; differentiable. `clamped`, when given, receives the
// number of rows whose gold probability hit the floor.
template <typename Real>
Tensor<Real> nll_loss(const Tensor<Real>& probs, std::span<const NliLabel> gold, std::size_t* clamped = nullptr);

}  // namespace nli
