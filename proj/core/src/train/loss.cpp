#include "nli/train/loss.hpp"

#include <algorithm>
#include <cmath>

#include "nli/errors.hpp"

namespace nli {

double nll_loss(const ClassProbabilities& probs, NliLabel gold) {
  return -std::log(std::max(probs[gold], kProbabilityFloor));
}

template <typename Real>
Tensor<Real> nll_loss(const Tensor<Real>& probs, std::span<const NliLabel> gold, std::size_t* clamped) {
  if (probs.rank() != 2 || probs.dim(0) != gold.size()) {
    throw DimensionError("nll_loss: probabilities " + shape_string(probs.shape()) + " vs " +
                         std::to_string(gold.size()) + " labels");
  }
  const std::size_t rows = probs.dim(0), classes = probs.dim(1);
  const auto floor = static_cast<Real>(kProbabilityFloor);
  std::vector<std::size_t> index(rows);
  std::vector<bool> at_floor(rows);
  Real total = 0;
  std::size_t n_clamped = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto c = static_cast<std::size_t>(gold[r]);
    if (c >= classes) throw ContractViolation("nll_loss: label outside class range");
    index[r] = r * classes + c;
    const Real p = probs[index[r]];
    at_floor[r] = p < floor;
    n_clamped += at_floor[r];
    total -= std::log(std::max(p, floor));
  }
  if (clamped != nullptr) *clamped = n_clamped;
  Tensor<Real> out = Tensor<Real>::scalar(total / static_cast<Real>(rows));

  GradTape<Real>* tape = active_tape<Real>();
  if (tape != nullptr && probs.requires_grad()) {
    out.set_requires_grad(true);
    tape->record([P = probs.storage(), L = out.storage(), index = std::move(index), at_floor = std::move(at_floor),
                   rows] {
      if (L->grad.empty()) return;
      auto& g = P->ensure_grad();
      const Real scale = L->grad[0] / static_cast<Real>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!at_floor[r]) g[index[r]] -= scale / P->data[index[r]];
      }
    });
  }
  return out;
}

template Tensor<float> nll_loss(const Tensor<float>&, std::span<const NliLabel>, std::size_t*);
template Tensor<double> nll_loss(const Tensor<double>&, std::span<const NliLabel>, std::size_t*);

}  // namespace nli
