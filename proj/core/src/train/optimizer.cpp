#include "nli/train/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "nli/errors.hpp"

namespace nli {

template <typename Real>
void clip_values(std::span<Real> values, Real bound) {
  for (Real& v : values) v = std::clamp(v, -bound, bound);
}

template <typename Real>
void clip_gradients(std::span<Tensor<Real>> params, Real bound) {
  for (auto& p : params) {
    if (p.has_grad()) clip_values(p.mutable_grad(), bound);
  }
}

template <typename Real>
void zero_gradients(std::span<Tensor<Real>> params) {
  for (auto& p : params) p.zero_grad();
}

template <typename Real>
Adam<Real>::Adam(std::span<const Tensor<Real>> params, AdamHyper hyper) : hyper_(hyper) {
  for (const auto& p : params) {
    state_.first_moment.emplace_back(p.size(), Real(0));
    state_.second_moment.emplace_back(p.size(), Real(0));
  }
}

template <typename Real>
void Adam<Real>::step(std::span<Tensor<Real>> params, double lr) {
  if (params.size() != state_.first_moment.size()) {
    throw ContractViolation("Adam::step: parameter list changed since construction");
  }
  if (!(lr >= 0)) throw ContractViolation("Adam::step: negative learning rate");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != state_.first_moment[i].size()) {
      throw ContractViolation("Adam::step: parameter " + std::to_string(i) + " changed shape");
    }
    for (Real g : params[i].grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter " + std::to_string(i) + " at step " +
                           std::to_string(state_.step + 1));
      }
    }
  }

  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const auto b1 = static_cast<Real>(hyper_.beta1);
  const auto b2 = static_cast<Real>(hyper_.beta2);
  const auto eps = static_cast<Real>(hyper_.eps);
  const auto correction1 = static_cast<Real>(1.0 - std::pow(hyper_.beta1, t));
  const auto correction2 = static_cast<Real>(1.0 - std::pow(hyper_.beta2, t));
  const auto rate = static_cast<Real>(lr);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state_.first_moment[i];
    auto& v = state_.second_moment[i];
    auto grad = params[i].grad();
    auto value = params[i].mutable_data();
    const bool has_grad = !grad.empty();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const Real g = has_grad ? grad[j] : Real(0);
      m[j] = b1 * m[j] + (Real(1) - b1) * g;
      v[j] = b2 * v[j] + (Real(1) - b2) * g * g;
      const Real m_hat = m[j] / correction1;
      const Real v_hat = v[j] / correction2;
      value[j] -= rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template void clip_values(std::span<float>, float);
template void clip_values(std::span<double>, double);
template void clip_gradients(std::span<Tensor<float>>, float);
template void clip_gradients(std::span<Tensor<double>>, double);
template void zero_gradients(std::span<Tensor<float>>);
template void zero_gradients(std::span<Tensor<double>>);
template class Adam<float>;
template class Adam<double>;

}  // namespace nli
