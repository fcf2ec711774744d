#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nli {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

template <typename Real>
struct TensorStorage {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty until the first adjoint arrives
  bool requires_grad = false;

  std::vector<Real>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), Real(0));
    return grad;
  }
};

}  // namespace detail

// Dense row-major array participating in reverse-mode differentiation.
//
// A Tensor is a handle: copies share the same buffer and gradient. Use
// clone() for an independent deep copy.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor();
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<Real> data, bool requires_grad = false);

  static Tensor scalar(Real value, bool requires_grad = false);
  static Tensor filled(Shape shape, Real value, bool requires_grad = false);

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return impl_->data.size(); }

  std::span<const Real> data() const { return impl_->data; }
  std::span<Real> mutable_data() { return impl_->data; }
  Real item() const;
  Real operator[](std::size_t i) const { return impl_->data[i]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const Real> grad() const { return impl_->grad; }
  std::span<Real> mutable_grad() { return impl_->ensure_grad(); }
  void zero_grad() { impl_->grad.clear(); }

  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  // Internal access used by differentiable operations.
  const std::shared_ptr<detail::TensorStorage<Real>>& storage() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorStorage<Real>> impl_;
};

// Ordered record of adjoint closures. Each differentiable op executed while a
// tape is active (see TapeScope) appends one entry; backward() replays them in
// reverse, exactly once each, and then clears the tape.
template <typename Real>
class GradTape {
 public:
  using Adjoint = std::function<void()>;

  void record(Adjoint adjoint) { entries_.push_back(std::move(adjoint)); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and propagates adjoints. Throws
  // ContractViolation when `loss` holds more than one element.
  void backward(const Tensor<Real>& loss);

 private:
  std::vector<Adjoint> entries_;
};

template <typename Real>
GradTape<Real>* active_tape();

// Makes `tape` the active tape on this thread for the lifetime of the scope.
template <typename Real>
class TapeScope {
 public:
  explicit TapeScope(GradTape<Real>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradTape<Real>* previous_;
};

// Disables recording on this thread for the lifetime of the scope.
template <typename Real>
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  GradTape<Real>* previous_;
};

// Convenience: backward on the active tape.
template <typename Real>
void backward(const Tensor<Real>& loss);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class GradTape<float>;
extern template class GradTape<double>;
extern template class TapeScope<float>;
extern template class TapeScope<double>;
extern template class NoGradScope<float>;
extern template class NoGradScope<double>;

}  // namespace nli
