#include "nli/autograd/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "nli/errors.hpp"

namespace nli {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename Real>
Tensor<Real>::Tensor() : Tensor(Shape{}, std::vector<Real>{Real(0)}) {}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, bool requires_grad)
    : impl_(std::make_shared<detail::TensorStorage<Real>>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  impl_->data.assign(shape_size(shape), Real(0));
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> data, bool requires_grad)
    : impl_(std::make_shared<detail::TensorStorage<Real>>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (shape_size(shape) != data.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not match buffer of " +
                         std::to_string(data.size()) + " elements");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

template <typename Real>
Tensor<Real> Tensor<Real>::scalar(Real value, bool requires_grad) {
  return Tensor(Shape{}, {value}, requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::filled(Shape shape, Real value, bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

template <typename Real>
std::size_t Tensor<Real>::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape()));
  }
  return impl_->shape[axis];
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (size() != 1) throw ContractViolation("item() on tensor of shape " + shape_string(shape()));
  return impl_->data[0];
}

template <typename Real>
Tensor<Real> Tensor<Real>::clone() const {
  Tensor copy(impl_->shape, impl_->data, impl_->requires_grad);
  copy.impl_->grad = impl_->grad;
  return copy;
}

namespace {

template <typename Real>
GradTape<Real>*& tape_slot() {
  thread_local GradTape<Real>* tape = nullptr;
  return tape;
}

}  // namespace

template <typename Real>
GradTape<Real>* active_tape() {
  return tape_slot<Real>();
}

template <typename Real>
TapeScope<Real>::TapeScope(GradTape<Real>& tape) : previous_(tape_slot<Real>()) {
  tape_slot<Real>() = &tape;
}

template <typename Real>
TapeScope<Real>::~TapeScope() {
  tape_slot<Real>() = previous_;
}

template <typename Real>
NoGradScope<Real>::NoGradScope() : previous_(tape_slot<Real>()) {
  tape_slot<Real>() = nullptr;
}

template <typename Real>
NoGradScope<Real>::~NoGradScope() {
  tape_slot<Real>() = previous_;
}

template <typename Real>
void GradTape<Real>::backward(const Tensor<Real>& loss) {
  if (loss.size() != 1) {
    throw ContractViolation("backward() requires a scalar loss, got shape " + shape_string(loss.shape()));
  }
  loss.storage()->ensure_grad()[0] += Real(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
}

template <typename Real>
void backward(const Tensor<Real>& loss) {
  GradTape<Real>* tape = active_tape<Real>();
  if (tape == nullptr) throw ContractViolation("backward() called without an active tape");
  tape->backward(loss);
}

template class Tensor<float>;
template class Tensor<double>;
template class GradTape<float>;
template class GradTape<double>;
template class TapeScope<float>;
template class TapeScope<double>;
template class NoGradScope<float>;
template class NoGradScope<double>;
template GradTape<float>* active_tape<float>();
template GradTape<double>* active_tape<double>();
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace nli
