#include "dcam/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "dcam/error.hpp"

namespace dcam {

std::int64_t element_count(const Dims& dims) {
  std::int64_t n = 1;
  for (std::int64_t d : dims) {
    if (d < 0) throw ShapeError("negative dimension in shape " + dims_to_string(dims));
    n *= d;
  }
  return n;
}

std::string dims_to_string(const Dims& dims) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out << ",";
    out << dims[i];
  }
  out << "]";
  return out.str();
}

struct Tensor::Impl {
  Dims dims;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;  // sized like values iff requires_grad
};

Tensor::Tensor(Dims dims, bool requires_grad) {
  const std::int64_t n = element_count(dims);
  impl_ = std::make_shared<Impl>();
  impl_->dims = std::move(dims);
  impl_->values.assign(static_cast<std::size_t>(n), 0.0);
  impl_->requires_grad = requires_grad;
  if (requires_grad) impl_->grad.assign(static_cast<std::size_t>(n), 0.0);
}

Tensor::Tensor(Dims dims, std::vector<double> values, bool requires_grad) {
  const std::int64_t n = element_count(dims);
  if (n != static_cast<std::int64_t>(values.size())) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + dims_to_string(dims));
  }
  impl_ = std::make_shared<Impl>();
  impl_->dims = std::move(dims);
  impl_->values = std::move(values);
  impl_->requires_grad = requires_grad;
  if (requires_grad) impl_->grad.assign(static_cast<std::size_t>(n), 0.0);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Dims{1}, std::vector<double>{value}, requires_grad);
}

Tensor Tensor::full(Dims dims, double value, bool requires_grad) {
  const std::int64_t n = element_count(dims);
  return Tensor(std::move(dims), std::vector<double>(static_cast<std::size_t>(n), value),
                requires_grad);
}

Tensor::Impl& Tensor::checked() const {
  if (!impl_) throw StateError("use of an undefined tensor handle");
  return *impl_;
}

const Dims& Tensor::dims() const { return checked().dims; }

std::int64_t Tensor::dim(int axis) const {
  const Dims& d = dims();
  if (axis < 0 || axis >= static_cast<int>(d.size())) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     dims_to_string(d));
  }
  return d[static_cast<std::size_t>(axis)];
}

int Tensor::rank() const { return static_cast<int>(dims().size()); }

std::int64_t Tensor::size() const { return static_cast<std::int64_t>(checked().values.size()); }

std::span<double> Tensor::values() { return checked().values; }
std::span<const double> Tensor::values() const { return checked().values; }

bool Tensor::requires_grad() const { return checked().requires_grad; }

std::span<double> Tensor::grad() {
  Impl& im = checked();
  if (!im.requires_grad) throw StateError("tensor does not require a gradient");
  return im.grad;
}

std::span<const double> Tensor::grad() const {
  const Impl& im = checked();
  if (!im.requires_grad) throw StateError("tensor does not require a gradient");
  return im.grad;
}

void Tensor::zero_grad() {
  Impl& im = checked();
  if (im.requires_grad) std::fill(im.grad.begin(), im.grad.end(), 0.0);
}

void Tensor::add_to_grad(std::span<const double> delta) {
  Impl& im = checked();
  if (!im.requires_grad) return;
  if (delta.size() != im.grad.size()) {
    throw ShapeError("gradient delta size " + std::to_string(delta.size()) +
                     " does not match tensor size " + std::to_string(im.grad.size()));
  }
  for (std::size_t i = 0; i < delta.size(); ++i) im.grad[i] += delta[i];
}

double Tensor::item() const {
  const Impl& im = checked();
  if (im.values.size() != 1) {
    throw UsageError("item() requires a size-1 tensor, got shape " + dims_to_string(im.dims));
  }
  return im.values[0];
}

static std::size_t flat_index(const Dims& dims, std::initializer_list<std::int64_t> index) {
  if (index.size() != dims.size()) {
    throw ShapeError("index rank " + std::to_string(index.size()) + " does not match shape " +
                     dims_to_string(dims));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::int64_t i : index) {
    const std::int64_t extent = dims[axis];
    if (i < 0 || i >= extent) {
      throw ShapeError("index " + std::to_string(i) + " out of bounds for axis " +
                       std::to_string(axis) + " of shape " + dims_to_string(dims));
    }
    flat = flat * static_cast<std::size_t>(extent) + static_cast<std::size_t>(i);
    ++axis;
  }
  return flat;
}

double Tensor::at(std::initializer_list<std::int64_t> index) const {
  const Impl& im = checked();
  return im.values[flat_index(im.dims, index)];
}

void Tensor::set(std::initializer_list<std::int64_t> index, double value) {
  Impl& im = checked();
  im.values[flat_index(im.dims, index)] = value;
}

Tensor Tensor::clone() const {
  const Impl& im = checked();
  return Tensor(im.dims, im.values, im.requires_grad);
}

}  // namespace dcam
