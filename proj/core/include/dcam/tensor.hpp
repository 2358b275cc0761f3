#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dcam {

using Dims = std::vector<std::int64_t>;

std::int64_t element_count(const Dims& dims);
std::string dims_to_string(const Dims& dims);

/// Dense row-major array of doubles with an optional same-shaped gradient.
///
/// A Tensor is a shared handle: copying it aliases the same storage, which
/// is what the compute graph and the optimizer rely on. clone() makes an
/// independent copy. Gradients are accumulated additively by backprop and
/// are zeroed only by an explicit zero_grad() from the caller.
class Tensor {
 public:
  Tensor() = default;  // undefined handle
  explicit Tensor(Dims dims, bool requires_grad = false);
  Tensor(Dims dims, std::vector<double> values, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor full(Dims dims, double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Dims& dims() const;
  std::int64_t dim(int axis) const;
  int rank() const;
  std::int64_t size() const;

  std::span<double> values();
  std::span<const double> values() const;

  bool requires_grad() const;
  /// Throws StateError when the tensor does not carry a gradient.
  std::span<double> grad();
  std::span<const double> grad() const;
  void zero_grad();
  void add_to_grad(std::span<const double> delta);

  /// Value of a size-1 tensor.
  double item() const;
  double at(std::initializer_list<std::int64_t> index) const;
  void set(std::initializer_list<std::int64_t> index, double value);

  /// Deep copy. The copy gets a fresh zero gradient when requires_grad.
  Tensor clone() const;

  /// True when both handles alias the same storage.
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  Impl& checked() const;
};

}  // namespace dcam
