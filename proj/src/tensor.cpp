#include "tripod/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "broadcast.hpp"
#include "tripod/error.hpp"

namespace tripod {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (numel(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + to_string(shape_));
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape_));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (numel(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) {
    throw ShapeError("+= shape mismatch " + to_string(shape_) + " vs " + to_string(other.shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("shapes " + to_string(a) + " and " + to_string(b) + " do not broadcast");
    }
    out[i] = da == 1 ? db : da;
  }
  return out;
}

Tensor reduce_to_shape(const Tensor& t, const Shape& target) {
  if (t.shape() == target) return t;
  if (broadcast_shapes(target, t.shape()) != t.shape()) {
    throw ShapeError("cannot reduce " + to_string(t.shape()) + " to " + to_string(target));
  }
  Tensor out(target, 0.0);
  const auto st = detail::broadcast_strides(target, t.shape());
  const std::vector<std::size_t> unit = detail::broadcast_strides(t.shape(), t.shape());
  auto src = t.data();
  auto dst = out.data();
  detail::for_each_broadcast(t.shape(), unit, st,
                             [&](std::size_t io, std::size_t, std::size_t it) { dst[it] += src[io]; });
  return out;
}

Tensor broadcast_tensor(const Tensor& t, const Shape& target) {
  if (t.shape() == target) return t;
  if (broadcast_shapes(t.shape(), target) != target) {
    throw ShapeError("cannot broadcast " + to_string(t.shape()) + " to " + to_string(target));
  }
  Tensor out(target);
  const auto st = detail::broadcast_strides(t.shape(), target);
  auto src = t.data();
  auto dst = out.data();
  detail::for_each_broadcast(target, st, st,
                             [&](std::size_t io, std::size_t it, std::size_t) { dst[io] = src[it]; });
  return out;
}

}  // namespace tripod
