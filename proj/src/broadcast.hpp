#pragma once

#include <cstddef>
#include <vector>

#include "tripod/tensor.hpp"

namespace tripod::detail {

/// Element strides of `in` viewed with shape `out` (right-aligned, 0 on broadcast dims).
inline std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  const std::size_t offset = out.size() - in.size();
  for (std::size_t d = in.size(); d-- > 0;) {
    strides[d + offset] = in[d] == 1 ? 0 : stride;
    stride *= in[d];
  }
  return strides;
}

/// Calls f(out_index, a_index, b_index) over every element of `out` in row-major order.
template <class F>
void for_each_broadcast(const Shape& out, const std::vector<std::size_t>& sa,
                        const std::vector<std::size_t>& sb, F&& f) {
  const std::size_t n = numel(out);
  if (out.empty()) {
    f(std::size_t{0}, std::size_t{0}, std::size_t{0});
    return;
  }
  if (n == 0) return;
  const std::size_t rank = out.size();
  const std::size_t inner = out.back();
  const std::size_t ia = sa.back();
  const std::size_t ib = sb.back();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t base_a = 0;
  std::size_t base_b = 0;
  for (std::size_t io = 0; io < n; io += inner) {
    for (std::size_t k = 0; k < inner; ++k) f(io + k, base_a + k * ia, base_b + k * ib);
    for (std::size_t d = rank - 1; d-- > 0;) {
      ++idx[d];
      base_a += sa[d];
      base_b += sb[d];
      if (idx[d] < out[d]) break;
      base_a -= sa[d] * out[d];
      base_b -= sb[d] * out[d];
      idx[d] = 0;
    }
  }
}

/// Splits `shape` around `axis` into (outer, length, inner) extents.
struct AxisView {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

inline AxisView axis_view(const Shape& shape, std::size_t axis) {
  AxisView v;
  for (std::size_t d = 0; d < axis; ++d) v.outer *= shape[d];
  v.length = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) v.inner *= shape[d];
  return v;
}

}  // namespace tripod::detail
