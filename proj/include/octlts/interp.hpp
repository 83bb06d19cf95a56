#pragma once

#include <array>

namespace octlts {

// 1D Lagrange stencil over `count` consecutive unit-spaced nodes starting at
// `first`, evaluated at `x` (same units).
template <int MaxPoints = 4>
struct LagrangeStencil {
  int first = 0;
  int count = 0;
  std::array<double, MaxPoints> weight{};
};

template <int MaxPoints = 4>
LagrangeStencil<MaxPoints> lagrange_stencil(int first, int count, double x) {
  LagrangeStencil<MaxPoints> s;
  s.first = first;
  s.count = count;
  for (int j = 0; j < count; ++j) {
    double w = 1.0;
    const double xj = first + j;
    for (int m = 0; m < count; ++m) {
      if (m == j) continue;
      const double xm = first + m;
      w *= (x - xm) / (xj - xm);
    }
    s.weight[j] = w;
  }
  return s;
}

// Stencil for the midpoint between coarse nodes `left` and `left+1` on a line of
// `available` coarse nodes, centered when possible and shifted at the ends.
template <int MaxPoints = 4>
LagrangeStencil<MaxPoints> midpoint_stencil(int left, int available, int order_points) {
  const int count = order_points < available ? order_points : available;
  int first = left - (count / 2 - 1);
  if (first < 0) first = 0;
  if (first + count > available) first = available - count;
  return lagrange_stencil<MaxPoints>(first, count, left + 0.5);
}

}  // namespace octlts
