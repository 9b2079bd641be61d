// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_QUADRATURE_HPP
#define EGMD_QUADRATURE_HPP

#include <array>
#include <cmath>

#include "egmd/geometry.hpp"

namespace egmd
{

// 3-point Gauss-Legendre on [0,1]; exact through degree 5.
struct Gauss3
{
  static constexpr int n = 3;
  static const std::array<double, 3> &points()
  {
    static const std::array<double, 3> p = {0.5 - 0.5 * std::sqrt(0.6), 0.5,
                                            0.5 + 0.5 * std::sqrt(0.6)};
    return p;
  }
  static constexpr std::array<double, 3> weights() { return {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}; }
};

// Tensor 3x3 Gauss rule on the reference square [0,1]^2 (weights sum to 1).
struct CellQuadrature
{
  static constexpr int n = 9;
  std::array<Point2, 9> points;
  std::array<double, 9> weights;

  static const CellQuadrature &get()
  {
    static const CellQuadrature q = []
    {
      CellQuadrature r;
      const auto &p = Gauss3::points();
      const auto w = Gauss3::weights();
      for (int j = 0; j < 3; ++j)
      {
        for (int i = 0; i < 3; ++i)
        {
          r.points[static_cast<std::size_t>(3 * j + i)] = {p[static_cast<std::size_t>(i)],
                                                           p[static_cast<std::size_t>(j)]};
          r.weights[static_cast<std::size_t>(3 * j + i)] =
              w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)];
        }
      }
      return r;
    }();
    return q;
  }
};

}  // namespace egmd

#endif  // EGMD_QUADRATURE_HPP
