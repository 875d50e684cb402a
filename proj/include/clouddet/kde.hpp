#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace clouddet::analytics {

using Point2 = std::array<double, 2>;

struct Bandwidth {
  double hx = 1.0;
  double hy = 1.0;
};

/// Scott's rule n^(-1/6) * sigma per axis, floored at 1e-3 * max(extent, 1).
Bandwidth scott_bandwidth(std::span<const Point2> points);

/// Gaussian product-kernel density (1 / (n hx hy)) sum K((x - xi) / h) with
/// K(u) = exp(-|u|^2 / 2) / (2 pi).
double density_at(std::span<const Point2> points, const Bandwidth& h, Point2 x);

struct DensityField {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x0 = 0.0;  // centre of cell (0, 0)
  double y0 = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  Bandwidth bandwidth;
  std::vector<double> grid;  // row-major, grid[iy * nx + ix]

  double at(std::size_t ix, std::size_t iy) const { return grid[iy * nx + ix]; }
  double cell_area() const { return dx * dy; }
};

/// Density on a resolution x resolution grid of cell centres covering the
/// points plus `margin` bandwidths on every side. A scalar bandwidth, when
/// given, is used on both axes.
DensityField kde_density(std::span<const Point2> points, std::size_t resolution,
                         std::optional<double> bandwidth = std::nullopt, double margin = 3.0);

}  // namespace clouddet::analytics
