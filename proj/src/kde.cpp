#include "clouddet/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "clouddet/core.hpp"

namespace clouddet::analytics {

namespace {

double axis_std(std::span<const Point2> pts, std::size_t axis) {
  double mean = 0.0;
  for (const auto& p : pts) mean += p[axis];
  mean /= static_cast<double>(pts.size());
  double ss = 0.0;
  for (const auto& p : pts) ss += (p[axis] - mean) * (p[axis] - mean);
  return std::sqrt(ss / static_cast<double>(pts.size()));
}

std::pair<double, double> axis_range(std::span<const Point2> pts, std::size_t axis) {
  const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [axis](const Point2& a, const Point2& b) {
    return a[axis] < b[axis];
  });
  return {(*lo)[axis], (*hi)[axis]};
}

}  // namespace

Bandwidth scott_bandwidth(std::span<const Point2> points) {
  if (points.empty()) throw InvalidArgument("KDE needs at least one point");
  const double factor = std::pow(static_cast<double>(points.size()), -1.0 / 6.0);
  std::array<double, 2> h{};
  for (std::size_t axis = 0; axis < 2; ++axis) {
    const auto [lo, hi] = axis_range(points, axis);
    const double floor = 1e-3 * std::max(hi - lo, 1.0);
    h[axis] = std::max(factor * axis_std(points, axis), floor);
  }
  return {h[0], h[1]};
}

double density_at(std::span<const Point2> points, const Bandwidth& h, Point2 x) {
  if (points.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : points) {
    const double ux = (x[0] - p[0]) / h.hx;
    const double uy = (x[1] - p[1]) / h.hy;
    sum += std::exp(-0.5 * (ux * ux + uy * uy));
  }
  return sum / (2.0 * std::numbers::pi * static_cast<double>(points.size()) * h.hx * h.hy);
}

DensityField kde_density(std::span<const Point2> points, std::size_t resolution,
                         std::optional<double> bandwidth, double margin) {
  if (points.empty()) throw InvalidArgument("KDE needs at least one point");
  if (resolution < 2) throw InvalidArgument("KDE grid resolution must be >= 2");
  if (bandwidth && !(*bandwidth > 0.0)) throw InvalidArgument("KDE bandwidth must be positive");
  if (!(margin >= 0.0)) throw InvalidArgument("KDE margin must be >= 0");

  DensityField f;
  f.bandwidth = bandwidth ? Bandwidth{*bandwidth, *bandwidth} : scott_bandwidth(points);
  f.nx = f.ny = resolution;
  const auto [xlo, xhi] = axis_range(points, 0);
  const auto [ylo, yhi] = axis_range(points, 1);
  const double left = xlo - margin * f.bandwidth.hx;
  const double bottom = ylo - margin * f.bandwidth.hy;
  f.dx = (xhi + margin * f.bandwidth.hx - left) / static_cast<double>(resolution);
  f.dy = (yhi + margin * f.bandwidth.hy - bottom) / static_cast<double>(resolution);
  f.x0 = left + 0.5 * f.dx;
  f.y0 = bottom + 0.5 * f.dy;
  f.grid.resize(resolution * resolution);
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const Point2 x{f.x0 + static_cast<double>(ix) * f.dx, f.y0 + static_cast<double>(iy) * f.dy};
      f.grid[iy * resolution + ix] = density_at(points, f.bandwidth, x);
    }
  }
  return f;
}

}  // namespace clouddet::analytics
