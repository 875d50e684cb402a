#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace clouddet::loess {

/// Local regression of y (sampled at x = 0..n-1) evaluated at an arbitrary
/// abscissa x0, using points [left, right] and tricube radius h. Weights are
/// multiplied by robustness weights when `robustness` is non-empty.
/// Returns nullopt when every weight vanishes.
std::optional<double> fit_at(std::span<const double> y, std::span<const double> robustness,
                             double x0, std::size_t left, std::size_t right, int degree,
                             double h);

/// Evaluates the width-point loess at x0, choosing the neighbourhood the way
/// Cleveland's STL does (widths beyond the data length widen the radius).
std::optional<double> smooth_at(std::span<const double> y, std::span<const double> robustness,
                                double x0, std::size_t width, int degree);

/// Tricube locally weighted regression of degree 0 or 1 at every sample.
///
/// width must be odd and >= 3. When width exceeds twice the length the fit
/// becomes a single global (robustness-weighted) polynomial of the same degree.
std::vector<double> loess_smooth(std::span<const double> values, std::size_t width, int degree,
                                 std::optional<std::span<const double>> robustness_weights = {});

/// Bisquare robustness weights B(|r| / (6 * median|r|)), with Cleveland's
/// 0.001 / 0.999 cutoffs. A zero median gives weight 1 to exact fits only.
std::vector<double> bisquare_weights(std::span<const double> residual);

/// Degree-1 loess followed by `passes` bisquare reweighting passes.
std::vector<double> robust_loess(std::span<const double> values, std::size_t width, int passes);

}  // namespace clouddet::loess
