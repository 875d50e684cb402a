#include "clouddet/stl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "clouddet/loess.hpp"

namespace clouddet::stl {

namespace {

void moving_average(std::span<const double> in, std::size_t len, std::vector<double>& out) {
  out.assign(in.size() - len + 1, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < len; ++i) sum += in[i];
  const auto d = static_cast<double>(len);
  out[0] = sum / d;
  for (std::size_t i = 1; i < out.size(); ++i) {
    sum += in[i + len - 1] - in[i - 1];
    out[i] = sum / d;
  }
}

/// Smooths each cycle-subseries and extends it by one cycle at both ends.
/// Output length is n + 2 * n_p.
std::vector<double> cycle_subseries(std::span<const double> y, std::span<const double> rw,
                                    std::size_t np, std::size_t ns) {
  const std::size_t n = y.size();
  std::vector<double> out(n + 2 * np, 0.0);
  std::vector<double> sub;
  std::vector<double> sub_rw;
  for (std::size_t j = 0; j < np; ++j) {
    sub.clear();
    sub_rw.clear();
    for (std::size_t i = j; i < n; i += np) {
      sub.push_back(y[i]);
      sub_rw.push_back(rw[i]);
    }
    const std::size_t m = sub.size();
    if (m == 0) continue;

    if (ns > m) {
      // Too few cycles for the requested width: robustness-weighted mean.
      double sw = 0.0;
      double sy = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        sw += sub_rw[i];
        sy += sub_rw[i] * sub[i];
      }
      double mean = 0.0;
      if (sw > 0.0) {
        mean = sy / sw;
      } else {
        for (double v : sub) mean += v;
        mean /= static_cast<double>(m);
      }
      for (std::size_t pos = 0; pos < m + 2; ++pos) out[pos * np + j] = mean;
      continue;
    }

    for (std::size_t pos = 0; pos < m + 2; ++pos) {
      const double x0 = static_cast<double>(pos) - 1.0;
      auto fit = loess::smooth_at(sub, sub_rw, x0, ns, 1);
      if (!fit) fit = loess::smooth_at(sub, {}, x0, ns, 1);
      double value = 0.0;
      if (fit) {
        value = *fit;
      } else if (pos >= 1 && pos <= m) {
        value = sub[pos - 1];
      }
      out[pos * np + j] = value;
    }
  }
  return out;
}

bool settle(double d, double base, double& r) {
  r = d - base;
  for (int step = 0; step < 4; ++step) {
    const double e = d - (base + r);
    if (e == 0.0) return true;
    r += e;
  }
  return base + r == d;
}

/// Residual chosen so that `(seasonal + trend) + residual` rounds back to
/// `d`. When no residual can, seasonal or trend moves by a few ulps. Neither
/// helps once |residual| is far above |d|: the sum then cancels exactly onto
/// a grid coarser than d's last bit.
double closing_residual(double d, double& seasonal, double& trend) {
  double r = 0.0;
  if (settle(d, seasonal + trend, r)) return r;
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (double* moved : {&seasonal, &trend}) {
    const double other = moved == &seasonal ? trend : seasonal;
    double up = *moved;
    double down = *moved;
    for (int step = 0; step < 8; ++step) {
      up = std::nextafter(up, inf);
      if (settle(d, up + other, r)) {
        *moved = up;
        return r;
      }
      down = std::nextafter(down, -inf);
      if (settle(d, down + other, r)) {
        *moved = down;
        return r;
      }
    }
  }
  settle(d, seasonal + trend, r);
  return r;
}

}  // namespace

void StlParams::validate() const {
  if (n_p < 2) throw InvalidArgument("STL n_p must be >= 2");
  if (n_i < 1) throw InvalidArgument("STL n_i must be >= 1");
  if (n_o < 0) throw InvalidArgument("STL n_o must be >= 0");
  if (n_l < 3 || n_l % 2 == 0) throw InvalidArgument("STL n_l must be odd and >= 3");
  if (n_t < 3 || n_t % 2 == 0) throw InvalidArgument("STL n_t must be odd and >= 3");
  if (n_s < 3) throw InvalidArgument("STL n_s must be >= 3");
}

std::optional<StlParams> default_stl_params(const periodicity::PeriodEstimate& period,
                                            Granularity /*granularity*/) {
  if (!period.period) return std::nullopt;
  StlParams p;
  p.n_p = std::max(2, static_cast<int>(std::lround(*period.period)));
  p.n_i = 1;
  p.n_o = 5;
  p.n_s = 15;
  p.n_t = std::max(3, ceil_odd(1.67 * p.n_p));
  p.n_l = std::max(3, ceil_odd(static_cast<double>(p.n_p)));
  return p;
}

StlComponents stl_decompose(std::span<const double> data, const StlParams& params) {
  params.validate();
  const std::size_t n = data.size();
  const auto np = static_cast<std::size_t>(params.n_p);
  if (n < 2 * np) {
    throw InsufficientCycles("STL needs at least two cycles: length " + std::to_string(n) +
                             " < 2 * " + std::to_string(np));
  }
  const std::size_t ns = static_cast<std::size_t>(params.n_s | 1);
  const auto nl = static_cast<std::size_t>(params.n_l);
  const auto nt = static_cast<std::size_t>(params.n_t);

  StlComponents out;
  out.seasonal.assign(n, 0.0);
  out.trend.assign(n, 0.0);
  out.residual.assign(n, 0.0);
  std::vector<double> rw(n, 1.0);
  std::vector<double> work(n);
  std::vector<double> ma1;
  std::vector<double> ma2;
  std::vector<double> ma3;

  for (int outer = 0; outer <= params.n_o; ++outer) {
    for (int inner = 0; inner < params.n_i; ++inner) {
      for (std::size_t i = 0; i < n; ++i) work[i] = data[i] - out.trend[i];
      const auto cycle = cycle_subseries(work, rw, np, ns);

      moving_average(cycle, np, ma1);
      moving_average(ma1, np, ma2);
      moving_average(ma2, 3, ma3);
      const auto low_pass = loess::loess_smooth(ma3, nl, 1);

      for (std::size_t i = 0; i < n; ++i) out.seasonal[i] = cycle[np + i] - low_pass[i];
      for (std::size_t i = 0; i < n; ++i) work[i] = data[i] - out.seasonal[i];
      out.trend = loess::loess_smooth(work, nt, 1, std::span<const double>(rw));
    }
    if (outer == params.n_o) break;
    for (std::size_t i = 0; i < n; ++i) {
      out.residual[i] = data[i] - out.seasonal[i] - out.trend[i];
    }
    rw = loess::bisquare_weights(out.residual);
  }

  for (std::size_t i = 0; i < n; ++i) {
    out.residual[i] = closing_residual(data[i], out.seasonal[i], out.trend[i]);
  }
  return out;
}

}  // namespace clouddet::stl
