#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "clouddet/core.hpp"
#include "clouddet/periodicity.hpp"

namespace clouddet::stl {

class InsufficientCycles : public Error {
 public:
  using Error::Error;
};

/// Parameters of the STL inner/outer loops.
struct StlParams {
  int n_p = 2;   // observations per cycle
  int n_i = 1;   // inner passes
  int n_o = 5;   // robustness passes
  int n_l = 3;   // low-pass loess width (odd)
  int n_s = 15;  // cycle-subseries loess width
  int n_t = 5;   // trend loess width (odd)

  /// Throws InvalidArgument when an invariant is broken.
  void validate() const;
};

struct StlComponents {
  std::vector<double> seasonal;
  std::vector<double> trend;
  std::vector<double> residual;
};

/// n_p equals the detected period in samples at the working granularity;
/// the remaining widths follow from it. Returns nullopt for an absent period.
std::optional<StlParams> default_stl_params(const periodicity::PeriodEstimate& period,
                                            Granularity granularity);

/// Additive STL decomposition. The residual is the difference
/// `data[i] - (seasonal[i] + trend[i])`, corrected in the last bit where
/// needed so that `seasonal[i] + trend[i] + residual[i] == data[i]` holds
/// bit-exactly when evaluated left to right.
StlComponents stl_decompose(std::span<const double> data, const StlParams& params);
inline StlComponents stl_decompose(const HistoryWindow& w, const StlParams& params) {
  return stl_decompose(w.data, params);
}

}  // namespace clouddet::stl
