#pragma once

#include <cstdint>
#include <vector>

#include "jdiag/matcore.hpp"

namespace jdiag::cli {

inline constexpr int kMaxCertifiedOrder = 4;

struct OrderCheck {
  int order = 0;
  // Finite-difference agreement (orders 1 and 2 only; negative when unused).
  double fd_error = -1;
  double fd_tolerance = 0;
  // Agreement between the closed forms of the same quantity.
  double consistency_error = 0;
  double consistency_tolerance = 0;
  // Worst log-log slope of the Taylor remainder; +inf when every remainder
  // is exactly zero.
  double min_slope = 0;
  double required_slope = 0;
  bool pass = false;
};

struct CertifyReport {
  std::vector<OrderCheck> orders;
  int trials = 0;
  int resampled = 0;  // sampled Q rejected for conditioning and redrawn
  bool pass = false;
};

/// Trial 0 is the anchor Q = I; the rest draw Gaussian Q (cond <= 1e4) and
/// Gaussian Z scaled so that ||Q^{-1} Z|| = 1e-3.
template <typename Scalar>
CertifyReport certify_derivatives(const MatrixCollection<Scalar>& collection, int max_order,
                                  int trials, std::uint64_t seed);

}  // namespace jdiag::cli
