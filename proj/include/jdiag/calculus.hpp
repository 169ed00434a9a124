#pragma once

#include <cstdint>
#include <vector>

#include "jdiag/matcore.hpp"

namespace jdiag {

// Differentials of h_A(Q) = Q^{-1} A Q and of the off-diagonality functional.
// All inner products are Re<.,.>, i.e. complex matrices are treated as a real
// Hilbert space of dimension 2n^2, and directional derivatives are taken along
// real parameters.

/// Largest order accepted by the arbitrary-order routines; j! and the binomial
/// coefficients are exact 64-bit integers up to here.
inline constexpr int kMaxDifferentialOrder = 20;

std::uint64_t binomial(int n, int k);
std::uint64_t factorial(int n);

/// d^j h_A|_Q(Z, ..., Z) = (-1)^j j! [W, W^{j-1} h_A(Q)] with W = Q^{-1} Z.
template <typename Scalar>
Mat<Scalar> differential_h(const Mat<Scalar>& a, const TransformPoint<Scalar>& q,
                           const Mat<Scalar>& z, int j);

/// d^j f_A|_Q(Z, ..., Z). Order 0 is f itself.
template <typename Scalar>
real_t<Scalar> jth_differential_f(const MatrixCollection<Scalar>& collection,
                                  const TransformPoint<Scalar>& q, const Mat<Scalar>& z, int j);

/// df_A|_Q(Z) = sum_k <[D_k, W], J o D_k>.
template <typename Scalar>
real_t<Scalar> first_differential_f(const MatrixCollection<Scalar>& collection,
                                    const TransformPoint<Scalar>& q, const Mat<Scalar>& z);

/// d^2 f_A|_Q(Z) = sum_k ||J o [D_k, W]||^2 + 2 <[W, W D_k], J o D_k>.
template <typename Scalar>
real_t<Scalar> second_differential_f(const MatrixCollection<Scalar>& collection,
                                     const TransformPoint<Scalar>& q, const Mat<Scalar>& z);

/// sum_k [D_k^*, J o D_k], the gradient at the identity for the transformed
/// collection D.
template <typename Scalar>
Mat<Scalar> gradient_at_identity(const std::vector<Mat<Scalar>>& d);

/// Gradient of f with respect to Re<.,.>: sum_k Q^{-*} [D_k^*, J o D_k].
/// Each term goes through its own adjoint solve.
template <typename Scalar>
Mat<Scalar> gradient(const MatrixCollection<Scalar>& collection, const TransformPoint<Scalar>& q);

/// Q^{-*} grad f_D|_I with D_k = Q^{-1} A_k Q: one adjoint solve for the
/// accumulated sum. Equal to gradient() in exact arithmetic.
template <typename Scalar>
Mat<Scalar> gradient_via_base_change(const MatrixCollection<Scalar>& collection,
                                     const TransformPoint<Scalar>& q);

/// Matrix-free Hessian at a fixed Q. Caches D_k and J o D_k so that repeated
/// applications cost one solve pair each.
///
///   H(Z) = sum_k Q^{-*}( [D_k^*, J o [D_k, W]] + [W^*, J o D_k] D_k^*
///                        + [J o D_k, (W D_k)^*] ),   W = Q^{-1} Z
///
/// H is only real-linear when the field is complex.
template <typename Scalar>
class HessianOperator {
 public:
  HessianOperator(const MatrixCollection<Scalar>& collection, const TransformPoint<Scalar>& q);

  Mat<Scalar> apply(const Mat<Scalar>& z) const;
  Eigen::Index n() const { return q_.n(); }
  std::size_t applications() const { return applications_; }

 private:
  TransformPoint<Scalar> q_;
  std::vector<Mat<Scalar>> d_;
  std::vector<Mat<Scalar>> d_adj_;
  std::vector<Mat<Scalar>> jd_;
  mutable std::size_t applications_ = 0;
};

template <typename Scalar>
Mat<Scalar> hessian_apply(const MatrixCollection<Scalar>& collection,
                          const TransformPoint<Scalar>& q, const Mat<Scalar>& z);

template <typename Scalar>
struct DerivativeReport {
  double f_value = 0;
  double df_z = 0;
  double d2f_z = 0;
  Mat<Scalar> gradient;
  Mat<Scalar> hessian_z;
};

template <typename Scalar>
DerivativeReport<Scalar> derivative_report(const MatrixCollection<Scalar>& collection,
                                           const TransformPoint<Scalar>& q, const Mat<Scalar>& z);

}  // namespace jdiag
