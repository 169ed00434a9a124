#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/LU>

#include "jdiag/types.hpp"

namespace jdiag {

/// The tuple (A_1, ..., A_K) of square matrices sharing one side length.
template <typename Scalar>
class MatrixCollection {
 public:
  using scalar_type = Scalar;
  using matrix_type = Mat<Scalar>;

  MatrixCollection() = default;
  explicit MatrixCollection(std::vector<matrix_type> mats);

  Eigen::Index n() const { return n_; }
  std::size_t k() const { return mats_.size(); }
  static constexpr Field field() { return field_of<Scalar>(); }

  const matrix_type& operator[](std::size_t i) const { return mats_[i]; }
  const std::vector<matrix_type>& matrices() const { return mats_; }

  auto begin() const { return mats_.begin(); }
  auto end() const { return mats_.end(); }

  /// Sum of squared Frobenius norms, halved. Upper bound for f at Q = I.
  real_t<Scalar> mass() const;

 private:
  std::vector<matrix_type> mats_;
  Eigen::Index n_ = 0;
};

using RealCollection = MatrixCollection<double>;
using ComplexCollection = MatrixCollection<std::complex<double>>;
using AnyCollection = std::variant<RealCollection, ComplexCollection>;

/// An invertible candidate Q together with its LU factorization.
///
/// Construction fails with SingularError when the reciprocal condition
/// estimate falls below singularity_threshold(n). Immutable afterwards, so a
/// single instance may be shared between threads.
template <typename Scalar>
class TransformPoint {
 public:
  using matrix_type = Mat<Scalar>;
  using Real = real_t<Scalar>;

  explicit TransformPoint(matrix_type q);

  const matrix_type& q() const { return q_; }
  Eigen::Index n() const { return q_.rows(); }
  Real rcond() const { return rcond_; }

  /// Q^{-1} B
  matrix_type solve(const matrix_type& b) const;
  /// Q^{-*} B
  matrix_type solve_adjoint(const matrix_type& b) const;

  static Real singularity_threshold(Eigen::Index n);

 private:
  matrix_type q_;
  Eigen::PartialPivLU<matrix_type> lu_;
  Real rcond_ = 0;
};

/// Frobenius inner product <a, b> = sum a_ij conj(b_ij), real part only.
template <typename Scalar>
real_t<Scalar> real_inner(const Mat<Scalar>& a, const Mat<Scalar>& b);

/// J o a: copy of `a` with the diagonal zeroed.
template <typename Scalar>
Mat<Scalar> hadamard_offdiag(const Mat<Scalar>& a);

/// ||J o a||^2 without materializing the masked matrix.
template <typename Scalar>
real_t<Scalar> offdiag_norm2(const Mat<Scalar>& a);

/// h_A(Q) = Q^{-1} A Q, evaluated by solving Q X = A Q.
template <typename Scalar>
Mat<Scalar> similarity(const Mat<Scalar>& a, const TransformPoint<Scalar>& q);

/// f_A(Q) = 1/2 sum_k ||J o (Q^{-1} A_k Q)||^2.
template <typename Scalar>
real_t<Scalar> offdiag_cost(const MatrixCollection<Scalar>& collection,
                            const TransformPoint<Scalar>& q);

/// Same functional written as the explicit double sum over i != j.
/// Kept separately so the two forms can be compared.
template <typename Scalar>
real_t<Scalar> offdiag_cost_elementwise(const MatrixCollection<Scalar>& collection,
                                        const TransformPoint<Scalar>& q);

/// D_k = Q^{-1} A_k Q for every k.
template <typename Scalar>
std::vector<Mat<Scalar>> transformed(const MatrixCollection<Scalar>& collection,
                                     const TransformPoint<Scalar>& q);

struct GersgorinBound {
  double offdiag_norm = 0;  // ||J o A||
  double full_norm = 0;     // ||A||
  double spectral_max = 0;  // max |lambda|
  double upper = 0;         // sqrt(n) (spectral_max + 2 n offdiag_norm)

  bool holds() const { return offdiag_norm <= full_norm && full_norm <= upper; }
};

/// Norm comparison ||J o A|| <= ||A|| <= sqrt(n)(max|lambda| + 2n ||J o A||).
template <typename Scalar>
GersgorinBound gersgorin_check(const Mat<Scalar>& a);

/// Eigenvalues from the general (nonsymmetric) solver, sorted
/// lexicographically on (re, im).
template <typename Scalar>
Vec<std::complex<double>> eigenvalues_sorted(const Mat<Scalar>& a);

template <typename Scalar>
void require_square(const Mat<Scalar>& a, const char* what);

}  // namespace jdiag
