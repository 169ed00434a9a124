#pragma once

// Template definitions for matcore, shared by the library and by tools that
// instantiate it for extended-precision scalars.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>

#include "jdiag/matcore.hpp"

namespace jdiag {

template <typename Scalar>
void require_square(const Mat<Scalar>& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a nonempty square matrix, got " << a.rows() << "x" << a.cols();
    throw DimensionError(os.str());
  }
}

template <typename Scalar>
MatrixCollection<Scalar>::MatrixCollection(std::vector<matrix_type> mats)
    : mats_(std::move(mats)) {
  if (mats_.empty()) throw DimensionError("MatrixCollection: at least one matrix is required");
  n_ = mats_.front().rows();
  for (std::size_t i = 0; i < mats_.size(); ++i) {
    const auto& m = mats_[i];
    if (m.rows() != n_ || m.cols() != n_ || n_ == 0) {
      std::ostringstream os;
      os << "MatrixCollection: matrix " << i << " is " << m.rows() << "x" << m.cols()
         << ", expected " << n_ << "x" << n_;
      throw DimensionError(os.str());
    }
  }
}

template <typename Scalar>
real_t<Scalar> MatrixCollection<Scalar>::mass() const {
  real_t<Scalar> s = 0;
  for (const auto& m : mats_) s += m.squaredNorm();
  return s / 2;
}

template <typename Scalar>
TransformPoint<Scalar>::TransformPoint(matrix_type q) : q_(std::move(q)) {
  require_square(q_, "TransformPoint");
  if (!q_.allFinite()) throw SingularError("TransformPoint: non-finite entries");
  lu_.compute(q_);
  rcond_ = lu_.rcond();
  if (!(rcond_ > singularity_threshold(n()))) {
    std::ostringstream os;
    os << "TransformPoint: matrix is numerically singular (rcond estimate " << double(rcond_)
       << " below " << double(singularity_threshold(n())) << ")";
    throw SingularError(os.str());
  }
}

template <typename Scalar>
auto TransformPoint<Scalar>::singularity_threshold(Eigen::Index n) -> Real {
  return Real(1e3) * Real(n) * std::numeric_limits<Real>::epsilon();
}

template <typename Scalar>
auto TransformPoint<Scalar>::solve(const matrix_type& b) const -> matrix_type {
  if (b.rows() != n()) throw DimensionError("TransformPoint::solve: dimension mismatch");
  return lu_.solve(b);
}

template <typename Scalar>
auto TransformPoint<Scalar>::solve_adjoint(const matrix_type& b) const -> matrix_type {
  if (b.rows() != n()) throw DimensionError("TransformPoint::solve_adjoint: dimension mismatch");
  return lu_.adjoint().solve(b);
}

template <typename Scalar>
real_t<Scalar> real_inner(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("real_inner: dimension mismatch");
  if constexpr (is_complex_v<Scalar>) {
    return (a.real().array() * b.real().array() + a.imag().array() * b.imag().array()).sum();
  } else {
    return (a.array() * b.array()).sum();
  }
}

template <typename Scalar>
Mat<Scalar> hadamard_offdiag(const Mat<Scalar>& a) {
  require_square(a, "hadamard_offdiag");
  Mat<Scalar> out = a;
  out.diagonal().setZero();
  return out;
}

template <typename Scalar>
real_t<Scalar> offdiag_norm2(const Mat<Scalar>& a) {
  return a.squaredNorm() - a.diagonal().squaredNorm();
}

template <typename Scalar>
Mat<Scalar> similarity(const Mat<Scalar>& a, const TransformPoint<Scalar>& q) {
  require_square(a, "similarity");
  if (a.rows() != q.n()) throw DimensionError("similarity: matrix and transform sizes differ");
  return q.solve(a * q.q());
}

template <typename Scalar>
std::vector<Mat<Scalar>> transformed(const MatrixCollection<Scalar>& collection,
                                     const TransformPoint<Scalar>& q) {
  if (collection.n() != q.n()) throw DimensionError("collection and transform sizes differ");
  std::vector<Mat<Scalar>> out;
  out.reserve(collection.k());
  for (const auto& a : collection) out.push_back(similarity(a, q));
  return out;
}

template <typename Scalar>
real_t<Scalar> offdiag_cost(const MatrixCollection<Scalar>& collection,
                            const TransformPoint<Scalar>& q) {
  if (collection.n() != q.n()) throw DimensionError("offdiag_cost: collection and transform sizes differ");
  real_t<Scalar> total = 0;
  for (const auto& a : collection) {
    // diagonal-zeroed norm rather than ||D||^2 - ||diag D||^2 to avoid cancellation
    total += hadamard_offdiag(similarity(a, q)).squaredNorm();
  }
  total /= 2;
#ifndef NDEBUG
  const auto other = offdiag_cost_elementwise(collection, q);
  using std::abs;
  assert(abs(other - total) <= real_t<Scalar>(1e-14) * std::max<real_t<Scalar>>(total, 1e-300) ||
         abs(other - total) <= std::numeric_limits<real_t<Scalar>>::min());
#endif
  return total;
}

template <typename Scalar>
real_t<Scalar> offdiag_cost_elementwise(const MatrixCollection<Scalar>& collection,
                                        const TransformPoint<Scalar>& q) {
  real_t<Scalar> total = 0;
  for (const auto& a : collection) {
    const Mat<Scalar> d = similarity(a, q);
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      for (Eigen::Index i = 0; i < d.rows(); ++i)
        if (i != j) total += Eigen::numext::abs2(d(i, j));
  }
  return total / 2;
}

#define JDIAG_INSTANTIATE_MATCORE(S)                                                           \
  template class MatrixCollection<S>;                                                          \
  template class TransformPoint<S>;                                                            \
  template void require_square<S>(const Mat<S>&, const char*);                                 \
  template real_t<S> real_inner<S>(const Mat<S>&, const Mat<S>&);                              \
  template Mat<S> hadamard_offdiag<S>(const Mat<S>&);                                          \
  template real_t<S> offdiag_norm2<S>(const Mat<S>&);                                          \
  template Mat<S> similarity<S>(const Mat<S>&, const TransformPoint<S>&);                      \
  template std::vector<Mat<S>> transformed<S>(const MatrixCollection<S>&, const TransformPoint<S>&); \
  template real_t<S> offdiag_cost<S>(const MatrixCollection<S>&, const TransformPoint<S>&);    \
  template real_t<S> offdiag_cost_elementwise<S>(const MatrixCollection<S>&, const TransformPoint<S>&);

}  // namespace jdiag
