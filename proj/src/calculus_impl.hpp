#pragma once

// Template definitions for calculus, shared by the library and by tools that
// instantiate it for extended-precision scalars.

#include <sstream>

#include "jdiag/calculus.hpp"
#include "matcore_impl.hpp"

namespace jdiag {

namespace detail {

inline void check_order(int j, int lo) {
  if (j < lo || j > kMaxDifferentialOrder) {
    std::ostringstream os;
    os << "differential order " << j << " outside supported range [" << lo << ", "
       << kMaxDifferentialOrder << "]";
    throw DomainError(os.str());
  }
}

template <typename Scalar>
void check_direction(const TransformPoint<Scalar>& q, const Mat<Scalar>& z) {
  if (z.rows() != q.n() || z.cols() != q.n())
    throw DimensionError("direction matrix does not match the transform size");
}

template <typename Scalar>
Mat<Scalar> commutator(const Mat<Scalar>& x, const Mat<Scalar>& y) {
  return x * y - y * x;
}

// d^m h for m = 0..j given D = h(Q) and W = Q^{-1} Z.
template <typename Scalar>
std::vector<Mat<Scalar>> h_differentials(const Mat<Scalar>& d, const Mat<Scalar>& w, int j) {
  std::vector<Mat<Scalar>> out;
  out.reserve(static_cast<std::size_t>(j) + 1);
  out.push_back(d);
  Mat<Scalar> t = d;  // W^{m-1} D
  for (int m = 1; m <= j; ++m) {
    const real_t<Scalar> sign = (m % 2 == 0) ? 1 : -1;
    const auto scale = sign * static_cast<real_t<Scalar>>(factorial(m));
    out.push_back(scale * detail::commutator<Scalar>(w, t));
    if (m < j) t = w * t;
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
Mat<Scalar> differential_h(const Mat<Scalar>& a, const TransformPoint<Scalar>& q,
                           const Mat<Scalar>& z, int j) {
  detail::check_order(j, 1);
  detail::check_direction(q, z);
  const Mat<Scalar> d = similarity(a, q);
  const Mat<Scalar> w = q.solve(z);
  return detail::h_differentials(d, w, j).back();
}

template <typename Scalar>
real_t<Scalar> jth_differential_f(const MatrixCollection<Scalar>& collection,
                                  const TransformPoint<Scalar>& q, const Mat<Scalar>& z, int j) {
  detail::check_order(j, 0);
  detail::check_direction(q, z);
  if (j == 0) return offdiag_cost(collection, q);
  const Mat<Scalar> w = q.solve(z);
  real_t<Scalar> total = 0;
  for (const auto& a : collection) {
    const auto dh = detail::h_differentials<Scalar>(similarity(a, q), w, j);
    for (int l = 0; l <= j; ++l) {
      const auto c = static_cast<real_t<Scalar>>(binomial(j, l));
      total += c * real_inner<Scalar>(dh[j - l], hadamard_offdiag<Scalar>(dh[l]));
    }
  }
  return total / 2;
}

template <typename Scalar>
real_t<Scalar> first_differential_f(const MatrixCollection<Scalar>& collection,
                                    const TransformPoint<Scalar>& q, const Mat<Scalar>& z) {
  detail::check_direction(q, z);
  const Mat<Scalar> w = q.solve(z);
  real_t<Scalar> total = 0;
  for (const auto& a : collection) {
    const Mat<Scalar> d = similarity(a, q);
    total += real_inner<Scalar>(detail::commutator<Scalar>(d, w), hadamard_offdiag<Scalar>(d));
  }
  return total;
}

template <typename Scalar>
real_t<Scalar> second_differential_f(const MatrixCollection<Scalar>& collection,
                                     const TransformPoint<Scalar>& q, const Mat<Scalar>& z) {
  detail::check_direction(q, z);
  const Mat<Scalar> w = q.solve(z);
  real_t<Scalar> total = 0;
  for (const auto& a : collection) {
    const Mat<Scalar> d = similarity(a, q);
    total += hadamard_offdiag<Scalar>(detail::commutator<Scalar>(d, w)).squaredNorm();
    const Mat<Scalar> wd = w * d;
    total += 2 * real_inner<Scalar>(detail::commutator<Scalar>(w, wd), hadamard_offdiag<Scalar>(d));
  }
  return total;
}

template <typename Scalar>
Mat<Scalar> gradient_at_identity(const std::vector<Mat<Scalar>>& d) {
  if (d.empty()) throw DimensionError("gradient_at_identity: empty collection");
  const auto n = d.front().rows();
  Mat<Scalar> g = Mat<Scalar>::Zero(n, n);
  for (const auto& dk : d) g += detail::commutator<Scalar>(dk.adjoint(), hadamard_offdiag<Scalar>(dk));
  return g;
}

template <typename Scalar>
Mat<Scalar> gradient(const MatrixCollection<Scalar>& collection, const TransformPoint<Scalar>& q) {
  const auto n = q.n();
  Mat<Scalar> g = Mat<Scalar>::Zero(n, n);
  for (const auto& a : collection) {
    const Mat<Scalar> d = similarity(a, q);
    g += q.solve_adjoint(detail::commutator<Scalar>(d.adjoint(), hadamard_offdiag<Scalar>(d)));
  }
  return g;
}

template <typename Scalar>
Mat<Scalar> gradient_via_base_change(const MatrixCollection<Scalar>& collection,
                                     const TransformPoint<Scalar>& q) {
  return q.solve_adjoint(gradient_at_identity<Scalar>(transformed(collection, q)));
}

template <typename Scalar>
HessianOperator<Scalar>::HessianOperator(const MatrixCollection<Scalar>& collection,
                                         const TransformPoint<Scalar>& q)
    : q_(q) {
  d_ = transformed(collection, q);
  d_adj_.reserve(d_.size());
  jd_.reserve(d_.size());
  for (const auto& d : d_) {
    d_adj_.push_back(d.adjoint());
    jd_.push_back(hadamard_offdiag<Scalar>(d));
  }
}

template <typename Scalar>
Mat<Scalar> HessianOperator<Scalar>::apply(const Mat<Scalar>& z) const {
  detail::check_direction(q_, z);
  ++applications_;
  const Mat<Scalar> w = q_.solve(z);
  const Mat<Scalar> w_adj = w.adjoint();
  Mat<Scalar> inner = Mat<Scalar>::Zero(n(), n());
  for (std::size_t k = 0; k < d_.size(); ++k) {
    const auto& d = d_[k];
    const auto& dh = d_adj_[k];
    const auto& jd = jd_[k];
    inner += detail::commutator<Scalar>(dh, hadamard_offdiag<Scalar>(detail::commutator<Scalar>(d, w)));
    inner += detail::commutator<Scalar>(w_adj, jd) * dh;
    inner += detail::commutator<Scalar>(jd, (w * d).adjoint());
  }
  return q_.solve_adjoint(inner);
}

template <typename Scalar>
Mat<Scalar> hessian_apply(const MatrixCollection<Scalar>& collection,
                          const TransformPoint<Scalar>& q, const Mat<Scalar>& z) {
  return HessianOperator<Scalar>(collection, q).apply(z);
}

template <typename Scalar>
DerivativeReport<Scalar> derivative_report(const MatrixCollection<Scalar>& collection,
                                           const TransformPoint<Scalar>& q, const Mat<Scalar>& z) {
  DerivativeReport<Scalar> r;
  r.f_value = static_cast<double>(offdiag_cost(collection, q));
  r.df_z = static_cast<double>(first_differential_f(collection, q, z));
  r.d2f_z = static_cast<double>(second_differential_f(collection, q, z));
  r.gradient = gradient(collection, q);
  r.hessian_z = hessian_apply(collection, q, z);
  return r;
}

#define JDIAG_INSTANTIATE_CALCULUS(S)                                                              \
  template Mat<S> differential_h<S>(const Mat<S>&, const TransformPoint<S>&, const Mat<S>&, int);  \
  template real_t<S> jth_differential_f<S>(const MatrixCollection<S>&, const TransformPoint<S>&,   \
                                           const Mat<S>&, int);                                    \
  template real_t<S> first_differential_f<S>(const MatrixCollection<S>&, const TransformPoint<S>&, \
                                             const Mat<S>&);                                       \
  template real_t<S> second_differential_f<S>(const MatrixCollection<S>&,                          \
                                              const TransformPoint<S>&, const Mat<S>&);            \
  template Mat<S> gradient_at_identity<S>(const std::vector<Mat<S>>&);                             \
  template Mat<S> gradient<S>(const MatrixCollection<S>&, const TransformPoint<S>&);               \
  template Mat<S> gradient_via_base_change<S>(const MatrixCollection<S>&, const TransformPoint<S>&); \
  template class HessianOperator<S>;                                                               \
  template Mat<S> hessian_apply<S>(const MatrixCollection<S>&, const TransformPoint<S>&,           \
                                   const Mat<S>&);                                                 \
  template DerivativeReport<S> derivative_report<S>(const MatrixCollection<S>&,                    \
                                                    const TransformPoint<S>&, const Mat<S>&);

}  // namespace jdiag
