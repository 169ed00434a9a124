#include "matcore_impl.hpp"

#include <Eigen/Eigenvalues>

namespace jdiag {

namespace {

template <typename Scalar>
Vec<std::complex<double>> raw_eigenvalues(const Mat<Scalar>& a) {
  Vec<std::complex<double>> out(a.rows());
  if constexpr (is_complex_v<Scalar>) {
    Eigen::ComplexEigenSolver<Mat<std::complex<double>>> es(a.template cast<std::complex<double>>(), false);
    if (es.info() != Eigen::Success) throw NumericError("eigenvalue iteration did not converge");
    out = es.eigenvalues();
  } else {
    Eigen::EigenSolver<Mat<double>> es(a.template cast<double>(), false);
    if (es.info() != Eigen::Success) throw NumericError("eigenvalue iteration did not converge");
    out = es.eigenvalues();
  }
  return out;
}

}  // namespace

template <typename Scalar>
Vec<std::complex<double>> eigenvalues_sorted(const Mat<Scalar>& a) {
  require_square(a, "eigenvalues_sorted");
  Vec<std::complex<double>> ev = raw_eigenvalues(a);
  std::sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
    return x.real() < y.real() || (x.real() == y.real() && x.imag() < y.imag());
  });
  return ev;
}

template <typename Scalar>
GersgorinBound gersgorin_check(const Mat<Scalar>& a) {
  require_square(a, "gersgorin_check");
  GersgorinBound b;
  const double n = static_cast<double>(a.rows());
  b.full_norm = static_cast<double>(a.norm());
  b.offdiag_norm = static_cast<double>(hadamard_offdiag(a).norm());
  const auto ev = raw_eigenvalues(a);
  b.spectral_max = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  b.upper = std::sqrt(n) * (b.spectral_max + 2.0 * n * b.offdiag_norm);
  return b;
}

JDIAG_INSTANTIATE_MATCORE(double)
JDIAG_INSTANTIATE_MATCORE(std::complex<double>)

template GersgorinBound gersgorin_check<double>(const Mat<double>&);
template GersgorinBound gersgorin_check<std::complex<double>>(const Mat<std::complex<double>>&);
template Vec<std::complex<double>> eigenvalues_sorted<double>(const Mat<double>&);
template Vec<std::complex<double>> eigenvalues_sorted<std::complex<double>>(
    const Mat<std::complex<double>>&);

}  // namespace jdiag
