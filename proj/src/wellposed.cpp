#include "jdiag/wellposed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace jdiag {

template <typename Scalar>
std::vector<Scalar> char_poly(const Mat<Scalar>& a) {
  require_square(a, "char_poly");
  const Eigen::Index n = a.rows();
  if (n > kMaxCharPolyOrder) {
    std::ostringstream os;
    os << "char_poly: n = " << n << " exceeds " << kMaxCharPolyOrder
       << " (coefficient growth); use the eigenvalue-gap test instead";
    throw DomainError(os.str());
  }
  // Faddeev-LeVerrier for det(zI - A) = z^n + c_{n-1} z^{n-1} + ... + c_0:
  //   M_k = A M_{k-1} + c_{n-k+1} I,  c_{n-k} = -tr(A M_k) / k
  std::vector<Scalar> c(static_cast<std::size_t>(n) + 1, Scalar(0));
  c[n] = Scalar(1);
  Mat<Scalar> m = Mat<Scalar>::Zero(n, n);
  const Mat<Scalar> id = Mat<Scalar>::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = a * m + c[n - k + 1] * id;
    c[n - k] = -(a * m).trace() / static_cast<real_t<Scalar>>(k);
  }
  // det(A - zI) = (-1)^n det(zI - A)
  if (n % 2 == 1)
    for (auto& x : c) x = -x;
  c[n] = (n % 2 == 1) ? Scalar(-1) : Scalar(1);
  return c;
}

template <typename Scalar>
Mat<Scalar> sylvester_matrix(const std::vector<Scalar>& p) {
  if (p.size() < 2) throw DomainError("sylvester_matrix: polynomial degree must be at least 1");
  const Eigen::Index n = static_cast<Eigen::Index>(p.size()) - 1;
  std::vector<Scalar> q(static_cast<std::size_t>(n));  // q_0..q_{n-1} of p'
  for (Eigen::Index i = 1; i <= n; ++i) q[i - 1] = static_cast<real_t<Scalar>>(i) * p[i];
  const Eigen::Index size = 2 * n - 1;
  Mat<Scalar> s = Mat<Scalar>::Zero(size, size);
  for (Eigen::Index row = 0; row < n - 1; ++row)
    for (Eigen::Index t = 0; t <= n; ++t) s(row, row + t) = p[n - t];
  for (Eigen::Index row = 0; row < n; ++row)
    for (Eigen::Index t = 0; t < n; ++t) s(n - 1 + row, row + t) = q[n - 1 - t];
  return s;
}

template <typename Scalar>
DiscriminantReport<Scalar> sylvester_discriminant(const Mat<Scalar>& a, double threshold) {
  require_square(a, "sylvester_discriminant");
  const Eigen::Index n = a.rows();
  DiscriminantReport<Scalar> r;
  r.char_coeffs = char_poly(a);
  r.sylvester_det = sylvester_matrix(r.char_coeffs).determinant();
  r.scale = static_cast<double>(a.norm()) / std::sqrt(static_cast<double>(n));
  r.threshold = threshold;
  if (r.scale > 0) {
    const Mat<Scalar> normalized = a / static_cast<real_t<Scalar>>(r.scale);
    r.normalized_det = static_cast<double>(std::abs(sylvester_matrix(char_poly(normalized)).determinant()));
  } else {
    r.normalized_det = static_cast<double>(std::abs(r.sylvester_det));
  }
  r.distinct = r.normalized_det > threshold;
  return r;
}

template <typename Scalar>
double relative_eigen_gap(const Mat<Scalar>& a) {
  require_square(a, "relative_eigen_gap");
  if (a.rows() == 1) return std::numeric_limits<double>::infinity();
  const double nrm = static_cast<double>(a.norm());
  if (nrm == 0) return 0;
  const auto ev = eigenvalues_sorted(a);
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) gap = std::min(gap, std::abs(ev[i] - ev[j]));
  return gap / nrm;
}

namespace {

// Calls fn(subset) for every subset of {0..n-1} with 1 <= |subset| <= n-1,
// ordered by cardinality and then lexicographically. Stops when fn returns true.
template <typename Fn>
bool for_each_proper_subset(Eigen::Index n, Fn&& fn) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index m = 1; m < n; ++m) {
    idx.resize(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    while (true) {
      if (fn(idx)) return true;
      Eigen::Index i = m - 1;
      while (i >= 0 && idx[i] == n - m + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (Eigen::Index t = i + 1; t < m; ++t) idx[t] = idx[t - 1] + 1;
    }
  }
  return false;
}

}  // namespace

template <typename Scalar>
std::optional<SubspaceWitness> invariant_subspace_witness(
    const MatrixCollection<Scalar>& collection, double tol) {
  const Eigen::Index n = collection.n();
  if (n > kMaxWitnessSearchOrder) {
    std::ostringstream os;
    os << "invariant_subspace_witness: n = " << n << " exceeds the exhaustive search limit "
       << kMaxWitnessSearchOrder;
    throw DomainError(os.str());
  }
  if (!(relative_eigen_gap(collection[0]) > kEigenGapTolerance))
    throw DomainError("invariant_subspace_witness: A_1 does not have distinct eigenvalues");
  if (n < 2) return std::nullopt;

  std::vector<MatC> mats;
  std::vector<double> norms;
  for (const auto& a : collection) {
    mats.push_back(a.template cast<std::complex<double>>());
    norms.push_back(static_cast<double>(a.norm()));
  }

  Eigen::ComplexEigenSolver<MatC> es(mats.front());
  if (es.info() != Eigen::Success) throw NumericError("invariant_subspace_witness: eigensolver failed");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto& ev = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return ev[x].real() < ev[y].real() || (ev[x].real() == ev[y].real() && ev[x].imag() < ev[y].imag());
  });
  MatC vecs(n, n);
  for (Eigen::Index i = 0; i < n; ++i) vecs.col(i) = es.eigenvectors().col(order[i]);

  std::optional<SubspaceWitness> found;
  for_each_proper_subset(n, [&](const std::vector<Eigen::Index>& subset) {
    const auto m = static_cast<Eigen::Index>(subset.size());
    MatC span(n, m);
    for (Eigen::Index c = 0; c < m; ++c) span.col(c) = vecs.col(subset[c]);
    Eigen::HouseholderQR<MatC> qr(span);
    const MatC basis = qr.householderQ() * MatC::Identity(n, m);
    std::vector<double> residuals;
    residuals.reserve(mats.size());
    for (std::size_t k = 0; k < mats.size(); ++k) {
      const MatC ab = mats[k] * basis;
      const double res = (ab - basis * (basis.adjoint() * ab)).norm();
      if (res > tol * norms[k]) return false;
      residuals.push_back(res);
    }
    found = SubspaceWitness{basis, std::move(residuals), subset};
    return true;
  });
  return found;
}

template <typename Scalar>
RankDeficientTarget<Scalar> make_target(const Mat<Scalar>& z, Eigen::Index expected_rank) {
  require_square(z, "make_target");
  const Eigen::Index n = z.rows();
  Eigen::JacobiSVD<Mat<Scalar>> svd(z, Eigen::ComputeFullU | Eigen::ComputeFullV);
  RankDeficientTarget<Scalar> t;
  t.z = z;
  t.u = svd.matrixU();
  t.v = svd.matrixV();
  t.sigma = svd.singularValues().template cast<double>();
  const double smax = n > 0 ? t.sigma[0] : 0.0;
  if (!(smax > 0)) throw DomainError("make_target: target matrix is zero");
  t.rank = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (t.sigma[i] > kRankTolerance * smax) ++t.rank;
  if (t.rank >= n) throw DomainError("make_target: target matrix has full rank");
  if (expected_rank > 0 && expected_rank != t.rank) {
    std::ostringstream os;
    os << "make_target: numerical rank " << t.rank << " differs from requested rank " << expected_rank;
    throw DomainError(os.str());
  }
  return t;
}

template <typename Scalar>
TransformPoint<Scalar> lemma2_sequence(const RankDeficientTarget<Scalar>& target, long long j) {
  if (j < 1) throw DomainError("lemma2_sequence: j must be positive");
  const Eigen::Index n = target.z.rows();
  const Eigen::Index r = target.rank;
  if (r < 1 || r >= n || !(target.sigma[r - 1] > kRankTolerance * target.sigma[0]))
    throw DomainError("lemma2_sequence: degenerate target decomposition");
  Vec<Scalar> s(n);
  for (Eigen::Index i = 0; i < n; ++i)
    s[i] = i < r ? Scalar(static_cast<real_t<Scalar>>(target.sigma[i]))
                 : Scalar(real_t<Scalar>(1) / static_cast<real_t<Scalar>>(j));
  return TransformPoint<Scalar>(target.u * s.asDiagonal() * target.v.adjoint());
}

const char* to_string(ProbeVerdict v) {
  switch (v) {
    case ProbeVerdict::Diverging: return "diverging";
    case ProbeVerdict::Bounded: return "bounded";
    default: return "inconclusive";
  }
}

ProbeVerdict judge_series(const std::vector<long long>& js, const std::vector<double>& f,
                          const ProbeOptions& options, double* last_half_ratio,
                          double* growth_exponent) {
  if (js.size() != f.size()) throw DimensionError("judge_series: js and f have different lengths");
  if (f.size() < 2) return ProbeVerdict::Inconclusive;
  const std::size_t mid = (f.size() - 1) / 2;
  const std::size_t last = f.size() - 1;
  double lo = f[mid], hi = f[mid];
  bool increasing = true, nonincreasing = true;
  for (std::size_t i = mid; i < last; ++i) {
    lo = std::min(lo, f[i + 1]);
    hi = std::max(hi, f[i + 1]);
    if (!(f[i + 1] > f[i])) increasing = false;
    if (f[i + 1] > f[i]) nonincreasing = false;
  }
  const double ratio = hi == 0 ? 1.0 : (lo > 0 ? hi / lo : std::numeric_limits<double>::infinity());
  double exponent = 0;
  if (f[mid] > 0 && f[last] > 0 && js[last] > js[mid])
    exponent = std::log(f[last] / f[mid]) /
               std::log(static_cast<double>(js[last]) / static_cast<double>(js[mid]));
  if (last_half_ratio) *last_half_ratio = ratio;
  if (growth_exponent) *growth_exponent = exponent;

  if (increasing && (f[last] > options.growth_factor * f.front() || exponent >= options.growth_exponent))
    return ProbeVerdict::Diverging;
  if (ratio < options.flatness || nonincreasing) return ProbeVerdict::Bounded;
  return ProbeVerdict::Inconclusive;
}

template <typename Scalar>
DivergenceProbeReport divergence_probe(const MatrixCollection<Scalar>& collection,
                                       const RankDeficientTarget<Scalar>& target,
                                       const std::vector<long long>& js,
                                       const ProbeOptions& options) {
  if (js.empty()) throw DomainError("divergence_probe: empty j list");
  for (std::size_t i = 0; i < js.size(); ++i) {
    if (js[i] < 1 || (i > 0 && js[i] <= js[i - 1]))
      throw DomainError("divergence_probe: js must be positive and strictly increasing");
  }
  if (target.z.rows() != collection.n())
    throw DimensionError("divergence_probe: target and collection sizes differ");

  DivergenceProbeReport rep;
  for (const long long j : js) {
    try {
      const auto q = lemma2_sequence(target, j);
      rep.f_values.push_back(static_cast<double>(offdiag_cost(collection, q)));
      rep.js.push_back(j);
    } catch (const SingularError&) {
      rep.truncated = true;
      rep.truncated_at = j;
      break;
    }
  }
  rep.verdict = judge_series(rep.js, rep.f_values, options, &rep.last_half_ratio, &rep.growth_exponent);
  return rep;
}

#define JDIAG_INSTANTIATE_WELLPOSED(S)                                                            \
  template std::vector<S> char_poly<S>(const Mat<S>&);                                            \
  template Mat<S> sylvester_matrix<S>(const std::vector<S>&);                                     \
  template DiscriminantReport<S> sylvester_discriminant<S>(const Mat<S>&, double);                \
  template double relative_eigen_gap<S>(const Mat<S>&);                                           \
  template std::optional<SubspaceWitness> invariant_subspace_witness<S>(const MatrixCollection<S>&, \
                                                                        double);                  \
  template RankDeficientTarget<S> make_target<S>(const Mat<S>&, Eigen::Index);                    \
  template TransformPoint<S> lemma2_sequence<S>(const RankDeficientTarget<S>&, long long);        \
  template DivergenceProbeReport divergence_probe<S>(const MatrixCollection<S>&,                  \
                                                     const RankDeficientTarget<S>&,               \
                                                     const std::vector<long long>&, const ProbeOptions&);

JDIAG_INSTANTIATE_WELLPOSED(double)
JDIAG_INSTANTIATE_WELLPOSED(std::complex<double>)

}  // namespace jdiag
