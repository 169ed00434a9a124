#pragma once

#include <optional>
#include <vector>

#include "jdiag/matcore.hpp"

namespace jdiag {

// ---------------------------------------------------------------------------
// Distinct-eigenvalue test through the Sylvester matrix of (p_A, p_A').

inline constexpr Eigen::Index kMaxCharPolyOrder = 12;

/// Coefficients p_0, ..., p_n of p_A(z) = det(A - zI), computed with the
/// Faddeev-LeVerrier recurrence (no eigensolver involved). p_n = (-1)^n.
template <typename Scalar>
std::vector<Scalar> char_poly(const Mat<Scalar>& a);

/// (2n-1)x(2n-1) Sylvester matrix of p (degree n) and p' (degree n-1), with
/// the leading coefficients in the first column.
template <typename Scalar>
Mat<Scalar> sylvester_matrix(const std::vector<Scalar>& p);

template <typename Scalar>
struct DiscriminantReport {
  std::vector<Scalar> char_coeffs;  // p_0..p_n
  Scalar sylvester_det{};           // det S(p_A, p_A') of A itself
  double scale = 0;                 // s = ||A||_F / sqrt(n)
  double normalized_det = 0;        // |det S| of A / s
  double threshold = 0;             // verdict threshold on normalized_det
  bool distinct = false;
};

/// det S is homogeneous of degree n(n-1) in A, so the verdict compares the
/// determinant of the rescaled matrix A / s against a fixed threshold.
inline constexpr double kDiscriminantThreshold = 1e-12;

template <typename Scalar>
DiscriminantReport<Scalar> sylvester_discriminant(const Mat<Scalar>& a,
                                                  double threshold = kDiscriminantThreshold);

/// Eigenvalue-gap oracle: min_{i<j} |lambda_i - lambda_j| / ||A||_F
/// (0 for the zero matrix, +inf for n = 1).
template <typename Scalar>
double relative_eigen_gap(const Mat<Scalar>& a);

inline constexpr double kEigenGapTolerance = 1e-6;

// ---------------------------------------------------------------------------
// Common invariant subspaces.

struct SubspaceWitness {
  MatC basis;                         // n x m, orthonormal columns
  std::vector<double> residuals;      // ||(I - BB^*) A_k B||, one per matrix
  std::vector<Eigen::Index> subset;   // eigenvector indices of A_1 spanning it
};

inline constexpr Eigen::Index kMaxWitnessSearchOrder = 10;

/// Searches the nontrivial invariant subspaces of A_1 (spans of eigenvector
/// subsets, by increasing size then lexicographically) for one that every A_k
/// leaves invariant: ||(I - BB^*) A_k B|| <= tol ||A_k||. Requires n <= 10 and
/// A_1 with distinct eigenvalues (relative_eigen_gap above kEigenGapTolerance).
template <typename Scalar>
std::optional<SubspaceWitness> invariant_subspace_witness(
    const MatrixCollection<Scalar>& collection, double tol);

// ---------------------------------------------------------------------------
// Behaviour of f near rank-deficient points.

template <typename Scalar>
struct RankDeficientTarget {
  Mat<Scalar> z;
  Eigen::Index rank = 0;
  Mat<Scalar> u;
  Vec<double> sigma;  // nonincreasing
  Mat<Scalar> v;
};

/// Singular values below rank_tol * sigma_max count as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Validates `z` (nonzero, 1 <= rank <= n-1) and stores its SVD. When
/// `expected_rank` is positive the numerical rank must match it.
template <typename Scalar>
RankDeficientTarget<Scalar> make_target(const Mat<Scalar>& z, Eigen::Index expected_rank = 0);

/// Q_j = U diag(sigma_1..sigma_r, 1/j, ..., 1/j) V^*, which tends to Z.
template <typename Scalar>
TransformPoint<Scalar> lemma2_sequence(const RankDeficientTarget<Scalar>& target, long long j);

enum class ProbeVerdict { Diverging, Bounded, Inconclusive };
const char* to_string(ProbeVerdict v);

struct ProbeOptions {
  double growth_factor = 1e6;     // f_last > growth_factor f_first => diverging
  double growth_exponent = 1.5;   // or log-log growth rate over the last half
  double flatness = 2.0;          // max/min over the last half below this => bounded
};

struct DivergenceProbeReport {
  std::vector<long long> js;
  std::vector<double> f_values;
  ProbeVerdict verdict = ProbeVerdict::Inconclusive;
  bool truncated = false;        // stopped early at a numerically singular Q_j
  long long truncated_at = 0;    // first j that could not be evaluated
  double last_half_ratio = 0;    // max/min of f over the last half
  double growth_exponent = 0;    // log(f_last/f_mid) / log(j_last/j_mid)
};

template <typename Scalar>
DivergenceProbeReport divergence_probe(const MatrixCollection<Scalar>& collection,
                                       const RankDeficientTarget<Scalar>& target,
                                       const std::vector<long long>& js,
                                       const ProbeOptions& options = {});

/// Verdict logic on a raw series, exposed so callers can re-judge.
ProbeVerdict judge_series(const std::vector<long long>& js, const std::vector<double>& f,
                          const ProbeOptions& options, double* last_half_ratio = nullptr,
                          double* growth_exponent = nullptr);

}  // namespace jdiag
