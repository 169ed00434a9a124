#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jdiag/calculus.hpp"
#include "jdiag/matcore.hpp"

namespace jdiag {

enum class Method { GradientDescent, NewtonCG, UnitaryDescent };
enum class Termination { GradTol, FTol, MaxIters, LineSearchFailure };

const char* to_string(Method m);
const char* to_string(Termination t);

struct SolverOptions {
  Method method = Method::GradientDescent;
  int max_iters = 10000;
  double grad_tol = 1e-10;
  // stop when the accepted decrease is at most f_tol * f or f hits 0; a failed
  // line search with f <= f_tol * mass(A) also counts as f_tol convergence
  double f_tol = 1e-14;
  double ls_shrink = 0.5;
  double ls_armijo = 1e-4;
  int ls_max_halvings = 60;
  int cg_max_iters = 200;
  double cg_tol = 1e-8;
  double damping = 1e-3;
  std::uint64_t seed = 0;
  bool keep_iterates = false;

  /// Throws DomainError when a field is out of range.
  void validate() const;
};

template <typename Scalar>
struct SolverResult {
  Mat<Scalar> q_final;
  std::vector<double> f_history;          // f at every accepted iterate, starting with q0
  std::vector<double> grad_norm_history;  // aligned with f_history
  std::vector<double> step_sizes;         // accepted line-search step per iteration
  std::vector<Mat<Scalar>> iterates;      // only with keep_iterates
  int iterations = 0;
  Termination termination = Termination::MaxIters;
  double min_rcond = 0;                   // smallest condition estimate among accepted iterates

  // Newton-CG bookkeeping, one entry per outer iteration.
  std::vector<int> cg_iterations;
  std::vector<int> hessian_applications;
  std::vector<double> cg_relative_residual;
  std::vector<double> step_radial_defect;  // |Re<Z,Q>| / (||Z|| ||Q||)
  int gradient_fallbacks = 0;

  // Unitary descent bookkeeping.
  double max_unitarity_defect = 0;  // max_m ||Q_m^* Q_m - I||
  // max_m ||T + T^*|| / max(||grad||, 1e-4 sum_k ||A_k||^2), T = Q^* grad
  double max_tangency_defect = 0;
  std::vector<std::string> warnings;
};

/// Sphere-normalized gradient descent on GL(n): Q <- (Q - t grad) / ||Q - t grad||
/// with Armijo backtracking from t = 1 / (1 + ||grad||).
template <typename Scalar>
SolverResult<Scalar> gradient_descent(const MatrixCollection<Scalar>& collection,
                                      const Mat<Scalar>& q0, const SolverOptions& opts);

enum class CgExit { Converged, MaxIters, NegativeCurvature };

template <typename Scalar>
struct CgSolution {
  Mat<Scalar> z;
  int iterations = 0;
  double relative_residual = 0;  // ||P((H + mu)Z) + grad|| / ||grad||
  CgExit exit = CgExit::MaxIters;
};

/// Conjugate gradients for (H + mu I) Z = -grad restricted to the real
/// orthogonal complement of Q, using only Hessian applications.
template <typename Scalar>
CgSolution<Scalar> projected_cg(const HessianOperator<Scalar>& hessian, const Mat<Scalar>& q,
                                const Mat<Scalar>& grad, double mu, int max_iters, double tol);

/// Damped Newton with a matrix-free CG inner solve; falls back to the
/// negative gradient on nonpositive curvature.
template <typename Scalar>
SolverResult<Scalar> newton_cg(const MatrixCollection<Scalar>& collection, const Mat<Scalar>& q0,
                               const SolverOptions& opts);

/// U V^* from the SVD Q = U S V^*: the nearest unitary matrix in Frobenius norm.
template <typename Scalar>
Mat<Scalar> closest_unitary(const Mat<Scalar>& q);

/// g_A(Q) = 1/2 sum_k ||J o (Q^* A_k Q)||^2 for unitary Q.
template <typename Scalar>
double unitary_cost(const MatrixCollection<Scalar>& collection, const Mat<Scalar>& q);

/// Q sum_k [D_k^*, J o D_k] with D_k = Q^* A_k Q: the gradient of g_A in the
/// tangent space of the unitary group at Q.
template <typename Scalar>
Mat<Scalar> unitary_gradient(const MatrixCollection<Scalar>& collection, const Mat<Scalar>& q);

/// Throws DomainError naming the first k with ||A_k - A_k^*|| > tol ||A_k||.
template <typename Scalar>
void require_self_adjoint(const MatrixCollection<Scalar>& collection, double tol = 1e-12);

/// Retraction descent Q <- R(Q - t grad g) on the unitary group.
template <typename Scalar>
SolverResult<Scalar> unitary_descent(const MatrixCollection<Scalar>& collection,
                                     const Mat<Scalar>& q0, const SolverOptions& opts);

/// Dispatches on opts.method.
template <typename Scalar>
SolverResult<Scalar> solve(const MatrixCollection<Scalar>& collection, const Mat<Scalar>& q0,
                           const SolverOptions& opts);

}  // namespace jdiag
