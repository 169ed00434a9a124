#include "jdiag/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/SVD>

namespace jdiag {

const char* to_string(Method m) {
  switch (m) {
    case Method::GradientDescent: return "gd";
    case Method::NewtonCG: return "newton";
    default: return "unitary";
  }
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::GradTol: return "grad_tol";
    case Termination::FTol: return "f_tol";
    case Termination::MaxIters: return "max_iters";
    default: return "line_search_failure";
  }
}

void SolverOptions::validate() const {
  auto fail = [](const char* what) { throw DomainError(std::string("SolverOptions: ") + what); };
  if (max_iters < 0) fail("max_iters must be nonnegative");
  if (!(grad_tol > 0)) fail("grad_tol must be positive");
  if (!(f_tol > 0)) fail("f_tol must be positive");
  if (!(ls_shrink > 0 && ls_shrink < 1)) fail("ls_shrink must lie in (0, 1)");
  if (!(ls_armijo > 0 && ls_armijo < 0.5)) fail("ls_armijo must lie in (0, 0.5)");
  if (ls_max_halvings < 1) fail("ls_max_halvings must be positive");
  if (cg_max_iters < 1) fail("cg_max_iters must be positive");
  if (!(cg_tol > 0)) fail("cg_tol must be positive");
  if (!(damping >= 0)) fail("damping must be nonnegative");
}

namespace {

template <typename Scalar>
struct Iterate {
  TransformPoint<Scalar> point;
  double f;
};

// Normalizes q onto the unit sphere and evaluates f there; empty when the
// point is numerically singular.
template <typename Scalar>
std::optional<Iterate<Scalar>> evaluate(const MatrixCollection<Scalar>& collection,
                                        const Mat<Scalar>& q) {
  const auto nrm = q.norm();
  if (!(nrm > 0) || !std::isfinite(static_cast<double>(nrm))) return std::nullopt;
  try {
    TransformPoint<Scalar> tp(q / nrm);
    const double f = static_cast<double>(offdiag_cost(collection, tp));
    if (!std::isfinite(f)) return std::nullopt;
    return Iterate<Scalar>{std::move(tp), f};
  } catch (const SingularError&) {
    return std::nullopt;
  }
}

// Armijo backtracking along `dir` from `q`; `slope` = Re<grad, dir> < 0.
template <typename Scalar>
std::optional<std::pair<Iterate<Scalar>, double>> line_search(
    const MatrixCollection<Scalar>& collection, const Mat<Scalar>& q, double f0,
    const Mat<Scalar>& dir, double slope, double t0, const SolverOptions& opts) {
  double t = t0;
  for (int h = 0; h <= opts.ls_max_halvings; ++h, t *= opts.ls_shrink) {
    auto trial = evaluate(collection, Mat<Scalar>(q + static_cast<real_t<Scalar>>(t) * dir));
    if (trial && trial->f < f0 && trial->f <= f0 + opts.ls_armijo * t * slope)
      return std::make_pair(std::move(*trial), t);
  }
  return std::nullopt;
}

template <typename Scalar>
Mat<Scalar> project_out(const Mat<Scalar>& x, const Mat<Scalar>& q, double q_norm2) {
  return x - static_cast<real_t<Scalar>>(static_cast<double>(real_inner<Scalar>(x, q)) / q_norm2) * q;
}

template <typename Scalar>
void record(SolverResult<Scalar>& r, const TransformPoint<Scalar>& point, double f, double gnorm,
            const SolverOptions& opts) {
  r.f_history.push_back(f);
  r.grad_norm_history.push_back(gnorm);
  r.min_rcond = r.f_history.size() == 1 ? static_cast<double>(point.rcond())
                                        : std::min(r.min_rcond, static_cast<double>(point.rcond()));
  if (opts.keep_iterates) r.iterates.push_back(point.q());
}

bool stagnated(double f_old, double f_new, const SolverOptions& opts) {
  return f_new == 0 || (f_old - f_new) <= opts.f_tol * f_old;
}

// f below this is indistinguishable from rounding noise in the D_k entries.
template <typename Scalar>
double roundoff_floor(const MatrixCollection<Scalar>& collection, const SolverOptions& opts) {
  return opts.f_tol * static_cast<double>(collection.mass());
}

bool at_floor(double f, double floor) { return f <= floor; }

}  // namespace

template <typename Scalar>
SolverResult<Scalar> gradient_descent(const MatrixCollection<Scalar>& collection,
                                      const Mat<Scalar>& q0, const SolverOptions& opts) {
  opts.validate();
  if (q0.rows() != collection.n() || q0.cols() != collection.n())
    throw DimensionError("gradient_descent: q0 does not match the collection size");
  auto start = evaluate(collection, q0);
  if (!start) throw SingularError("gradient_descent: q0 is numerically singular");

  SolverResult<Scalar> r;
  Iterate<Scalar> cur = std::move(*start);
  const double floor = roundoff_floor(collection, opts);
  while (true) {
    const Mat<Scalar> g = gradient_via_base_change(collection, cur.point);
    const double gnorm = static_cast<double>(g.norm());
    record(r, cur.point, cur.f, gnorm, opts);
    if (gnorm <= opts.grad_tol) {
      r.termination = Termination::GradTol;
      break;
    }
    if (r.iterations >= opts.max_iters) {
      r.termination = Termination::MaxIters;
      break;
    }
    auto step = line_search<Scalar>(collection, cur.point.q(), cur.f, Mat<Scalar>(-g),
                                    -gnorm * gnorm, 1.0 / (1.0 + gnorm), opts);
    if (!step) {
      r.termination = at_floor(cur.f, floor) ? Termination::FTol : Termination::LineSearchFailure;
      break;
    }
    const double f_old = cur.f;
    cur = std::move(step->first);
    r.step_sizes.push_back(step->second);
    ++r.iterations;
    if (stagnated(f_old, cur.f, opts)) {
      record(r, cur.point, cur.f,
             static_cast<double>(gradient_via_base_change(collection, cur.point).norm()), opts);
      r.termination = Termination::FTol;
      break;
    }
  }
  r.q_final = cur.point.q();
  return r;
}

template <typename Scalar>
CgSolution<Scalar> projected_cg(const HessianOperator<Scalar>& hessian, const Mat<Scalar>& q,
                                const Mat<Scalar>& grad, double mu, int max_iters, double tol) {
  using Real = real_t<Scalar>;
  const double q2 = static_cast<double>(q.squaredNorm());
  const auto op = [&](const Mat<Scalar>& x) {
    return Mat<Scalar>(project_out<Scalar>(hessian.apply(x), q, q2) + static_cast<Real>(mu) * x);
  };
  CgSolution<Scalar> out;
  const Mat<Scalar> b = -project_out<Scalar>(grad, q, q2);
  const double bnorm = static_cast<double>(b.norm());
  out.z = Mat<Scalar>::Zero(q.rows(), q.cols());
  if (bnorm == 0) {
    out.exit = CgExit::Converged;
    return out;
  }
  Mat<Scalar> res = b;
  Mat<Scalar> p = res;
  double rr = static_cast<double>(res.squaredNorm());
  for (int it = 0; it < max_iters; ++it) {
    const Mat<Scalar> hp = op(p);
    const double curvature = static_cast<double>(real_inner<Scalar>(p, hp));
    ++out.iterations;
    if (!(curvature > 0)) {
      out.exit = CgExit::NegativeCurvature;
      out.relative_residual = std::sqrt(rr) / bnorm;
      return out;
    }
    const double alpha = rr / curvature;
    out.z += static_cast<Real>(alpha) * p;
    res -= static_cast<Real>(alpha) * hp;
    const double rr_new = static_cast<double>(res.squaredNorm());
    if (std::sqrt(rr_new) <= tol * bnorm) {
      out.exit = CgExit::Converged;
      out.relative_residual = std::sqrt(rr_new) / bnorm;
      return out;
    }
    p = res + static_cast<Real>(rr_new / rr) * p;
    rr = rr_new;
  }
  out.exit = CgExit::MaxIters;
  out.relative_residual = std::sqrt(rr) / bnorm;
  return out;
}

template <typename Scalar>
SolverResult<Scalar> newton_cg(const MatrixCollection<Scalar>& collection, const Mat<Scalar>& q0,
                               const SolverOptions& opts) {
  opts.validate();
  if (q0.rows() != collection.n() || q0.cols() != collection.n())
    throw DimensionError("newton_cg: q0 does not match the collection size");
  auto start = evaluate(collection, q0);
  if (!start) throw SingularError("newton_cg: q0 is numerically singular");

  constexpr int kDampingRetries = 8;
  SolverResult<Scalar> r;
  Iterate<Scalar> cur = std::move(*start);
  const double floor = roundoff_floor(collection, opts);
  double damping = opts.damping;
  while (true) {
    const Mat<Scalar> g = gradient_via_base_change(collection, cur.point);
    const double gnorm = static_cast<double>(g.norm());
    record(r, cur.point, cur.f, gnorm, opts);
    if (gnorm <= opts.grad_tol) {
      r.termination = Termination::GradTol;
      break;
    }
    if (r.iterations >= opts.max_iters) {
      r.termination = Termination::MaxIters;
      break;
    }
    const Mat<Scalar>& q = cur.point.q();
    const HessianOperator<Scalar> hessian(collection, cur.point);

    std::optional<std::pair<Iterate<Scalar>, double>> step;
    const std::size_t applied_before = hessian.applications();
    int cg_its = 0;
    double cg_res = 0;
    double radial = 0;
    for (int attempt = 0; attempt <= kDampingRetries && !step; ++attempt) {
      const double mu = damping * (1.0 + gnorm);
      const auto cg = projected_cg(hessian, q, g, mu, opts.cg_max_iters, opts.cg_tol);
      cg_its += cg.iterations;
      cg_res = cg.relative_residual;
      const double slope = static_cast<double>(real_inner<Scalar>(g, cg.z));
      if (!(slope < 0)) {
        // nonpositive curvature before any progress: steepest descent
        ++r.gradient_fallbacks;
        damping = std::max(damping, 1e-12) * 3.0;
        break;
      }
      step = line_search<Scalar>(collection, q, cur.f, cg.z, slope, 1.0, opts);
      if (step) {
        const double zn = static_cast<double>(cg.z.norm());
        radial = std::abs(static_cast<double>(real_inner<Scalar>(cg.z, q))) /
                 (zn * static_cast<double>(q.norm()));
        if (cg.exit == CgExit::NegativeCurvature)
          damping = std::max(damping, 1e-12) * 3.0;
        else
          damping *= 0.5;
      } else {
        damping = std::max(damping, 1e-12) * 3.0;
      }
    }
    r.cg_iterations.push_back(cg_its);
    r.hessian_applications.push_back(static_cast<int>(hessian.applications() - applied_before));
    r.cg_relative_residual.push_back(cg_res);
    if (!step) {
      step = line_search<Scalar>(collection, q, cur.f, Mat<Scalar>(-g), -gnorm * gnorm,
                                 1.0 / (1.0 + gnorm), opts);
      if (!step) {
        r.termination = at_floor(cur.f, floor) ? Termination::FTol : Termination::LineSearchFailure;
        break;
      }
      radial = std::abs(static_cast<double>(real_inner<Scalar>(g, q))) /
               (gnorm * static_cast<double>(q.norm()));
    }
    r.step_radial_defect.push_back(radial);
    const double f_old = cur.f;
    cur = std::move(step->first);
    r.step_sizes.push_back(step->second);
    ++r.iterations;
    if (stagnated(f_old, cur.f, opts)) {
      record(r, cur.point, cur.f,
             static_cast<double>(gradient_via_base_change(collection, cur.point).norm()), opts);
      r.termination = Termination::FTol;
      break;
    }
  }
  r.q_final = cur.point.q();
  return r;
}

template <typename Scalar>
Mat<Scalar> closest_unitary(const Mat<Scalar>& q) {
  require_square(q, "closest_unitary");
  Eigen::JacobiSVD<Mat<Scalar>> svd(q, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double thr = static_cast<double>(TransformPoint<Scalar>::singularity_threshold(q.rows()));
  if (!(s[0] > 0) || !(s[s.size() - 1] > thr * s[0]))
    throw SingularError("closest_unitary: matrix is numerically singular");
  return svd.matrixU() * svd.matrixV().adjoint();
}

template <typename Scalar>
double unitary_cost(const MatrixCollection<Scalar>& collection, const Mat<Scalar>& q) {
  if (q.rows() != collection.n() || q.cols() != collection.n())
    throw DimensionError("unitary_cost: q does not match the collection size");
  double total = 0;
  for (const auto& a : collection)
    total += static_cast<double>(hadamard_offdiag<Scalar>(q.adjoint() * a * q).squaredNorm());
  return total / 2;
}

template <typename Scalar>
Mat<Scalar> unitary_gradient(const MatrixCollection<Scalar>& collection, const Mat<Scalar>& q) {
  if (q.rows() != collection.n() || q.cols() != collection.n())
    throw DimensionError("unitary_gradient: q does not match the collection size");
  std::vector<Mat<Scalar>> d;
  d.reserve(collection.k());
  for (const auto& a : collection) d.push_back(q.adjoint() * a * q);
  return q * gradient_at_identity<Scalar>(d);
}

template <typename Scalar>
void require_self_adjoint(const MatrixCollection<Scalar>& collection, double tol) {
  for (std::size_t k = 0; k < collection.k(); ++k) {
    const auto& a = collection[k];
    const double defect = static_cast<double>((a - a.adjoint()).norm());
    if (defect > tol * static_cast<double>(a.norm())) {
      std::ostringstream os;
      os << "matrix " << k << " is not self-adjoint (||A - A^*|| = " << defect << ")";
      throw DomainError(os.str());
    }
  }
}

namespace {

// Below this fraction of sum_k ||A_k||^2 the gradient is at rounding level and
// the tangency defect is measured against the data scale instead.
constexpr double kTangencyScaleFloor = 1e-4;

template <typename Scalar>
double unitarity_defect(const Mat<Scalar>& q) {
  return static_cast<double>((q.adjoint() * q - Mat<Scalar>::Identity(q.rows(), q.cols())).norm());
}

}  // namespace

template <typename Scalar>
SolverResult<Scalar> unitary_descent(const MatrixCollection<Scalar>& collection,
                                     const Mat<Scalar>& q0, const SolverOptions& opts) {
  opts.validate();
  if (q0.rows() != collection.n() || q0.cols() != collection.n())
    throw DimensionError("unitary_descent: q0 does not match the collection size");
  require_self_adjoint(collection);

  SolverResult<Scalar> r;
  Mat<Scalar> q = q0;
  if (unitarity_defect(q) > 1e-10) {
    q = closest_unitary(q);
    r.warnings.emplace_back("q0 is not unitary; replaced by its closest unitary matrix");
  }
  double f = unitary_cost(collection, q);
  const double mass = static_cast<double>(collection.mass());

  auto accept = [&](const Mat<Scalar>& x, double fx, double gnorm) {
    r.f_history.push_back(fx);
    r.grad_norm_history.push_back(gnorm);
    r.max_unitarity_defect = std::max(r.max_unitarity_defect, unitarity_defect(x));
    if (opts.keep_iterates) r.iterates.push_back(x);
  };

  while (true) {
    const Mat<Scalar> g = unitary_gradient(collection, q);
    const double gnorm = static_cast<double>(g.norm());
    {
      const Mat<Scalar> t = q.adjoint() * g;
      const double tangency = static_cast<double>((t + t.adjoint()).norm()) /
                              std::max(gnorm, kTangencyScaleFloor * 2 * mass);
      r.max_tangency_defect = std::max(r.max_tangency_defect, tangency);
      if (tangency > 1e-10)
        throw NumericError("unitary_descent: gradient left the tangent space of the unitary group");
    }
    accept(q, f, gnorm);
    if (gnorm <= opts.grad_tol) {
      r.termination = Termination::GradTol;
      break;
    }
    if (r.iterations >= opts.max_iters) {
      r.termination = Termination::MaxIters;
      break;
    }
    double t = 1.0 / (1.0 + gnorm);
    bool accepted = false;
    Mat<Scalar> q_new;
    double f_new = f;
    for (int h = 0; h <= opts.ls_max_halvings; ++h, t *= opts.ls_shrink) {
      try {
        q_new = closest_unitary(Mat<Scalar>(q - static_cast<real_t<Scalar>>(t) * g));
      } catch (const SingularError&) {
        continue;
      }
      f_new = unitary_cost(collection, q_new);
      if (f_new < f && f_new <= f - opts.ls_armijo * t * gnorm * gnorm) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      r.termination = at_floor(f, roundoff_floor(collection, opts)) ? Termination::FTol
                                                                      : Termination::LineSearchFailure;
      break;
    }
    r.step_sizes.push_back(t);
    ++r.iterations;
    const double f_old = f;
    q = q_new;
    f = f_new;
    if (stagnated(f_old, f, opts)) {
      accept(q, f, static_cast<double>(unitary_gradient(collection, q).norm()));
      r.termination = Termination::FTol;
      break;
    }
  }
  r.q_final = q;
  r.min_rcond = 1.0;
  return r;
}

template <typename Scalar>
SolverResult<Scalar> solve(const MatrixCollection<Scalar>& collection, const Mat<Scalar>& q0,
                           const SolverOptions& opts) {
  switch (opts.method) {
    case Method::GradientDescent: return gradient_descent(collection, q0, opts);
    case Method::NewtonCG: return newton_cg(collection, q0, opts);
    default: return unitary_descent(collection, q0, opts);
  }
}

#define JDIAG_INSTANTIATE_SOLVERS(S)                                                               \
  template SolverResult<S> gradient_descent<S>(const MatrixCollection<S>&, const Mat<S>&,          \
                                               const SolverOptions&);                              \
  template CgSolution<S> projected_cg<S>(const HessianOperator<S>&, const Mat<S>&, const Mat<S>&,  \
                                         double, int, double);                                     \
  template SolverResult<S> newton_cg<S>(const MatrixCollection<S>&, const Mat<S>&,                 \
                                        const SolverOptions&);                                     \
  template Mat<S> closest_unitary<S>(const Mat<S>&);                                               \
  template double unitary_cost<S>(const MatrixCollection<S>&, const Mat<S>&);                      \
  template Mat<S> unitary_gradient<S>(const MatrixCollection<S>&, const Mat<S>&);                  \
  template void require_self_adjoint<S>(const MatrixCollection<S>&, double);                       \
  template SolverResult<S> unitary_descent<S>(const MatrixCollection<S>&, const Mat<S>&,           \
                                              const SolverOptions&);                               \
  template SolverResult<S> solve<S>(const MatrixCollection<S>&, const Mat<S>&, const SolverOptions&);

JDIAG_INSTANTIATE_SOLVERS(double)
JDIAG_INSTANTIATE_SOLVERS(std::complex<double>)

}  // namespace jdiag
