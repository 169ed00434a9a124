#include "certify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "jdiag/calculus.hpp"
#include "jdiag/rng.hpp"
#include "quad.hpp"

namespace jdiag::cli {

namespace {

constexpr double kMaxSampleCondition = 1e4;
constexpr double kDirectionScale = 1e-3;  // ||Q^{-1} Z||
// Mixed into the seed so samples do not repeat a generator stream that was
// started from the same seed.
constexpr std::uint64_t kStreamTag = 0xc3a5c85c97cb3127ULL;
constexpr std::array<double, 5> kTaylorSteps = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};

template <typename Scalar>
using Wide = std::conditional_t<is_complex_v<Scalar>, ComplexQuad, Quad>;

template <typename Scalar>
class WideCost {
 public:
  explicit WideCost(const MatrixCollection<Scalar>& c) {
    std::vector<Mat<Wide<Scalar>>> mats;
    for (const auto& a : c) mats.push_back(a.template cast<Wide<Scalar>>());
    wide_ = MatrixCollection<Wide<Scalar>>(std::move(mats));
  }
  // Differentials of f along z in wide precision, so the remainder is not
  // swamped by their rounding at small t.
  Quad differential(const Mat<Scalar>& q, const Mat<Scalar>& z, int j) const {
    return jth_differential_f(wide_, TransformPoint<Wide<Scalar>>(q.template cast<Wide<Scalar>>()),
                              Mat<Wide<Scalar>>(z.template cast<Wide<Scalar>>()), j);
  }
  // f(q + t z) - f(q) from h(t) - h(0) = t (I + t W)^{-1} [D, W], which avoids
  // subtracting two nearly equal costs at small t.
  Quad increment(const Mat<Scalar>& q, double t, const Mat<Scalar>& z) const {
    using W = Wide<Scalar>;
    const TransformPoint<W> tp(q.template cast<W>());
    const Mat<W> w = tp.solve(z.template cast<W>());
    const Quad tw = t;
    const Eigen::PartialPivLU<Mat<W>> step(Mat<W>::Identity(w.rows(), w.cols()) + tw * w);
    Quad total = 0;
    for (const auto& a : wide_) {
      const Mat<W> d = tp.solve(a * tp.q());
      const Mat<W> delta = tw * step.solve(d * w - w * d);
      total += real_inner<W>(hadamard_offdiag<W>(delta),
                             hadamard_offdiag<W>(Mat<W>(d + delta / Quad(2))));
    }
    return total;
  }

 private:
  MatrixCollection<Wide<Scalar>> wide_;
};

double relative(double err, double scale) {
  if (err == 0) return 0;
  return scale > 0 ? err / scale : std::numeric_limits<double>::infinity();
}

// Central differences with a step relative to 1 / ||Q^{-1}||, the distance
// scale on which f varies.
template <typename Scalar>
double fd_gradient_error(const WideCost<Scalar>& f, const TransformPoint<Scalar>& tp,
                         const Mat<Scalar>& grad, double floor) {
  const Eigen::Index n = tp.n();
  const Mat<Scalar> q = tp.q();
  const double h = 1e-7 / static_cast<double>(tp.solve(Mat<Scalar>::Identity(n, n)).norm());
  Mat<Scalar> fd = Mat<Scalar>::Zero(n, n);
  const int parts = is_complex_v<Scalar> ? 2 : 1;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (int part = 0; part < parts; ++part) {
        Mat<Scalar> e = Mat<Scalar>::Zero(n, n);
        if constexpr (is_complex_v<Scalar>)
          e(i, j) = part == 0 ? Scalar(1, 0) : Scalar(0, 1);
        else
          e(i, j) = 1;
        const double d =
            static_cast<double>((f.increment(q, h, e) - f.increment(q, -h, e)) / (2 * h));
        if constexpr (is_complex_v<Scalar>)
          fd(i, j) += part == 0 ? Scalar(d, 0) : Scalar(0, d);
        else
          fd(i, j) = d;
      }
  const double gn = static_cast<double>(grad.norm());
  const double fn = static_cast<double>(fd.norm());
  // both sides zero up to the difference quotient's truncation level
  if (gn == 0 && fn <= floor) return 0;
  return static_cast<double>((grad - fd).norm()) / std::max(gn, fn);
}

// Bound on |d^j f| from ||d^m h|| <= m! (2 ||W||)^m ||D||; the scale for
// comparing differentials whose terms cancel.
template <typename Scalar>
double differential_scale(const MatrixCollection<Scalar>& collection,
                          const TransformPoint<Scalar>& tp, const Mat<Scalar>& z, int j) {
  const double w = static_cast<double>(tp.solve(z).norm());
  double mass = 0;
  for (const auto& a : collection) mass += static_cast<double>(similarity(a, tp).squaredNorm());
  return 0.5 * (j + 1) * static_cast<double>(factorial(j)) * std::pow(2 * w, j) * mass;
}

// Least-squares slope of log r against log t over the nonzero remainders.
double loglog_slope(const std::vector<double>& ts, const std::vector<double>& rs) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (rs[i] > 0) {
      x.push_back(std::log(ts[i]));
      y.push_back(std::log(rs[i]));
    }
  if (x.size() < 2) return std::numeric_limits<double>::infinity();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

template <typename Scalar>
CertifyReport certify_derivatives(const MatrixCollection<Scalar>& collection, int max_order,
                                  int trials, std::uint64_t seed) {
  if (max_order < 1 || max_order > kMaxCertifiedOrder)
    throw DomainError("order must lie in 1.." + std::to_string(kMaxCertifiedOrder));
  if (trials < 1) throw DomainError("trials must be positive");

  const Eigen::Index n = collection.n();
  const WideCost<Scalar> wide(collection);
  const double fd_floor = 1e-9 * (1 + static_cast<double>(collection.mass()));
  Rng rng(seed ^ kStreamTag);

  CertifyReport rep;
  rep.trials = trials;
  for (int j = 1; j <= max_order; ++j) {
    OrderCheck c;
    c.order = j;
    c.required_slope = j + 0.9;
    c.min_slope = std::numeric_limits<double>::infinity();
    c.consistency_tolerance = 1e-12;
    if (j <= 2) {
      c.fd_error = 0;
      c.fd_tolerance = j == 1 ? 1e-6 : 1e-4;
    }
    rep.orders.push_back(c);
  }

  for (int trial = 0; trial < trials; ++trial) {
    Mat<Scalar> q = Mat<Scalar>::Identity(n, n);
    if (trial > 0) {
      while (true) {
        q = rng.gaussian<Scalar>(n, n);
        Eigen::JacobiSVD<Mat<Scalar>> svd(q);
        const auto& s = svd.singularValues();
        if (s[n - 1] > 0 && s[0] / s[n - 1] <= kMaxSampleCondition) break;
        ++rep.resampled;
      }
    }
    const TransformPoint<Scalar> tp(q);
    Mat<Scalar> z = rng.gaussian<Scalar>(n, n);
    z *= kDirectionScale / static_cast<double>(tp.solve(z).norm());

    const Mat<Scalar> grad = gradient(collection, tp);
    const Mat<Scalar> hz = hessian_apply(collection, tp, z);
    const double zn = static_cast<double>(z.norm());
    std::vector<double> d(max_order + 1);
    std::vector<Quad> dw(max_order + 1);
    for (int j = 1; j <= max_order; ++j) {
      d[j] = jth_differential_f(collection, tp, z, j);
      dw[j] = wide.differential(q, z, j);
    }

    for (auto& c : rep.orders) {
      const int j = c.order;
      if (j == 1) {
        const double df = first_differential_f(collection, tp, z);
        const double scale = static_cast<double>(grad.norm()) * zn;
        const double inner = real_inner<Scalar>(grad, z);
        c.consistency_error = std::max({c.consistency_error, relative(std::abs(df - inner), scale),
                                        relative(std::abs(df - d[1]), scale)});
        c.fd_error = std::max(c.fd_error, fd_gradient_error(wide, tp, grad, fd_floor));
      } else if (j == 2) {
        const double d2 = second_differential_f(collection, tp, z);
        const double scale = static_cast<double>(hz.norm()) * zn;
        const double inner = real_inner<Scalar>(hz, z);
        c.consistency_error = std::max({c.consistency_error, relative(std::abs(d2 - inner), scale),
                                        relative(std::abs(d2 - d[2]), scale)});
        const double h = 1e-5;
        const double fd2 = static_cast<double>((wide.increment(q, h, z) + wide.increment(q, -h, z)) /
                                               (Quad(h) * h));
        const double den = std::max(std::abs(d2), std::abs(fd2));
        c.fd_error = std::max(c.fd_error, den <= fd_floor ? 0.0 : std::abs(d2 - fd2) / den);
      } else {
        const double wide_d = static_cast<double>(dw[j]);
        c.consistency_error = std::max(
            c.consistency_error,
            relative(std::abs(d[j] - wide_d), differential_scale(collection, tp, z, j)));
      }
      std::vector<double> ts(kTaylorSteps.begin(), kTaylorSteps.end());
      std::vector<double> rs;
      for (const double t : ts) {
        Quad poly = 0, tm = 1, fact = 1;
        for (int m = 1; m <= j; ++m) {
          tm *= t;
          fact *= m;
          poly += tm * dw[m] / fact;
        }
        rs.push_back(static_cast<double>(abs(wide.increment(q, t, z) - poly)));
      }
      c.min_slope = std::min(c.min_slope, loglog_slope(ts, rs));
    }
  }

  rep.pass = true;
  for (auto& c : rep.orders) {
    c.pass = c.min_slope >= c.required_slope && c.consistency_error <= c.consistency_tolerance &&
             (c.fd_error < 0 || c.fd_error <= c.fd_tolerance);
    rep.pass = rep.pass && c.pass;
  }
  return rep;
}

template CertifyReport certify_derivatives<double>(const MatrixCollection<double>&, int, int,
                                                   std::uint64_t);
template CertifyReport certify_derivatives<std::complex<double>>(
    const MatrixCollection<std::complex<double>>&, int, int, std::uint64_t);

}  // namespace jdiag::cli
