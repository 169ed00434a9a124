// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "certify.hpp"
#include "jdiag/calculus.hpp"
#include "jdiag/problems.hpp"
#include "jdiag/rng.hpp"
#include "jdiag/solvers.hpp"
#include "jdiag/wellposed.hpp"
#include "oracles.hpp"

using namespace jdiag;
using cd = std::complex<double>;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

template <typename S>
Mat<S> random_point(Rng& rng, Eigen::Index n) {
  return oracle::well_conditioned<S>(rng, n, 1e3);
}

// ---------------------------------------------------------------------------

template <typename S>
double gradient_fd_error(Eigen::Index n, std::size_t k, std::uint64_t seed) {
  const auto c = random_collection<S>(n, k, seed, Ensemble::General);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const Mat<S> q = random_point<S>(rng, n);
  const Mat<S> g = gradient(c, TransformPoint<S>(q));
  const double h = 1e-6 * std::max(1.0, static_cast<double>(q.norm()));
  return (oracle::fd_gradient(c, q, h) - g).norm() / g.norm();
}

Outcome criterion1() {
  const Eigen::Index sizes[] = {2, 3, 4, 6};
  const std::size_t ks[] = {1, 3};
  double worst = 0;
  int count = 0;
  for (int i = 0; i < 200; ++i) {
    const Eigen::Index n = sizes[i % 4];
    const std::size_t k = ks[(i / 4) % 2];
    const auto seed = static_cast<std::uint64_t>(1000 + i);
    const double err = (i / 8) % 2 == 0 ? gradient_fd_error<double>(n, k, seed)
                                        : gradient_fd_error<cd>(n, k, seed);
    worst = std::max(worst, err);
    ++count;
  }
  return {worst <= 1e-6, fmt("worst relative error %.2e over %d instances (tolerance 1e-6)", worst, count)};
}

template <typename S>
void hessian_checks(std::uint64_t seed, double& consistency, double& fd, double& symmetry) {
  const Eigen::Index n = 2 + static_cast<Eigen::Index>(seed % 3);
  const auto c = random_collection<S>(n, seed % 2 == 0 ? 1 : 3, seed, Ensemble::General);
  Rng rng(seed + 77);
  const Mat<S> q = random_point<S>(rng, n);
  const Mat<S> z = rng.gaussian<S>(n, n);
  const Mat<S> w = rng.gaussian<S>(n, n);
  const TransformPoint<S> tp(q);
  const HessianOperator<S> h(c, tp);
  const Mat<S> hz = h.apply(z);
  const Mat<S> hw = h.apply(w);
  const double form = real_inner(hz, z);
  const double scale = hz.norm() * z.norm();
  consistency = std::max({consistency, std::abs(form - second_differential_f(c, tp, z)) / scale,
                          std::abs(form - jth_differential_f(c, tp, z, 2)) / scale});
  const long double t = 1e-4L / static_cast<long double>((oracle::inverse(q) * z).norm());
  const long double second = (oracle::cost_along(c, q, z, t) - 2 * oracle::cost_along(c, q, z, 0) +
                              oracle::cost_along(c, q, z, -t)) /
                             (t * t);
  fd = std::max(fd, std::abs(static_cast<double>(second) - form) / std::abs(form));
  symmetry = std::max(symmetry, std::abs(real_inner(hz, w) - real_inner(hw, z)) /
                                    std::max(hz.norm() * w.norm(), hw.norm() * z.norm()));
}

Outcome criterion2() {
  double consistency = 0, fd = 0, symmetry = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    if (seed % 2 == 0)
      hessian_checks<double>(2000 + seed, consistency, fd, symmetry);
    else
      hessian_checks<cd>(2000 + seed, consistency, fd, symmetry);
  }
  const bool ok = consistency <= 1e-12 && fd <= 1e-4 && symmetry <= 1e-11;
  return {ok, fmt("closed forms %.1e (1e-12), second differences %.1e (1e-4), symmetry %.1e (1e-11)",
                  consistency, fd, symmetry)};
}

Outcome criterion3() {
  double worst_margin = std::numeric_limits<double>::infinity();
  int failed = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::uint64_t seed = 3000 + i;
    const auto rep = i % 2 == 0
                         ? cli::certify_derivatives(random_collection<double>(3, 3, seed, Ensemble::General), 4, 2, seed)
                         : cli::certify_derivatives(random_collection<cd>(3, 3, seed, Ensemble::General), 4, 2, seed);
    for (const auto& o : rep.orders) worst_margin = std::min(worst_margin, o.min_slope - o.order);
    if (!rep.pass) ++failed;
  }
  return {failed == 0 && worst_margin >= 0.9,
          fmt("smallest slope minus order %.3f (need 0.9), %d of 20 instances failed", worst_margin,
              failed)};
}

std::vector<long long> one_to(long long m) {
  std::vector<long long> js;
  for (long long j = 1; j <= m; ++j) js.push_back(j);
  return js;
}

Outcome criterion4() {
  const auto js = one_to(100);
  int diverging = 0, ratio_ok = 0, bounded = 0, flat_ok = 0, skipped = 0;
  double min_ratio = std::numeric_limits<double>::infinity(), max_flat = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto c = random_collection<double>(3, 2, 4000 + seed, Ensemble::General);
    if (invariant_subspace_witness(c, 1e-10)) {
      ++skipped;
      continue;
    }
    Rng rng(4000 + seed);
    const MatR z = rng.gaussian<double>(3, 1) * rng.gaussian<double>(1, 3);
    const auto rep = divergence_probe(c, make_target(z, 1), js);
    const double ratio = rep.f_values.back() / rep.f_values.front();
    min_ratio = std::min(min_ratio, ratio);
    if (rep.verdict == ProbeVerdict::Diverging) ++diverging;
    if (ratio > 1e4 && rep.f_values.size() == js.size()) ++ratio_ok;
  }
  Rng rng(4100);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto planted = oracle::planted_collection<double>(rng, 3, 1, 2);
    const MatR z = planted.span * rng.gaussian<double>(1, 3);
    const auto rep = divergence_probe(planted.collection, make_target(z, 1), js);
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (std::size_t i = 49; i < rep.f_values.size(); ++i) {
      lo = std::min(lo, rep.f_values[i]);
      hi = std::max(hi, rep.f_values[i]);
    }
    max_flat = std::max(max_flat, hi / lo);
    if (rep.verdict == ProbeVerdict::Bounded) ++bounded;
    if (hi <= 2 * lo) ++flat_ok;
  }
  const int random_seeds = 50 - skipped;
  const bool ok = skipped == 0 && diverging == random_seeds && ratio_ok == random_seeds &&
                  bounded == 50 && flat_ok == 50;
  return {ok, fmt("random: %d/%d diverging, %d/%d with f(Q_100)/f(Q_1) > 1e4 (smallest %.3g); "
                  "planted: %d/50 bounded, %d/50 with max/min <= 2 (largest %.3g)",
                  diverging, random_seeds, ratio_ok, random_seeds, min_ratio, bounded, flat_ok,
                  max_flat)};
}

Outcome criterion5() {
  Rng rng(5000);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index n = 1 + i % 8;
    const bool holds = i % 2 == 0 ? gersgorin_check<double>(rng.gaussian<double>(n, n)).holds()
                                  : gersgorin_check<cd>(rng.gaussian<cd>(n, n)).holds();
    if (!holds) ++violations;
  }
  return {violations == 0, fmt("%d violations over 1000 matrices", violations)};
}

template <typename S>
Mat<S> with_repeated_eigenvalue(Rng& rng, Eigen::Index n) {
  Vec<S> d = rng.gaussian<S>(n, 1);
  const auto i = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n - 1)) + 1;
  d(i) = d(0);
  const Mat<S> p = oracle::well_conditioned<S>(rng, n, 100);
  return p * d.asDiagonal() * oracle::inverse(p);
}

Outcome criterion6() {
  Rng rng(6000);
  int repeated_ok = 0, random_ok = 0, agree = 0;
  for (int i = 0; i < 500; ++i) {
    const Eigen::Index n = 2 + i % 5;
    const bool real = i % 2 == 0;
    auto run = [&](auto tag, bool repeated) {
      using S = decltype(tag);
      const Mat<S> a = repeated ? with_repeated_eigenvalue<S>(rng, n) : Mat<S>(rng.gaussian<S>(n, n));
      const bool distinct = sylvester_discriminant(a).distinct;
      const bool gap_distinct = relative_eigen_gap(a) > kEigenGapTolerance;
      if (distinct == gap_distinct) ++agree;
      return distinct;
    };
    if (!(real ? run(double{}, true) : run(cd{}, true))) ++repeated_ok;
    if (real ? run(double{}, false) : run(cd{}, false)) ++random_ok;
  }
  return {repeated_ok == 500 && random_ok == 500 && agree == 1000,
          fmt("repeated: %d/500 not distinct; random: %d/500 distinct; eigenvalue-gap agreement %d/1000",
              repeated_ok, random_ok, agree)};
}

Outcome criterion7() {
  int gd_ok = 0, newton_ok = 0, newton_fewer = 0, noisy_gd = 0, noisy_newton = 0;
  std::string gd_failures;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto p = generate_jointly_diagonalizable<double>(4, 3, 0.0, seed, Ensemble::General);
    const MatR q0 = MatR::Identity(4, 4);
    SolverOptions gd_opts;
    gd_opts.method = Method::GradientDescent;
    SolverOptions nt_opts;
    nt_opts.method = Method::NewtonCG;
    const auto gd = solve(p.collection, q0, gd_opts);
    const auto nt = solve(p.collection, q0, nt_opts);
    if (gd.f_history.back() <= 1e-12)
      ++gd_ok;
    else
      gd_failures += fmt(" %llu(f=%.1e)", static_cast<unsigned long long>(seed), gd.f_history.back());
    if (nt.f_history.back() <= 1e-12) ++newton_ok;
    if (nt.iterations < gd.iterations) ++newton_fewer;

    const auto noisy = generate_jointly_diagonalizable<double>(4, 3, 1e-3, seed, Ensemble::General);
    const double f_truth = offdiag_cost(noisy.collection, TransformPoint<double>(noisy.truth.q));
    const auto nn = solve(noisy.collection, q0, nt_opts);
    const auto ng = solve(noisy.collection, q0, gd_opts);
    if (ng.f_history.back() <= f_truth) ++noisy_gd;
    if (nn.f_history.back() <= f_truth) ++noisy_newton;
  }
  const bool ok = gd_ok == 25 && newton_ok == 25 && newton_fewer >= 20 && noisy_gd == 25 &&
                  noisy_newton == 25;
  std::string detail = fmt("noiseless: gd %d/25, newton %d/25 reach f <= 1e-12, newton fewer "
                           "iterations on %d/25 (need 20); noisy f <= f(Q*): gd %d/25, newton %d/25",
                           gd_ok, newton_ok, newton_fewer, noisy_gd, noisy_newton);
  if (!gd_failures.empty()) detail += "; gd misses at seeds" + gd_failures;
  return {ok, detail};
}

template <typename S>
void unitary_run(std::uint64_t seed, double& worst_g, double& worst_unitary, double& worst_tangent) {
  const auto p = generate_jointly_diagonalizable<S>(5, 3, 0.0, seed, Ensemble::SelfAdjoint);
  SolverOptions opts;
  opts.method = Method::UnitaryDescent;
  opts.keep_iterates = true;
  const auto r = unitary_descent(p.collection, Mat<S>(Mat<S>::Identity(5, 5)), opts);
  worst_g = std::max(worst_g, r.f_history.back());
  const double mass = static_cast<double>(p.collection.mass());
  for (const auto& q : r.iterates) {
    worst_unitary = std::max(worst_unitary, oracle::unitarity_defect(q));
    const Mat<S> g = unitary_gradient(p.collection, q);
    const Mat<S> t = q.adjoint() * g;
    worst_tangent = std::max(worst_tangent, (t + t.adjoint()).norm() /
                                                std::max(static_cast<double>(g.norm()), 2e-4 * mass));
  }
}

Outcome criterion8() {
  double worst_g = 0, worst_unitary = 0, worst_tangent = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    unitary_run<double>(8000 + seed, worst_g, worst_unitary, worst_tangent);
    unitary_run<cd>(8100 + seed, worst_g, worst_unitary, worst_tangent);
  }
  Rng rng(8200);
  int beaten = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const MatC q = rng.gaussian<cd>(5, 5);
    const double best = (q - closest_unitary(q)).norm();
    bool ok = true;
    for (int w = 0; w < 100; ++w) ok = ok && best <= (q - oracle::random_unitary<cd>(rng, 5)).norm();
    if (ok) ++beaten;
  }
  const bool ok = worst_g <= 1e-12 && worst_unitary <= 1e-10 && worst_tangent <= 1e-10 && beaten == trials;
  return {ok, fmt("final g %.1e (1e-12), unitarity %.1e (1e-10), tangency %.1e (1e-10), "
                  "closest unitary best on %d/%d trials",
                  worst_g, worst_unitary, worst_tangent, beaten, trials)};
}

template <typename S>
void structural(std::uint64_t seed, double& scale_err, double& radial, double& base_change) {
  const Eigen::Index n = 2 + static_cast<Eigen::Index>(seed % 4);
  const auto c = random_collection<S>(n, 1 + seed % 3, seed, Ensemble::General);
  Rng rng(seed + 9);
  const Mat<S> q = random_point<S>(rng, n);
  const double factor = 0.1 + 9.9 * rng.uniform();
  const TransformPoint<S> tp(q);
  const double f = offdiag_cost(c, tp);
  scale_err = std::max(scale_err, std::abs(offdiag_cost(c, TransformPoint<S>(Mat<S>(factor * q))) - f) / f);
  const Mat<S> g = gradient(c, tp);
  radial = std::max(radial, std::abs(real_inner(g, q)) / (g.norm() * q.norm()));
  base_change = std::max(base_change, (gradient_via_base_change(c, tp) - g).norm() / g.norm());
}

Outcome criterion9() {
  double scale_err = 0, radial = 0, base_change = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    if (seed % 2 == 0)
      structural<double>(9000 + seed, scale_err, radial, base_change);
    else
      structural<cd>(9000 + seed, scale_err, radial, base_change);
  }
  const bool ok = scale_err <= 1e-14 && radial <= 1e-12 && base_change <= 1e-12;
  return {ok, fmt("scale invariance %.1e (1e-14), radial orthogonality %.1e (1e-12), "
                  "base change %.1e (1e-12)",
                  scale_err, radial, base_change)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename S>
bool same_bits(const Mat<S>& a, const Mat<S>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(S) * static_cast<std::size_t>(a.size())) == 0;
}

Outcome criterion10() {
  const fs::path dir = fs::temp_directory_path() / "jdiag_acceptance_roundtrip";
  fs::create_directories(dir);
  int roundtrip = 0, files_equal = 0, traces_equal = 0;
  const int cases = 10;
  for (std::uint64_t seed = 0; seed < cases; ++seed) {
    auto check = [&](auto tag) {
      using S = decltype(tag);
      const auto p = generate_jointly_diagonalizable<S>(4, 3, 1e-3, seed, Ensemble::General);
      save(p, dir / "a.json");
      const auto back = load(dir / "a.json");
      const auto& c = std::get<MatrixCollection<S>>(back.collection);
      const auto& t = std::get<GroundTruth<S>>(*back.ground_truth);
      bool exact = same_bits(t.q, p.truth.q);
      for (std::size_t k = 0; k < c.k(); ++k) exact = exact && same_bits(c[k], p.collection[k]);
      if (exact) ++roundtrip;

      save(generate_jointly_diagonalizable<S>(4, 3, 1e-3, seed, Ensemble::General), dir / "b.json");
      if (slurp(dir / "a.json") == slurp(dir / "b.json")) ++files_equal;

      SolverOptions opts;
      opts.method = seed % 2 == 0 ? Method::NewtonCG : Method::GradientDescent;
      opts.max_iters = 200;
      const Mat<S> q0 = Mat<S>::Identity(4, 4);
      const auto r1 = solve(p.collection, q0, opts);
      const auto r2 = solve(c, q0, opts);
      if (r1.f_history == r2.f_history && r1.grad_norm_history == r2.grad_norm_history &&
          same_bits(r1.q_final, r2.q_final))
        ++traces_equal;
    };
    check(double{});
    check(cd{});
  }
  fs::remove_all(dir);
  const int total = 2 * cases;
  return {roundtrip == total && files_equal == total && traces_equal == total,
          fmt("bit-exact round trips %d/%d, identical files %d/%d, identical traces %d/%d", roundtrip,
              total, files_equal, total, traces_equal, total)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient vs finite differences", criterion1},
      {"Hessian closed forms, differences and symmetry", criterion2},
      {"Taylor remainder slopes up to order 4", criterion3},
      {"divergence dichotomy", criterion4},
      {"Gersgorin norm chain", criterion5},
      {"Sylvester discriminant", criterion6},
      {"solver recovery", criterion7},
      {"self-adjoint path", criterion8},
      {"structural invariants", criterion9},
      {"round trip and determinism", criterion10},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL",
                criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
