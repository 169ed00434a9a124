#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "certify.hpp"
#include "jdiag/calculus.hpp"
#include "jdiag/problems.hpp"
#include "jdiag/rng.hpp"
#include "jdiag/solvers.hpp"
#include "jdiag/wellposed.hpp"
#include "report.hpp"

namespace jdiag::cli {

namespace {

// Raised for argument combinations CLI11 cannot express.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenerateArgs {
  long long n = 0;
  long long k = 1;
  double noise = 0;
  std::uint64_t seed = 0;
  std::string field = "real";
  std::string ensemble = "general";
  bool random = false;
  std::string out;
};

struct SolveArgs {
  std::string input;
  std::string method = "gd";
  int max_iters = SolverOptions{}.max_iters;
  double grad_tol = SolverOptions{}.grad_tol;
  double f_tol = SolverOptions{}.f_tol;
  std::uint64_t seed = 0;
  std::string q0;
  std::string trace_out;
  bool symmetrize = false;
};

struct CheckArgs {
  std::string input;
  int order = 2;
  int trials = 10;
  std::uint64_t seed = 0;
};

struct ProbeArgs {
  std::string input;
  long long rank = 1;
  std::vector<std::string> target{"random"};
  long long jmax = 100;
  std::uint64_t seed = 0;
};

struct DiscriminantArgs {
  std::string input;
  long long index = -1;
  bool all = false;
};

struct Outcome {
  json inputs;
  json outputs;
  int code = kExitOk;
};

// ---------------------------------------------------------------------------

Outcome cmd_generate(const GenerateArgs& a) {
  if (a.n < 2) throw UsageError("--n must be at least 2");
  if (a.k < 1) throw UsageError("--k must be at least 1");
  if (a.noise < 0) throw UsageError("--noise must be nonnegative");
  const Field field = parse_field(a.field);
  const Ensemble ensemble = parse_ensemble(a.ensemble);

  Outcome o;
  o.inputs = {{"n", a.n},          {"k", a.k},         {"noise", a.noise},
              {"seed", a.seed},    {"field", a.field}, {"ensemble", a.ensemble},
              {"random", a.random}, {"out", a.out}};
  auto emit = [&](auto tag) {
    using S = decltype(tag);
    if (a.random) {
      const auto c = random_collection<S>(a.n, a.k, a.seed, ensemble);
      save(c, a.out);
      o.outputs = {{"path", a.out}, {"ground_truth", false}};
    } else {
      const auto p = generate_jointly_diagonalizable<S>(a.n, a.k, a.noise, a.seed, ensemble);
      save(p, a.out);
      const double f_truth = offdiag_cost(p.collection, TransformPoint<S>(p.truth.q));
      Eigen::JacobiSVD<Mat<S>> svd(p.truth.q);
      const auto& s = svd.singularValues();
      o.outputs = {{"path", a.out},
                   {"ground_truth", true},
                   {"f_at_ground_truth", f_truth},
                   {"ground_truth_condition", s[0] / s[s.size() - 1]}};
    }
  };
  if (field == Field::Real)
    emit(double{});
  else
    emit(std::complex<double>{});
  return o;
}

template <typename S>
json solver_json(const SolverResult<S>& r) {
  json j = {{"termination", to_string(r.termination)},
            {"iterations", r.iterations},
            {"final_f", r.f_history.back()},
            {"final_grad_norm", r.grad_norm_history.back()},
            {"q_final", matrix_json(r.q_final)},
            {"f_history", r.f_history},
            {"grad_norm_history", r.grad_norm_history},
            {"step_sizes", r.step_sizes},
            {"min_rcond", r.min_rcond}};
  if (!r.cg_iterations.empty()) {
    j["cg_iterations"] = r.cg_iterations;
    j["hessian_applications"] = r.hessian_applications;
    j["cg_relative_residual"] = r.cg_relative_residual;
    j["step_radial_defect"] = r.step_radial_defect;
    j["gradient_fallbacks"] = r.gradient_fallbacks;
  }
  j["max_unitarity_defect"] = r.max_unitarity_defect;
  j["max_tangency_defect"] = r.max_tangency_defect;
  j["warnings"] = r.warnings;
  return j;
}

template <typename S>
void write_trace(const SolverResult<S>& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "iter,f,grad_norm\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.f_history.size(); ++i)
    out << i << ',' << r.f_history[i] << ',' << r.grad_norm_history[i] << '\n';
}

Method parse_method(const std::string& m) {
  if (m == "gd") return Method::GradientDescent;
  if (m == "newton") return Method::NewtonCG;
  return Method::UnitaryDescent;
}

Outcome cmd_solve(const SolveArgs& a) {
  const CollectionFile file = load(a.input);
  SolverOptions opts;
  opts.method = parse_method(a.method);
  opts.max_iters = a.max_iters;
  opts.grad_tol = a.grad_tol;
  opts.f_tol = a.f_tol;
  opts.seed = a.seed;
  opts.validate();

  Outcome o;
  o.inputs = {{"input", a.input},       {"method", a.method},   {"max_iters", a.max_iters},
              {"grad_tol", a.grad_tol}, {"f_tol", a.f_tol},     {"seed", a.seed},
              {"q0", a.q0},             {"trace_out", a.trace_out}, {"symmetrize", a.symmetrize}};
  std::visit(
      [&](const auto& given) {
        using S = typename std::decay_t<decltype(given)>::scalar_type;
        MatrixCollection<S> c = given;
        if (a.symmetrize) {
          std::vector<Mat<S>> mats;
          for (const auto& m : c) mats.push_back((m + m.adjoint()) / 2.0);
          c = MatrixCollection<S>(std::move(mats));
        }
        const Mat<S> q0 =
            a.q0.empty() ? Mat<S>(Mat<S>::Identity(c.n(), c.n())) : load_matrix<S>(a.q0, c.n());
        const auto r = solve(c, q0, opts);
        if (!a.trace_out.empty()) write_trace(r, a.trace_out);
        o.outputs = solver_json(r);
        switch (r.termination) {
          case Termination::GradTol:
          case Termination::FTol: o.code = kExitOk; break;
          case Termination::MaxIters: o.code = kExitMaxIters; break;
          default: o.code = kExitLineSearch;
        }
      },
      file.collection);
  return o;
}

Outcome cmd_check(const CheckArgs& a) {
  const CollectionFile file = load(a.input);
  Outcome o;
  o.inputs = {{"input", a.input}, {"order", a.order}, {"trials", a.trials}, {"seed", a.seed}};
  std::visit(
      [&](const auto& c) {
        const auto rep = certify_derivatives(c, a.order, a.trials, a.seed);
        json orders = json::array();
        for (const auto& oc : rep.orders) {
          json e = {{"order", oc.order},
                    {"consistency_max_rel_error", oc.consistency_error},
                    {"consistency_tolerance", oc.consistency_tolerance},
                    {"min_taylor_slope", oc.min_slope},
                    {"required_taylor_slope", oc.required_slope},
                    {"pass", oc.pass}};
          if (oc.fd_error >= 0) {
            e["fd_max_rel_error"] = oc.fd_error;
            e["fd_tolerance"] = oc.fd_tolerance;
          }
          orders.push_back(std::move(e));
        }
        o.outputs = {{"orders", orders},
                     {"trials", rep.trials},
                     {"resampled", rep.resampled},
                     {"pass", rep.pass}};
        o.code = rep.pass ? kExitOk : kExitNumeric;
      },
      file.collection);
  return o;
}

template <typename S>
Mat<S> random_rank_target(Eigen::Index n, Eigen::Index rank, std::uint64_t seed) {
  Rng rng(seed);
  const Mat<S> left = rng.gaussian<S>(n, rank);
  const Mat<S> right = rng.gaussian<S>(rank, n);
  return left * right;
}

Outcome cmd_probe(const ProbeArgs& a) {
  const CollectionFile file = load(a.input);
  const bool from_file = a.target.front() == "file";
  if (from_file && a.target.size() != 2) throw UsageError("--target file requires a PATH");
  if (!from_file && (a.target.front() != "random" || a.target.size() != 1))
    throw UsageError("--target must be 'random' or 'file PATH'");
  if (a.jmax < 1) throw UsageError("--jmax must be positive");

  Outcome o;
  o.inputs = {{"input", a.input},
              {"rank", a.rank},
              {"target", from_file ? json(a.target) : json("random")},
              {"jmax", a.jmax},
              {"seed", a.seed}};
  std::visit(
      [&](const auto& c) {
        using S = typename std::decay_t<decltype(c)>::scalar_type;
        const Eigen::Index n = c.n();
        if (a.rank < 1 || a.rank >= n)
          throw UsageError("--rank must satisfy 1 <= rank <= n - 1 (n = " + std::to_string(n) + ")");
        const Mat<S> z =
            from_file ? load_matrix<S>(a.target[1], n) : random_rank_target<S>(n, a.rank, a.seed);
        const auto target = make_target(z, a.rank);
        std::vector<long long> js(static_cast<std::size_t>(a.jmax));
        for (long long j = 1; j <= a.jmax; ++j) js[j - 1] = j;
        const auto rep = divergence_probe(c, target, js);
        std::vector<double> sigma(target.sigma.data(), target.sigma.data() + target.sigma.size());
        o.outputs = {{"verdict", to_string(rep.verdict)},
                     {"js", rep.js},
                     {"f_values", rep.f_values},
                     {"truncated", rep.truncated},
                     {"truncated_at", rep.truncated_at},
                     {"last_half_ratio", rep.last_half_ratio},
                     {"growth_exponent", rep.growth_exponent},
                     {"target_singular_values", sigma}};
      },
      file.collection);
  return o;
}

Outcome cmd_discriminant(const DiscriminantArgs& a) {
  const CollectionFile file = load(a.input);
  Outcome o;
  o.inputs = {{"input", a.input}};
  if (a.all)
    o.inputs["all"] = true;
  else
    o.inputs["index"] = a.index;
  std::visit(
      [&](const auto& c) {
        std::vector<std::size_t> which;
        if (a.all) {
          for (std::size_t i = 0; i < c.k(); ++i) which.push_back(i);
        } else {
          if (a.index < 0 || static_cast<std::size_t>(a.index) >= c.k())
            throw UsageError("--index " + std::to_string(a.index) + " out of range [0, " +
                             std::to_string(c.k() - 1) + "]");
          which.push_back(static_cast<std::size_t>(a.index));
        }
        json reports = json::array();
        for (const auto i : which) {
          const auto r = sylvester_discriminant(c[i]);
          reports.push_back({{"index", i},
                             {"char_coeffs", list_json(r.char_coeffs)},
                             {"sylvester_det", scalar_json(r.sylvester_det)},
                             {"scale", r.scale},
                             {"normalized_det", r.normalized_det},
                             {"threshold", r.threshold},
                             {"distinct", r.distinct},
                             {"relative_eigen_gap", relative_eigen_gap(c[i])}});
        }
        o.outputs = {{"reports", reports}};
      },
      file.collection);
  return o;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Approximate joint diagonalization toolkit", "jdiag"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic collection file");
  g->add_option("--n", gen.n, "Matrix side (>= 2)")->required();
  g->add_option("--k", gen.k, "Number of matrices");
  g->add_option("--noise", gen.noise, "Additive Gaussian noise level");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--field", gen.field)->check(CLI::IsMember({"real", "complex"}));
  g->add_option("--ensemble", gen.ensemble)->check(CLI::IsMember({"general", "selfadjoint"}));
  g->add_flag("--random", gen.random, "Plain Gaussian collection without ground truth");
  g->add_option("--out", gen.out, "Output path")->required();

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "Minimize the off-diagonality functional");
  s->add_option("--input", sol.input)->required()->check(CLI::ExistingFile);
  s->add_option("--method", sol.method)->check(CLI::IsMember({"gd", "newton", "unitary"}));
  s->add_option("--max-iters", sol.max_iters)->check(CLI::NonNegativeNumber);
  s->add_option("--grad-tol", sol.grad_tol)->check(CLI::PositiveNumber);
  s->add_option("--f-tol", sol.f_tol)->check(CLI::PositiveNumber);
  s->add_option("--seed", sol.seed);
  s->add_option("--q0", sol.q0, "Starting matrix (JSON nested array)")->check(CLI::ExistingFile);
  s->add_option("--trace-out", sol.trace_out, "CSV trace path");
  s->add_flag("--symmetrize", sol.symmetrize, "Replace each A_k by (A_k + A_k^*)/2 first");

  CheckArgs chk;
  auto* c = app.add_subcommand("check-derivatives", "Certify derivatives against oracles");
  c->add_option("--input", chk.input)->required()->check(CLI::ExistingFile);
  c->add_option("--order", chk.order)->check(CLI::Range(1, kMaxCertifiedOrder));
  c->add_option("--trials", chk.trials)->check(CLI::PositiveNumber);
  c->add_option("--seed", chk.seed);

  ProbeArgs prb;
  auto* p = app.add_subcommand("probe", "Sample f along a sequence tending to a rank-deficient Z");
  p->add_option("--input", prb.input)->required()->check(CLI::ExistingFile);
  p->add_option("--rank", prb.rank)->required();
  p->add_option("--target", prb.target, "'random' or 'file PATH'")->expected(1, 2);
  p->add_option("--jmax", prb.jmax);
  p->add_option("--seed", prb.seed);

  DiscriminantArgs dis;
  auto* d = app.add_subcommand("discriminant", "Sylvester distinct-eigenvalue test");
  d->add_option("--input", dis.input)->required()->check(CLI::ExistingFile);
  auto* idx = d->add_option("--index", dis.index, "Zero-based matrix index");
  auto* all = d->add_flag("--all", dis.all, "Report every matrix");
  idx->excludes(all);
  all->excludes(idx);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  std::string command;
  Outcome o;
  try {
    if (g->parsed()) {
      command = "generate";
      o = cmd_generate(gen);
    } else if (s->parsed()) {
      command = "solve";
      o = cmd_solve(sol);
    } else if (c->parsed()) {
      command = "check-derivatives";
      o = cmd_check(chk);
    } else if (p->parsed()) {
      command = "probe";
      o = cmd_probe(prb);
    } else {
      command = "discriminant";
      if (!dis.all && dis.index < 0) throw UsageError("one of --index or --all is required");
      o = cmd_discriminant(dis);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  const json report = {{"command", command},
                       {"inputs", o.inputs},
                       {"outputs", o.outputs},
                       {"wall_time_ms", ms}};
  out << report.dump(2) << "\n";
  return o.code;
}

}  // namespace jdiag::cli
