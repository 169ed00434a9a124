#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "jdiag/calculus.hpp"
#include "jdiag/matcore.hpp"
#include "jdiag/problems.hpp"
#include "jdiag/solvers.hpp"
#include "jdiag/wellposed.hpp"

namespace py = pybind11;
using namespace jdiag;

namespace {

Method parse_method(const std::string& s) {
  if (s == "gd") return Method::GradientDescent;
  if (s == "newton") return Method::NewtonCG;
  if (s == "unitary") return Method::UnitaryDescent;
  throw DomainError("unknown method '" + s + "' (expected gd, newton or unitary)");
}

template <typename S>
py::dict truth_dict(const GroundTruth<S>& t) {
  py::dict d;
  d["q"] = t.q;
  d["diagonals"] = t.diagonals;
  d["noise_level"] = t.noise_level;
  d["seed"] = t.seed;
  return d;
}

template <typename S>
void bind_field(py::module_& m) {
  using C = MatrixCollection<S>;
  m.def(
      "offdiag_cost",
      [](std::vector<Mat<S>> mats, Mat<S> q) {
        return offdiag_cost(C(std::move(mats)), TransformPoint<S>(std::move(q)));
      },
      py::arg("matrices"), py::arg("q"));
  m.def(
      "gradient",
      [](std::vector<Mat<S>> mats, Mat<S> q) {
        return gradient(C(std::move(mats)), TransformPoint<S>(std::move(q)));
      },
      py::arg("matrices"), py::arg("q"));
  m.def(
      "hessian_apply",
      [](std::vector<Mat<S>> mats, Mat<S> q, const Mat<S>& z) {
        return hessian_apply(C(std::move(mats)), TransformPoint<S>(std::move(q)), z);
      },
      py::arg("matrices"), py::arg("q"), py::arg("z"));
  m.def(
      "differential",
      [](std::vector<Mat<S>> mats, Mat<S> q, const Mat<S>& z, int order) {
        return jth_differential_f(C(std::move(mats)), TransformPoint<S>(std::move(q)), z, order);
      },
      py::arg("matrices"), py::arg("q"), py::arg("z"), py::arg("order"));
  m.def(
      "solve",
      [](std::vector<Mat<S>> mats, const Mat<S>& q0, const std::string& method, int max_iters,
         double grad_tol, double f_tol, std::uint64_t seed) {
        SolverOptions opts;
        opts.method = parse_method(method);
        opts.max_iters = max_iters;
        opts.grad_tol = grad_tol;
        opts.f_tol = f_tol;
        opts.seed = seed;
        SolverResult<S> r;
        {
          py::gil_scoped_release release;
          r = jdiag::solve(C(std::move(mats)), q0, opts);
        }
        py::dict d;
        d["q"] = r.q_final;
        d["f_history"] = r.f_history;
        d["grad_norm_history"] = r.grad_norm_history;
        d["iterations"] = r.iterations;
        d["termination"] = to_string(r.termination);
        d["min_rcond"] = r.min_rcond;
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("matrices"), py::arg("q0"), py::arg("method") = "newton",
      py::arg("max_iters") = 10000, py::arg("grad_tol") = 1e-10, py::arg("f_tol") = 1e-14,
      py::arg("seed") = 0);
  m.def(
      "discriminant",
      [](const Mat<S>& a) {
        const auto r = sylvester_discriminant(a);
        py::dict d;
        d["char_coeffs"] = r.char_coeffs;
        d["sylvester_det"] = r.sylvester_det;
        d["normalized_det"] = r.normalized_det;
        d["threshold"] = r.threshold;
        d["distinct"] = r.distinct;
        return d;
      },
      py::arg("a"));
}

template <typename S>
py::dict generate_impl(Eigen::Index n, std::size_t k, double noise, std::uint64_t seed,
                       Ensemble ensemble) {
  const auto p = generate_jointly_diagonalizable<S>(n, k, noise, seed, ensemble);
  py::dict d;
  d["matrices"] = p.collection.matrices();
  d["ground_truth"] = truth_dict(p.truth);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Approximate joint diagonalization by minimizing the off-diagonal functional";

  auto base = py::register_exception<Error>(m, "JdiagError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<SingularError>(m, "SingularError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  // Real overloads first so float64 arrays never promote to complex.
  bind_field<double>(m);
  bind_field<std::complex<double>>(m);

  m.def(
      "generate",
      [](Eigen::Index n, std::size_t k, double noise, std::uint64_t seed, const std::string& field,
         const std::string& ensemble) {
        const Ensemble e = parse_ensemble(ensemble);
        return parse_field(field) == Field::Real ? generate_impl<double>(n, k, noise, seed, e)
                                                 : generate_impl<std::complex<double>>(n, k, noise, seed, e);
      },
      py::arg("n"), py::arg("k"), py::arg("noise") = 0.0, py::arg("seed") = 0,
      py::arg("field") = "real", py::arg("ensemble") = "general");

  m.def(
      "load",
      [](const std::filesystem::path& path) {
        const CollectionFile file = load(path);
        py::dict d;
        d["field"] = to_string(file.field());
        std::visit([&](const auto& c) { d["matrices"] = c.matrices(); }, file.collection);
        if (file.ground_truth)
          std::visit([&](const auto& t) { d["ground_truth"] = truth_dict(t); }, *file.ground_truth);
        return d;
      },
      py::arg("path"));
  m.def(
      "save",
      [](const std::filesystem::path& path, const std::vector<Mat<double>>& mats) {
        save(MatrixCollection<double>(mats), path);
      },
      py::arg("path"), py::arg("matrices"));
  m.def(
      "save",
      [](const std::filesystem::path& path, const std::vector<Mat<std::complex<double>>>& mats) {
        save(MatrixCollection<std::complex<double>>(mats), path);
      },
      py::arg("path"), py::arg("matrices"));
}
