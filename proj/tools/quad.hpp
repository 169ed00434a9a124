#pragma once

#include <complex>
#include <limits>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <Eigen/Core>

namespace jdiag::cli {

// 113-bit binary floating point, used to evaluate reference values whose
// rounding must stay well below the Taylor remainders being measured.
using Quad = boost::multiprecision::cpp_bin_float_quad;
using ComplexQuad = std::complex<Quad>;

}  // namespace jdiag::cli

namespace Eigen {

template <>
struct NumTraits<jdiag::cli::Quad> : GenericNumTraits<jdiag::cli::Quad> {
  using Q = jdiag::cli::Quad;
  using Real = Q;
  using NonInteger = Q;
  using Literal = Q;
  using Nested = Q;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 8,
    AddCost = 16,
    MulCost = 32
  };
  static Q epsilon() { return std::numeric_limits<Q>::epsilon(); }
  static Q dummy_precision() { return 1000 * epsilon(); }
  static Q highest() { return (std::numeric_limits<Q>::max)(); }
  static Q lowest() { return (std::numeric_limits<Q>::lowest)(); }
  static Q infinity() { return std::numeric_limits<Q>::infinity(); }
  static Q quiet_NaN() { return std::numeric_limits<Q>::quiet_NaN(); }
  static int digits10() { return std::numeric_limits<Q>::digits10; }
};

}  // namespace Eigen
