#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

namespace jdiag {

enum class Field { Real, Complex };

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatR = Mat<double>;
using MatC = Mat<std::complex<double>>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};
template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

template <typename Scalar>
using real_t = typename Eigen::NumTraits<Scalar>::Real;

template <typename Scalar>
constexpr Field field_of() {
  return is_complex_v<Scalar> ? Field::Complex : Field::Real;
}

inline const char* to_string(Field f) { return f == Field::Real ? "real" : "complex"; }

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DimensionError : public Error {
 public:
  using Error::Error;
};
class SingularError : public Error {
 public:
  using Error::Error;
};
// A precondition the caller can check up front (wrong parameter range,
// unsupported size, non-self-adjoint input, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};
class NumericError : public Error {
 public:
  using Error::Error;
};
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace jdiag
