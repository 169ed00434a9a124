#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "jdiag/types.hpp"

namespace jdiag {

/// Portable Gaussian source: std::mt19937_64 (bit-exact by the C++ standard)
/// feeding 53-bit uniforms into the Marsaglia polar method. The standard
/// library distributions are avoided because their output is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  /// Standard normal in the given field; complex draws have E|z|^2 = 1.
  template <typename Scalar>
  Scalar normal_scalar() {
    if constexpr (is_complex_v<Scalar>) {
      const double re = normal();
      const double im = normal();
      return Scalar(re * M_SQRT1_2, im * M_SQRT1_2);
    } else {
      return normal();
    }
  }

  template <typename Scalar>
  Mat<Scalar> gaussian(Eigen::Index rows, Eigen::Index cols) {
    Mat<Scalar> m(rows, cols);
    // row-major fill so the stream order matches the file layout
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal_scalar<Scalar>();
    return m;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace jdiag
