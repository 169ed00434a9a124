#include "calculus_impl.hpp"

namespace jdiag {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  // exact: r * (n - k + i) is always divisible by i at this point
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

std::uint64_t factorial(int n) {
  std::uint64_t r = 1;
  for (int i = 2; i <= n; ++i) r *= static_cast<std::uint64_t>(i);
  return r;
}

JDIAG_INSTANTIATE_CALCULUS(double)
JDIAG_INSTANTIATE_CALCULUS(std::complex<double>)

}  // namespace jdiag
