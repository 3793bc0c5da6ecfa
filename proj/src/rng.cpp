#include "scmb/rng.hpp"

#include <cmath>

namespace scmb {

std::uint64_t deriveSeed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    const std::uint64_t x = engine_();
    if (x < limit) return x % n;
  }
}

std::vector<double> Rng::dirichlet(std::size_t n) {
  std::vector<double> out(n);
  double sum = 0.0;
  for (auto& x : out) {
    x = exponential();
    sum += x;
  }
  for (auto& x : out) x /= sum;
  return out;
}

std::size_t Rng::categorical(const std::vector<double>& pmf) {
  double r = uniform();
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    if (r < pmf[i]) return i;
    r -= pmf[i];
  }
  for (std::size_t i = pmf.size(); i-- > 0;) {
    if (pmf[i] > 0.0) return i;
  }
  return 0;
}

}  // namespace scmb
