#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace scmb {

// splitmix64 finaliser; decorrelates run/model seeds drawn from one base seed.
std::uint64_t deriveSeed(std::uint64_t base, std::uint64_t index);

// mt19937_64 with explicit conversions, so draws are identical across
// standard libraries (std distributions are implementation defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // (0, 1)
  double uniformOpen() { return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  int belowInt(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }
  bool bernoulli(double p) { return uniform() < p; }
  double exponential() { return -std::log(uniformOpen()); }
  // Symmetric Dirichlet(1) draw of dimension n.
  std::vector<double> dirichlet(std::size_t n);
  std::size_t categorical(const std::vector<double>& pmf);
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace scmb
