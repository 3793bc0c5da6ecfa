#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace scmb {

using Rational = boost::multiprecision::cpp_rational;

// {p in R^n : p >= 0, sum p = 1, sum_{j in support_i} p_j = rhs_i}.
struct SimplexSystem {
  int dimension = 0;
  std::vector<std::vector<int>> supports;
  std::vector<Rational> rhs;
};

struct FloatSimplexSystem {
  int dimension = 0;
  std::vector<std::vector<int>> supports;
  std::vector<double> rhs;
};

// A feasible point, or nullopt. Exact arithmetic.
std::optional<std::vector<Rational>> feasiblePoint(const SimplexSystem& system);
// Floating-point phase one; infeasible when the residual exceeds `tol`.
std::optional<std::vector<double>> feasiblePoint(const FloatSimplexSystem& system, double tol = 1e-9);

// Extreme points by double description. Throws Error(Infeasible) for an empty
// polytope and Error(VertexBudgetExceeded) when the intermediate ray count
// exceeds `budget`.
std::vector<std::vector<Rational>> enumerateVertices(const SimplexSystem& system, std::size_t budget = 100'000);
std::vector<std::vector<double>> enumerateVertices(const FloatSimplexSystem& system, std::size_t budget = 100'000,
                                                   double tol = 1e-9);

}  // namespace scmb
