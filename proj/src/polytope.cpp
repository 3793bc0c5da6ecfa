#include "scmb/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/dynamic_bitset.hpp>
#include <boost/integer/common_factor_rt.hpp>

#include "scmb/error.hpp"

namespace scmb {

namespace {

using boost::multiprecision::cpp_int;
using Bits = boost::dynamic_bitset<>;

// Number traits so the algorithms below run on exact and floating values.
struct ExactOps {
  using Value = Rational;
  static bool zero(const Rational& x) { return x == 0; }
  static bool positive(const Rational& x) { return x > 0; }
  static bool negative(const Rational& x) { return x < 0; }
};

struct FloatOps {
  double tol;
  bool zero(double x) const { return std::abs(x) <= tol; }
  bool positive(double x) const { return x > tol; }
  bool negative(double x) const { return x < -tol; }
};

template <typename T>
struct Reduced {
  int dimension = 0;
  std::vector<int> freeColumns;             // original index of each kept column
  std::vector<std::vector<int>> supports;   // over kept columns, simplex row first
  std::vector<T> rhs;
  bool infeasible = false;
};

// Drops columns forced to zero by rows with zero right-hand side.
template <typename T, typename Ops>
Reduced<T> reduceSystem(int dimension, const std::vector<std::vector<int>>& supports, const std::vector<T>& rhs,
                        const Ops& ops) {
  if (supports.size() != rhs.size()) throw Error(ErrorCode::InvalidArgument, "support/rhs size mismatch");
  Reduced<T> out;
  out.dimension = dimension;
  std::vector<char> fixedZero(static_cast<std::size_t>(dimension), 0);
  for (std::size_t i = 0; i < supports.size(); ++i) {
    for (int j : supports[i]) {
      if (j < 0 || j >= dimension) throw Error(ErrorCode::InvalidArgument, "support index out of range");
    }
    if (ops.negative(rhs[i])) out.infeasible = true;
    if (ops.zero(rhs[i])) {
      for (int j : supports[i]) fixedZero[static_cast<std::size_t>(j)] = 1;
    }
  }
  std::vector<int> newIndex(static_cast<std::size_t>(dimension), -1);
  for (int j = 0; j < dimension; ++j) {
    if (!fixedZero[static_cast<std::size_t>(j)]) {
      newIndex[static_cast<std::size_t>(j)] = static_cast<int>(out.freeColumns.size());
      out.freeColumns.push_back(j);
    }
  }
  auto addRow = [&](std::vector<int> support, const T& b) {
    if (support.empty()) {
      if (!ops.zero(b)) out.infeasible = true;
      return;
    }
    out.supports.push_back(std::move(support));
    out.rhs.push_back(b);
  };
  std::vector<int> all(out.freeColumns.size());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
  addRow(all, T(1));
  for (std::size_t i = 0; i < supports.size(); ++i) {
    if (ops.zero(rhs[i])) continue;
    std::vector<int> s;
    for (int j : supports[i]) {
      if (newIndex[static_cast<std::size_t>(j)] >= 0) s.push_back(newIndex[static_cast<std::size_t>(j)]);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    addRow(std::move(s), rhs[i]);
  }
  return out;
}

template <typename T, typename Ops>
std::optional<std::vector<T>> phaseOne(const Reduced<T>& sys, const Ops& ops, double objTol) {
  if (sys.infeasible) return std::nullopt;
  const std::size_t n = sys.freeColumns.size();
  const std::size_t m = sys.supports.size();
  const std::size_t cols = n + m;
  std::vector<std::vector<T>> tab(m, std::vector<T>(cols + 1, T(0)));
  std::vector<T> obj(cols + 1, T(0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (int j : sys.supports[i]) tab[i][static_cast<std::size_t>(j)] = T(1);
    tab[i][n + i] = T(1);
    tab[i][cols] = sys.rhs[i];
    basis[i] = n + i;
    for (int j : sys.supports[i]) obj[static_cast<std::size_t>(j)] -= T(1);
    obj[cols] -= sys.rhs[i];
  }
  for (std::size_t iter = 0;; ++iter) {
    if (iter > 50'000) throw Error(ErrorCode::NonConvergent, "simplex iteration limit reached");
    std::size_t enter = cols;
    for (std::size_t j = 0; j < cols; ++j) {
      if (ops.negative(obj[j])) {
        enter = j;
        break;
      }
    }
    if (enter == cols) break;
    std::size_t leave = m;
    T best{};
    for (std::size_t i = 0; i < m; ++i) {
      if (!ops.positive(tab[i][enter])) continue;
      T ratio = tab[i][cols] / tab[i][enter];
      if (leave == m || ratio < best || (!(best < ratio) && basis[i] < basis[leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave == m) break;  // unbounded direction cannot occur in phase one
    const T piv = tab[leave][enter];
    for (auto& x : tab[leave]) x /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave || ops.zero(tab[i][enter])) continue;
      const T f = tab[i][enter];
      for (std::size_t j = 0; j <= cols; ++j) {
        if (!ops.zero(tab[leave][j])) tab[i][j] -= f * tab[leave][j];
      }
    }
    if (!ops.zero(obj[enter])) {
      const T f = obj[enter];
      for (std::size_t j = 0; j <= cols; ++j) {
        if (!ops.zero(tab[leave][j])) obj[j] -= f * tab[leave][j];
      }
    }
    basis[leave] = enter;
  }
  // obj[cols] holds minus the residual sum of artificials.
  T residual = -obj[cols];
  if constexpr (std::is_same_v<T, double>) {
    if (residual > objTol) return std::nullopt;
  } else {
    if (residual != 0) return std::nullopt;
  }
  std::vector<T> x(static_cast<std::size_t>(sys.dimension), T(0));
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) x[static_cast<std::size_t>(sys.freeColumns[basis[i]])] = tab[i][cols];
  }
  return x;
}

// ---------------------------------------------------------------------------
// Double description on the cone {y >= 0 : M y = 0}, y = (x, s).

void normalize(std::vector<cpp_int>& v) {
  cpp_int g = 0;
  for (const auto& x : v) {
    if (x != 0) g = g == 0 ? cpp_int(abs(x)) : boost::multiprecision::gcd(g, cpp_int(abs(x)));
  }
  if (g > 1) {
    for (auto& x : v) x /= g;
  }
}

void normalize(std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  if (m > 0.0) {
    for (double& x : v) x /= m;
  }
}

int sign(const cpp_int& x, const ExactOps&) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }
int sign(double x, const FloatOps& ops) { return ops.positive(x) ? 1 : (ops.negative(x) ? -1 : 0); }

std::vector<std::vector<cpp_int>> kernelBasis(const std::vector<std::vector<Rational>>& rowsIn, std::size_t cols) {
  auto rows = rowsIn;
  std::vector<std::size_t> pivotCol;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows.size(); ++c) {
    std::size_t p = r;
    while (p < rows.size() && rows[p][c] == 0) ++p;
    if (p == rows.size()) continue;
    std::swap(rows[p], rows[r]);
    const Rational piv = rows[r][c];
    for (auto& x : rows[r]) x /= piv;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      const Rational f = rows[i][c];
      for (std::size_t j = 0; j < cols; ++j) rows[i][j] -= f * rows[r][j];
    }
    pivotCol.push_back(c);
    ++r;
  }
  std::vector<char> isPivot(cols, 0);
  for (auto c : pivotCol) isPivot[c] = 1;
  std::vector<std::vector<cpp_int>> basis;
  for (std::size_t f = 0; f < cols; ++f) {
    if (isPivot[f]) continue;
    std::vector<Rational> v(cols, Rational(0));
    v[f] = 1;
    for (std::size_t i = 0; i < pivotCol.size(); ++i) v[pivotCol[i]] = -rows[i][f];
    cpp_int den = 1;
    for (const auto& x : v) den = boost::multiprecision::lcm(den, boost::multiprecision::denominator(x));
    std::vector<cpp_int> iv(cols);
    for (std::size_t j = 0; j < cols; ++j) iv[j] = boost::multiprecision::numerator(v[j]) * (den / boost::multiprecision::denominator(v[j]));
    normalize(iv);
    basis.push_back(std::move(iv));
  }
  return basis;
}

std::vector<std::vector<double>> kernelBasis(const std::vector<std::vector<double>>& rowsIn, std::size_t cols,
                                             double tol) {
  auto rows = rowsIn;
  std::vector<std::size_t> pivotCol;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows.size(); ++c) {
    std::size_t p = r;
    for (std::size_t i = r + 1; i < rows.size(); ++i) {
      if (std::abs(rows[i][c]) > std::abs(rows[p][c])) p = i;
    }
    if (std::abs(rows[p][c]) <= tol) continue;
    std::swap(rows[p], rows[r]);
    const double piv = rows[r][c];
    for (auto& x : rows[r]) x /= piv;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0.0) continue;
      const double f = rows[i][c];
      for (std::size_t j = 0; j < cols; ++j) rows[i][j] -= f * rows[r][j];
    }
    pivotCol.push_back(c);
    ++r;
  }
  std::vector<char> isPivot(cols, 0);
  for (auto c : pivotCol) isPivot[c] = 1;
  std::vector<std::vector<double>> basis;
  for (std::size_t f = 0; f < cols; ++f) {
    if (isPivot[f]) continue;
    std::vector<double> v(cols, 0.0);
    v[f] = 1.0;
    for (std::size_t i = 0; i < pivotCol.size(); ++i) v[pivotCol[i]] = -rows[i][f];
    normalize(v);
    basis.push_back(std::move(v));
  }
  return basis;
}

template <typename V>
struct Ray {
  std::vector<V> v;
  Bits zero;
};

template <typename V, typename Ops>
std::vector<std::vector<V>> doubleDescription(std::vector<std::vector<V>> lines, std::size_t cols, const Ops& ops,
                                              std::size_t budget) {
  std::vector<Ray<V>> rays;
  const std::size_t kernelDim = lines.size();
  Bits processed(cols);
  for (std::size_t i = 0; i < cols; ++i) {
    // A line crossing the hyperplane turns into a ray.
    std::size_t li = lines.size();
    for (std::size_t l = 0; l < lines.size(); ++l) {
      if (sign(lines[l][i], ops) != 0) {
        li = l;
        break;
      }
    }
    if (li < lines.size()) {
      auto ell = lines[li];
      if (sign(ell[i], ops) < 0) {
        for (auto& x : ell) x = -x;
      }
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(li));
      for (auto& other : lines) {
        if (sign(other[i], ops) == 0) continue;
        const V a = ell[i], b = other[i];
        for (std::size_t j = 0; j < cols; ++j) other[j] = a * other[j] - b * ell[j];
        other[i] = V(0);
        normalize(other);
      }
      for (auto& r : rays) {
        if (sign(r.v[i], ops) != 0) {
          const V a = ell[i], b = r.v[i];
          for (std::size_t j = 0; j < cols; ++j) r.v[j] = a * r.v[j] - b * ell[j];
          normalize(r.v);
        }
        r.v[i] = V(0);
        r.zero.set(i);
      }
      Ray<V> nr{ell, processed};
      rays.push_back(std::move(nr));
      processed.set(i);
      continue;
    }

    std::vector<std::size_t> pos, neg;
    for (std::size_t r = 0; r < rays.size(); ++r) {
      const int s = sign(rays[r].v[i], ops);
      if (s > 0) pos.push_back(r);
      if (s < 0) neg.push_back(r);
    }
    std::vector<Ray<V>> next;
    for (auto& r : rays) {
      const int s = sign(r.v[i], ops);
      if (s > 0) next.push_back(r);
      if (s == 0) {
        next.push_back(r);
        next.back().v[i] = V(0);
        next.back().zero.set(i);
      }
    }
    const std::size_t pointedDim = kernelDim - lines.size();
    for (auto p : pos) {
      for (auto q : neg) {
        Bits common = rays[p].zero & rays[q].zero;
        if (common.count() + 2 < pointedDim) continue;
        bool adjacent = true;
        for (std::size_t r = 0; r < rays.size() && adjacent; ++r) {
          if (r == p || r == q) continue;
          if (common.is_subset_of(rays[r].zero)) adjacent = false;
        }
        if (!adjacent) continue;
        Ray<V> nr;
        const V a = rays[p].v[i], b = rays[q].v[i];
        nr.v.resize(cols);
        for (std::size_t j = 0; j < cols; ++j) nr.v[j] = a * rays[q].v[j] - b * rays[p].v[j];
        nr.v[i] = V(0);
        normalize(nr.v);
        nr.zero = common;
        nr.zero.set(i);
        next.push_back(std::move(nr));
        if (next.size() > budget) {
          throw Error(ErrorCode::VertexBudgetExceeded, "vertex enumeration exceeded the budget of " +
                                                           std::to_string(budget) + " rays");
        }
      }
    }
    rays = std::move(next);
    processed.set(i);
  }
  std::vector<std::vector<V>> out;
  for (auto& r : rays) out.push_back(std::move(r.v));
  return out;
}

}  // namespace

std::optional<std::vector<Rational>> feasiblePoint(const SimplexSystem& system) {
  auto red = reduceSystem(system.dimension, system.supports, system.rhs, ExactOps{});
  return phaseOne(red, ExactOps{}, 0.0);
}

std::optional<std::vector<double>> feasiblePoint(const FloatSimplexSystem& system, double tol) {
  FloatOps ops{1e-12};
  auto red = reduceSystem(system.dimension, system.supports, system.rhs, FloatOps{tol});
  return phaseOne(red, ops, tol);
}

std::vector<std::vector<Rational>> enumerateVertices(const SimplexSystem& system, std::size_t budget) {
  auto red = reduceSystem(system.dimension, system.supports, system.rhs, ExactOps{});
  if (red.infeasible) throw Error(ErrorCode::Infeasible, "constraint system is infeasible");
  const std::size_t k = red.freeColumns.size();
  const std::size_t cols = k + 1;
  std::vector<std::vector<Rational>> m;
  for (std::size_t i = 0; i < red.supports.size(); ++i) {
    std::vector<Rational> row(cols, Rational(0));
    for (int j : red.supports[i]) row[static_cast<std::size_t>(j)] = 1;
    row[k] = -red.rhs[i];
    m.push_back(std::move(row));
  }
  auto rays = doubleDescription(kernelBasis(m, cols), cols, ExactOps{}, budget);
  std::set<std::vector<Rational>> unique;
  for (const auto& r : rays) {
    if (r[k] <= 0) continue;
    std::vector<Rational> x(static_cast<std::size_t>(system.dimension), Rational(0));
    for (std::size_t j = 0; j < k; ++j) x[static_cast<std::size_t>(red.freeColumns[j])] = Rational(r[j], r[k]);
    unique.insert(std::move(x));
  }
  if (unique.empty()) throw Error(ErrorCode::Infeasible, "constraint system is infeasible");
  return {unique.begin(), unique.end()};
}

std::vector<std::vector<double>> enumerateVertices(const FloatSimplexSystem& system, std::size_t budget, double tol) {
  auto red = reduceSystem(system.dimension, system.supports, system.rhs, FloatOps{tol});
  if (red.infeasible) throw Error(ErrorCode::Infeasible, "constraint system is infeasible");
  const std::size_t k = red.freeColumns.size();
  const std::size_t cols = k + 1;
  std::vector<std::vector<double>> m;
  for (std::size_t i = 0; i < red.supports.size(); ++i) {
    std::vector<double> row(cols, 0.0);
    for (int j : red.supports[i]) row[static_cast<std::size_t>(j)] = 1.0;
    row[k] = -red.rhs[i];
    m.push_back(std::move(row));
  }
  FloatOps ops{tol};
  auto rays = doubleDescription(kernelBasis(m, cols, tol), cols, ops, budget);
  std::vector<std::vector<double>> out;
  for (const auto& r : rays) {
    if (!ops.positive(r[k])) continue;
    std::vector<double> x(static_cast<std::size_t>(system.dimension), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      double v = r[j] / r[k];
      x[static_cast<std::size_t>(red.freeColumns[j])] = std::abs(v) <= tol ? 0.0 : v;
    }
    bool dup = false;
    for (const auto& y : out) {
      double d = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) d = std::max(d, std::abs(x[j] - y[j]));
      if (d <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(std::move(x));
  }
  if (out.empty()) throw Error(ErrorCode::Infeasible, "constraint system is infeasible");
  return out;
}

}  // namespace scmb
