#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <doctest.h>

#include "scmb/credal.hpp"
#include "scmb/dataset.hpp"
#include "scmb/inference.hpp"
#include "scmb/io.hpp"
#include "support.hpp"

using namespace scmb;

namespace {

StructuralCausalModel study() { return parseModel(testing::modelPath("pearl-study.json")); }
Dataset table() { return Dataset::readCsv(testing::modelPath("pearl-data.csv")); }

const ConstraintRow* findRow(const ConstraintSet& set, std::vector<int> support) {
  std::sort(support.begin(), support.end());
  for (const auto& row : set.rows) {
    auto s = row.support;
    std::sort(s.begin(), s.end());
    if (s == support) return &row;
  }
  return nullptr;
}

bool satisfies(const ConstraintSet& set, const Pmf& p, double tol) {
  double total = 0.0;
  for (double x : p) {
    if (x < -tol) return false;
    total += x;
  }
  if (std::abs(total - 1.0) > tol) return false;
  for (const auto& row : set.rows) {
    double s = 0.0;
    for (int u : row.support) s += p[static_cast<std::size_t>(u)];
    if (std::abs(s - row.rhs) > tol) return false;
  }
  return true;
}

std::vector<std::vector<Rational>> sortedExact(std::vector<std::vector<Rational>> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Random quasi-Markovian model with data generated exactly from grid PMFs.
struct Instance {
  StructuralCausalModel model;
  ExoPmfs theta;
  Dataset data;
};

Instance compatibleInstance(Rng& rng, const testing::RandomModelOptions& opts, int grain) {
  auto m = testing::randomQuasiMarkovian(rng, opts);
  ExoPmfs theta(m.size());
  for (int u : m.exogenous()) theta[static_cast<std::size_t>(u)] = testing::gridPmf(rng, m.cardinality(u), grain);
  const auto joint = testing::observationalJoint(m, theta);
  auto data = testing::datasetFromJoint(m, joint, testing::ipow(grain, m.exogenous().size()));
  return {std::move(m), std::move(theta), std::move(data)};
}

// Fixes every exogenous variable to the given vertex indices.
ExoPmfs pick(const StructuralCausalModel& m, const std::vector<std::vector<Pmf>>& verts, const std::vector<std::size_t>& idx) {
  ExoPmfs theta(m.size());
  for (std::size_t i = 0; i < m.exogenous().size(); ++i) theta[static_cast<std::size_t>(m.exogenous()[i])] = verts[i][idx[i]];
  return theta;
}

}  // namespace

TEST_CASE("study table constraints on U_X") {
  const auto m = study();
  const auto spec = markovMap(m, fitEndogenous(m, table()));
  const auto& ux = spec.forExogenous(m.index("U_X"));
  CHECK(ux.cardinality == 4);
  CHECK(ux.exact());
  // States: constant 0, not Z, Z, constant 1.
  const auto* z0 = findRow(ux, {0, 2});
  const auto* z1 = findRow(ux, {0, 1});
  REQUIRE(z0 != nullptr);
  REQUIRE(z1 != nullptr);
  CHECK(*z0->exactRhs == Rational(116, 470));
  CHECK(*z1->exactRhs == Rational(120, 230));
  const auto& uz = spec.forExogenous(m.index("U_Z"));
  const auto* zrow = findRow(uz, {1});
  REQUIRE(zrow != nullptr);
  CHECK(*zrow->exactRhs == Rational(230, 700));
  CHECK(isCompatible(spec));
}

TEST_CASE("single ternary exogenous with two mechanisms") {
  // V = f(U) with f = [0, 1, 1]: P(U=0) = P(V=0), P(U=1) + P(U=2) = P(V=1).
  StructuralCausalModel m({{"V", 2, VariableKind::Endogenous}, {"U", 3, VariableKind::Exogenous}},
                          {{0, {1}, {0, 1, 1}}});
  Dataset d({"V"}, {{0}, {1}}, {3, 7});
  const auto spec = markovMap(m, fitEndogenous(m, d));
  const auto& set = spec.forExogenous(1);
  REQUIRE(set.exact());
  const auto verts = sortedExact(exactVertices(set));
  REQUIRE(verts.size() == 2);
  CHECK(verts[0] == std::vector<Rational>{Rational(3, 10), Rational(0), Rational(7, 10)});
  CHECK(verts[1] == std::vector<Rational>{Rational(3, 10), Rational(7, 10), Rational(0)});
}

TEST_CASE("two-node component sharing one exogenous variable") {
  StructuralCausalModel m({{"V1", 2, VariableKind::Endogenous},
                           {"V2", 2, VariableKind::Endogenous},
                           {"U", 5, VariableKind::Exogenous}},
                          {{0, {2}, {0, 1, 1, 0, 0}}, {1, {0, 2}, {0, 1, 0, 1, 1, 1, 1, 0, 0, 1}}});
  REQUIRE(m.quasiMarkovian());
  Dataset d({"V1", "V2"}, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {3, 6, 4, 2});
  const auto spec = quasiMarkovMap(m, fitEndogenous(m, d));
  const auto& set = spec.forExogenous(2);
  REQUIRE(set.exact());
  const auto verts = sortedExact(exactVertices(set));
  REQUIRE(verts.size() == 2);
  const Rational a(1, 5), b(2, 15), c(2, 5), r(4, 15), z(0);
  CHECK(verts[0] == std::vector<Rational>{a, b, c, z, r});
  CHECK(verts[1] == std::vector<Rational>{a, b, c, r, z});
  CHECK_THROWS_AS(markovMap(m, fitEndogenous(m, d)), Error);
}

TEST_CASE("identity mechanism gives a single point") {
  StructuralCausalModel m({{"V", 3, VariableKind::Endogenous}, {"U", 3, VariableKind::Exogenous}},
                          {{0, {1}, {2, 0, 1}}});
  Dataset d({"V"}, {{0}, {1}, {2}}, {5, 12, 3});
  const auto verts = vertices(markovMap(m, fitEndogenous(m, d)).forExogenous(1));
  REQUIRE(verts.size() == 1);
  CHECK(verts[0][0] == doctest::Approx(3.0 / 20));
  CHECK(verts[0][1] == doctest::Approx(5.0 / 20));
  CHECK(verts[0][2] == doctest::Approx(12.0 / 20));
}

TEST_CASE("compatibility") {
  SUBCASE("study table") {
    const auto m = study();
    CHECK(isCompatible(markovMap(m, fitEndogenous(m, table()))));
  }
  SUBCASE("restricted mechanisms cannot reproduce the table") {
    const auto m = parseModel(testing::modelPath("pearl-restricted.json"));
    CHECK_FALSE(isCompatible(markovMap(m, fitEndogenous(m, table()))));
  }
  SUBCASE("a set with no rows is feasible") {
    ConstraintSet empty;
    empty.exogenous = 0;
    empty.cardinality = 3;
    CHECK(isFeasible(empty));
  }
  SUBCASE("contradictory rows") {
    ConstraintSet set;
    set.exogenous = 0;
    set.cardinality = 3;
    set.rows.push_back({{0, 1}, 0.3, Rational(3, 10), "a"});
    set.rows.push_back({{0}, 0.5, Rational(1, 2), "b"});
    CHECK_FALSE(isFeasible(set));
    LpOptions floating;
    floating.exactLimit = 0;
    CHECK_FALSE(isFeasible(set, floating));
  }
}

TEST_CASE("markov and quasi-Markov maps agree on Markovian models") {
  const auto m = study();
  const auto bn = fitEndogenous(m, table());
  const auto a = markovMap(m, bn);
  const auto b = quasiMarkovMap(m, bn);
  REQUIRE(a.sets.size() == b.sets.size());
  for (std::size_t i = 0; i < a.sets.size(); ++i) {
    const auto va = sortedExact(exactVertices(a.sets[i]));
    const auto vb = sortedExact(exactVertices(b.sets[i]));
    CHECK(va == vb);
  }
}

TEST_CASE("vertices satisfy their constraints and reproduce the data") {
  Rng rng(61);
  for (int t = 0; t < 25; ++t) {
    const auto inst = compatibleInstance(rng, {2, 5, 2, 3, 5, 0.4}, 10);
    const auto& m = inst.model;
    const auto bn = fitEndogenous(m, inst.data);
    const auto spec = quasiMarkovMap(m, bn);
    REQUIRE(isCompatible(spec));
    const auto verts = allVertices(spec);
    for (std::size_t i = 0; i < verts.size(); ++i) {
      REQUIRE(!verts[i].empty());
      for (const auto& p : verts[i]) CHECK(satisfies(spec.sets[i], p, 1e-9));
    }
    // The generating PMFs lie in the credal set.
    for (std::size_t i = 0; i < spec.sets.size(); ++i) {
      CHECK(satisfies(spec.sets[i], inst.theta[static_cast<std::size_t>(m.exogenous()[i])], 1e-9));
    }
    const auto target = testing::observationalJoint(m, inst.theta);
    for (int r = 0; r < 3; ++r) {
      std::vector<std::size_t> idx;
      for (const auto& v : verts) idx.push_back(static_cast<std::size_t>(rng.belowInt(static_cast<int>(v.size()))));
      const auto joint = testing::observationalJoint(m, pick(m, verts, idx));
      for (const auto& [key, p] : target) {
        const auto it = joint.find(key);
        CHECK((it == joint.end() ? 0.0 : it->second) == doctest::Approx(p).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("more constraints never widen the set") {
  ConstraintSet set;
  set.exogenous = 0;
  set.cardinality = 4;
  set.rows.push_back({{0, 1}, 0.5, Rational(1, 2), "a"});
  const auto wide = vertices(set);
  auto narrow = set;
  narrow.rows.push_back({{0, 2}, 0.4, Rational(2, 5), "b"});
  const auto tight = vertices(narrow);
  for (int u = 0; u < 4; ++u) {
    double wlo = 1, whi = 0, tlo = 1, thi = 0;
    for (const auto& p : wide) {
      wlo = std::min(wlo, p[static_cast<std::size_t>(u)]);
      whi = std::max(whi, p[static_cast<std::size_t>(u)]);
    }
    for (const auto& p : tight) {
      tlo = std::min(tlo, p[static_cast<std::size_t>(u)]);
      thi = std::max(thi, p[static_cast<std::size_t>(u)]);
    }
    CHECK(tlo >= wlo - 1e-12);
    CHECK(thi <= whi + 1e-12);
  }
}

TEST_CASE("float and exact vertex enumeration agree") {
  Rng rng(67);
  for (int t = 0; t < 15; ++t) {
    const auto inst = compatibleInstance(rng, {2, 4, 2, 3, 6, 0.5}, 10);
    const auto spec = quasiMarkovMap(inst.model, fitEndogenous(inst.model, inst.data));
    VertexOptions floating;
    floating.forceFloat = true;
    for (const auto& set : spec.sets) {
      auto a = vertices(set);
      auto b = vertices(set, floating);
      REQUIRE(a.size() == b.size());
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a[i].size(); ++j) CHECK(std::abs(a[i][j] - b[i][j]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("exact bounds on the study contain every vertex combination") {
  const auto m = study();
  const auto spec = markovMap(m, fitEndogenous(m, table()));
  const auto q = pnsQuery(m, m.index("X"), m.index("Y"));
  const auto b = exactBounds(m, spec, q);
  REQUIRE(b.defined);
  CHECK(b.lower == doctest::Approx(0.0));
  CHECK(b.upper == doctest::Approx(0.014563367666815943).epsilon(1e-9));
  const auto verts = allVertices(spec);
  std::uint64_t combos = 1;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    if (m.exogenous()[i] != m.index("U_X")) combos *= verts[i].size();
  }
  // U_X is cut off by the intervention on X in both worlds.
  CHECK(b.combinations == combos);
  Rng rng(71);
  for (int r = 0; r < 40; ++r) {
    std::vector<std::size_t> idx;
    for (const auto& v : verts) idx.push_back(static_cast<std::size_t>(rng.belowInt(static_cast<int>(v.size()))));
    const auto value = testing::bruteForce(m, pick(m, verts, idx), q);
    REQUIRE(value.has_value());
    CHECK(*value >= b.lower - 1e-12);
    CHECK(*value <= b.upper + 1e-12);
  }
}

TEST_CASE("identifiable models give point bounds") {
  StructuralCausalModel m({{"X", 2, VariableKind::Endogenous}, {"Y", 2, VariableKind::Endogenous},
                           {"U_X", 2, VariableKind::Exogenous}, {"U_Y", 2, VariableKind::Exogenous}},
                          {{0, {2}, {0, 1}}, {1, {0, 3}, {0, 1, 1, 0}}});
  Dataset d({"X", "Y"}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {14, 6, 6, 14});
  const auto spec = markovMap(m, fitEndogenous(m, d));
  CounterfactualQuery q;
  q.kind = QueryKind::Interventional;
  q.worlds[0].interventions[0] = 1;
  q.target = {{0, 1, 1}};
  const auto b = exactBounds(m, spec, q);
  CHECK(b.combinations == 1);
  CHECK(b.lower == doctest::Approx(b.upper));
  // P(Y=1 | do(X=1)) = P(U_Y=0) = P(Y=1 | X=1).
  CHECK(b.lower == doctest::Approx(14.0 / 20));
}

TEST_CASE("exact bounds match a grid search on single-component models") {
  Rng rng(73);
  for (int t = 0; t < 4; ++t) {
    testing::RandomModelOptions opts{4, 4, 2, 4, 5, 1.0};
    const auto inst = compatibleInstance(rng, opts, 20);
    const auto& m = inst.model;
    REQUIRE(m.exogenous().size() == 1);
    const int u = m.exogenous()[0];
    const int card = m.cardinality(u);
    const auto spec = quasiMarkovMap(m, fitEndogenous(m, inst.data));
    const auto order = m.endogenousOrder();
    const auto q = pnsQuery(m, order.front(), order.back());
    const auto b = exactBounds(m, spec, q);
    REQUIRE(b.defined);
    const auto target = testing::observationalJoint(m, inst.theta);

    // Every point of the 1/100 simplex grid that reproduces the data.
    constexpr int steps = 100;
    double lo = 1.0, hi = 0.0;
    int kept = 0;
    std::vector<int> k(static_cast<std::size_t>(card), 0);
    ExoPmfs theta(m.size());
    std::function<void(int, int)> walk = [&](int i, int left) {
      if (i == card - 1) {
        k[static_cast<std::size_t>(i)] = left;
        Pmf p;
        for (int x : k) p.push_back(static_cast<double>(x) / steps);
        theta[static_cast<std::size_t>(u)] = p;
        const auto joint = testing::observationalJoint(m, theta);
        for (const auto& [key, want] : target) {
          const auto it = joint.find(key);
          if (std::abs((it == joint.end() ? 0.0 : it->second) - want) > 1e-9) return;
        }
        const auto value = testing::bruteForce(m, theta, q);
        if (!value) return;
        lo = std::min(lo, *value);
        hi = std::max(hi, *value);
        ++kept;
        return;
      }
      for (int x = 0; x <= left; ++x) {
        k[static_cast<std::size_t>(i)] = x;
        walk(i + 1, left - x);
      }
    };
    walk(0, steps);
    REQUIRE(kept > 0);
    CHECK(lo >= b.lower - 1e-9);
    CHECK(hi <= b.upper + 1e-9);
    CHECK(lo - b.lower <= 0.02);
    CHECK(b.upper - hi <= 0.02);
  }
}

TEST_CASE("embedding a sub-model into the canonical credal set") {
  const auto m = study();
  const auto spec = markovMap(m, fitEndogenous(m, table()));
  const int ux = m.index("U_X"), uy = m.index("U_Y");
  // Y mechanisms (X or not Z), (not X or not Z), (not X and Z) as canonical states.
  CHECK_FALSE(embeds(spec, {{ux, {0, 1, 2}}, {uy, {4, 7, 11}}}));
  std::vector<int> all(16);
  std::iota(all.begin(), all.end(), 0);
  CHECK(embeds(spec, {{ux, {0, 1, 2, 3}}, {uy, all}}));
  CHECK(embeds(spec, {}));
}
