#include <algorithm>
#include <set>

#include <doctest.h>

#include "scmb/error.hpp"
#include "scmb/model.hpp"
#include "support.hpp"

using namespace scmb;

namespace {

// V1(U1), V2(V1,U2), V3(V2,U3), V4(V3,U2).
StructuralCausalModel fourNodeModel() {
  std::vector<Variable> vars{{"V1", 2, VariableKind::Endogenous}, {"V2", 2, VariableKind::Endogenous},
                             {"V3", 2, VariableKind::Endogenous}, {"V4", 2, VariableKind::Endogenous},
                             {"U1", 2, VariableKind::Exogenous},  {"U2", 4, VariableKind::Exogenous},
                             {"U3", 4, VariableKind::Exogenous}};
  std::vector<StructuralEquation> eqs{
      {0, {4}, {0, 1}},
      {1, {0, 5}, {0, 1, 0, 1, 0, 0, 1, 1}},
      {2, {1, 6}, {0, 1, 1, 0, 0, 1, 0, 1}},
      {3, {2, 5}, {1, 0, 0, 1, 0, 1, 1, 0}},
  };
  return StructuralCausalModel(vars, eqs);
}

StructuralCausalModel singleVariable(int card, std::vector<int> table) {
  return StructuralCausalModel({{"V", 2, VariableKind::Endogenous}, {"U", card, VariableKind::Exogenous}},
                               {{0, {1}, std::move(table)}});
}

}  // namespace

TEST_CASE("four-node model is semi-Markovian but not Markovian") {
  const auto m = fourNodeModel();
  const auto report = validate(m);
  CHECK(report.valid());
  CHECK(report.semiMarkovian);
  CHECK_FALSE(report.markovian);
  CHECK(report.quasiMarkovian);
}

TEST_CASE("validate reports cycles, non-root exogenous nodes and constant maps") {
  SUBCASE("cycle") {
    StructuralCausalModel m({{"V1", 2, VariableKind::Endogenous}, {"V2", 2, VariableKind::Endogenous},
                             {"U", 2, VariableKind::Exogenous}},
                            {{0, {1, 2}, {0, 1, 1, 0}}, {1, {0, 2}, {0, 1, 1, 0}}});
    CHECK(validate(m).has(IssueKind::Cycle));
    CHECK_FALSE(m.acyclic());
  }
  SUBCASE("constant equation") {
    const auto m = singleVariable(3, {0, 0, 0});
    const auto report = validate(m);
    CHECK(report.has(IssueKind::NonSurjective));
    REQUIRE_FALSE(report.errors.empty());
    CHECK(report.errors.front().subject == "V");
  }
  SUBCASE("malformed pmf") {
    const auto m = singleVariable(2, {0, 1}).withPmfs({{}, {0.5, 0.6}});
    CHECK(validate(m).has(IssueKind::MalformedPmf));
  }
}

TEST_CASE("c-components of the four-node model") {
  const auto m = fourNodeModel();
  const auto comps = cComponents(m);
  REQUIRE(comps.size() == 3);
  auto ids = [&](const std::vector<int>& vs) {
    std::vector<std::string> out;
    for (int v : vs) out.push_back(m.id(v));
    return out;
  };
  CHECK(ids(comps[0].endogenous) == std::vector<std::string>{"V1"});
  CHECK(ids(comps[1].endogenous) == std::vector<std::string>{"V2", "V4"});
  CHECK(ids(comps[2].endogenous) == std::vector<std::string>{"V3"});
  CHECK(ids(comps[1].exogenous) == std::vector<std::string>{"U2"});
  CHECK(ids(comps[1].closure) == std::vector<std::string>{"V1", "V2", "V3", "V4"});
  CHECK(ids(comps[2].closure) == std::vector<std::string>{"V2", "V3"});
  CHECK(comps[0].contexts.at(m.index("V1")).empty());
  CHECK(ids(comps[1].contexts.at(m.index("V2"))) == std::vector<std::string>{"V1"});
  CHECK(ids(comps[2].contexts.at(m.index("V3"))) == std::vector<std::string>{"V2"});
  CHECK(ids(comps[1].contexts.at(m.index("V4"))) == std::vector<std::string>{"V1", "V2", "V3"});
}

TEST_CASE("components partition the variables of random models") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto m = testing::randomQuasiMarkovian(rng, {2, 7, 3, 2, 4, 0.5});
    std::multiset<int> endo, exo;
    for (const auto& c : cComponents(m)) {
      endo.insert(c.endogenous.begin(), c.endogenous.end());
      exo.insert(c.exogenous.begin(), c.exogenous.end());
      for (const auto& [v, ctx] : c.contexts) {
        for (int w : ctx) CHECK(m.topologicalRank()[static_cast<std::size_t>(w)] < m.topologicalRank()[static_cast<std::size_t>(v)]);
      }
    }
    CHECK(std::vector<int>(endo.begin(), endo.end()) == m.endogenous());
    CHECK(std::vector<int>(exo.begin(), exo.end()) == m.exogenous());
  }
}

TEST_CASE("a shared exogenous parent yields a single component") {
  StructuralCausalModel m({{"A", 2, VariableKind::Endogenous}, {"B", 2, VariableKind::Endogenous},
                           {"C", 2, VariableKind::Endogenous}, {"U", 2, VariableKind::Exogenous}},
                          {{0, {3}, {0, 1}}, {1, {0, 3}, {0, 1, 1, 0}}, {2, {1, 3}, {0, 1, 1, 1}}});
  const auto comps = cComponents(m);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0].endogenous.size() == 3);
}

TEST_CASE("canonical cardinalities") {
  const int two[] = {2, 2};
  CHECK(canonicalCardinality(2, std::span<const int>(two, 2)) == 16u);
  CHECK(canonicalCardinality(2, std::span<const int>()) == 2u);
  const int four[] = {2, 2, 2, 2};
  CHECK(canonicalCardinality(2, std::span<const int>(four, 4)) == 65536u);
  const int five[] = {2, 2, 2, 2, 2};
  CHECK_FALSE(canonicalCardinality(2, std::span<const int>(five, 5)).has_value());
  const int ternary[] = {3};
  CHECK(canonicalCardinality(3, std::span<const int>(ternary, 1)) == 27u);
}

TEST_CASE("canonical model of the three-node study graph") {
  CausalGraph g{{{"Z", 2}, {"X", 2}, {"Y", 2}}, {{"Z", "X"}, {"Z", "Y"}, {"X", "Y"}}};
  const auto m = canonicalScm(g);
  CHECK(validate(m).valid());
  CHECK(m.markovian());
  CHECK(m.cardinality(m.index("U_Z")) == 2);
  CHECK(m.cardinality(m.index("U_X")) == 4);
  CHECK(m.cardinality(m.index("U_Y")) == 16);
  // f_Z is the identity.
  const int z = m.index("Z"), uz = m.index("U_Z");
  std::vector<int> s(m.size(), 0);
  for (int u = 0; u < 2; ++u) {
    s[static_cast<std::size_t>(uz)] = u;
    CHECK(m.apply(z, s) == u);
  }
}

TEST_CASE("canonical tables hold every mechanism exactly once") {
  Rng rng(5);
  for (int t = 0; t < 40; ++t) {
    const int n = 2 + rng.belowInt(4);
    CausalGraph g;
    for (int v = 0; v < n; ++v) g.nodes.push_back({"N" + std::to_string(v), 2 + rng.belowInt(2)});
    for (int c = 1; c < n; ++c) {
      int indegree = 0;
      for (int p = 0; p < c && indegree < 2; ++p) {
        if (rng.bernoulli(0.4) && ++indegree) g.arcs.push_back({g.nodes[static_cast<std::size_t>(p)].first, g.nodes[static_cast<std::size_t>(c)].first});
      }
    }
    const auto m = canonicalScm(g, 1u << 16);
    for (int v : m.endogenous()) {
      const auto& eq = m.equation(v);
      std::uint64_t contexts = 1;
      for (int p : eq.parents) {
        if (!m.isExogenous(p)) contexts *= static_cast<std::uint64_t>(m.cardinality(p));
      }
      const int u = m.exogenousParents(v).at(0);
      const auto card = static_cast<std::uint64_t>(m.cardinality(u));
      std::uint64_t expected = 1;
      for (std::uint64_t i = 0; i < contexts; ++i) expected *= static_cast<std::uint64_t>(m.cardinality(v));
      CHECK(card == expected);
      // The exogenous parent is listed last, so row = ctx * |U| + u.
      std::set<std::vector<int>> maps;
      for (std::uint64_t s = 0; s < card; ++s) {
        std::vector<int> f;
        for (std::uint64_t ctx = 0; ctx < contexts; ++ctx) f.push_back(eq.table[ctx * card + s]);
        maps.insert(f);
      }
      CHECK(maps.size() == card);
    }
  }
}

TEST_CASE("canonical construction rejects oversized exogenous variables") {
  CausalGraph g{{{"A", 2}, {"B", 2}, {"C", 2}, {"D", 2}, {"E", 2}},
                {{"A", "E"}, {"B", "E"}, {"C", "E"}, {"D", "E"}}};
  CHECK_NOTHROW(canonicalScm(g));
  CHECK_THROWS_AS(canonicalScm(g, 1000), Error);
}

TEST_CASE("twin network of the four-node model") {
  const auto m = fourNodeModel();
  const auto t = twinNetwork(m);
  CHECK(t.endogenous().size() == 8);
  CHECK(t.exogenous().size() == m.exogenous().size());
  std::set<std::string> kids;
  for (int c : t.children(t.index("U2"))) kids.insert(t.id(c));
  CHECK(kids == std::set<std::string>{"V2", "V4", "V2'", "V4'"});
  for (int u : m.exogenous()) CHECK(t.cardinality(t.index(m.id(u))) == m.cardinality(u));
}

TEST_CASE("twin network of a two-node chain matches the duplication rule") {
  CausalGraph g{{{"A", 2}, {"B", 2}}, {{"A", "B"}}};
  const auto m = canonicalScm(g);
  const auto t = twinNetwork(m);
  std::set<std::pair<std::string, std::string>> arcs, expected;
  for (int v = 0; v < static_cast<int>(t.size()); ++v) {
    for (int p : t.parents(v)) arcs.insert({t.id(p), t.id(v)});
  }
  for (int v = 0; v < static_cast<int>(m.size()); ++v) {
    for (int p : m.parents(v)) {
      expected.insert({m.id(p), m.id(v)});
      const std::string pid = m.isExogenous(p) ? m.id(p) : m.id(p) + "'";
      expected.insert({pid, m.id(v) + "'"});
    }
  }
  CHECK(arcs == expected);
}

TEST_CASE("restricting exogenous states") {
  CausalGraph g{{{"Z", 2}, {"X", 2}, {"Y", 2}}, {{"Z", "X"}, {"Z", "Y"}, {"X", "Y"}}};
  const auto m = canonicalScm(g);
  SUBCASE("dropping the always-treat mechanism keeps surjectivity") {
    const auto r = restrictExogenous(m, "U_X", {0, 1, 2});
    CHECK(r.cardinality(r.index("U_X")) == 3);
    CHECK(validate(r).valid());
    CHECK_FALSE(validate(r).has(IssueKind::Cycle));
  }
  SUBCASE("full state set leaves the model unchanged") {
    const auto r = restrictExogenous(m, "U_Y", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15});
    CHECK(r.equations().size() == m.equations().size());
    for (std::size_t i = 0; i < m.equations().size(); ++i) CHECK(r.equations()[i].table == m.equations()[i].table);
  }
  SUBCASE("single-state restriction of a ternary map breaks surjectivity") {
    const auto single = singleVariable(3, {0, 1, 1});
    CHECK(testing::throwsCode([&] { restrictExogenous(single, "U", {0}); }, ErrorCode::NonSurjective));
  }
}

TEST_CASE("query parsing round-trips") {
  CausalGraph g{{{"Z", 2}, {"X", 2}, {"Y", 2}}, {{"Z", "X"}, {"Z", "Y"}, {"X", "Y"}}};
  const auto m = canonicalScm(g);
  for (const char* text : {"pns:X,Y", "pn:X,Y", "ps:Z,Y", "do:X=1;obs:Z=0;target:Y=1", "target:Y=1"}) {
    const auto q = parseQuery(m, text);
    CHECK(formatQuery(m, q) == text);
  }
  const auto cf = parseQuery(m, "cf:[do X=1 | do X=0]:target Y=1,Y'=0");
  CHECK(cf.worlds.size() == 2);
  CHECK(cf.target.size() == 2);
  CHECK(parseQuery(m, formatQuery(m, cf)).target.size() == 2);
  CHECK_THROWS_AS(parseQuery(m, "pns:X,W"), Error);
  CHECK_THROWS_AS(parseQuery(m, "do:X=1;obs:X=0;target:Y=1"), Error);
  CHECK_THROWS_AS(parseQuery(m, "target:Y=2"), Error);
}
