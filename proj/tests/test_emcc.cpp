#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "scmb/credal.hpp"
#include "scmb/emcc.hpp"
#include "scmb/io.hpp"
#include "support.hpp"

using namespace scmb;

namespace {

StructuralCausalModel study() { return parseModel(testing::modelPath("pearl-study.json")); }
Dataset table() { return Dataset::readCsv(testing::modelPath("pearl-data.csv")); }

Dataset randomRows(const StructuralCausalModel& m, Rng& rng, int n) {
  std::vector<std::vector<int>> rows;
  for (int i = 0; i < n; ++i) {
    std::vector<int> r;
    for (int v : m.endogenous()) r.push_back(rng.belowInt(m.cardinality(v)));
    rows.push_back(r);
  }
  return Dataset(testing::endogenousIds(m), rows);
}

// sum_v n(v) log P_theta(v) by enumeration.
double enumeratedLogLik(const StructuralCausalModel& m, const ExoPmfs& theta, const Dataset& d) {
  const auto joint = testing::observationalJoint(m, theta);
  std::vector<int> cols;
  for (int v : m.endogenous()) cols.push_back(d.column(m.id(v)));
  double total = 0.0;
  for (std::size_t r = 0; r < d.rows().size(); ++r) {
    std::vector<int> key;
    for (int c : cols) key.push_back(d.rows()[r][static_cast<std::size_t>(c)]);
    const auto it = joint.find(key);
    if (it == joint.end()) return -INFINITY;
    total += static_cast<double>(d.counts()[r]) * std::log(it->second);
  }
  return total;
}

struct Instance {
  StructuralCausalModel model;
  Dataset data;
};

Instance compatibleInstance(Rng& rng, const testing::RandomModelOptions& opts, int grain) {
  auto m = testing::randomQuasiMarkovian(rng, opts);
  ExoPmfs theta(m.size());
  for (int u : m.exogenous()) theta[static_cast<std::size_t>(u)] = testing::gridPmf(rng, m.cardinality(u), grain);
  auto data = testing::datasetFromJoint(m, testing::observationalJoint(m, theta),
                                        testing::ipow(grain, m.exogenous().size()));
  return {std::move(m), std::move(data)};
}

}  // namespace

TEST_CASE("log-likelihood matches enumeration") {
  Rng rng(79);
  int finite = 0;
  for (int t = 0; t < 20; ++t) {
    const auto m = testing::randomQuasiMarkovian(rng, {2, 5, 2, 3, 5, 0.4});
    const auto d = randomRows(m, rng, 100);
    EmProblem problem(m, d);
    for (int r = 0; r < 3; ++r) {
      ExoPmfs theta(m.size());
      for (int u : m.exogenous()) theta[static_cast<std::size_t>(u)] = rng.dirichlet(static_cast<std::size_t>(m.cardinality(u)));
      const double want = enumeratedLogLik(m, theta, d);
      if (std::isinf(want)) {
        CHECK(std::isinf(problem.logLik(theta)));
      } else {
        CHECK(problem.logLik(theta) == doctest::Approx(want).epsilon(1e-10));
        ++finite;
      }
    }
  }
  CHECK(finite > 10);
}

TEST_CASE("EM never decreases the likelihood") {
  Rng rng(83);
  for (int t = 0; t < 30; ++t) {
    const auto m = testing::randomQuasiMarkovian(rng, {2, 5, 2, 3, 5, 0.4});
    const auto d = randomRows(m, rng, 80);
    EmProblem problem(m, d);
    EmOptions opts;
    opts.maxIters = 300;
    const auto run = problem.run(static_cast<std::uint64_t>(t), opts);
    REQUIRE(run.history.size() >= 2);
    for (std::size_t i = 1; i < run.history.size(); ++i) CHECK(run.history[i] >= run.history[i - 1] - 1e-12);
    CHECK(run.avgLogLik <= problem.lambdaStar() / static_cast<double>(problem.records()) + 1e-9);
  }
}

TEST_CASE("EM recovers the identifiable exogenous distribution") {
  StructuralCausalModel m({{"V", 3, VariableKind::Endogenous}, {"U", 3, VariableKind::Exogenous}},
                          {{0, {1}, {2, 0, 1}}});
  Dataset d({"V"}, {{0}, {1}, {2}}, {5, 12, 3});
  EmProblem problem(m, d);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto run = problem.run(seed);
    CHECK(run.accepted);
    CHECK(run.theta[1][0] == doctest::Approx(3.0 / 20).epsilon(1e-6));
    CHECK(run.theta[1][1] == doctest::Approx(5.0 / 20).epsilon(1e-6));
    CHECK(run.theta[1][2] == doctest::Approx(12.0 / 20).epsilon(1e-6));
  }
}

TEST_CASE("compatibility test") {
  SUBCASE("study model") {
    const auto v = compatibilityTest(study(), table(), 10);
    CHECK(v.compatible);
    CHECK(v.bestGap <= 1e-6);
  }
  SUBCASE("restricted mechanisms") {
    const auto m = parseModel(testing::modelPath("pearl-restricted.json"));
    const auto v = compatibilityTest(m, table(), 10);
    CHECK_FALSE(v.compatible);
    CHECK(v.bestGap > 1e-3);
    CHECK(v.bestLogLik < v.lambdaStar);
    EmccOptions opts;
    opts.runs = 2;
    opts.runBudget = 4;
    CHECK(testing::throwsCode([&] { runEmcc(m, table(), pnsQuery(m, m.index("X"), m.index("Y")), opts); },
                              ErrorCode::CompatibilityFailure));
  }
}

TEST_CASE("run seeds are distinct") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0ULL, 1ULL, 42ULL}) {
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(runSeed(base, i));
  }
  CHECK(seen.size() == 300);
  CHECK(runSeed(5, 3) == runSeed(5, 3));
}

TEST_CASE("EMCC values lie inside the exact bounds") {
  Rng rng(89);
  for (int t = 0; t < 8; ++t) {
    const auto inst = compatibleInstance(rng, {2, 4, 2, 3, 4, 0.4}, 10);
    const auto& m = inst.model;
    const auto order = m.endogenousOrder();
    const auto q = pnsQuery(m, order.front(), order.back());
    const auto exact = exactBounds(m, quasiMarkovMap(m, fitEndogenous(m, inst.data)), q);
    if (!exact.defined) continue;
    EmccOptions opts;
    opts.runs = 10;
    opts.seed = static_cast<std::uint64_t>(t);
    opts.em.maxIters = 100'000;
    opts.em.tol = 1e-13;
    const auto r = runEmcc(m, inst.data, q, opts);
    CHECK(r.complete);
    CHECK(r.a <= r.b);
    CHECK(r.a >= exact.lower - 1e-5);
    CHECK(r.b <= exact.upper + 1e-5);
    CHECK(*std::min_element(r.rho.begin(), r.rho.end()) == r.a);
    CHECK(*std::max_element(r.rho.begin(), r.rho.end()) == r.b);
  }
}

TEST_CASE("EMCC on the study table") {
  const auto m = study();
  const auto d = table();
  const auto q = pnsQuery(m, m.index("X"), m.index("Y"));
  SUBCASE("a single run gives a point") {
    EmccOptions opts;
    opts.runs = 1;
    const auto r = runEmcc(m, d, q, opts);
    REQUIRE(r.rho.size() == 1);
    CHECK(r.a == r.b);
  }
  SUBCASE("many runs stay inside the exact interval") {
    EmccOptions opts;
    opts.runs = 50;
    opts.seed = 11;
    const auto r = runEmcc(m, d, q, opts);
    CHECK(r.complete);
    CHECK(r.rho.size() == 50);
    CHECK(r.a >= -1e-9);
    CHECK(r.b <= 0.014563367666815943 + 1e-4);
    CHECK(r.b > r.a);
  }
}

TEST_CASE("EMCC results do not depend on the thread count") {
  const auto m = study();
  const auto d = table();
  const auto q = pnsQuery(m, m.index("X"), m.index("Y"));
  EmccOptions one;
  one.runs = 8;
  one.seed = 3;
  one.threads = 1;
  EmccOptions two = one;
  two.threads = 2;
  const auto a = runEmcc(m, d, q, one);
  const auto b = runEmcc(m, d, q, two);
  CHECK(a.rho == b.rho);
  CHECK(a.acceptedSeeds == b.acceptedSeeds);
}
