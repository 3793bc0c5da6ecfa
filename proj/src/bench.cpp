#include "scmb/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "scmb/credal.hpp"
#include "scmb/credible.hpp"
#include "scmb/error.hpp"
#include "scmb/parallel.hpp"

namespace scmb {

namespace {

constexpr int kSurjectiveRetries = 10'000;
constexpr int kModelRetries = 100'000;

struct Dag {
  int n = 0;
  std::vector<std::vector<int>> parents;
  std::vector<std::vector<int>> children;
};

Dag sampleDag(const BenchConfig& config, int n, Rng& rng) {
  Dag g;
  g.n = n;
  g.parents.resize(static_cast<std::size_t>(n));
  g.children.resize(static_cast<std::size_t>(n));
  const double p = config.arcProbability > 0.0 ? config.arcProbability : std::min(1.0, 2.0 / std::max(1, n - 1));
  std::vector<std::pair<int, int>> arcs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.bernoulli(p)) arcs.emplace_back(i, j);
    }
  }
  rng.shuffle(arcs);
  for (auto [i, j] : arcs) {
    auto& pj = g.parents[static_cast<std::size_t>(j)];
    auto& ci = g.children[static_cast<std::size_t>(i)];
    if (static_cast<int>(pj.size()) >= config.maxInDegree || static_cast<int>(ci.size()) >= config.maxOutDegree) continue;
    pj.push_back(i);
    ci.push_back(j);
  }
  for (auto& v : g.parents) std::sort(v.begin(), v.end());
  for (auto& v : g.children) std::sort(v.begin(), v.end());
  return g;
}

std::vector<int> randomSurjectiveTable(std::size_t rows, int card, Rng& rng) {
  std::vector<int> table(rows);
  for (int attempt = 0; attempt < kSurjectiveRetries; ++attempt) {
    std::vector<char> seen(static_cast<std::size_t>(card), 0);
    int distinct = 0;
    for (auto& t : table) {
      t = rng.belowInt(card);
      if (!seen[static_cast<std::size_t>(t)]) {
        seen[static_cast<std::size_t>(t)] = 1;
        ++distinct;
      }
    }
    if (distinct == card) return table;
  }
  return {};
}

std::optional<StructuralCausalModel> tryModel(const BenchConfig& config, Rng& rng) {
  const int n = config.minNodes + rng.belowInt(config.maxNodes - config.minNodes + 1);
  Dag g = sampleDag(config, n, rng);

  // Roots with children become exogenous; isolated nodes stay endogenous.
  std::vector<char> exo(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    exo[static_cast<std::size_t>(i)] = g.parents[static_cast<std::size_t>(i)].empty() && !g.children[static_cast<std::size_t>(i)].empty();
  }
  for (int i = 0; i < n; ++i) {
    if (exo[static_cast<std::size_t>(i)]) continue;
    const auto& pa = g.parents[static_cast<std::size_t>(i)];
    const bool hasRoot = std::any_of(pa.begin(), pa.end(), [&](int p) { return exo[static_cast<std::size_t>(p)] != 0; });
    if (!hasRoot) {
      const int u = g.n++;
      g.parents.push_back({});
      g.children.push_back({i});
      g.parents[static_cast<std::size_t>(i)].push_back(u);
      exo.push_back(1);
    }
  }
  if (g.n > config.maxNodes) return std::nullopt;
  int endoCount = 0;
  for (int i = 0; i < g.n; ++i) endoCount += exo[static_cast<std::size_t>(i)] ? 0 : 1;
  if (endoCount < 2) return std::nullopt;

  // Variables: endogenous first in DAG order, then exogenous.
  std::vector<int> varOf(static_cast<std::size_t>(g.n), -1);
  std::vector<Variable> vars;
  int ve = 0, ue = 0;
  for (int i = 0; i < g.n; ++i) {
    if (!exo[static_cast<std::size_t>(i)]) {
      varOf[static_cast<std::size_t>(i)] = static_cast<int>(vars.size());
      vars.push_back({"V" + std::to_string(ve++), 2, VariableKind::Endogenous});
    }
  }
  for (int i = 0; i < g.n; ++i) {
    if (exo[static_cast<std::size_t>(i)]) {
      varOf[static_cast<std::size_t>(i)] = static_cast<int>(vars.size());
      vars.push_back({"U" + std::to_string(ue++), 0, VariableKind::Exogenous});
    }
  }

  // c-components: endogenous nodes linked through shared exogenous parents.
  std::vector<int> root(static_cast<std::size_t>(g.n));
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int x) {
    while (root[static_cast<std::size_t>(x)] != x) x = root[static_cast<std::size_t>(x)] = root[static_cast<std::size_t>(root[static_cast<std::size_t>(x)])];
    return x;
  };
  for (int i = 0; i < g.n; ++i) {
    if (!exo[static_cast<std::size_t>(i)]) continue;
    for (int c : g.children[static_cast<std::size_t>(i)]) root[static_cast<std::size_t>(find(c))] = find(i);
  }
  std::map<int, std::vector<int>> compExo;
  for (int i = 0; i < g.n; ++i) {
    if (exo[static_cast<std::size_t>(i)]) compExo[find(i)].push_back(i);
  }

  std::vector<StructuralEquation> eqs;
  auto endoParents = [&](int i) {
    std::vector<int> out;
    for (int p : g.parents[static_cast<std::size_t>(i)]) {
      if (!exo[static_cast<std::size_t>(p)]) out.push_back(p);
    }
    return out;
  };

  for (const auto& [rootId, exos] : compExo) {
    if (exos.size() == 1) {
      // Joint canonical specification: u enumerates one mechanism per child,
      // first child most significant.
      const int u = exos.front();
      const auto& kids = g.children[static_cast<std::size_t>(u)];
      std::vector<std::uint64_t> mech;
      std::uint64_t card = 1;
      for (int c : kids) {
        const auto m = canonicalCardinality(2, std::vector<int>(endoParents(c).size(), 2), config.maxCanonicalCardinality);
        if (!m) return std::nullopt;
        mech.push_back(*m);
        card *= *m;
        if (card > config.maxCanonicalCardinality) return std::nullopt;
      }
      vars[static_cast<std::size_t>(varOf[static_cast<std::size_t>(u)])].cardinality = static_cast<int>(card);
      for (std::size_t k = 0; k < kids.size(); ++k) {
        const int c = kids[k];
        const auto ep = endoParents(c);
        std::uint64_t below = 1;
        for (std::size_t r = k + 1; r < kids.size(); ++r) below *= mech[r];
        StructuralEquation eq;
        eq.child = varOf[static_cast<std::size_t>(c)];
        for (int p : ep) eq.parents.push_back(varOf[static_cast<std::size_t>(p)]);
        eq.parents.push_back(varOf[static_cast<std::size_t>(u)]);
        const std::size_t ctx = std::size_t{1} << ep.size();
        eq.table.resize(ctx * card);
        for (std::size_t j = 0; j < ctx; ++j) {
          for (std::uint64_t x = 0; x < card; ++x) {
            eq.table[j * card + x] = canonicalDigit((x / below) % mech[k], j, 2);
          }
        }
        eqs.push_back(std::move(eq));
      }
    } else {
      std::set<int> members;
      std::uint64_t joint = 1;
      for (int u : exos) {
        joint *= static_cast<std::uint64_t>(config.multiExoCardinality);
        if (joint > config.maxJointExoStates) return std::nullopt;
        vars[static_cast<std::size_t>(varOf[static_cast<std::size_t>(u)])].cardinality = config.multiExoCardinality;
        for (int c : g.children[static_cast<std::size_t>(u)]) members.insert(c);
      }
      for (int c : members) {
        StructuralEquation eq;
        eq.child = varOf[static_cast<std::size_t>(c)];
        std::size_t rows = 1;
        for (int p : endoParents(c)) {
          eq.parents.push_back(varOf[static_cast<std::size_t>(p)]);
          rows *= 2;
        }
        for (int p : g.parents[static_cast<std::size_t>(c)]) {
          if (!exo[static_cast<std::size_t>(p)]) continue;
          eq.parents.push_back(varOf[static_cast<std::size_t>(p)]);
          rows *= static_cast<std::size_t>(config.multiExoCardinality);
        }
        eq.table = randomSurjectiveTable(rows, 2, rng);
        if (eq.table.empty()) return std::nullopt;
        eqs.push_back(std::move(eq));
      }
    }
  }

  ExoPmfs pmfs(vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v) {
    if (vars[v].kind != VariableKind::Exogenous) continue;
    auto p = rng.dirichlet(static_cast<std::size_t>(vars[v].cardinality));
    while (std::any_of(p.begin(), p.end(), [](double x) { return !(x > 0.0); })) {
      p = rng.dirichlet(p.size());
    }
    pmfs[v] = std::move(p);
  }
  return StructuralCausalModel(std::move(vars), std::move(eqs), std::move(pmfs));
}

// PNS of the first on the last endogenous node (topological order), when the
// former is an ancestor of the latter; otherwise the query is identically 0.
std::optional<CounterfactualQuery> benchQuery(const StructuralCausalModel& model) {
  const auto order = model.endogenousOrder();
  const int cause = order.front(), effect = order.back();
  std::vector<char> seen(model.size(), 0);
  std::vector<int> stack{cause};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v == effect) return pnsQuery(model, cause, effect);
    for (int c : model.children(v)) {
      if (!seen[static_cast<std::size_t>(c)]) {
        seen[static_cast<std::size_t>(c)] = 1;
        stack.push_back(c);
      }
    }
  }
  return std::nullopt;
}

void checkRange(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, std::string("invalid benchmark config: ") + what);
}

}  // namespace

void BenchConfig::check() const {
  checkRange(minNodes >= 2 && maxNodes >= minNodes, "node range");
  checkRange(maxInDegree >= 1 && maxOutDegree >= 1, "degrees must be at least 1");
  checkRange(multiExoCardinality >= 2, "multiExoCardinality must be at least 2");
  checkRange(maxCanonicalCardinality >= 2, "maxCanonicalCardinality must be at least 2");
  checkRange(maxJointExoStates >= static_cast<std::uint64_t>(multiExoCardinality), "maxJointExoStates too small");
  checkRange(arcProbability >= 0.0 && arcProbability <= 1.0, "arcProbability must lie in [0,1]");
  checkRange(models >= 1, "models must be positive");
  checkRange(sampleSize >= 1 && batchSize >= 1 && maxBatches >= 0, "sample sizes");
  checkRange(compatibilityRestarts >= 1, "compatibilityRestarts must be positive");
  checkRange(!runCounts.empty(), "runCounts must be nonempty");
  checkRange(std::is_sorted(runCounts.begin(), runCounts.end()) && runCounts.front() >= 1, "runCounts must be increasing");
  checkRange(truthRuns >= 1, "truthRuns must be positive");
  checkRange(targetP > 0.0 && targetP < 1.0, "targetP must lie in (0,1)");
}

StructuralCausalModel sampleModel(const BenchConfig& config, Rng& rng) {
  config.check();
  for (int attempt = 0; attempt < kModelRetries; ++attempt) {
    if (auto m = tryModel(config, rng)) return std::move(*m);
  }
  throw Error(ErrorCode::BudgetExceeded, "could not sample a model within the configured limits");
}

Dataset sampleData(const StructuralCausalModel& fscm, std::int64_t n, Rng& rng) {
  if (!fscm.fullySpecified()) throw Error(ErrorCode::InvalidArgument, "sampling needs a fully specified model");
  const auto order = fscm.endogenousOrder();
  std::vector<std::string> columns;
  for (int v : order) columns.push_back(fscm.id(v));
  std::map<std::vector<int>, std::int64_t> tally;
  std::vector<int> assignment(fscm.size(), 0);
  std::vector<int> row(order.size());
  for (std::int64_t r = 0; r < n; ++r) {
    for (int v : fscm.topologicalOrder()) {
      assignment[static_cast<std::size_t>(v)] = fscm.isExogenous(v)
                                                    ? static_cast<int>(rng.categorical(fscm.pmf(v)))
                                                    : fscm.apply(v, assignment);
    }
    for (std::size_t i = 0; i < order.size(); ++i) row[i] = assignment[static_cast<std::size_t>(order[i])];
    ++tally[row];
  }
  std::vector<std::vector<int>> rows;
  std::vector<std::int64_t> counts;
  for (auto& [k, c] : tally) {
    rows.push_back(k);
    counts.push_back(c);
  }
  return Dataset(std::move(columns), rows, counts);
}

Dataset ensureCompatible(const StructuralCausalModel& model, const StructuralCausalModel& fscm, Rng& rng,
                         Dataset data, std::int64_t batch, int maxBatches, int restarts, const EmOptions& em) {
  for (int added = 0;; ++added) {
    if (!data.empty()) {
      const auto verdict = compatibilityTest(model, data, restarts, rng.next(), em);
      if (verdict.compatible) return data;
    }
    if (added >= maxBatches) {
      throw Error(ErrorCode::BudgetExceeded, "data still incompatible after " + std::to_string(maxBatches) +
                                                 " extra batches");
    }
    auto more = sampleData(fscm, batch, rng);
    data = data.empty() ? std::move(more) : data.merged(more);
  }
}

double rrmse(double a, double b, double truthLower, double truthUpper) {
  const double width = truthUpper - truthLower;
  if (!(width != 0.0)) throw Error(ErrorCode::DegenerateTruth, "true bounds coincide");
  return std::sqrt(((a - truthLower) * (a - truthLower) + (b - truthUpper) * (b - truthUpper)) / (2.0 * width * width));
}

namespace {

GroundTruth inflate(const std::vector<double>& rho, double targetP) {
  GroundTruth t;
  t.runs = static_cast<int>(rho.size());
  auto [lo, hi] = std::minmax_element(rho.begin(), rho.end());
  t.rangeLower = *lo;
  t.rangeUpper = *hi;
  t.method = "emcc";
  try {
    t.epsilon = epsilonStar(rho, targetP);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Unreachable) throw;
    t.method = "emcc-capped";
    t.epsilon = std::max(0.0, maxValidEpsilon(rho));
  }
  const double L = t.rangeUpper - t.rangeLower;
  t.lower = std::max(0.0, t.rangeLower - t.epsilon * L);
  t.upper = std::min(1.0, t.rangeUpper + t.epsilon * L);
  return t;
}

std::optional<GroundTruth> exactTruth(const StructuralCausalModel& model, const Dataset& data,
                                      const CounterfactualQuery& query, const TruthOptions& options) {
  if (!options.tryExact || !model.quasiMarkovian()) return std::nullopt;
  if (static_cast<int>(model.endogenous().size()) >= options.exactNodeLimit) return std::nullopt;
  try {
    const auto bn = fitEndogenous(model, data);
    const auto spec = quasiMarkovMap(model, bn);
    BoundsOptions bo;
    bo.combinationCap = options.combinationCap;
    bo.vertex.budget = options.vertexBudget;
    bo.threads = 1;
    const auto b = exactBounds(model, spec, query, bo);
    if (!b.defined) return std::nullopt;
    GroundTruth t;
    t.method = "exact";
    t.lower = t.rangeLower = b.lower;
    t.upper = t.rangeUpper = b.upper;
    return t;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BudgetExceeded || e.code() == ErrorCode::VertexBudgetExceeded) return std::nullopt;
    throw;
  }
}

}  // namespace

GroundTruth groundTruthBounds(const StructuralCausalModel& model, const Dataset& data,
                              const CounterfactualQuery& query, const TruthOptions& options) {
  if (auto t = exactTruth(model, data, query, options)) return *t;
  EmccOptions eo;
  eo.runs = options.runs;
  eo.seed = options.seed;
  eo.em = options.em;
  eo.threads = 1;
  const auto res = runEmcc(model, data, query, eo);
  if (res.rho.empty()) throw Error(ErrorCode::CompatibilityFailure, "query undefined in every accepted run");
  return inflate(res.rho, options.targetP);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= values.size()) return values.back();
  return values[i] + (pos - static_cast<double>(i)) * (values[i + 1] - values[i]);
}

std::vector<QuantileRow> summarize(const std::vector<ExperimentRecord>& records, const std::vector<int>& runCounts) {
  std::vector<QuantileRow> out;
  for (int r : runCounts) {
    std::vector<double> xs;
    for (const auto& rec : records) {
      if (!rec.ok()) continue;
      for (const auto& pt : rec.curve) {
        if (pt.runs == r) xs.push_back(pt.rrmse);
      }
    }
    QuantileRow row;
    row.runs = r;
    row.count = static_cast<int>(xs.size());
    if (!xs.empty()) {
      row.min = quantile(xs, 0.0);
      row.q1 = quantile(xs, 0.25);
      row.median = quantile(xs, 0.5);
      row.q3 = quantile(xs, 0.75);
      row.max = quantile(xs, 1.0);
    }
    out.push_back(row);
  }
  return out;
}

ExperimentRecord runExperiment(const BenchConfig& config, int modelIndex) {
  ExperimentRecord rec;
  rec.model = modelIndex;
  rec.seed = deriveSeed(config.seed, static_cast<std::uint64_t>(modelIndex));
  try {
    Rng rng(rec.seed);
    StructuralCausalModel fscm = sampleModel(config, rng);
    std::optional<CounterfactualQuery> picked = benchQuery(fscm);
    for (int attempt = 0; !picked; ++attempt) {
      if (attempt >= kModelRetries) throw Error(ErrorCode::BudgetExceeded, "no model with a causal query path");
      fscm = sampleModel(config, rng);
      picked = benchQuery(fscm);
    }
    const auto model = fscm.withoutPmfs();
    rec.endogenous = static_cast<int>(model.endogenous().size());
    rec.exogenous = static_cast<int>(model.exogenous().size());
    rec.quasiMarkovian = model.quasiMarkovian();
    for (int u : model.exogenous()) rec.maxExoCardinality = std::max(rec.maxExoCardinality, model.cardinality(u));
    const auto query = *picked;
    rec.query = formatQuery(model, query);

    auto data = sampleData(fscm, config.sampleSize, rng);
    data = ensureCompatible(model, fscm, rng, std::move(data), config.batchSize, config.maxBatches,
                            config.compatibilityRestarts, config.em);
    rec.records = data.total();

    // One seed stream: the curve uses prefixes of the same accepted runs that
    // feed the EMCC ground truth, so ranges are nested by construction.
    const int maxRuns = std::max(config.truthRuns, config.runCounts.back());
    EmccOptions eo;
    eo.runs = maxRuns;
    eo.seed = deriveSeed(rec.seed, 1);
    eo.em = config.em;
    eo.threads = 1;
    EmProblem problem(model, data);

    TruthOptions to;
    to.runs = config.truthRuns;
    to.targetP = config.targetP;
    to.exactNodeLimit = config.exactNodeLimit;
    to.combinationCap = config.exactCombinationCap;
    to.vertexBudget = config.exactVertexBudget;
    auto exact = exactTruth(model, data, query, to);
    const auto res = runEmcc(problem, query, eo);
    if (static_cast<int>(res.rho.size()) < config.runCounts.back()) {
      throw Error(ErrorCode::CompatibilityFailure, "only " + std::to_string(res.rho.size()) +
                                                       " accepted runs with a defined query value");
    }
    if (exact) {
      rec.truth = *exact;
    } else {
      std::vector<double> head(res.rho.begin(),
                               res.rho.begin() + std::min<std::ptrdiff_t>(config.truthRuns,
                                                                          static_cast<std::ptrdiff_t>(res.rho.size())));
      rec.truth = inflate(head, config.targetP);
    }
    double a = res.rho.front(), b = res.rho.front();
    std::size_t seen = 0;
    for (int r : config.runCounts) {
      for (; seen < static_cast<std::size_t>(r); ++seen) {
        a = std::min(a, res.rho[seen]);
        b = std::max(b, res.rho[seen]);
      }
      rec.curve.push_back({r, a, b, rrmse(a, b, rec.truth.lower, rec.truth.upper)});
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

BenchResult runBenchmark(const BenchConfig& config) {
  config.check();
  BenchResult out;
  out.config = config;
  out.records.resize(static_cast<std::size_t>(config.models));
  parallelChunks(out.records.size(), threadCount(config.threads), out.records.size(),
                 [&](std::size_t, std::size_t b, std::size_t e) {
                   for (std::size_t i = b; i < e; ++i) out.records[i] = runExperiment(config, static_cast<int>(i));
                 });
  out.summary = summarize(out.records, config.runCounts);
  return out;
}

}  // namespace scmb
