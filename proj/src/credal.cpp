#include "scmb/credal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "scmb/error.hpp"
#include "scmb/parallel.hpp"

namespace scmb {

namespace {

std::string assignmentText(const StructuralCausalModel& model, const std::vector<int>& vars,
                           const std::vector<int>& assignment) {
  std::string s;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) s += ",";
    s += model.id(vars[i]) + "=" + std::to_string(assignment[static_cast<std::size_t>(vars[i])]);
  }
  return s;
}

ConstraintSet componentConstraints(const StructuralCausalModel& model, const EndogenousBN& bn,
                                   const CComponent& comp) {
  const int u = comp.exogenous.front();
  ConstraintSet set;
  set.exogenous = u;
  set.cardinality = model.cardinality(u);

  std::set<int> inside(comp.endogenous.begin(), comp.endogenous.end());
  std::vector<int> external;
  for (int w : comp.closure) {
    if (!inside.count(w)) external.push_back(w);
  }
  std::size_t closureStates = 1;
  for (int w : comp.closure) closureStates *= static_cast<std::size_t>(model.cardinality(w));
  auto closureIndex = [&](const std::vector<int>& a) {
    std::size_t idx = 0;
    for (int w : comp.closure) {
      idx = idx * static_cast<std::size_t>(model.cardinality(w)) + static_cast<std::size_t>(a[static_cast<std::size_t>(w)]);
    }
    return idx;
  };

  // Omega_U^{w^c} for every w^c, by forward evaluation from (u, external).
  std::vector<std::vector<int>> support(closureStates);
  std::vector<int> assignment(model.size(), 0);
  std::vector<int> digits(external.size(), 0);
  std::size_t externalStates = 1;
  for (int w : external) externalStates *= static_cast<std::size_t>(model.cardinality(w));
  for (std::size_t e = 0; e < externalStates; ++e) {
    for (std::size_t i = 0; i < external.size(); ++i) assignment[static_cast<std::size_t>(external[i])] = digits[i];
    for (int s = 0; s < set.cardinality; ++s) {
      assignment[static_cast<std::size_t>(u)] = s;
      for (int v : comp.endogenous) assignment[static_cast<std::size_t>(v)] = model.apply(v, assignment);
      support[closureIndex(assignment)].push_back(s);
    }
    for (std::size_t i = external.size(); i-- > 0;) {
      if (++digits[i] < model.cardinality(external[i])) break;
      digits[i] = 0;
    }
  }

  std::set<std::pair<std::vector<int>, Rational>> seen;
  std::vector<int> wd(comp.closure.size(), 0);
  for (std::size_t idx = 0; idx < closureStates; ++idx) {
    for (std::size_t i = 0; i < comp.closure.size(); ++i) assignment[static_cast<std::size_t>(comp.closure[i])] = wd[i];
    bool observed = true;
    double rhs = 1.0;
    Rational exact = 1;
    for (int v : comp.endogenous) {
      const auto& cpt = bn.cpt(v);
      const auto ctx = contextIndex(cpt, assignment);
      if (cpt.contextCounts[ctx] == 0) {
        observed = false;
        break;
      }
      const int s = assignment[static_cast<std::size_t>(v)];
      rhs *= cpt.p(ctx, s);
      exact *= Rational(cpt.n(ctx, s), cpt.contextCounts[ctx]);
    }
    if (observed) {
      std::vector<int> sup = support[idx];
      std::sort(sup.begin(), sup.end());
      if (seen.emplace(sup, exact).second) {
        std::vector<int> heads(comp.endogenous.begin(), comp.endogenous.end());
        std::string prov = assignmentText(model, heads, assignment);
        if (!external.empty()) prov += "|" + assignmentText(model, external, assignment);
        set.rows.push_back({std::move(sup), rhs, exact, std::move(prov)});
      }
    }
    for (std::size_t i = comp.closure.size(); i-- > 0;) {
      if (++wd[i] < model.cardinality(comp.closure[i])) break;
      wd[i] = 0;
    }
  }
  return set;
}

CredalSpec buildSpec(const StructuralCausalModel& model, const EndogenousBN& bn) {
  std::map<int, ConstraintSet> byExo;
  for (const auto& comp : cComponents(model)) {
    if (comp.endogenous.empty()) {
      for (int u : comp.exogenous) byExo[u] = ConstraintSet{u, model.cardinality(u), {}};
      continue;
    }
    byExo[comp.exogenous.front()] = componentConstraints(model, bn, comp);
  }
  CredalSpec spec;
  for (int u : model.exogenous()) spec.sets.push_back(std::move(byExo.at(u)));
  return spec;
}

}  // namespace

bool ConstraintSet::exact() const {
  return std::all_of(rows.begin(), rows.end(), [](const ConstraintRow& r) { return r.exactRhs.has_value(); });
}

SimplexSystem ConstraintSet::exactSystem() const {
  SimplexSystem s;
  s.dimension = cardinality;
  for (const auto& r : rows) {
    if (!r.exactRhs) throw Error(ErrorCode::InvalidArgument, "constraint row has no exact right-hand side");
    s.supports.push_back(r.support);
    s.rhs.push_back(*r.exactRhs);
  }
  return s;
}

FloatSimplexSystem ConstraintSet::floatSystem() const {
  FloatSimplexSystem s;
  s.dimension = cardinality;
  for (const auto& r : rows) {
    s.supports.push_back(r.support);
    s.rhs.push_back(r.rhs);
  }
  return s;
}

ConstraintSet ConstraintSet::restrictedTo(const std::vector<int>& kept) const {
  ConstraintSet out = *this;
  std::vector<char> keep(static_cast<std::size_t>(cardinality), 0);
  for (int s : kept) {
    if (s < 0 || s >= cardinality) throw Error(ErrorCode::InvalidArgument, "kept state out of range");
    keep[static_cast<std::size_t>(s)] = 1;
  }
  for (int s = 0; s < cardinality; ++s) {
    if (!keep[static_cast<std::size_t>(s)]) out.rows.push_back({{s}, 0.0, Rational(0), "dropped"});
  }
  return out;
}

const ConstraintSet& CredalSpec::forExogenous(int u) const {
  for (const auto& s : sets) {
    if (s.exogenous == u) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "no constraint set for exogenous index " + std::to_string(u));
}

CredalSpec markovMap(const StructuralCausalModel& model, const EndogenousBN& bn) {
  if (!model.markovian()) throw Error(ErrorCode::NotMarkovian, "model has an exogenous variable with several children");
  return buildSpec(model, bn);
}

CredalSpec quasiMarkovMap(const StructuralCausalModel& model, const EndogenousBN& bn) {
  if (!model.quasiMarkovian()) {
    throw Error(ErrorCode::NotQuasiMarkovian, "some c-component has more than one exogenous variable");
  }
  return buildSpec(model, bn);
}

bool isFeasible(const ConstraintSet& set, const LpOptions& options) {
  if (set.rows.empty()) return true;
  const std::size_t size = (set.rows.size() + 1) * (static_cast<std::size_t>(set.cardinality) + set.rows.size() + 1);
  if (set.exact() && size <= options.exactLimit) return feasiblePoint(set.exactSystem()).has_value();
  return feasiblePoint(set.floatSystem(), options.tolerance).has_value();
}

bool isCompatible(const CredalSpec& spec, const LpOptions& options) {
  return std::all_of(spec.sets.begin(), spec.sets.end(), [&](const ConstraintSet& s) { return isFeasible(s, options); });
}

std::vector<std::vector<Rational>> exactVertices(const ConstraintSet& set, std::size_t budget) {
  return enumerateVertices(set.exactSystem(), budget);
}

std::vector<Pmf> vertices(const ConstraintSet& set, const VertexOptions& options) {
  if (set.exact() && !options.forceFloat) {
    std::vector<Pmf> out;
    for (const auto& v : exactVertices(set, options.budget)) {
      Pmf p;
      for (const auto& x : v) p.push_back(static_cast<double>(x));
      out.push_back(std::move(p));
    }
    return out;
  }
  return enumerateVertices(set.floatSystem(), options.budget, options.tolerance);
}

std::vector<std::vector<Pmf>> allVertices(const CredalSpec& spec, const VertexOptions& options) {
  std::vector<std::vector<Pmf>> out;
  for (const auto& s : spec.sets) out.push_back(vertices(s, options));
  return out;
}

Bounds exactBounds(const StructuralCausalModel& model, const CredalSpec& spec, const CounterfactualQuery& query,
                   const BoundsOptions& options) {
  CompiledQuery compiled(model, query);
  const auto& relevant = compiled.relevantExogenous();
  std::vector<std::vector<Pmf>> verts;
  std::uint64_t total = 1;
  for (int u : relevant) {
    verts.push_back(vertices(spec.forExogenous(u), options.vertex));
    total *= verts.back().size();
    if (total > options.combinationCap) {
      throw Error(ErrorCode::BudgetExceeded, "vertex combinations exceed the cap of " +
                                                 std::to_string(options.combinationCap));
    }
  }

  struct Partial {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::uint64_t undefined = 0;
  };
  const unsigned threads = threadCount(options.threads);
  const std::size_t chunks = std::min<std::uint64_t>(total, threads * 4ULL);
  std::vector<Partial> parts(chunks == 0 ? 1 : chunks);
  parallelChunks(total, threads, parts.size(), [&](std::size_t c, std::size_t begin, std::size_t end) {
    ExoPmfs pmfs(model.size());
    Partial& part = parts[c];
    for (std::size_t idx = begin; idx < end; ++idx) {
      std::size_t rest = idx;
      for (std::size_t k = verts.size(); k-- > 0;) {
        pmfs[static_cast<std::size_t>(relevant[k])] = verts[k][rest % verts[k].size()];
        rest /= verts[k].size();
      }
      auto value = compiled.evaluate(pmfs);
      if (!value) {
        ++part.undefined;
        continue;
      }
      part.lo = std::min(part.lo, *value);
      part.hi = std::max(part.hi, *value);
    }
  });
  Bounds b;
  b.combinations = total;
  b.lower = std::numeric_limits<double>::infinity();
  b.upper = -std::numeric_limits<double>::infinity();
  for (const auto& p : parts) {
    b.lower = std::min(b.lower, p.lo);
    b.upper = std::max(b.upper, p.hi);
    b.undefinedCombinations += p.undefined;
  }
  b.defined = b.undefinedCombinations < total;
  if (!b.defined) b.lower = b.upper = 0.0;
  return b;
}

bool embeds(const CredalSpec& canonicalSpec, const std::map<int, std::vector<int>>& keptStates,
            const LpOptions& options) {
  for (const auto& set : canonicalSpec.sets) {
    auto it = keptStates.find(set.exogenous);
    const ConstraintSet s = it == keptStates.end() ? set : set.restrictedTo(it->second);
    if (!isFeasible(s, options)) return false;
  }
  return true;
}

}  // namespace scmb
