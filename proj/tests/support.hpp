#pragma once

// Test-only oracles and model builders. Nothing here calls the inference
// engine: queries are evaluated by enumerating the joint exogenous states.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scmb/dataset.hpp"
#include "scmb/error.hpp"
#include "scmb/model.hpp"
#include "scmb/rng.hpp"

#ifndef SCMB_MODELS_DIR
#define SCMB_MODELS_DIR "models"
#endif

namespace scmb::testing {

// Code of the scmb::Error thrown by fn, or nullopt when it returns normally.
template <typename Fn>
std::optional<ErrorCode> errorOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

template <typename Fn>
bool throwsCode(Fn&& fn, ErrorCode code) {
  return errorOf(std::forward<Fn>(fn)) == code;
}

inline std::string modelPath(const std::string& name) { return std::string(SCMB_MODELS_DIR) + "/" + name; }

// Calls fn(states, weight) for every joint exogenous state with positive mass.
template <typename Fn>
void forEachExogenous(const StructuralCausalModel& m, const ExoPmfs& pmfs, Fn&& fn) {
  const auto& exo = m.exogenous();
  std::vector<int> states(m.size(), 0);
  std::vector<int> digit(exo.size(), 0);
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < exo.size(); ++i) {
      states[static_cast<std::size_t>(exo[i])] = digit[i];
      w *= pmfs[static_cast<std::size_t>(exo[i])][static_cast<std::size_t>(digit[i])];
    }
    if (w > 0.0) fn(states, w);
    std::size_t i = 0;
    for (; i < exo.size(); ++i) {
      if (++digit[i] < m.cardinality(exo[i])) break;
      digit[i] = 0;
    }
    if (i == exo.size()) return;
  }
}

// Endogenous values of one world with the given interventions.
inline std::vector<int> solveWorld(const StructuralCausalModel& m, std::vector<int> states,
                                   const std::map<int, int>& interventions) {
  for (int v : m.topologicalOrder()) {
    if (m.isExogenous(v)) continue;
    auto it = interventions.find(v);
    states[static_cast<std::size_t>(v)] = it != interventions.end() ? it->second : m.apply(v, states);
  }
  return states;
}

inline std::optional<double> bruteForce(const StructuralCausalModel& m, const ExoPmfs& pmfs,
                                        const CounterfactualQuery& q) {
  double num = 0.0, den = 0.0;
  forEachExogenous(m, pmfs, [&](const std::vector<int>& u, double w) {
    std::vector<std::vector<int>> worlds;
    for (const auto& world : q.worlds) worlds.push_back(solveWorld(m, u, world.interventions));
    auto holds = [&](const std::vector<Literal>& lits) {
      for (const auto& l : lits) {
        if (worlds[static_cast<std::size_t>(l.world)][static_cast<std::size_t>(l.variable)] != l.state) return false;
      }
      return true;
    };
    if (!holds(q.evidence)) return;
    den += w;
    if (holds(q.target)) num += w;
  });
  if (den <= 0.0) return std::nullopt;
  return num / den;
}

inline std::optional<double> bruteForce(const StructuralCausalModel& fscm, const CounterfactualQuery& q) {
  return bruteForce(fscm, fscm.pmfs(), q);
}

// P(v) over the endogenous variables, keyed by their states in endogenous order.
inline std::map<std::vector<int>, double> observationalJoint(const StructuralCausalModel& m, const ExoPmfs& pmfs) {
  std::map<std::vector<int>, double> joint;
  forEachExogenous(m, pmfs, [&](const std::vector<int>& u, double w) {
    const auto s = solveWorld(m, u, {});
    std::vector<int> key;
    for (int v : m.endogenous()) key.push_back(s[static_cast<std::size_t>(v)]);
    joint[key] += w;
  });
  return joint;
}

inline std::vector<std::string> endogenousIds(const StructuralCausalModel& m) {
  std::vector<std::string> ids;
  for (int v : m.endogenous()) ids.push_back(m.id(v));
  return ids;
}

// Dataset whose empirical distribution is exactly `joint` when every
// probability is a multiple of 1/total.
inline Dataset datasetFromJoint(const StructuralCausalModel& m, const std::map<std::vector<int>, double>& joint,
                                std::int64_t total) {
  std::vector<std::vector<int>> rows;
  std::vector<std::int64_t> counts;
  for (const auto& [key, p] : joint) {
    const auto c = static_cast<std::int64_t>(std::llround(p * static_cast<double>(total)));
    if (c == 0) continue;
    rows.push_back(key);
    counts.push_back(c);
  }
  return Dataset(endogenousIds(m), rows, counts);
}

// PMF with entries that are multiples of 1/grain.
inline Pmf gridPmf(Rng& rng, int size, int grain) {
  Pmf p(static_cast<std::size_t>(size), 0.0);
  for (int i = 0; i < grain; ++i) p[static_cast<std::size_t>(rng.belowInt(size))] += 1.0;
  for (auto& x : p) x /= grain;
  return p;
}

inline std::int64_t ipow(std::int64_t b, std::size_t e) {
  std::int64_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

struct RandomModelOptions {
  int minEndogenous = 2;
  int maxEndogenous = 5;
  int maxParents = 2;
  int minExoCardinality = 3;
  int maxExoCardinality = 6;
  double joinProbability = 0.35;  // chance a node joins an earlier c-component
};

// Quasi-Markovian model with Boolean endogenous nodes V0.. in topological
// order, one exogenous variable per c-component, random surjective tables.
inline StructuralCausalModel randomQuasiMarkovian(Rng& rng, const RandomModelOptions& o = {}) {
  while (true) {
    const int n = o.minEndogenous + rng.belowInt(o.maxEndogenous - o.minEndogenous + 1);
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
    std::vector<int> component(static_cast<std::size_t>(n));
    int components = 0;
    for (int v = 0; v < n; ++v) {
      for (int p = 0; p < v; ++p) {
        if (static_cast<int>(parents[static_cast<std::size_t>(v)].size()) < o.maxParents && rng.bernoulli(0.5)) {
          parents[static_cast<std::size_t>(v)].push_back(p);
        }
      }
      component[static_cast<std::size_t>(v)] =
          v > 0 && rng.bernoulli(o.joinProbability) ? component[static_cast<std::size_t>(rng.belowInt(v))]
                                                     : components++;
    }
    std::vector<Variable> vars;
    for (int v = 0; v < n; ++v) vars.push_back({"V" + std::to_string(v), 2, VariableKind::Endogenous});
    for (int c = 0; c < components; ++c) {
      const int card = o.minExoCardinality + rng.belowInt(o.maxExoCardinality - o.minExoCardinality + 1);
      vars.push_back({"U" + std::to_string(c), card, VariableKind::Exogenous});
    }
    std::vector<StructuralEquation> eqs;
    for (int v = 0; v < n; ++v) {
      StructuralEquation eq;
      eq.child = v;
      eq.parents = parents[static_cast<std::size_t>(v)];
      const int u = n + component[static_cast<std::size_t>(v)];
      eq.parents.push_back(u);
      const std::size_t rows = (std::size_t{1} << parents[static_cast<std::size_t>(v)].size()) *
                               static_cast<std::size_t>(vars[static_cast<std::size_t>(u)].cardinality);
      for (std::size_t r = 0; r < rows; ++r) eq.table.push_back(rng.belowInt(2));
      eqs.push_back(std::move(eq));
    }
    StructuralCausalModel m(vars, eqs);
    if (validate(m).valid() && m.quasiMarkovian()) return m;
  }
}

}  // namespace scmb::testing
