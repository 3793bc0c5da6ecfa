#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scmb/dataset.hpp"
#include "scmb/inference.hpp"
#include "scmb/model.hpp"
#include "scmb/polytope.hpp"

namespace scmb {

// sum_{u in support} P(u) = rhs.
struct ConstraintRow {
  std::vector<int> support;
  double rhs = 0.0;
  std::optional<Rational> exactRhs;
  std::string provenance;  // endogenous context that generated the row, e.g. "X=0|Z=1"
};

struct ConstraintSet {
  int exogenous = -1;
  int cardinality = 0;
  std::vector<ConstraintRow> rows;

  bool exact() const;
  SimplexSystem exactSystem() const;
  FloatSimplexSystem floatSystem() const;
  // Copy with P(u) = 0 added for every state outside `kept`.
  ConstraintSet restrictedTo(const std::vector<int>& kept) const;
};

// One constraint set per exogenous variable, in model.exogenous() order.
struct CredalSpec {
  std::vector<ConstraintSet> sets;

  const ConstraintSet& forExogenous(int u) const;
};

// Per-variable map for Markovian models. Throws Error(NotMarkovian).
CredalSpec markovMap(const StructuralCausalModel& model, const EndogenousBN& bn);
// Per-component map for quasi-Markovian models. Throws Error(NotQuasiMarkovian).
CredalSpec quasiMarkovMap(const StructuralCausalModel& model, const EndogenousBN& bn);

struct LpOptions {
  // Exact arithmetic is used when every rhs is exact and rows*columns is at
  // most this many entries.
  std::size_t exactLimit = 200'000;
  double tolerance = 1e-9;
};

bool isFeasible(const ConstraintSet& set, const LpOptions& options = {});
bool isCompatible(const CredalSpec& spec, const LpOptions& options = {});

struct VertexOptions {
  std::size_t budget = 100'000;
  double tolerance = 1e-9;
  bool forceFloat = false;
};

// Extreme points of K(U). Exact double description when the rhs are exact.
std::vector<Pmf> vertices(const ConstraintSet& set, const VertexOptions& options = {});
std::vector<std::vector<Rational>> exactVertices(const ConstraintSet& set, std::size_t budget = 100'000);

struct BoundsOptions {
  std::uint64_t combinationCap = 1'000'000;
  VertexOptions vertex;
  unsigned threads = 0;  // 0: SCMB_THREADS or 1
};

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
  bool defined = false;  // false when every combination leaves the query undefined
  std::uint64_t combinations = 0;
  std::uint64_t undefinedCombinations = 0;
};

// Min and max of the query over all combinations of per-U vertices.
Bounds exactBounds(const StructuralCausalModel& model, const CredalSpec& spec, const CounterfactualQuery& query,
                   const BoundsOptions& options = {});

// Per-exogenous vertex lists in the same order as spec.sets, so callers can
// build FSCMs from vertex combinations.
std::vector<std::vector<Pmf>> allVertices(const CredalSpec& spec, const VertexOptions& options = {});

// Whether the canonical spec stays feasible when every exogenous state not
// listed in `keptStates` (exo index -> allowed states) is forced to zero.
bool embeds(const CredalSpec& canonicalSpec, const std::map<int, std::vector<int>>& keptStates,
            const LpOptions& options = {});

}  // namespace scmb
