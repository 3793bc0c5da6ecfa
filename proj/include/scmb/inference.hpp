#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scmb/model.hpp"

namespace scmb {

// Dense table over the joint states of `scope`, last variable varying fastest.
// Scope entries are opaque node keys; `cards` gives their cardinalities.
struct Factor {
  std::vector<int> scope;
  std::vector<int> cards;
  std::vector<double> values;

  static Factor scalar(double v) { return Factor{{}, {}, {v}}; }
  std::size_t size() const { return values.size(); }
  // Value at a state vector aligned with `scope`.
  double at(std::span<const int> states) const;
};

Factor multiply(const Factor& a, const Factor& b);
Factor sumOut(const Factor& f, int var);
Factor reduce(const Factor& f, int var, int state);
// Reorders the scope; `order` must be a permutation of f.scope.
Factor permute(const Factor& f, const std::vector<int>& order);

// Probability, or nullopt when the conditioning event has probability zero.
using Probability = std::optional<double>;

// Copy of `model` with each intervened variable given no parents and a
// constant equation.
StructuralCausalModel mutilate(const StructuralCausalModel& model, const std::map<int, int>& interventions);

// Multi-world network for one query shape. Exogenous nodes are shared across
// worlds; nodes that do not lead to a literal are pruned. The structure is
// fixed at construction so that repeated evaluation under different exogenous
// PMFs (vertex combinations, EM iterates) only redoes the numeric work.
class CompiledQuery {
 public:
  CompiledQuery(const StructuralCausalModel& model, const CounterfactualQuery& query);

  // Exogenous variables the query value depends on.
  const std::vector<int>& relevantExogenous() const { return relevantExo_; }
  std::size_t nodeCount() const { return nodes_.size(); }

  Probability evaluate(const ExoPmfs& pmfs) const;
  // Same computation with an explicit elimination order over node keys
  // 0..nodeCount()-1 (keys absent from the reduced network are ignored).
  Probability evaluate(const ExoPmfs& pmfs, const std::vector<int>& order) const;

 private:
  struct Node {
    int variable = -1;
    int world = -1;  // -1 for shared exogenous nodes
    int cardinality = 0;
  };

  double eventProbability(const ExoPmfs& pmfs, bool withTarget, const std::vector<int>* order) const;

  const StructuralCausalModel* model_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<Factor> structural_;  // deterministic factors, one per endogenous node copy
  std::vector<std::pair<int, int>> targetLits_;    // node key, state
  std::vector<std::pair<int, int>> evidenceLits_;  // node key, state
  std::vector<int> exoKey_;                        // variable index -> node key or -1
  std::vector<int> relevantExo_;
};

// P(target | evidence) under the FSCM. Throws Error(InvalidArgument) when a
// relevant exogenous PMF is missing.
Probability evaluate(const StructuralCausalModel& fscm, const CounterfactualQuery& query);

Probability pns(const StructuralCausalModel& fscm, int cause, int effect);
Probability pn(const StructuralCausalModel& fscm, int cause, int effect);
Probability ps(const StructuralCausalModel& fscm, int cause, int effect);

// Joint PMF over all endogenous variables (scope in endogenous index order).
Factor endogenousJoint(const StructuralCausalModel& fscm);

// Q_c as a table over the closure W^c of a component: the probability of the
// V^c states given the outside parents, under `pmfs`.
Factor componentFactor(const StructuralCausalModel& model, const CComponent& component, const ExoPmfs& pmfs);

// Number of probabilities clamped into [0,1] since start-up.
std::uint64_t clampCount();

}  // namespace scmb
