#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scmb {

enum class VariableKind { Exogenous, Endogenous };

struct Variable {
  std::string id;
  int cardinality = 2;
  VariableKind kind = VariableKind::Endogenous;
};

// Deterministic map from the joint parent state to a child state. Joint parent
// states are indexed lexicographically with the last listed parent varying
// fastest; this order is part of the model file format.
struct StructuralEquation {
  int child = -1;
  std::vector<int> parents;
  std::vector<int> table;
};

using Pmf = std::vector<double>;

// Indexed by variable index. An empty entry means "not specified"; only
// exogenous variables may carry a distribution.
using ExoPmfs = std::vector<Pmf>;

class StructuralCausalModel {
 public:
  StructuralCausalModel() = default;

  // Checks shape consistency (indices, table sizes, state ranges) and throws
  // Error(ValidationError) on malformed input. Semantic problems such as
  // cycles or non-surjective equations are left to validate().
  StructuralCausalModel(std::vector<Variable> variables, std::vector<StructuralEquation> equations,
                        ExoPmfs pmfs = {});

  std::size_t size() const { return variables_.size(); }
  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(int v) const { return variables_.at(static_cast<std::size_t>(v)); }
  const std::string& id(int v) const { return variable(v).id; }
  int cardinality(int v) const { return variable(v).cardinality; }
  bool isExogenous(int v) const { return variable(v).kind == VariableKind::Exogenous; }

  int index(std::string_view id) const;
  std::optional<int> find(std::string_view id) const;

  const std::vector<int>& exogenous() const { return exogenous_; }
  const std::vector<int>& endogenous() const { return endogenous_; }

  const std::vector<StructuralEquation>& equations() const { return equations_; }
  const StructuralEquation* equationFor(int v) const;
  const StructuralEquation& equation(int v) const;

  const std::vector<int>& parents(int v) const { return parents_.at(static_cast<std::size_t>(v)); }
  const std::vector<int>& children(int v) const { return children_.at(static_cast<std::size_t>(v)); }
  std::vector<int> exogenousParents(int v) const;
  std::vector<int> endogenousParents(int v) const;

  // Row index of `eq.table` selected by a full assignment indexed by variable.
  static std::size_t parentIndex(const StructuralCausalModel& m, const StructuralEquation& eq,
                                 std::span<const int> assignment);
  // Value of endogenous `v` under `assignment` (which must cover its parents).
  int apply(int v, std::span<const int> assignment) const;

  const ExoPmfs& pmfs() const { return pmfs_; }
  bool hasPmf(int u) const;
  const Pmf& pmf(int u) const;
  bool fullySpecified() const;
  StructuralCausalModel withPmfs(ExoPmfs pmfs) const;
  StructuralCausalModel withoutPmfs() const;

  bool acyclic() const { return acyclic_; }
  // Deterministic topological order over all variables (Kahn's algorithm,
  // lowest index first). Throws Error(ValidationError) when cyclic.
  const std::vector<int>& topologicalOrder() const;
  std::vector<int> endogenousOrder() const;
  // Position of each variable in topologicalOrder().
  const std::vector<int>& topologicalRank() const;

  bool markovian() const;
  bool quasiMarkovian() const;

 private:
  void buildIndices();

  std::vector<Variable> variables_;
  std::vector<StructuralEquation> equations_;
  ExoPmfs pmfs_;
  std::map<std::string, int, std::less<>> byId_;
  std::vector<int> exogenous_;
  std::vector<int> endogenous_;
  std::vector<int> equationOf_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  std::vector<int> topo_;
  std::vector<int> rank_;
  bool acyclic_ = true;
};

// ---------------------------------------------------------------------------
// Validation

enum class IssueKind { Cycle, NonRootExogenous, NonSurjective, JointNonSurjective, MalformedPmf };

struct Issue {
  IssueKind kind;
  std::string subject;
  std::string message;
};

struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;
  bool semiMarkovian = false;
  bool markovian = false;
  bool quasiMarkovian = false;

  bool valid() const { return errors.empty(); }
  bool has(IssueKind kind) const;
};

ValidationReport validate(const StructuralCausalModel& model);

// ---------------------------------------------------------------------------
// c-components

struct CComponent {
  int index = 0;
  std::vector<int> exogenous;   // U^c
  std::vector<int> endogenous;  // V^c, topological order
  std::vector<int> closure;     // W^c: V^c plus endogenous parents, topological order
  // W_V for each V in V^c: closure members strictly preceding V topologically.
  std::map<int, std::vector<int>> contexts;
};

// Components are ordered by the topological position of their first
// endogenous node; exogenous variables without children come last.
std::vector<CComponent> cComponents(const StructuralCausalModel& model);

// Whether the joint equation of the component reaches every joint state of
// V^c. Empty when the enumeration would exceed `limit` evaluations.
std::optional<bool> jointlySurjective(const StructuralCausalModel& model, const CComponent& component,
                                      std::uint64_t limit = 50'000'000);

// ---------------------------------------------------------------------------
// Construction helpers

struct CausalGraph {
  std::vector<std::pair<std::string, int>> nodes;             // id, cardinality
  std::vector<std::pair<std::string, std::string>> arcs;      // parent, child
};

inline constexpr std::uint64_t kDefaultExogenousCap = std::uint64_t{1} << 20;

// |Omega_V|^(prod of context cardinalities), or empty when it exceeds `cap`.
std::optional<std::uint64_t> canonicalCardinality(int childCardinality, std::span<const int> contextCardinalities,
                                                  std::uint64_t cap = kDefaultExogenousCap);

// Mechanism `u` of a canonical equation, evaluated at joint endogenous parent
// state `j`: digit j of u written in base |Omega_V|.
int canonicalDigit(std::uint64_t u, std::size_t j, int childCardinality);

// Canonical Markovian model: one exogenous parent "U_<id>" per node whose
// states enumerate every deterministic map from endogenous parents to the
// node. Equation parents are the endogenous parents (graph order) followed by
// the exogenous one.
StructuralCausalModel canonicalScm(const CausalGraph& graph, std::uint64_t cap = kDefaultExogenousCap);

inline constexpr std::string_view kPrime = "'";

// Duplicates every endogenous node (suffix "'"), sharing the exogenous parents.
StructuralCausalModel twinNetwork(const StructuralCausalModel& model);

// Sub-model with Omega'_U = allowedStates (kept in ascending order). Throws
// Error(NonSurjective) when an equation, or a previously jointly surjective
// component, stops being surjective.
StructuralCausalModel restrictExogenous(const StructuralCausalModel& model, std::string_view exoId,
                                        std::vector<int> allowedStates);

// ---------------------------------------------------------------------------
// Queries

enum class QueryKind { Observational, Interventional, Counterfactual, PN, PS, PNS };

std::string_view toString(QueryKind kind);

struct World {
  std::map<int, int> interventions;  // variable -> forced state
};

struct Literal {
  int world = 0;
  int variable = -1;
  int state = 0;
};

struct CounterfactualQuery {
  QueryKind kind = QueryKind::Observational;
  std::vector<World> worlds{World{}};
  std::vector<Literal> evidence;
  std::vector<Literal> target;
  // Cause/effect for PN/PS/PNS, -1 otherwise.
  int cause = -1;
  int effect = -1;
};

CounterfactualQuery pnsQuery(const StructuralCausalModel& model, int cause, int effect);
CounterfactualQuery pnQuery(const StructuralCausalModel& model, int cause, int effect);
CounterfactualQuery psQuery(const StructuralCausalModel& model, int cause, int effect);

// Throws Error(InvalidArgument) for unknown variables, out-of-range states,
// exogenous literals, or evidence on a variable intervened in the same world.
void checkQuery(const StructuralCausalModel& model, const CounterfactualQuery& query);

// Mini-language:
//   pns:X,Y   pn:X,Y   ps:X,Y
//   do:X=1;obs:Z=0;target:Y=1        (do/obs optional, ';'-separated)
//   cf:[do X=1 | do X=0]:target Y=1,Y'=0   (optional ":obs X=1" segment)
// Primes on a variable select the world (Y -> world 0, Y' -> world 1, ...).
CounterfactualQuery parseQuery(const StructuralCausalModel& model, std::string_view text);
std::string formatQuery(const StructuralCausalModel& model, const CounterfactualQuery& query);

}  // namespace scmb
