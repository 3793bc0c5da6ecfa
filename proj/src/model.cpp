#include "scmb/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "scmb/error.hpp"

namespace scmb {

std::string_view toString(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::CardinalityOverflow: return "CardinalityOverflow";
    case ErrorCode::NonSurjective: return "NonSurjective";
    case ErrorCode::NotMarkovian: return "NotMarkovian";
    case ErrorCode::NotQuasiMarkovian: return "NotQuasiMarkovian";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::VertexBudgetExceeded: return "VertexBudgetExceeded";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::CompatibilityFailure: return "CompatibilityFailure";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::InvalidEpsilon: return "InvalidEpsilon";
    case ErrorCode::CaseMismatch: return "CaseMismatch";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::DegenerateTruth: return "DegenerateTruth";
  }
  return "Unknown";
}

namespace {

constexpr std::uint64_t kMaxTableSize = std::uint64_t{1} << 28;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::ValidationError, msg); }

}  // namespace

StructuralCausalModel::StructuralCausalModel(std::vector<Variable> variables,
                                             std::vector<StructuralEquation> equations, ExoPmfs pmfs)
    : variables_(std::move(variables)), equations_(std::move(equations)), pmfs_(std::move(pmfs)) {
  if (pmfs_.empty()) pmfs_.resize(variables_.size());
  if (pmfs_.size() != variables_.size()) invalid("exogenous PMF vector must have one entry per variable");
  buildIndices();
}

void StructuralCausalModel::buildIndices() {
  const auto n = static_cast<int>(variables_.size());
  for (int v = 0; v < n; ++v) {
    const auto& var = variables_[static_cast<std::size_t>(v)];
    if (var.id.empty()) invalid("variable with empty id");
    if (var.cardinality < 1) invalid("variable '" + var.id + "' has cardinality < 1");
    if (!byId_.emplace(var.id, v).second) invalid("duplicate variable id '" + var.id + "'");
    (var.kind == VariableKind::Exogenous ? exogenous_ : endogenous_).push_back(v);
  }

  equationOf_.assign(variables_.size(), -1);
  parents_.assign(variables_.size(), {});
  children_.assign(variables_.size(), {});
  for (std::size_t e = 0; e < equations_.size(); ++e) {
    const auto& eq = equations_[e];
    if (eq.child < 0 || eq.child >= n) invalid("equation with unknown child index");
    const auto& childVar = variables_[static_cast<std::size_t>(eq.child)];
    if (equationOf_[static_cast<std::size_t>(eq.child)] >= 0) invalid("two equations for '" + childVar.id + "'");
    equationOf_[static_cast<std::size_t>(eq.child)] = static_cast<int>(e);
    std::uint64_t rows = 1;
    std::set<int> seen;
    for (int p : eq.parents) {
      if (p < 0 || p >= n) invalid("equation for '" + childVar.id + "' references an unknown parent");
      if (!seen.insert(p).second) invalid("equation for '" + childVar.id + "' lists a parent twice");
      rows *= static_cast<std::uint64_t>(variables_[static_cast<std::size_t>(p)].cardinality);
      if (rows > kMaxTableSize) invalid("equation table for '" + childVar.id + "' is too large");
    }
    if (eq.table.size() != rows) {
      invalid("equation for '" + childVar.id + "' has " + std::to_string(eq.table.size()) + " entries, expected " +
              std::to_string(rows));
    }
    for (int s : eq.table) {
      if (s < 0 || s >= childVar.cardinality) invalid("equation for '" + childVar.id + "' maps to an invalid state");
    }
    parents_[static_cast<std::size_t>(eq.child)] = eq.parents;
    for (int p : eq.parents) children_[static_cast<std::size_t>(p)].push_back(eq.child);
  }
  for (int v : endogenous_) {
    if (equationOf_[static_cast<std::size_t>(v)] < 0) {
      invalid("endogenous variable '" + variables_[static_cast<std::size_t>(v)].id + "' has no equation");
    }
  }
  for (int v = 0; v < n; ++v) {
    const auto& pmf = pmfs_[static_cast<std::size_t>(v)];
    if (pmf.empty()) continue;
    if (variables_[static_cast<std::size_t>(v)].kind != VariableKind::Exogenous) {
      invalid("PMF given for endogenous variable '" + variables_[static_cast<std::size_t>(v)].id + "'");
    }
    if (static_cast<int>(pmf.size()) != variables_[static_cast<std::size_t>(v)].cardinality) {
      invalid("PMF for '" + variables_[static_cast<std::size_t>(v)].id + "' has the wrong length");
    }
  }
  for (auto& c : children_) std::sort(c.begin(), c.end());

  // Kahn's algorithm, lowest index first.
  std::vector<int> indegree(variables_.size(), 0);
  for (int v = 0; v < n; ++v) indegree[static_cast<std::size_t>(v)] = static_cast<int>(parents_[static_cast<std::size_t>(v)].size());
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < n; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);
  }
  topo_.clear();
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    topo_.push_back(v);
    for (int c : children_[static_cast<std::size_t>(v)]) {
      if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push(c);
    }
  }
  acyclic_ = topo_.size() == variables_.size();
  rank_.assign(variables_.size(), -1);
  if (acyclic_) {
    for (std::size_t i = 0; i < topo_.size(); ++i) rank_[static_cast<std::size_t>(topo_[i])] = static_cast<int>(i);
  }
}

int StructuralCausalModel::index(std::string_view id) const {
  auto it = byId_.find(id);
  if (it == byId_.end()) throw Error(ErrorCode::InvalidArgument, "unknown variable '" + std::string(id) + "'");
  return it->second;
}

std::optional<int> StructuralCausalModel::find(std::string_view id) const {
  auto it = byId_.find(id);
  if (it == byId_.end()) return std::nullopt;
  return it->second;
}

const StructuralEquation* StructuralCausalModel::equationFor(int v) const {
  int e = equationOf_.at(static_cast<std::size_t>(v));
  return e < 0 ? nullptr : &equations_[static_cast<std::size_t>(e)];
}

const StructuralEquation& StructuralCausalModel::equation(int v) const {
  const auto* eq = equationFor(v);
  if (eq == nullptr) throw Error(ErrorCode::InvalidArgument, "no equation for '" + id(v) + "'");
  return *eq;
}

std::vector<int> StructuralCausalModel::exogenousParents(int v) const {
  std::vector<int> out;
  for (int p : parents(v)) {
    if (isExogenous(p)) out.push_back(p);
  }
  return out;
}

std::vector<int> StructuralCausalModel::endogenousParents(int v) const {
  std::vector<int> out;
  for (int p : parents(v)) {
    if (!isExogenous(p)) out.push_back(p);
  }
  return out;
}

std::size_t StructuralCausalModel::parentIndex(const StructuralCausalModel& m, const StructuralEquation& eq,
                                               std::span<const int> assignment) {
  std::size_t idx = 0;
  for (int p : eq.parents) {
    idx = idx * static_cast<std::size_t>(m.cardinality(p)) + static_cast<std::size_t>(assignment[static_cast<std::size_t>(p)]);
  }
  return idx;
}

int StructuralCausalModel::apply(int v, std::span<const int> assignment) const {
  const auto& eq = equation(v);
  return eq.table[parentIndex(*this, eq, assignment)];
}

bool StructuralCausalModel::hasPmf(int u) const { return !pmfs_.at(static_cast<std::size_t>(u)).empty(); }

const Pmf& StructuralCausalModel::pmf(int u) const {
  const auto& p = pmfs_.at(static_cast<std::size_t>(u));
  if (p.empty()) throw Error(ErrorCode::InvalidArgument, "no PMF for exogenous variable '" + id(u) + "'");
  return p;
}

bool StructuralCausalModel::fullySpecified() const {
  return std::all_of(exogenous_.begin(), exogenous_.end(), [&](int u) { return hasPmf(u); });
}

StructuralCausalModel StructuralCausalModel::withPmfs(ExoPmfs pmfs) const {
  return StructuralCausalModel(variables_, equations_, std::move(pmfs));
}

StructuralCausalModel StructuralCausalModel::withoutPmfs() const { return withPmfs({}); }

const std::vector<int>& StructuralCausalModel::topologicalOrder() const {
  if (!acyclic_) invalid("the causal graph has a cycle");
  return topo_;
}

const std::vector<int>& StructuralCausalModel::topologicalRank() const {
  if (!acyclic_) invalid("the causal graph has a cycle");
  return rank_;
}

std::vector<int> StructuralCausalModel::endogenousOrder() const {
  std::vector<int> out;
  for (int v : topologicalOrder()) {
    if (!isExogenous(v)) out.push_back(v);
  }
  return out;
}

bool StructuralCausalModel::markovian() const {
  for (int u : exogenous_) {
    if (children(u).size() > 1) return false;
  }
  return true;
}

bool StructuralCausalModel::quasiMarkovian() const {
  for (const auto& c : cComponents(*this)) {
    if (!c.endogenous.empty() && c.exogenous.size() != 1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

bool ValidationReport::has(IssueKind kind) const {
  auto match = [&](const Issue& i) { return i.kind == kind; };
  return std::any_of(errors.begin(), errors.end(), match) || std::any_of(warnings.begin(), warnings.end(), match);
}

ValidationReport validate(const StructuralCausalModel& model) {
  ValidationReport report;
  if (!model.acyclic()) {
    report.errors.push_back({IssueKind::Cycle, "graph", "the causal graph contains a directed cycle"});
  }
  for (int u : model.exogenous()) {
    if (!model.parents(u).empty()) {
      report.errors.push_back({IssueKind::NonRootExogenous, model.id(u), "exogenous variable has parents"});
    }
  }
  for (const auto& eq : model.equations()) {
    std::vector<char> hit(static_cast<std::size_t>(model.cardinality(eq.child)), 0);
    for (int s : eq.table) hit[static_cast<std::size_t>(s)] = 1;
    if (std::find(hit.begin(), hit.end(), 0) != hit.end()) {
      report.errors.push_back({IssueKind::NonSurjective, model.id(eq.child),
                               "structural equation for '" + model.id(eq.child) + "' is not surjective"});
    }
  }
  for (int u : model.exogenous()) {
    if (!model.hasPmf(u)) continue;
    const auto& p = model.pmf(u);
    double sum = 0.0;
    bool negative = false;
    for (double x : p) {
      if (!(x >= 0.0) || !std::isfinite(x)) negative = true;
      sum += x;
    }
    if (negative || std::abs(sum - 1.0) > 1e-12) {
      report.errors.push_back({IssueKind::MalformedPmf, model.id(u), "PMF is negative or does not sum to one"});
    }
  }
  report.semiMarkovian = model.acyclic() && !report.has(IssueKind::NonRootExogenous);
  if (report.semiMarkovian) {
    report.markovian = model.markovian();
    report.quasiMarkovian = model.quasiMarkovian();
    if (!report.has(IssueKind::NonSurjective)) {
      for (const auto& c : cComponents(model)) {
        if (c.endogenous.size() < 2) continue;
        auto joint = jointlySurjective(model, c);
        if (joint && !*joint) {
          report.warnings.push_back({IssueKind::JointNonSurjective, "component " + std::to_string(c.index),
                                     "equations of the component are not jointly surjective"});
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

std::vector<CComponent> cComponents(const StructuralCausalModel& model) {
  const auto n = model.size();
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  auto findRoot = [&](int x) {
    while (root[static_cast<std::size_t>(x)] != x) {
      root[static_cast<std::size_t>(x)] = root[static_cast<std::size_t>(root[static_cast<std::size_t>(x)])];
      x = root[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int v : model.endogenous()) {
    for (int p : model.parents(v)) {
      if (model.isExogenous(p)) root[static_cast<std::size_t>(findRoot(p))] = findRoot(v);
    }
  }
  const auto& rank = model.topologicalRank();
  const auto order = model.topologicalOrder();

  std::map<int, int> slot;  // union-find root -> component index
  std::vector<CComponent> out;
  for (int v : order) {
    if (model.isExogenous(v)) continue;
    int r = findRoot(v);
    auto [it, inserted] = slot.emplace(r, static_cast<int>(out.size()));
    if (inserted) {
      out.emplace_back();
      out.back().index = it->second;
    }
    out[static_cast<std::size_t>(it->second)].endogenous.push_back(v);
  }
  for (int u : model.exogenous()) {
    int r = findRoot(u);
    auto [it, inserted] = slot.emplace(r, static_cast<int>(out.size()));
    if (inserted) {
      out.emplace_back();
      out.back().index = it->second;
    }
    out[static_cast<std::size_t>(it->second)].exogenous.push_back(u);
  }
  auto byRank = [&](int a, int b) { return rank[static_cast<std::size_t>(a)] < rank[static_cast<std::size_t>(b)]; };
  for (auto& c : out) {
    std::set<int> closure(c.endogenous.begin(), c.endogenous.end());
    for (int v : c.endogenous) {
      for (int p : model.parents(v)) {
        if (!model.isExogenous(p)) closure.insert(p);
      }
    }
    c.closure.assign(closure.begin(), closure.end());
    std::sort(c.closure.begin(), c.closure.end(), byRank);
    for (int v : c.endogenous) {
      std::vector<int> ctx;
      for (int w : c.closure) {
        if (rank[static_cast<std::size_t>(w)] < rank[static_cast<std::size_t>(v)]) ctx.push_back(w);
      }
      c.contexts.emplace(v, std::move(ctx));
    }
  }
  return out;
}

std::optional<bool> jointlySurjective(const StructuralCausalModel& model, const CComponent& component,
                                      std::uint64_t limit) {
  // Free inputs: exogenous of the component plus endogenous parents outside V^c.
  std::set<int> inside(component.endogenous.begin(), component.endogenous.end());
  std::vector<int> inputs = component.exogenous;
  for (int w : component.closure) {
    if (!inside.count(w)) inputs.push_back(w);
  }
  std::uint64_t total = 1;
  for (int x : inputs) {
    total *= static_cast<std::uint64_t>(model.cardinality(x));
    if (total > limit) return std::nullopt;
  }
  std::uint64_t outputs = 1;
  for (int v : component.endogenous) {
    outputs *= static_cast<std::uint64_t>(model.cardinality(v));
    if (outputs > limit) return std::nullopt;
  }
  std::vector<char> hit(outputs, 0);
  std::uint64_t remaining = outputs;
  std::vector<int> assignment(model.size(), 0);
  std::vector<int> digits(inputs.size(), 0);
  for (std::uint64_t it = 0; it < total && remaining > 0; ++it) {
    for (std::size_t i = 0; i < inputs.size(); ++i) assignment[static_cast<std::size_t>(inputs[i])] = digits[i];
    std::uint64_t code = 0;
    for (int v : component.endogenous) {
      int s = model.apply(v, assignment);
      assignment[static_cast<std::size_t>(v)] = s;
      code = code * static_cast<std::uint64_t>(model.cardinality(v)) + static_cast<std::uint64_t>(s);
    }
    if (!hit[code]) {
      hit[code] = 1;
      --remaining;
    }
    for (std::size_t i = inputs.size(); i-- > 0;) {
      if (++digits[i] < model.cardinality(inputs[i])) break;
      digits[i] = 0;
    }
  }
  return remaining == 0;
}

// ---------------------------------------------------------------------------

std::optional<std::uint64_t> canonicalCardinality(int childCardinality, std::span<const int> contextCardinalities,
                                                  std::uint64_t cap) {
  std::uint64_t configs = 1;
  for (int c : contextCardinalities) {
    configs *= static_cast<std::uint64_t>(c);
    if (configs > 64) return std::nullopt;
  }
  std::uint64_t result = 1;
  for (std::uint64_t i = 0; i < configs; ++i) {
    result *= static_cast<std::uint64_t>(childCardinality);
    if (result > cap) return std::nullopt;
  }
  return result;
}

int canonicalDigit(std::uint64_t u, std::size_t j, int childCardinality) {
  const auto base = static_cast<std::uint64_t>(childCardinality);
  for (std::size_t i = 0; i < j; ++i) u /= base;
  return static_cast<int>(u % base);
}

StructuralCausalModel canonicalScm(const CausalGraph& graph, std::uint64_t cap) {
  std::vector<Variable> vars;
  std::map<std::string, int, std::less<>> idx;
  for (const auto& [id, card] : graph.nodes) {
    if (card < 1) throw Error(ErrorCode::InvalidArgument, "node '" + id + "' has cardinality < 1");
    if (!idx.emplace(id, static_cast<int>(vars.size())).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate node '" + id + "'");
    }
    vars.push_back({id, card, VariableKind::Endogenous});
  }
  std::vector<std::vector<int>> parents(vars.size());
  for (const auto& [from, to] : graph.arcs) {
    auto a = idx.find(from);
    auto b = idx.find(to);
    if (a == idx.end() || b == idx.end()) {
      throw Error(ErrorCode::InvalidArgument, "arc " + from + " -> " + to + " references an unknown node");
    }
    auto& ps = parents[static_cast<std::size_t>(b->second)];
    if (std::find(ps.begin(), ps.end(), a->second) == ps.end()) ps.push_back(a->second);
  }
  for (auto& ps : parents) std::sort(ps.begin(), ps.end());

  const std::size_t endoCount = vars.size();
  std::vector<StructuralEquation> equations;
  for (std::size_t v = 0; v < endoCount; ++v) {
    std::vector<int> cards;
    for (int p : parents[v]) cards.push_back(vars[static_cast<std::size_t>(p)].cardinality);
    const int childCard = vars[v].cardinality;
    auto card = canonicalCardinality(childCard, cards, cap);
    if (!card) {
      throw Error(ErrorCode::CardinalityOverflow,
                  "canonical exogenous cardinality for '" + vars[v].id + "' exceeds the cap " + std::to_string(cap));
    }
    std::string uid = "U_" + vars[v].id;
    if (idx.count(uid)) throw Error(ErrorCode::InvalidArgument, "exogenous id '" + uid + "' collides with a node");
    const int u = static_cast<int>(vars.size());
    vars.push_back({uid, static_cast<int>(*card), VariableKind::Exogenous});

    std::size_t configs = 1;
    for (int c : cards) configs *= static_cast<std::size_t>(c);
    StructuralEquation eq;
    eq.child = static_cast<int>(v);
    eq.parents = parents[v];
    eq.parents.push_back(u);
    eq.table.resize(configs * static_cast<std::size_t>(*card));
    for (std::size_t j = 0; j < configs; ++j) {
      for (std::uint64_t m = 0; m < *card; ++m) {
        eq.table[j * static_cast<std::size_t>(*card) + m] = canonicalDigit(m, j, childCard);
      }
    }
    equations.push_back(std::move(eq));
  }
  StructuralCausalModel model(std::move(vars), std::move(equations));
  if (!model.acyclic()) throw Error(ErrorCode::InvalidArgument, "causal graph has a cycle");
  return model;
}

StructuralCausalModel twinNetwork(const StructuralCausalModel& model) {
  std::vector<Variable> vars = model.variables();
  std::vector<int> copyOf(model.size(), -1);
  for (int v : model.endogenous()) {
    copyOf[static_cast<std::size_t>(v)] = static_cast<int>(vars.size());
    Variable dup = model.variable(v);
    dup.id += kPrime;
    vars.push_back(std::move(dup));
  }
  std::vector<StructuralEquation> equations = model.equations();
  for (const auto& eq : model.equations()) {
    if (model.isExogenous(eq.child)) continue;
    StructuralEquation dup = eq;
    dup.child = copyOf[static_cast<std::size_t>(eq.child)];
    for (int& p : dup.parents) {
      if (!model.isExogenous(p)) p = copyOf[static_cast<std::size_t>(p)];
    }
    equations.push_back(std::move(dup));
  }
  ExoPmfs pmfs = model.pmfs();
  pmfs.resize(vars.size());
  return StructuralCausalModel(std::move(vars), std::move(equations), std::move(pmfs));
}

StructuralCausalModel restrictExogenous(const StructuralCausalModel& model, std::string_view exoId,
                                        std::vector<int> allowedStates) {
  const int u = model.index(exoId);
  if (!model.isExogenous(u)) throw Error(ErrorCode::InvalidArgument, "'" + std::string(exoId) + "' is not exogenous");
  std::sort(allowedStates.begin(), allowedStates.end());
  allowedStates.erase(std::unique(allowedStates.begin(), allowedStates.end()), allowedStates.end());
  if (allowedStates.empty()) throw Error(ErrorCode::InvalidArgument, "allowed state set is empty");
  for (int s : allowedStates) {
    if (s < 0 || s >= model.cardinality(u)) throw Error(ErrorCode::InvalidArgument, "allowed state out of range");
  }
  const int oldCard = model.cardinality(u);
  const int newCard = static_cast<int>(allowedStates.size());

  std::vector<Variable> vars = model.variables();
  vars[static_cast<std::size_t>(u)].cardinality = newCard;

  std::vector<StructuralEquation> equations;
  for (const auto& eq : model.equations()) {
    auto pos = std::find(eq.parents.begin(), eq.parents.end(), u);
    if (pos == eq.parents.end()) {
      equations.push_back(eq);
      continue;
    }
    // Strides of the joint parent index: stride of u and the block size above it.
    std::size_t inner = 1;
    for (auto it = pos + 1; it != eq.parents.end(); ++it) inner *= static_cast<std::size_t>(model.cardinality(*it));
    const std::size_t outer = eq.table.size() / (inner * static_cast<std::size_t>(oldCard));
    StructuralEquation out = eq;
    out.table.clear();
    out.table.reserve(outer * inner * static_cast<std::size_t>(newCard));
    for (std::size_t o = 0; o < outer; ++o) {
      for (int s : allowedStates) {
        for (std::size_t i = 0; i < inner; ++i) {
          out.table.push_back(eq.table[(o * static_cast<std::size_t>(oldCard) + static_cast<std::size_t>(s)) * inner + i]);
        }
      }
    }
    equations.push_back(std::move(out));
  }

  ExoPmfs pmfs = model.pmfs();
  if (!pmfs[static_cast<std::size_t>(u)].empty()) {
    Pmf restricted;
    double mass = 0.0;
    for (int s : allowedStates) {
      restricted.push_back(pmfs[static_cast<std::size_t>(u)][static_cast<std::size_t>(s)]);
      mass += restricted.back();
    }
    if (mass > 0.0) {
      for (double& x : restricted) x /= mass;
      pmfs[static_cast<std::size_t>(u)] = std::move(restricted);
    } else {
      pmfs[static_cast<std::size_t>(u)].clear();
    }
  }

  StructuralCausalModel sub(std::move(vars), std::move(equations), std::move(pmfs));
  const auto report = validate(sub);
  for (const auto& issue : report.errors) {
    if (issue.kind == IssueKind::NonSurjective) {
      throw Error(ErrorCode::NonSurjective, "restricting '" + std::string(exoId) + "' breaks surjectivity of '" +
                                                issue.subject + "'");
    }
  }
  const auto before = cComponents(model);
  const auto after = cComponents(sub);
  for (std::size_t c = 0; c < before.size() && c < after.size(); ++c) {
    if (std::find(before[c].exogenous.begin(), before[c].exogenous.end(), u) == before[c].exogenous.end()) continue;
    if (before[c].endogenous.size() < 2) continue;
    auto was = jointlySurjective(model, before[c]);
    auto is = jointlySurjective(sub, after[c]);
    if (was && *was && is && !*is) {
      throw Error(ErrorCode::NonSurjective,
                  "restricting '" + std::string(exoId) + "' breaks joint surjectivity of its c-component");
    }
  }
  return sub;
}

}  // namespace scmb
