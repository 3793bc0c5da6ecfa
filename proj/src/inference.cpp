#include "scmb/inference.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "scmb/error.hpp"

namespace scmb {

namespace {

std::atomic<std::uint64_t> gClamps{0};

std::size_t tableSize(const std::vector<int>& cards) {
  std::size_t n = 1;
  for (int c : cards) n *= static_cast<std::size_t>(c);
  return n;
}

// Stride of each variable of `target` inside `source` (0 when absent).
std::vector<std::size_t> stridesIn(const Factor& source, const std::vector<int>& target) {
  std::vector<std::size_t> own(source.scope.size());
  std::size_t s = 1;
  for (std::size_t i = source.scope.size(); i-- > 0;) {
    own[i] = s;
    s *= static_cast<std::size_t>(source.cards[i]);
  }
  std::vector<std::size_t> out(target.size(), 0);
  for (std::size_t k = 0; k < target.size(); ++k) {
    auto it = std::find(source.scope.begin(), source.scope.end(), target[k]);
    if (it != source.scope.end()) out[k] = own[static_cast<std::size_t>(it - source.scope.begin())];
  }
  return out;
}

Factor equationFactor(const StructuralCausalModel& model, const StructuralEquation& eq,
                      const std::vector<int>& parentKeys, int childKey) {
  Factor f;
  for (std::size_t i = 0; i < eq.parents.size(); ++i) {
    f.scope.push_back(parentKeys[i]);
    f.cards.push_back(model.cardinality(eq.parents[i]));
  }
  const int cc = model.cardinality(eq.child);
  f.scope.push_back(childKey);
  f.cards.push_back(cc);
  f.values.assign(eq.table.size() * static_cast<std::size_t>(cc), 0.0);
  for (std::size_t j = 0; j < eq.table.size(); ++j) {
    f.values[j * static_cast<std::size_t>(cc) + static_cast<std::size_t>(eq.table[j])] = 1.0;
  }
  return f;
}

std::vector<int> minFillOrder(const std::vector<Factor>& factors, const std::vector<int>& candidates) {
  std::map<int, std::set<int>> adj;
  std::set<int> pending(candidates.begin(), candidates.end());
  for (const auto& f : factors) {
    for (int a : f.scope) {
      adj[a];
      for (int b : f.scope) {
        if (a != b) adj[a].insert(b);
      }
    }
  }
  std::vector<int> order;
  while (!pending.empty()) {
    int best = -1;
    std::size_t bestFill = 0, bestDeg = 0;
    for (int v : pending) {
      const auto& nb = adj[v];
      std::size_t fill = 0;
      for (auto i = nb.begin(); i != nb.end(); ++i) {
        for (auto j = std::next(i); j != nb.end(); ++j) {
          if (!adj[*i].count(*j)) ++fill;
        }
      }
      if (best < 0 || fill < bestFill || (fill == bestFill && nb.size() < bestDeg)) {
        best = v;
        bestFill = fill;
        bestDeg = nb.size();
      }
    }
    const auto nb = adj[best];
    for (int a : nb) {
      for (int b : nb) {
        if (a != b) adj[a].insert(b);
      }
      adj[a].erase(best);
    }
    adj.erase(best);
    pending.erase(best);
    order.push_back(best);
  }
  return order;
}

// Eliminates `order` and returns the product of what remains.
Factor eliminate(std::vector<Factor> factors, const std::vector<int>& order) {
  for (int v : order) {
    std::vector<Factor> keep;
    std::optional<Factor> bucket;
    for (auto& f : factors) {
      if (std::find(f.scope.begin(), f.scope.end(), v) != f.scope.end()) {
        bucket = bucket ? multiply(*bucket, f) : std::move(f);
      } else {
        keep.push_back(std::move(f));
      }
    }
    if (bucket) keep.push_back(sumOut(*bucket, v));
    factors = std::move(keep);
  }
  Factor out = Factor::scalar(1.0);
  for (const auto& f : factors) out = multiply(out, f);
  return out;
}

double clampProbability(double p) {
  if (p < 0.0 || p > 1.0) {
    gClamps.fetch_add(1, std::memory_order_relaxed);
    return std::clamp(p, 0.0, 1.0);
  }
  return p;
}

}  // namespace

std::uint64_t clampCount() { return gClamps.load(); }

double Factor::at(std::span<const int> states) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < scope.size(); ++i) {
    idx = idx * static_cast<std::size_t>(cards[i]) + static_cast<std::size_t>(states[i]);
  }
  return values[idx];
}

Factor multiply(const Factor& a, const Factor& b) {
  if (a.scope.empty()) {
    Factor r = b;
    for (double& x : r.values) x *= a.values[0];
    return r;
  }
  if (b.scope.empty()) {
    Factor r = a;
    for (double& x : r.values) x *= b.values[0];
    return r;
  }
  Factor r;
  r.scope = a.scope;
  r.cards = a.cards;
  for (std::size_t i = 0; i < b.scope.size(); ++i) {
    if (std::find(r.scope.begin(), r.scope.end(), b.scope[i]) == r.scope.end()) {
      r.scope.push_back(b.scope[i]);
      r.cards.push_back(b.cards[i]);
    }
  }
  const auto sa = stridesIn(a, r.scope);
  const auto sb = stridesIn(b, r.scope);
  const std::size_t n = tableSize(r.cards);
  r.values.resize(n);
  std::vector<int> digit(r.scope.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    r.values[idx] = a.values[ia] * b.values[ib];
    for (std::size_t k = r.scope.size(); k-- > 0;) {
      ia += sa[k];
      ib += sb[k];
      if (++digit[k] < r.cards[k]) break;
      ia -= sa[k] * static_cast<std::size_t>(r.cards[k]);
      ib -= sb[k] * static_cast<std::size_t>(r.cards[k]);
      digit[k] = 0;
    }
  }
  return r;
}

Factor sumOut(const Factor& f, int var) {
  auto pos = std::find(f.scope.begin(), f.scope.end(), var);
  if (pos == f.scope.end()) return f;
  Factor r;
  for (std::size_t i = 0; i < f.scope.size(); ++i) {
    if (f.scope[i] != var) {
      r.scope.push_back(f.scope[i]);
      r.cards.push_back(f.cards[i]);
    }
  }
  r.values.assign(tableSize(r.cards), 0.0);
  const auto k = static_cast<std::size_t>(pos - f.scope.begin());
  std::size_t inner = 1;
  for (std::size_t i = k + 1; i < f.scope.size(); ++i) inner *= static_cast<std::size_t>(f.cards[i]);
  const auto card = static_cast<std::size_t>(f.cards[k]);
  const std::size_t outer = f.values.size() / (inner * card);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < card; ++c) {
      const double* src = &f.values[(o * card + c) * inner];
      double* dst = &r.values[o * inner];
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  return r;
}

Factor reduce(const Factor& f, int var, int state) {
  auto pos = std::find(f.scope.begin(), f.scope.end(), var);
  if (pos == f.scope.end()) return f;
  Factor r;
  for (std::size_t i = 0; i < f.scope.size(); ++i) {
    if (f.scope[i] != var) {
      r.scope.push_back(f.scope[i]);
      r.cards.push_back(f.cards[i]);
    }
  }
  const auto k = static_cast<std::size_t>(pos - f.scope.begin());
  std::size_t inner = 1;
  for (std::size_t i = k + 1; i < f.scope.size(); ++i) inner *= static_cast<std::size_t>(f.cards[i]);
  const auto card = static_cast<std::size_t>(f.cards[k]);
  const std::size_t outer = f.values.size() / (inner * card);
  r.values.resize(outer * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(&f.values[(o * card + static_cast<std::size_t>(state)) * inner], inner, &r.values[o * inner]);
  }
  return r;
}

Factor permute(const Factor& f, const std::vector<int>& order) {
  if (order.size() != f.scope.size()) throw Error(ErrorCode::InvalidArgument, "permute: scope size mismatch");
  Factor r;
  r.scope = order;
  for (int v : order) {
    auto it = std::find(f.scope.begin(), f.scope.end(), v);
    if (it == f.scope.end()) throw Error(ErrorCode::InvalidArgument, "permute: variable not in scope");
    r.cards.push_back(f.cards[static_cast<std::size_t>(it - f.scope.begin())]);
  }
  const auto s = stridesIn(f, r.scope);
  const std::size_t n = tableSize(r.cards);
  r.values.resize(n);
  std::vector<int> digit(r.scope.size(), 0);
  std::size_t src = 0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    r.values[idx] = f.values[src];
    for (std::size_t k = r.scope.size(); k-- > 0;) {
      src += s[k];
      if (++digit[k] < r.cards[k]) break;
      src -= s[k] * static_cast<std::size_t>(r.cards[k]);
      digit[k] = 0;
    }
  }
  return r;
}

StructuralCausalModel mutilate(const StructuralCausalModel& model, const std::map<int, int>& interventions) {
  std::vector<StructuralEquation> eqs = model.equations();
  for (auto& eq : eqs) {
    auto it = interventions.find(eq.child);
    if (it == interventions.end()) continue;
    eq.parents.clear();
    eq.table = {it->second};
  }
  for (const auto& [v, s] : interventions) {
    if (model.isExogenous(v)) throw Error(ErrorCode::InvalidArgument, "cannot intervene on exogenous '" + model.id(v) + "'");
    if (s < 0 || s >= model.cardinality(v)) throw Error(ErrorCode::InvalidArgument, "intervention state out of range");
  }
  return StructuralCausalModel(model.variables(), std::move(eqs), model.pmfs());
}

// ---------------------------------------------------------------------------

CompiledQuery::CompiledQuery(const StructuralCausalModel& model, const CounterfactualQuery& query) : model_(&model) {
  checkQuery(model, query);
  const auto& topo = model.topologicalOrder();

  // Ancestor sets (including self) to decide when two worlds share a node.
  std::vector<std::vector<char>> anc(model.size(), std::vector<char>(model.size(), 0));
  for (int v : topo) {
    anc[static_cast<std::size_t>(v)][static_cast<std::size_t>(v)] = 1;
    for (int p : model.parents(v)) {
      for (std::size_t a = 0; a < model.size(); ++a) {
        if (anc[static_cast<std::size_t>(p)][a]) anc[static_cast<std::size_t>(v)][a] = 1;
      }
    }
  }

  exoKey_.assign(model.size(), -1);
  std::map<std::pair<int, std::map<int, int>>, int> shared;
  std::vector<std::map<int, int>> nodeOf(query.worlds.size());  // world -> variable -> key
  std::vector<std::vector<int>> parentKeys;

  // Nodes are created on demand from the literals upward, so only ancestors
  // of the query survive.
  std::function<int(int, int)> node = [&](int world, int v) -> int {
    if (model.isExogenous(v)) {
      if (exoKey_[static_cast<std::size_t>(v)] < 0) {
        exoKey_[static_cast<std::size_t>(v)] = static_cast<int>(nodes_.size());
        nodes_.push_back({v, -1, model.cardinality(v)});
        parentKeys.emplace_back();
      }
      return exoKey_[static_cast<std::size_t>(v)];
    }
    auto& memo = nodeOf[static_cast<std::size_t>(world)];
    if (auto it = memo.find(v); it != memo.end()) return it->second;
    std::map<int, int> relevant;
    for (const auto& [x, s] : query.worlds[static_cast<std::size_t>(world)].interventions) {
      if (anc[static_cast<std::size_t>(v)][static_cast<std::size_t>(x)]) relevant.emplace(x, s);
    }
    auto sig = std::make_pair(v, relevant);
    if (auto it = shared.find(sig); it != shared.end()) {
      memo.emplace(v, it->second);
      return it->second;
    }
    std::vector<int> pk;
    if (!relevant.count(v)) {
      for (int p : model.parents(v)) pk.push_back(node(world, p));
    }
    const int key = static_cast<int>(nodes_.size());
    nodes_.push_back({v, world, model.cardinality(v)});
    parentKeys.push_back(std::move(pk));
    if (auto it = relevant.find(v); it != relevant.end()) {
      Factor f{{key}, {model.cardinality(v)}, std::vector<double>(static_cast<std::size_t>(model.cardinality(v)), 0.0)};
      f.values[static_cast<std::size_t>(it->second)] = 1.0;
      structural_.push_back(std::move(f));
    } else {
      structural_.push_back(equationFactor(model, model.equation(v), parentKeys.back(), key));
    }
    shared.emplace(sig, key);
    memo.emplace(v, key);
    return key;
  };

  for (const auto& lit : query.target) targetLits_.emplace_back(node(lit.world, lit.variable), lit.state);
  for (const auto& lit : query.evidence) evidenceLits_.emplace_back(node(lit.world, lit.variable), lit.state);

  for (std::size_t v = 0; v < model.size(); ++v) {
    if (exoKey_[v] >= 0) relevantExo_.push_back(static_cast<int>(v));
  }
}

double CompiledQuery::eventProbability(const ExoPmfs& pmfs, bool withTarget, const std::vector<int>* order) const {
  std::map<int, int> fixed;
  auto addLits = [&](const std::vector<std::pair<int, int>>& lits) {
    for (const auto& [key, state] : lits) {
      auto [it, inserted] = fixed.emplace(key, state);
      if (!inserted && it->second != state) return false;
    }
    return true;
  };
  if (!addLits(evidenceLits_)) return 0.0;
  if (withTarget && !addLits(targetLits_)) return 0.0;

  std::vector<Factor> factors;
  for (int u : relevantExo_) {
    const auto& p = pmfs.at(static_cast<std::size_t>(u));
    if (static_cast<int>(p.size()) != model_->cardinality(u)) {
      throw Error(ErrorCode::InvalidArgument, "missing or malformed PMF for '" + model_->id(u) + "'");
    }
    factors.push_back(Factor{{exoKey_[static_cast<std::size_t>(u)]}, {model_->cardinality(u)}, p});
  }
  for (const auto& f : structural_) factors.push_back(f);
  for (auto& f : factors) {
    for (const auto& [key, state] : fixed) f = reduce(f, key, state);
  }

  std::vector<int> elim;
  if (order != nullptr) {
    std::set<int> present;
    for (const auto& f : factors) present.insert(f.scope.begin(), f.scope.end());
    for (int k : *order) {
      if (present.erase(k)) elim.push_back(k);
    }
    elim.insert(elim.end(), present.begin(), present.end());
  } else {
    std::set<int> present;
    for (const auto& f : factors) present.insert(f.scope.begin(), f.scope.end());
    elim = minFillOrder(factors, std::vector<int>(present.begin(), present.end()));
  }
  return eliminate(std::move(factors), elim).values.at(0);
}

Probability CompiledQuery::evaluate(const ExoPmfs& pmfs) const {
  const double num = eventProbability(pmfs, true, nullptr);
  const double den = evidenceLits_.empty() ? 1.0 : eventProbability(pmfs, false, nullptr);
  if (!(den > 1e-14)) return std::nullopt;
  return clampProbability(num / den);
}

Probability CompiledQuery::evaluate(const ExoPmfs& pmfs, const std::vector<int>& order) const {
  const double num = eventProbability(pmfs, true, &order);
  const double den = evidenceLits_.empty() ? 1.0 : eventProbability(pmfs, false, &order);
  if (!(den > 1e-14)) return std::nullopt;
  return clampProbability(num / den);
}

Probability evaluate(const StructuralCausalModel& fscm, const CounterfactualQuery& query) {
  return CompiledQuery(fscm, query).evaluate(fscm.pmfs());
}

Probability pns(const StructuralCausalModel& fscm, int cause, int effect) {
  return evaluate(fscm, pnsQuery(fscm, cause, effect));
}

Probability pn(const StructuralCausalModel& fscm, int cause, int effect) {
  return evaluate(fscm, pnQuery(fscm, cause, effect));
}

Probability ps(const StructuralCausalModel& fscm, int cause, int effect) {
  return evaluate(fscm, psQuery(fscm, cause, effect));
}

Factor endogenousJoint(const StructuralCausalModel& fscm) {
  std::vector<Factor> factors;
  for (int u : fscm.exogenous()) {
    if (!fscm.hasPmf(u)) throw Error(ErrorCode::InvalidArgument, "missing PMF for '" + fscm.id(u) + "'");
    factors.push_back(Factor{{u}, {fscm.cardinality(u)}, fscm.pmf(u)});
  }
  for (int v : fscm.endogenous()) {
    const auto& eq = fscm.equation(v);
    factors.push_back(equationFactor(fscm, eq, eq.parents, v));
  }
  auto joint = eliminate(factors, minFillOrder(factors, fscm.exogenous()));
  return permute(joint, fscm.endogenous());
}

Factor componentFactor(const StructuralCausalModel& model, const CComponent& component, const ExoPmfs& pmfs) {
  std::vector<Factor> factors;
  for (int u : component.exogenous) {
    const auto& p = pmfs.at(static_cast<std::size_t>(u));
    if (static_cast<int>(p.size()) != model.cardinality(u)) {
      throw Error(ErrorCode::InvalidArgument, "missing or malformed PMF for '" + model.id(u) + "'");
    }
    factors.push_back(Factor{{u}, {model.cardinality(u)}, p});
  }
  for (int v : component.endogenous) {
    const auto& eq = model.equation(v);
    factors.push_back(equationFactor(model, eq, eq.parents, v));
  }
  auto q = eliminate(factors, minFillOrder(factors, component.exogenous));
  return permute(q, component.closure);
}

}  // namespace scmb
