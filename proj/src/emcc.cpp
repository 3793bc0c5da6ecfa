#include "scmb/emcc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "scmb/error.hpp"
#include "scmb/parallel.hpp"
#include "scmb/rng.hpp"

namespace scmb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMaxEnumeration = 500'000'000;

double relativeGap(double avg, double target) {
  if (!std::isfinite(avg)) return std::numeric_limits<double>::infinity();
  const double scale = std::abs(target);
  return scale > 0.0 ? std::abs(avg - target) / scale : std::abs(avg - target);
}

}  // namespace

EmProblem::EmProblem(const StructuralCausalModel& model, const Dataset& data) : model_(&model) {
  const auto bn = fitEndogenous(model, data);
  lambdaStar_ = scmb::lambdaStar(model, bn, data);
  records_ = data.total();
  const auto col = data.bind(model);

  for (const auto& comp : cComponents(model)) {
    if (comp.endogenous.empty()) continue;
    Component c;
    c.exogenous = comp.exogenous;
    std::uint64_t joint = 1;
    for (int u : comp.exogenous) {
      c.cards.push_back(model.cardinality(u));
      joint *= static_cast<std::uint64_t>(model.cardinality(u));
      if (joint > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(ErrorCode::BudgetExceeded, "joint exogenous state space of a component is too large");
      }
    }
    std::set<int> inside(comp.endogenous.begin(), comp.endogenous.end());
    std::vector<int> external;
    for (int w : comp.closure) {
      if (!inside.count(w)) external.push_back(w);
    }
    std::uint64_t externalStates = 1;
    for (int w : external) externalStates *= static_cast<std::uint64_t>(model.cardinality(w));
    if (joint * externalStates > kMaxEnumeration) {
      throw Error(ErrorCode::BudgetExceeded, "component enumeration exceeds the EM preprocessing budget");
    }

    std::vector<int> cols;
    for (int w : comp.closure) cols.push_back(col[static_cast<std::size_t>(w)]);
    std::map<std::vector<int>, std::size_t> slot;
    for (const auto& [states, n] : data.marginal(cols)) {
      slot.emplace(states, c.contexts.size());
      c.contexts.push_back({n, {}});
    }

    std::vector<int> assignment(model.size(), 0);
    std::vector<int> key(comp.closure.size());
    std::vector<int> ed(external.size(), 0);
    for (std::uint64_t e = 0; e < externalStates; ++e) {
      for (std::size_t i = 0; i < external.size(); ++i) assignment[static_cast<std::size_t>(external[i])] = ed[i];
      std::vector<int> ud(comp.exogenous.size(), 0);
      for (std::uint64_t j = 0; j < joint; ++j) {
        for (std::size_t k = 0; k < comp.exogenous.size(); ++k) assignment[static_cast<std::size_t>(comp.exogenous[k])] = ud[k];
        for (int v : comp.endogenous) assignment[static_cast<std::size_t>(v)] = model.apply(v, assignment);
        for (std::size_t i = 0; i < comp.closure.size(); ++i) key[i] = assignment[static_cast<std::size_t>(comp.closure[i])];
        if (auto it = slot.find(key); it != slot.end()) {
          c.contexts[it->second].compatible.push_back(static_cast<std::uint32_t>(j));
        }
        for (std::size_t k = ud.size(); k-- > 0;) {
          if (++ud[k] < c.cards[k]) break;
          ud[k] = 0;
        }
      }
      for (std::size_t i = external.size(); i-- > 0;) {
        if (++ed[i] < model.cardinality(external[i])) break;
        ed[i] = 0;
      }
    }
    components_.push_back(std::move(c));
  }
}

double EmProblem::logLik(const ExoPmfs& theta) const {
  double ll = 0.0;
  for (const auto& c : components_) {
    const std::size_t nu = c.exogenous.size();
    for (const auto& ctx : c.contexts) {
      double sum = 0.0;
      for (std::uint32_t j : ctx.compatible) {
        double w = 1.0;
        std::uint32_t rest = j;
        for (std::size_t k = nu; k-- > 0;) {
          const auto card = static_cast<std::uint32_t>(c.cards[k]);
          w *= theta[static_cast<std::size_t>(c.exogenous[k])][rest % card];
          rest /= card;
        }
        sum += w;
      }
      if (sum <= 0.0) return kNegInf;
      ll += static_cast<double>(ctx.count) * std::log(sum);
    }
  }
  return ll;
}

ExoPmfs EmProblem::initialize(std::uint64_t seed) const {
  Rng rng(seed);
  ExoPmfs theta(model_->size());
  for (int u : model_->exogenous()) theta[static_cast<std::size_t>(u)] = rng.dirichlet(static_cast<std::size_t>(model_->cardinality(u)));
  return theta;
}

EmRun EmProblem::run(std::uint64_t seed, const EmOptions& options) const {
  return runFrom(initialize(seed), seed, options);
}

EmRun EmProblem::runFrom(ExoPmfs theta, std::uint64_t seed, const EmOptions& options) const {
  EmRun out;
  out.seed = seed;
  const double n = static_cast<double>(records_);
  const double target = lambdaStar_ / n;
  std::vector<double> weights;
  double prev = kNegInf;
  double ll = kNegInf;

  for (int it = 0; it < options.maxIters; ++it) {
    // E-step: expected counts of every exogenous state, and l(theta_t).
    ll = 0.0;
    ExoPmfs counts(model_->size());
    for (const auto& c : components_) {
      for (int u : c.exogenous) counts[static_cast<std::size_t>(u)].assign(static_cast<std::size_t>(model_->cardinality(u)), 0.0);
    }
    for (const auto& c : components_) {
      const std::size_t nu = c.exogenous.size();
      for (const auto& ctx : c.contexts) {
        weights.resize(ctx.compatible.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < ctx.compatible.size(); ++i) {
          double w = 1.0;
          std::uint32_t rest = ctx.compatible[i];
          for (std::size_t k = nu; k-- > 0;) {
            const auto card = static_cast<std::uint32_t>(c.cards[k]);
            w *= theta[static_cast<std::size_t>(c.exogenous[k])][rest % card];
            rest /= card;
          }
          weights[i] = w;
          sum += w;
        }
        const double cnt = static_cast<double>(ctx.count);
        if (sum <= 0.0) {
          ++out.flaggedContexts;
          ll = kNegInf;
          if (ctx.compatible.empty()) {
            for (std::size_t k = 0; k < nu; ++k) {
              auto& ck = counts[static_cast<std::size_t>(c.exogenous[k])];
              for (auto& x : ck) x += cnt / static_cast<double>(ck.size());
            }
            continue;
          }
          std::fill(weights.begin(), weights.end(), 1.0);
          sum = static_cast<double>(weights.size());
        } else if (std::isfinite(ll)) {
          ll += cnt * std::log(sum);
        }
        const double scale = cnt / sum;
        for (std::size_t i = 0; i < ctx.compatible.size(); ++i) {
          const double post = weights[i] * scale;
          std::uint32_t rest = ctx.compatible[i];
          for (std::size_t k = nu; k-- > 0;) {
            const auto card = static_cast<std::uint32_t>(c.cards[k]);
            counts[static_cast<std::size_t>(c.exogenous[k])][rest % card] += post;
            rest /= card;
          }
        }
      }
    }
    const double avg = ll / n;
    if (options.keepHistory) out.history.push_back(avg);
    out.iterations = it;
    if (it > 0 && std::isfinite(avg) && avg - prev < options.tol) {
      out.converged = true;
      break;
    }
    if (it > 0 && !std::isfinite(avg) && !std::isfinite(prev)) break;
    prev = avg;
    if (it + 1 == options.maxIters) break;
    // M-step.
    for (const auto& c : components_) {
      for (int u : c.exogenous) {
        auto& t = theta[static_cast<std::size_t>(u)];
        const auto& ck = counts[static_cast<std::size_t>(u)];
        for (std::size_t s = 0; s < t.size(); ++s) t[s] = ck[s] / n;
      }
    }
  }
  out.theta = std::move(theta);
  out.logLik = ll;
  out.avgLogLik = ll / n;
  out.relativeGap = relativeGap(out.avgLogLik, target);
  out.accepted = out.relativeGap <= options.relTol;
  return out;
}

std::uint64_t runSeed(std::uint64_t seed, std::uint64_t index) { return deriveSeed(seed, index); }

EmccResult runEmcc(const StructuralCausalModel& model, const Dataset& data, const CounterfactualQuery& query,
                   const EmccOptions& options) {
  EmProblem problem(model, data);
  return runEmcc(problem, query, options);
}

EmccResult runEmcc(const EmProblem& problem, const CounterfactualQuery& query, const EmccOptions& options) {
  if (options.runs < 1) throw Error(ErrorCode::InvalidArgument, "EMCC needs at least one run");
  const int budget = options.runBudget > 0 ? options.runBudget : std::max(3 * options.runs, options.runs + 50);
  CompiledQuery compiled(problem.model(), query);
  EmccResult res;
  res.query = query;
  res.lambdaStar = problem.lambdaStar();
  res.bestGap = std::numeric_limits<double>::infinity();
  EmOptions em = options.em;
  em.keepHistory = false;
  const unsigned threads = threadCount(options.threads);
  int accepted = 0;

  while (static_cast<int>(res.rho.size()) < options.runs && res.attempted < budget) {
    const int batch = std::min(options.runs - static_cast<int>(res.rho.size()), budget - res.attempted);
    std::vector<EmRun> runs(static_cast<std::size_t>(batch));
    const int first = res.attempted;
    parallelChunks(static_cast<std::size_t>(batch), threads, static_cast<std::size_t>(batch),
                   [&](std::size_t, std::size_t b, std::size_t e) {
                     for (std::size_t i = b; i < e; ++i) {
                       runs[i] = problem.run(runSeed(options.seed, static_cast<std::uint64_t>(first) + i), em);
                     }
                   });
    for (const auto& r : runs) {
      ++res.attempted;
      if (!r.accepted) {
        ++res.rejected;
        res.bestGap = std::min(res.bestGap, r.relativeGap);
        continue;
      }
      ++accepted;
      auto value = compiled.evaluate(r.theta);
      if (!value) {
        ++res.undefined;
        continue;
      }
      res.rho.push_back(*value);
      res.acceptedSeeds.push_back(r.seed);
    }
  }
  if (accepted == 0) {
    throw Error(ErrorCode::CompatibilityFailure, "no EM run reached lambda* in " + std::to_string(res.attempted) +
                                                     " runs (best relative gap " + std::to_string(res.bestGap) + ")");
  }
  if (!std::isfinite(res.bestGap)) res.bestGap = 0.0;
  res.complete = static_cast<int>(res.rho.size()) == options.runs;
  if (!res.rho.empty()) {
    auto [lo, hi] = std::minmax_element(res.rho.begin(), res.rho.end());
    res.a = *lo;
    res.b = *hi;
  }
  return res;
}

CompatibilityVerdict compatibilityTest(const StructuralCausalModel& model, const Dataset& data, int budget,
                                       std::uint64_t seed, const EmOptions& options) {
  EmProblem problem(model, data);
  return compatibilityTest(problem, budget, seed, options);
}

CompatibilityVerdict compatibilityTest(const EmProblem& problem, int budget, std::uint64_t seed,
                                       const EmOptions& options) {
  CompatibilityVerdict v;
  v.lambdaStar = problem.lambdaStar();
  v.bestGap = std::numeric_limits<double>::infinity();
  v.bestLogLik = kNegInf;
  EmOptions em = options;
  em.keepHistory = false;
  for (int i = 0; i < budget; ++i) {
    auto r = problem.run(runSeed(seed, static_cast<std::uint64_t>(i)), em);
    ++v.runs;
    if (r.relativeGap < v.bestGap) {
      v.bestGap = r.relativeGap;
      v.bestLogLik = r.logLik;
    }
    if (r.accepted) {
      v.compatible = true;
      break;
    }
  }
  return v;
}

}  // namespace scmb
