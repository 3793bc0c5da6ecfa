#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "scmb/dataset.hpp"
#include "scmb/inference.hpp"
#include "scmb/model.hpp"

namespace scmb {

struct EmOptions {
  int maxIters = 10'000;
  double tol = 1e-9;        // per-record log-likelihood improvement
  double relTol = 1e-6;     // acceptance gap to lambda*, relative, per record
  bool keepHistory = true;
};

struct EmRun {
  std::uint64_t seed = 0;
  ExoPmfs theta;
  int iterations = 0;
  double logLik = 0.0;      // total, nats
  double avgLogLik = 0.0;   // per record
  double relativeGap = 0.0; // |avg - lambda*/N| / |lambda*/N|
  bool converged = false;
  bool accepted = false;
  std::uint64_t flaggedContexts = 0;  // E-step contexts with zero probability
  std::vector<double> history;        // per-record log-likelihood of each iterate
};

// Precompiled EM problem: for every c-component and observed closure
// configuration w^c, the joint exogenous states u^c compatible with it.
class EmProblem {
 public:
  EmProblem(const StructuralCausalModel& model, const Dataset& data);

  const StructuralCausalModel& model() const { return *model_; }
  double lambdaStar() const { return lambdaStar_; }
  std::int64_t records() const { return records_; }

  // l(theta_U) from the compatibility lists.
  double logLik(const ExoPmfs& theta) const;
  ExoPmfs initialize(std::uint64_t seed) const;
  EmRun run(std::uint64_t seed, const EmOptions& options = {}) const;
  EmRun runFrom(ExoPmfs theta, std::uint64_t seed, const EmOptions& options = {}) const;

 private:
  struct Context {
    std::int64_t count = 0;
    std::vector<std::uint32_t> compatible;  // joint u^c indices
  };
  struct Component {
    std::vector<int> exogenous;
    std::vector<int> cards;
    std::vector<Context> contexts;
  };

  const StructuralCausalModel* model_;
  std::vector<Component> components_;
  double lambdaStar_ = 0.0;
  std::int64_t records_ = 0;
};

struct EmccOptions {
  int runs = 20;               // accepted runs wanted (k)
  std::uint64_t seed = 0;
  int runBudget = 0;           // total EM runs allowed; 0 means max(3k, k + 50)
  EmOptions em;
  unsigned threads = 0;
};

struct EmccResult {
  CounterfactualQuery query;
  std::vector<double> rho;                  // accepted values, run-index order
  std::vector<std::uint64_t> acceptedSeeds;
  double a = 0.0;
  double b = 0.0;
  int rejected = 0;
  int undefined = 0;     // accepted runs where the query was undefined
  int attempted = 0;
  double lambdaStar = 0.0;
  double bestGap = 0.0;  // smallest relative gap among rejected runs
  bool complete = false; // k values collected
};

// Seed of run `index` under base seed `seed`.
std::uint64_t runSeed(std::uint64_t seed, std::uint64_t index);

// Throws Error(CompatibilityFailure) when no run reaches lambda* within the
// run budget.
EmccResult runEmcc(const StructuralCausalModel& model, const Dataset& data, const CounterfactualQuery& query,
                   const EmccOptions& options);
EmccResult runEmcc(const EmProblem& problem, const CounterfactualQuery& query, const EmccOptions& options);

struct CompatibilityVerdict {
  bool compatible = false;
  double bestGap = 0.0;  // relative per-record gap of the best run
  double lambdaStar = 0.0;
  double bestLogLik = 0.0;
  int runs = 0;
};

CompatibilityVerdict compatibilityTest(const StructuralCausalModel& model, const Dataset& data, int budget,
                                       std::uint64_t seed = 0, const EmOptions& options = {});
CompatibilityVerdict compatibilityTest(const EmProblem& problem, int budget, std::uint64_t seed = 0,
                                       const EmOptions& options = {});

}  // namespace scmb
