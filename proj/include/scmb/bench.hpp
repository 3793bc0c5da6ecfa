#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scmb/dataset.hpp"
#include "scmb/emcc.hpp"
#include "scmb/model.hpp"
#include "scmb/rng.hpp"

namespace scmb {

struct BenchConfig {
  int minNodes = 5;
  int maxNodes = 19;
  int maxInDegree = 3;
  int maxOutDegree = 2;
  int multiExoCardinality = 16;
  // Arc probability of the forward-arc draw; 0 picks 2 / (n - 1).
  double arcProbability = 0.0;
  // Single-exogenous components whose joint canonical cardinality exceeds
  // this are resampled.
  std::uint64_t maxCanonicalCardinality = 256;
  // Components with several exogenous variables whose joint state count
  // exceeds this are resampled.
  std::uint64_t maxJointExoStates = 4096;
  int models = 30;
  std::int64_t sampleSize = 1000;
  std::int64_t batchSize = 1000;
  int maxBatches = 50;
  int compatibilityRestarts = 5;
  std::vector<int> runCounts{20, 40, 60, 80, 100, 120, 140, 160, 180, 200};
  int truthRuns = 300;
  double targetP = 0.99;
  // Exact bounds are tried on quasi-Markovian models with fewer endogenous
  // nodes than this.
  int exactNodeLimit = 10;
  std::uint64_t exactCombinationCap = 1'000'000;
  std::size_t exactVertexBudget = 20'000;
  EmOptions em{10'000, 1e-9, 1e-6, false};
  std::uint64_t seed = 0;
  unsigned threads = 0;

  // Throws Error(InvalidArgument) on inconsistent settings.
  void check() const;
};

// Random FSCM following the benchmark protocol: Erdos-Renyi DAG over a random
// topological order, roots become exogenous, non-roots without a root parent
// get one, Boolean endogenous variables, canonical equations for components
// with one exogenous variable and random surjective equations otherwise.
StructuralCausalModel sampleModel(const BenchConfig& config, Rng& rng);

// Forward sampling of n endogenous records.
Dataset sampleData(const StructuralCausalModel& fscm, std::int64_t n, Rng& rng);

// Appends batches sampled from `fscm` until the EM compatibility test passes.
// Throws Error(BudgetExceeded) after `maxBatches` batches.
Dataset ensureCompatible(const StructuralCausalModel& model, const StructuralCausalModel& fscm, Rng& rng,
                         Dataset data, std::int64_t batch, int maxBatches = 50, int restarts = 5,
                         const EmOptions& em = {});

// Throws Error(DegenerateTruth) when truthUpper == truthLower.
double rrmse(double a, double b, double truthLower, double truthUpper);

struct GroundTruth {
  double lower = 0.0;
  double upper = 0.0;
  std::string method;  // "exact", "emcc", or "emcc-capped" when eps* was unreachable
  double epsilon = 0.0;
  int runs = 0;
  double rangeLower = 0.0;  // [a_r, b_r] before inflation
  double rangeUpper = 0.0;
};

struct TruthOptions {
  int runs = 300;
  double targetP = 0.99;
  std::uint64_t seed = 0;
  bool tryExact = true;
  int exactNodeLimit = 10;
  std::uint64_t combinationCap = 1'000'000;
  std::size_t vertexBudget = 20'000;
  EmOptions em{10'000, 1e-9, 1e-6, false};
};

GroundTruth groundTruthBounds(const StructuralCausalModel& model, const Dataset& data,
                              const CounterfactualQuery& query, const TruthOptions& options = {});

struct RangePoint {
  int runs = 0;
  double a = 0.0;
  double b = 0.0;
  double rrmse = 0.0;
};

struct ExperimentRecord {
  int model = 0;
  std::uint64_t seed = 0;
  int endogenous = 0;
  int exogenous = 0;
  bool quasiMarkovian = false;
  int maxExoCardinality = 0;
  std::string query;
  std::int64_t records = 0;
  GroundTruth truth;
  std::vector<RangePoint> curve;
  std::string error;  // empty when the pipeline completed

  bool ok() const { return error.empty(); }
};

struct QuantileRow {
  int runs = 0;
  int count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

struct BenchResult {
  BenchConfig config;
  std::vector<ExperimentRecord> records;
  std::vector<QuantileRow> summary;
};

// Linear-interpolation quantile of sorted data (q in [0, 1]).
double quantile(std::vector<double> values, double q);
std::vector<QuantileRow> summarize(const std::vector<ExperimentRecord>& records, const std::vector<int>& runCounts);

ExperimentRecord runExperiment(const BenchConfig& config, int modelIndex);
BenchResult runBenchmark(const BenchConfig& config);

}  // namespace scmb
