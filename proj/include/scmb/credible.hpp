#pragma once

#include <functional>
#include <string_view>
#include <vector>

namespace scmb {

// Gauss hypergeometric function 2F1(p, q; r; z) for z <= 1 (z = 1 requires
// r - p - q > 0). Throws Error(NonConvergent) when the series budget runs out.
double hyp2f1(double p, double q, double r, double z);

// Adaptive Simpson on [lo, hi] with relative tolerance against the running
// estimate; `minDepth` forces that many bisections before adaptivity.
double adaptiveSimpson(const std::function<double(double)>& f, double lo, double hi, double relTol = 1e-7,
                       int minDepth = 4, int maxDepth = 40);

struct BetaFit {
  double alpha = 1.0;
  double beta = 1.0;
  double lo = 0.0;  // support used for rescaling
  double hi = 1.0;
};

// Inputs of the coverage formula: observed range [a, b] of k runs.
struct CoverageQuery {
  double a = 0.0;
  double b = 1.0;
  int k = 1;
  double epsilon = 0.0;

  double L() const { return b - a; }
  double deltaA() const;
  double deltaB() const;
  bool valid() const;
  // Largest epsilon satisfying the validity conditions (infinity when every
  // epsilon is valid).
  double maxEpsilon() const;
};

// Integrand of the coverage ratio: P(every run lies in [a,b] | a* = a - x,
// b* = b + y) under Beta(alpha, beta, a*, b*).
double runLikelihood(double x, double y, double L, double alpha, double beta, int k);

// P(a - eps L <= a* <= b* <= b + eps L | rho). Throws Error(InvalidEpsilon).
double coverageProbability(const CoverageQuery& query, const BetaFit& fit, double relTol = 1e-7);

enum class EdgeCase { AZero, BOne };

// Single-integral forms for a = 0 or b = 1. Throws Error(CaseMismatch).
double edgeCoverage(const CoverageQuery& query, const BetaFit& fit, EdgeCase edge, double relTol = 1e-7);

// P(a* = b* | rho) when all k runs coincide.
double identifiabilityProbability(int k);

// Closed form for uniformly distributed runs (alpha = beta = 1), k >= 3.
double uniformCoverage(int k, double epsilon, double L);

// Beta MLE on rho rescaled to [a - eps L, b + eps L]. Throws
// Error(DegenerateSample) when all values coincide or fewer than two are given.
BetaFit fitBeta(const std::vector<double>& rho, double epsilon);

enum class CoverageCase { Interior, AZero, BOne, Identifiable, Full };

std::string_view toString(CoverageCase c);

struct CredibleReport {
  CoverageCase kind = CoverageCase::Interior;
  double a = 0.0;
  double b = 0.0;
  int k = 0;
  double epsilon = 0.0;
  double coverage = 0.0;
  BetaFit fit;
};

// Coverage of the eps-inflated range, dispatching on the special cases.
CredibleReport credibleReport(const std::vector<double>& rho, double epsilon);

// Largest eps accepted by credibleReport for this sample: the validity bound
// in the interior case, the saturation point (full side coverage) on an edge,
// 0 when the range is a point or covers [0, 1]. Negative when no eps is valid.
double maxValidEpsilon(const std::vector<double>& rho);

// Smallest eps with coverage >= targetP (bisection to 1e-4). Throws
// Error(Unreachable) when even the largest valid eps falls short.
double epsilonStar(const std::vector<double>& rho, double targetP, double tolerance = 1e-4);

}  // namespace scmb
