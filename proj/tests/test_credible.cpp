#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <doctest.h>

#include "scmb/credible.hpp"
#include "scmb/rng.hpp"
#include "support.hpp"

using namespace scmb;

namespace {

double seriesOracle(double p, double q, double r, double z) {
  double term = 1.0, sum = 1.0;
  for (int n = 0; n < 200000; ++n) {
    term *= (p + n) * (q + n) / ((r + n) * (n + 1.0)) * z;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

double insideProb(double x, double y, double L, double al, double be) {
  const double t = L + x + y;
  return boost::math::ibeta(al, be, (L + x) / t) - boost::math::ibeta(al, be, x / t);
}

std::vector<double> betaDraws(std::mt19937_64& gen, double al, double be, int n, double lo, double hi) {
  std::gamma_distribution<double> ga(al, 1.0), gb(be, 1.0);
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double x = ga(gen), y = gb(gen);
    out.push_back(lo + (hi - lo) * x / (x + y));
  }
  return out;
}

}  // namespace

TEST_CASE("hypergeometric function") {
  SUBCASE("logarithm identity") {
    for (double z : {-0.9, -0.3, 0.2, 0.6, 0.95}) {
      CHECK(hyp2f1(1, 1, 2, z) == doctest::Approx(-std::log1p(-z) / z).epsilon(1e-12));
    }
  }
  SUBCASE("binomial identity") {
    for (double z : {-2.0, -0.5, 0.4, 0.8}) {
      CHECK(hyp2f1(1.7, 2.3, 2.3, z) == doctest::Approx(std::pow(1.0 - z, -1.7)).epsilon(1e-11));
    }
  }
  SUBCASE("value at one") {
    const double p = 0.5, q = 1.25, r = 3.0;
    const double want = boost::math::tgamma(r) * boost::math::tgamma(r - p - q) /
                        (boost::math::tgamma(r - p) * boost::math::tgamma(r - q));
    CHECK(hyp2f1(p, q, r, 1.0) == doctest::Approx(want).epsilon(1e-12));
    CHECK(testing::throwsCode([] { hyp2f1(1, 2, 2.5, 1.0); }, ErrorCode::NonConvergent));
  }
  SUBCASE("direct series") {
    for (double z : {-0.7, 0.1, 0.5, 0.9}) {
      CHECK(hyp2f1(2.5, -0.3, 4.2, z) == doctest::Approx(seriesOracle(2.5, -0.3, 4.2, z)).epsilon(1e-11));
      CHECK(hyp2f1(3, 5, 7.5, z) == doctest::Approx(seriesOracle(3, 5, 7.5, z)).epsilon(1e-10));
    }
  }
  SUBCASE("terminating series") {
    // 2F1(-2, q; r; z) = 1 - 2qz/r + q(q+1)z^2/(r(r+1)).
    const double q = 1.5, r = 2.5, z = -3.0;
    CHECK(hyp2f1(-2, q, r, z) == doctest::Approx(1 - 2 * q * z / r + q * (q + 1) * z * z / (r * (r + 1))));
  }
  SUBCASE("large negative argument") {
    // Pfaff: 2F1(p,q;r;z) = (1-z)^-p 2F1(p, r-q; r; z/(z-1)).
    const double z = -6.0;
    CHECK(hyp2f1(1.3, 0.7, 2.9, z) ==
          doctest::Approx(std::pow(1 - z, -1.3) * seriesOracle(1.3, 2.2, 2.9, z / (z - 1))).epsilon(1e-10));
  }
}

TEST_CASE("uniform runs match the closed form") {
  for (int k : {3, 5, 10}) {
    for (double L : {0.2, 0.6}) {
      const double a = (1 - L) / 2;
      CoverageQuery q{a, a + L, k, 0.1};
      CHECK(coverageProbability(q, {1, 1, 0, 1}) == doctest::Approx(uniformCoverage(k, 0.1, L)).epsilon(1e-4));
    }
  }
}

TEST_CASE("coverage agrees with a Monte Carlo ratio") {
  const double a = 0.3, b = 0.5, L = b - a, al = 2, be = 3, eps = 0.25;
  const int k = 5;
  CoverageQuery q{a, b, k, eps};
  const double got = coverageProbability(q, {al, be, 0, 1});
  std::mt19937_64 gen(97);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double side = a + 1 - b, half = eps * L;
  double sw = 0, swi = 0;
  std::vector<std::pair<double, bool>> samples;
  for (int i = 0; i < 400000; ++i) {
    double x = side * unit(gen), y = side * unit(gen);
    if (x + y > side) {
      x = side - x;
      y = side - y;
    }
    const double w = std::pow(insideProb(x, y, L, al, be), k);
    const bool in = x <= half && y <= half;
    sw += w;
    if (in) swi += w;
    samples.emplace_back(w, in);
  }
  const double ratio = swi / sw;
  double var = 0;
  for (const auto& [w, in] : samples) var += w * w * ((in ? 1.0 : 0.0) - ratio) * ((in ? 1.0 : 0.0) - ratio);
  const double se = std::sqrt(var) / sw;
  CHECK(std::abs(got - ratio) <= 4 * se + 1e-6);
  CHECK(runLikelihood(0.01, 0.02, L, al, be, k) == doctest::Approx(std::pow(insideProb(0.01, 0.02, L, al, be), k)));
}

TEST_CASE("coverage at zero inflation is zero and grows with epsilon") {
  CoverageQuery q{0.3, 0.45, 8, 0.0};
  const BetaFit fit{1.5, 2.5, 0, 1};
  CHECK(coverageProbability(q, fit) == 0.0);
  double last = 0;
  for (double eps : {0.05, 0.2, 0.5, 1.0, 1.8}) {
    q.epsilon = eps;
    const double c = coverageProbability(q, fit);
    CHECK(c >= last);
    CHECK(c <= 1.0);
    last = c;
  }
  CHECK(last > 0.5);
}

TEST_CASE("validity conditions") {
  CoverageQuery q{0.05, 0.4, 4, 0.1};
  CHECK(q.valid());
  CHECK(q.maxEpsilon() > 0.1);
  q.epsilon = q.maxEpsilon() * 1.01;
  CHECK_FALSE(q.valid());
  CHECK(testing::throwsCode([&] { coverageProbability(q, {1, 1, 0, 1}); }, ErrorCode::InvalidEpsilon));
}

TEST_CASE("edge case with a = 0") {
  const double b = 0.4, al = 1.5, be = 2.0, eps = 0.3;
  const int k = 6;
  CoverageQuery q{0.0, b, k, eps};
  const double got = edgeCoverage(q, {al, be, 0, 1}, EdgeCase::AZero);
  // Trapezoid rule on the one-dimensional ratio.
  auto P = [&](double y) { return std::pow(boost::math::ibeta(al, be, b / (b + y)), k); };
  auto trap = [&](double hi) {
    const int n = 200000;
    const double h = hi / n;
    double s = 0.5 * (P(0) + P(hi));
    for (int i = 1; i < n; ++i) s += P(i * h);
    return s * h;
  };
  CHECK(got == doctest::Approx(trap(b * eps) / trap(1 - b)).epsilon(1e-6));
  CHECK(testing::throwsCode([&] { edgeCoverage({0.1, 0.4, k, eps}, {al, be, 0, 1}, EdgeCase::AZero); },
                            ErrorCode::CaseMismatch));
  CHECK(testing::throwsCode([&] { edgeCoverage({0.1, 0.4, k, eps}, {al, be, 0, 1}, EdgeCase::BOne); },
                            ErrorCode::CaseMismatch));
}

TEST_CASE("mirrored samples give the same coverage") {
  Rng rng(101);
  for (const auto& [lo, hi] : std::vector<std::pair<double, double>>{{0.0, 0.3}, {0.2, 0.5}}) {
    std::vector<double> rho{lo, hi}, mirror;
    for (int i = 0; i < 10; ++i) rho.push_back(lo + (hi - lo) * rng.uniform());
    for (double v : rho) mirror.push_back(1.0 - v);
    const auto r = credibleReport(rho, 0.2);
    const auto m = credibleReport(mirror, 0.2);
    CHECK(r.coverage == doctest::Approx(m.coverage).epsilon(1e-6));
    if (lo == 0.0) {
      CHECK((r.kind == CoverageCase::AZero));
      CHECK((m.kind == CoverageCase::BOne));
    }
  }
}

TEST_CASE("special cases of the report") {
  CHECK((credibleReport({0.2, 0.2, 0.2}, 0.1).kind == CoverageCase::Identifiable));
  CHECK(credibleReport({0.2, 0.2, 0.2}, 0.1).coverage == doctest::Approx(identifiabilityProbability(3)));
  const auto full = credibleReport({0.0, 0.5, 1.0}, 0.0);
  CHECK((full.kind == CoverageCase::Full));
  CHECK(full.coverage == 1.0);
}

TEST_CASE("identifiability probability") {
  CHECK(identifiabilityProbability(1) == 0.0);
  CHECK(identifiabilityProbability(2) == doctest::Approx(0.0));
  CHECK(identifiabilityProbability(3) == doctest::Approx(1.0 / 3));
  for (int k = 3; k < 30; ++k) CHECK(identifiabilityProbability(k + 1) > identifiabilityProbability(k));
  CHECK(identifiabilityProbability(10) >= 0.99);
}

TEST_CASE("Beta fit") {
  std::mt19937_64 gen(103);
  SUBCASE("uniform sample") {
    std::uniform_real_distribution<double> u(0.2, 0.7);
    std::vector<double> rho;
    for (int i = 0; i < 10000; ++i) rho.push_back(u(gen));
    const auto fit = fitBeta(rho, 0.0);
    CHECK(fit.alpha == doctest::Approx(1.0).epsilon(0.06));
    CHECK(fit.beta == doctest::Approx(1.0).epsilon(0.06));
  }
  SUBCASE("the fit solves the likelihood equations") {
    const auto rho = betaDraws(gen, 2.0, 5.0, 10000, 0.1, 0.6);
    const double eps = 0.1;
    const auto fit = fitBeta(rho, eps);
    double s1 = 0, s2 = 0;
    for (double v : rho) {
      const double t = (v - fit.lo) / (fit.hi - fit.lo);
      s1 += std::log(t);
      s2 += std::log1p(-t);
    }
    s1 /= static_cast<double>(rho.size());
    s2 /= static_cast<double>(rho.size());
    using boost::math::digamma;
    CHECK(std::abs(s1 - digamma(fit.alpha) + digamma(fit.alpha + fit.beta)) < 1e-8);
    CHECK(std::abs(s2 - digamma(fit.beta) + digamma(fit.alpha + fit.beta)) < 1e-8);
  }
  SUBCASE("degenerate samples") {
    CHECK(testing::throwsCode([] { fitBeta({0.3}, 0.1); }, ErrorCode::DegenerateSample));
    CHECK(testing::throwsCode([] { fitBeta({0.3, 0.3}, 0.1); }, ErrorCode::DegenerateSample));
  }
}

TEST_CASE("smallest epsilon reaching a target") {
  Rng rng(107);
  std::vector<double> rho{0.3, 0.5};
  for (int i = 0; i < 18; ++i) rho.push_back(0.3 + 0.2 * rng.uniform());
  const double tol = 5e-3;
  const double e80 = epsilonStar(rho, 0.8, tol);
  const double e90 = epsilonStar(rho, 0.9, tol);
  CHECK(e80 <= e90);
  CHECK(credibleReport(rho, e90).coverage >= 0.9 - 1e-6);
  CHECK(credibleReport(rho, std::max(0.0, e90 - 2 * tol)).coverage < 0.9);
  // A coarse scan finds nothing below the bisection result.
  for (double f : {0.25, 0.5, 0.75}) CHECK(credibleReport(rho, f * e90).coverage < 0.9);
  CHECK(epsilonStar(std::vector<double>(12, 0.4), 0.9) == 0.0);
  CHECK(testing::throwsCode([] { epsilonStar({0.4, 0.4}, 0.9); }, ErrorCode::Unreachable));
}
