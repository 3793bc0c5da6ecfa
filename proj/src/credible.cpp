#include "scmb/credible.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "scmb/error.hpp"

namespace scmb {

namespace {

constexpr std::size_t kTermBudget = 100'000;
constexpr int kNestedDepth = 30;
constexpr double kInnerTolFactor = 1e-1;
constexpr long double kCutoff = 1e-17L;
constexpr double kEdge = 1e-12;

bool nonPositiveInteger(double x) { return x <= 0.0 && x == std::floor(x); }

double rgamma(double x) { return nonPositiveInteger(x) ? 0.0 : 1.0 / boost::math::tgamma(x); }

long double series(double p, double q, double r, double z, std::size_t budget = kTermBudget) {
  long double term = 1.0L, sum = 1.0L;
  const bool terminating = nonPositiveInteger(p) || nonPositiveInteger(q);
  for (std::size_t n = 0;; ++n) {
    const long double dn = static_cast<long double>(n);
    term *= (p + dn) * (q + dn) / ((r + dn) * (dn + 1.0L)) * static_cast<long double>(z);
    sum += term;
    if (term == 0.0L) return sum;
    if (!terminating && std::fabs(term) <= kCutoff * std::fabs(sum)) return sum;
    if (!terminating && n + 1 >= budget) {
      throw Error(ErrorCode::NonConvergent, "2F1 series did not converge within " + std::to_string(budget) + " terms");
    }
  }
}

double gaussAtOne(double p, double q, double r) {
  const double m = r - p - q;
  if (!(m > 0.0)) throw Error(ErrorCode::NonConvergent, "2F1 diverges at z = 1 unless r - p - q > 0");
  if (nonPositiveInteger(r - p) || nonPositiveInteger(r - q)) return 0.0;
  int s1 = 1, s2 = 1, s3 = 1, s4 = 1;
  const double lg = boost::math::lgamma(r, &s1) + boost::math::lgamma(m, &s2) - boost::math::lgamma(r - p, &s3) -
                    boost::math::lgamma(r - q, &s4);
  return s1 * s2 * s3 * s4 * std::exp(lg);
}

double logBeta(double a, double b) {
  return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
}

}  // namespace

double hyp2f1(double p, double q, double r, double z) {
  if (!std::isfinite(p) || !std::isfinite(q) || !std::isfinite(r) || !std::isfinite(z)) {
    throw Error(ErrorCode::InvalidArgument, "2F1 arguments must be finite");
  }
  if (nonPositiveInteger(r)) throw Error(ErrorCode::InvalidArgument, "2F1 undefined for non-positive integer r");
  if (z > 1.0) throw Error(ErrorCode::InvalidArgument, "2F1 is only implemented for z <= 1");
  if (z == 0.0) return 1.0;
  if (nonPositiveInteger(p) || nonPositiveInteger(q)) return static_cast<double>(series(p, q, r, z));
  if (z < 0.0) {
    // Pfaff: maps z < 0 into (0, 1).
    return std::pow(1.0 - z, -p) * hyp2f1(p, r - q, r, z / (z - 1.0));
  }
  if (z <= 0.5) return static_cast<double>(series(p, q, r, z));
  if (z == 1.0) return gaussAtOne(p, q, r);

  const double w = 1.0 - z;
  // r = p + 1 is the incomplete beta family: use the complement B(a,b) - B_{1-z}(b,a).
  if (r == q + 1.0) std::swap(p, q);
  if (r == p + 1.0 && p > 0.0 && q < 1.0) {
    const double a = p, b = 1.0 - q;
    const long double tail = std::pow(static_cast<long double>(w), b) / b * series(b, 1.0 - a, b + 1.0, w);
    const long double full = boost::math::beta(a, b);
    return static_cast<double>(a * std::pow(static_cast<long double>(z), -a) * (full - tail));
  }
  const double m = r - p - q;
  if (std::abs(m - std::round(m)) > 1e-3) {
    const double A = boost::math::tgamma(r) * boost::math::tgamma(m) * rgamma(r - p) * rgamma(r - q);
    const double B = boost::math::tgamma(r) * boost::math::tgamma(-m) * rgamma(p) * rgamma(q);
    long double out = 0.0L;
    if (A != 0.0) out += A * series(p, q, 1.0 - m, w);
    if (B != 0.0) out += B * std::pow(static_cast<long double>(w), m) * series(r - p, r - q, m + 1.0, w);
    return static_cast<double>(out);
  }
  // Near-integer r - p - q: the connection coefficients cancel, sum directly.
  return static_cast<double>(series(p, q, r, z, 10 * kTermBudget));
}

namespace {

double simpsonStep(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth, int minDepth, int maxDepth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Halving the tolerance eventually drops below rounding noise; stop there.
  const double noise = 1024.0 * std::numeric_limits<double>::epsilon() * (std::abs(left) + std::abs(right));
  const bool settled = std::abs(delta) <= std::max(15.0 * tol, noise);
  if (depth >= maxDepth || (depth >= minDepth && settled)) return left + right + delta / 15.0;
  return simpsonStep(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, minDepth, maxDepth) +
         simpsonStep(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, minDepth, maxDepth);
}

// Magnitude estimate only; fine enough not to step over narrow peaks.
double compositeSimpson(const std::function<double(double)>& f, double lo, double hi) {
  constexpr int kPanels = 8;
  double sum = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double a = lo + (hi - lo) * i / kPanels, b = lo + (hi - lo) * (i + 1) / kPanels;
    sum += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
  }
  return sum;
}

// Splits [0, hi] at h, 2h, 4h, ... so that integrands peaked at the origin
// get resolved. Every piece shares one absolute tolerance taken from a coarse
// estimate of the whole integral, so negligible tails are not over-refined.
double integrateFromZero(const std::function<double(double)>& f, double hi, double h, double relTol, int minDepth) {
  if (!(hi > 0.0)) return 0.0;
  h = std::min(h, hi);
  struct Piece {
    double lo, hi, flo, fmid, fhi;
  };
  std::vector<Piece> pieces;
  double lo = 0.0, step = h, flo = f(0.0), scale = 0.0;
  while (lo < hi) {
    const double up = std::min(hi, lo + step);
    const double fmid = f(0.5 * (lo + up)), fhi = f(up);
    pieces.push_back({lo, up, flo, fmid, fhi});
    scale += compositeSimpson(f, lo, up);
    lo = up;
    flo = fhi;
    step *= 2.0;
  }
  const double tol =
      relTol * std::max(std::abs(scale), std::numeric_limits<double>::min()) / static_cast<double>(pieces.size());
  double total = 0.0;
  for (const auto& p : pieces) {
    const double whole = (p.hi - p.lo) / 6.0 * (p.flo + 4.0 * p.fmid + p.fhi);
    total += simpsonStep(f, p.lo, p.hi, p.flo, p.fmid, p.fhi, whole, tol, 0, minDepth, kNestedDepth);
  }
  return total;
}

// t^a 2F1(a, 1-b; a+1; t) / (a B(a,b)) is the regularized incomplete beta
// I_t(a, b); the series form cancels catastrophically once b >> 1, so the
// value is taken from Boost's continued-fraction evaluation.
double betaCdf(double t, double alpha, double beta) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return boost::math::ibeta(alpha, beta, t);
}

double betaSurvival(double t, double alpha, double beta) {
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  return boost::math::ibetac(alpha, beta, t);
}

}  // namespace

double adaptiveSimpson(const std::function<double(double)>& f, double lo, double hi, double relTol, int minDepth,
                       int maxDepth) {
  if (hi == lo) return 0.0;
  const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  // Rough magnitude from a composite rule sets the absolute target.
  const double rough = compositeSimpson(f, lo, hi);
  const double tol = relTol * std::max(std::abs(rough), std::numeric_limits<double>::min());
  return simpsonStep(f, lo, hi, fa, fm, fb, whole, tol, 0, minDepth, maxDepth);
}

double CoverageQuery::deltaA() const {
  const double l = L();
  return epsilon * l <= a ? 2.0 * l * epsilon : 2.0 * a;
}

double CoverageQuery::deltaB() const {
  const double l = L();
  return epsilon * l <= 1.0 - b ? 2.0 * l * epsilon : 2.0 * (1.0 - b);
}

bool CoverageQuery::valid() const {
  if (!(epsilon >= 0.0) || !(a >= 0.0) || !(b <= 1.0) || !(a <= b) || k < 1) return false;
  const double l = L();
  const double da = deltaA(), db = deltaB();
  const double slack = 1e-12;
  return da <= 2.0 * (1.0 - l) - db + slack && db <= 1.0 - l + slack;
}

double CoverageQuery::maxEpsilon() const {
  CoverageQuery q = *this;
  const double l = L();
  if (!(l > 0.0)) return std::numeric_limits<double>::infinity();
  double hi = std::max(a, 1.0 - b) / l + 1.0;
  q.epsilon = hi;
  if (q.valid()) return std::numeric_limits<double>::infinity();
  double lo = 0.0;
  q.epsilon = 0.0;
  if (!q.valid()) return -1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    q.epsilon = 0.5 * (lo + hi);
    (q.valid() ? lo : hi) = q.epsilon;
  }
  return lo;
}

double runLikelihood(double x, double y, double L, double alpha, double beta, int k) {
  const double t = L + x + y;
  const double lo = x / t, hi = (L + x) / t;
  // Upper tails avoid cancellation when both ends sit above the bulk.
  const double inside = lo > alpha / (alpha + beta) ? betaSurvival(lo, alpha, beta) - betaSurvival(hi, alpha, beta)
                                                    : betaCdf(hi, alpha, beta) - betaCdf(lo, alpha, beta);
  return std::pow(std::clamp(inside, 0.0, 1.0), k);
}

double coverageProbability(const CoverageQuery& query, const BetaFit& fit, double relTol) {
  const double L = query.L();
  if (!(L > 0.0 && L < 1.0)) throw Error(ErrorCode::InvalidArgument, "coverage needs 0 < L < 1");
  if (query.k < 1) throw Error(ErrorCode::InvalidArgument, "coverage needs k >= 1");
  if (!query.valid()) {
    throw Error(ErrorCode::InvalidEpsilon, "epsilon " + std::to_string(query.epsilon) +
                                               " violates the validity conditions for this range");
  }
  const double xa = query.deltaA() / 2.0, yb = query.deltaB() / 2.0;
  if (xa <= 0.0 || yb <= 0.0) return 0.0;
  const double al = fit.alpha, be = fit.beta;
  const int k = query.k;
  const double h = L / (k + 1.0);
  auto P = [&](double x, double y) { return runLikelihood(x, y, L, al, be, k); };
  // Inner integrals must be quieter than the outer tolerance or the outer
  // recursion never settles.
  const double innerTol = relTol * kInnerTolFactor;

  const double numerator = integrateFromZero(
      [&](double y) { return integrateFromZero([&](double x) { return P(x, y); }, xa, h, innerTol, 3); }, yb, h,
      relTol, 3);
  const double side = query.a + (1.0 - query.b);
  const double denominator = integrateFromZero(
      [&](double y) { return integrateFromZero([&](double x) { return P(x, y); }, side - y, h, innerTol, 3); }, side,
      h, relTol, 3);
  if (!(denominator > 0.0)) throw Error(ErrorCode::NonConvergent, "coverage denominator vanished");
  return std::clamp(numerator / denominator, 0.0, 1.0);
}

double edgeCoverage(const CoverageQuery& query, const BetaFit& fit, EdgeCase edge, double relTol) {
  const double al = fit.alpha, be = fit.beta;
  const int k = query.k;
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "coverage needs k >= 1");
  if (edge == EdgeCase::AZero) {
    if (std::abs(query.a) > kEdge) throw Error(ErrorCode::CaseMismatch, "a = 0 case requested but a != 0");
    const double L = query.b;
    if (!(L > 0.0)) throw Error(ErrorCode::InvalidArgument, "a = 0 case needs b > 0");
    const double side = 1.0 - query.b;
    const double half = std::min(L * query.epsilon, side);
    if (half <= 0.0) return side <= 0.0 ? 1.0 : 0.0;
    auto P = [&](double y) { return std::pow(betaCdf(L / (L + y), al, be), k); };
    const double h = L / (k + 1.0);
    return std::clamp(integrateFromZero(P, half, h, relTol, 4) / integrateFromZero(P, side, h, relTol, 4), 0.0, 1.0);
  }
  if (std::abs(query.b - 1.0) > kEdge) throw Error(ErrorCode::CaseMismatch, "b = 1 case requested but b != 1");
  const double L = 1.0 - query.a;
  if (!(L > 0.0)) throw Error(ErrorCode::InvalidArgument, "b = 1 case needs a < 1");
  const double side = query.a;
  const double half = std::min(L * query.epsilon, side);
  if (half <= 0.0) return side <= 0.0 ? 1.0 : 0.0;
  auto P = [&](double x) {
    const double t = L + x;
    const double inside = 1.0 - betaCdf(x / t, al, be);
    return std::pow(std::clamp(inside, 0.0, 1.0), k);
  };
  const double h = L / (k + 1.0);
  return std::clamp(integrateFromZero(P, half, h, relTol, 4) / integrateFromZero(P, side, h, relTol, 4), 0.0, 1.0);
}

double identifiabilityProbability(int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const double v = 1.0 + 9.0 / std::pow(3.0, k) - 8.0 / std::pow(2.0, k);
  return std::clamp(v, 0.0, 1.0);
}

double uniformCoverage(int k, double epsilon, double L) {
  if (k < 3) throw Error(ErrorCode::InvalidArgument, "closed form needs k >= 3");
  if (!(L > 0.0 && L < 1.0)) throw Error(ErrorCode::InvalidArgument, "closed form needs 0 < L < 1");
  const double e = 2.0 - k;
  const double num = 1.0 + std::pow(1.0 + 2.0 * epsilon, e) - 2.0 * std::pow(1.0 + epsilon, e);
  const double lk = std::pow(L, k - 2);
  const double den = (1.0 - lk) - (k - 2.0) * (1.0 - L) * lk;
  return std::clamp(num / den, 0.0, 1.0);
}

BetaFit fitBeta(const std::vector<double>& rho, double epsilon) {
  if (rho.size() < 2) throw Error(ErrorCode::DegenerateSample, "Beta fit needs at least two values");
  auto [mn, mx] = std::minmax_element(rho.begin(), rho.end());
  const double a = *mn, b = *mx, L = b - a;
  if (!(L > 0.0)) throw Error(ErrorCode::DegenerateSample, "all values coincide");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidEpsilon, "epsilon must be non-negative");
  BetaFit fit;
  fit.lo = a - epsilon * L;
  fit.hi = b + epsilon * L;
  const double eta = 1e-6;
  const double n = static_cast<double>(rho.size());
  double s1 = 0.0, s2 = 0.0, mean = 0.0, sq = 0.0;
  for (double v : rho) {
    const double t = std::clamp((v - fit.lo) / (fit.hi - fit.lo), eta, 1.0 - eta);
    s1 += std::log(t);
    s2 += std::log1p(-t);
    mean += t;
    sq += t * t;
  }
  s1 /= n;
  s2 /= n;
  mean /= n;
  const double var = std::max(sq / n - mean * mean, 1e-300);
  const double common = mean * (1.0 - mean) / var - 1.0;
  double al = common > 0.0 ? mean * common : 1.0;
  double be = common > 0.0 ? (1.0 - mean) * common : 1.0;
  al = std::clamp(al, 1e-3, 1e6);
  be = std::clamp(be, 1e-3, 1e6);

  using boost::math::digamma;
  using boost::math::trigamma;
  auto ll = [&](double x, double y) { return (x - 1.0) * s1 + (y - 1.0) * s2 - logBeta(x, y); };
  for (int it = 0; it < 500; ++it) {
    const double psab = digamma(al + be);
    const double g1 = s1 - digamma(al) + psab;
    const double g2 = s2 - digamma(be) + psab;
    if (std::abs(g1) < 1e-13 && std::abs(g2) < 1e-13) break;
    const double tab = trigamma(al + be);
    // Negative Hessian (positive definite).
    const double h11 = trigamma(al) - tab, h22 = trigamma(be) - tab, h12 = -tab;
    const double det = h11 * h22 - h12 * h12;
    double d1 = (h22 * g1 - h12 * g2) / det;
    double d2 = (h11 * g2 - h12 * g1) / det;
    const double base = ll(al, be);
    double step = 1.0;
    for (int half = 0; half < 60; ++half) {
      const double na = al + step * d1, nb = be + step * d2;
      if (na > 0.0 && nb > 0.0 && ll(na, nb) >= base - 1e-15 * std::abs(base)) {
        al = na;
        be = nb;
        break;
      }
      step *= 0.5;
    }
    if (al > 1e6 || be > 1e6) break;
  }
  fit.alpha = std::clamp(al, 1e-3, 1e6);
  fit.beta = std::clamp(be, 1e-3, 1e6);
  return fit;
}

std::string_view toString(CoverageCase c) {
  switch (c) {
    case CoverageCase::Interior: return "interior";
    case CoverageCase::AZero: return "a-zero";
    case CoverageCase::BOne: return "b-one";
    case CoverageCase::Identifiable: return "identifiable";
    case CoverageCase::Full: return "full";
  }
  return "unknown";
}

CredibleReport credibleReport(const std::vector<double>& rho, double epsilon) {
  if (rho.empty()) throw Error(ErrorCode::InvalidArgument, "no EMCC values");
  CredibleReport r;
  auto [mn, mx] = std::minmax_element(rho.begin(), rho.end());
  r.a = *mn;
  r.b = *mx;
  r.k = static_cast<int>(rho.size());
  r.epsilon = epsilon;
  if (r.a == r.b) {
    r.kind = CoverageCase::Identifiable;
    r.coverage = identifiabilityProbability(r.k);
    r.fit = {1.0, 1.0, r.a, r.b};
    return r;
  }
  const bool aZero = r.a <= kEdge, bOne = r.b >= 1.0 - kEdge;
  if (aZero && bOne) {
    r.kind = CoverageCase::Full;
    r.coverage = 1.0;
    r.fit = {1.0, 1.0, 0.0, 1.0};
    return r;
  }
  r.fit = fitBeta(rho, epsilon);
  CoverageQuery q{aZero ? 0.0 : r.a, bOne ? 1.0 : r.b, r.k, epsilon};
  if (aZero) {
    r.kind = CoverageCase::AZero;
    r.coverage = edgeCoverage(q, r.fit, EdgeCase::AZero);
  } else if (bOne) {
    r.kind = CoverageCase::BOne;
    r.coverage = edgeCoverage(q, r.fit, EdgeCase::BOne);
  } else {
    r.coverage = coverageProbability(q, r.fit);
  }
  return r;
}

double maxValidEpsilon(const std::vector<double>& rho) {
  if (rho.empty()) throw Error(ErrorCode::InvalidArgument, "no EMCC values");
  auto [mn, mx] = std::minmax_element(rho.begin(), rho.end());
  const double a = *mn, b = *mx, L = b - a;
  if (!(L > 0.0)) return 0.0;
  const bool aZero = a <= kEdge, bOne = b >= 1.0 - kEdge;
  if (aZero && bOne) return 0.0;
  if (aZero) return (1.0 - b) / L;
  if (bOne) return a / L;
  const double hi = CoverageQuery{a, b, static_cast<int>(rho.size()), 0.0}.maxEpsilon();
  return std::isfinite(hi) ? hi : std::max(a, 1.0 - b) / L;
}

double epsilonStar(const std::vector<double>& rho, double targetP, double tolerance) {
  if (!(targetP > 0.0 && targetP < 1.0)) throw Error(ErrorCode::InvalidArgument, "target probability must be in (0,1)");
  if (rho.empty()) throw Error(ErrorCode::InvalidArgument, "no EMCC values");
  auto [mn, mx] = std::minmax_element(rho.begin(), rho.end());
  if (!(*mx > *mn)) {
    if (identifiabilityProbability(static_cast<int>(rho.size())) >= targetP) return 0.0;
    throw Error(ErrorCode::Unreachable, "identifiability probability below target for k = " +
                                            std::to_string(rho.size()));
  }
  if (*mn <= kEdge && *mx >= 1.0 - kEdge) return 0.0;
  double hi = maxValidEpsilon(rho);
  if (hi < 0.0) throw Error(ErrorCode::Unreachable, "no valid epsilon for this range");
  auto coverage = [&](double eps) { return credibleReport(rho, eps).coverage; };
  if (coverage(hi) < targetP) {
    throw Error(ErrorCode::Unreachable, "coverage at the largest valid epsilon (" + std::to_string(hi) +
                                            ") is below the target");
  }
  double lo = 0.0;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (coverage(mid) >= targetP ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace scmb
