#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "scmb/model.hpp"

namespace scmb {

// Aggregated endogenous observations: distinct rows (first-appearance order)
// with integer multiplicities.
class Dataset {
 public:
  Dataset() = default;
  // Rows with equal states are merged. `counts` may be empty (all ones).
  Dataset(std::vector<std::string> columns, const std::vector<std::vector<int>>& rows,
          const std::vector<std::int64_t>& counts = {});

  // Header of column ids; an optional `__count` column carries multiplicities.
  static Dataset readCsv(std::istream& in);
  static Dataset readCsv(const std::string& path);
  void writeCsv(std::ostream& out) const;

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<int>>& rows() const { return rows_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t total() const { return total_; }
  bool empty() const { return total_ == 0; }

  int column(std::string_view id) const;
  // n(x) for a partial assignment given as (column, state) pairs.
  std::int64_t count(const std::vector<std::pair<int, int>>& assignment) const;
  // Counts of the joint states of `cols` (tuples ordered as `cols`).
  std::map<std::vector<int>, std::int64_t> marginal(const std::vector<int>& cols) const;

  // Column index of every model variable (-1 for exogenous). Throws
  // Error(InvalidArgument) when an endogenous column is missing and
  // Error(ValidationError) when a state exceeds its cardinality.
  std::vector<int> bind(const StructuralCausalModel& model) const;

  Dataset merged(const Dataset& other) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<int>> rows_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

struct Cpt {
  int variable = -1;
  int cardinality = 0;
  std::vector<int> context;       // W_V, topological order
  std::vector<int> contextCards;
  // Context index is lexicographic over `context`, last member fastest.
  std::vector<double> prob;              // [ctx * cardinality + v]
  std::vector<std::int64_t> counts;      // n(v, w_V)
  std::vector<std::int64_t> contextCounts;  // n(w_V)
  std::vector<char> unobserved;          // n(w_V) == 0, filled uniformly

  std::size_t contextCount() const { return contextCounts.size(); }
  double p(std::size_t ctx, int v) const { return prob[ctx * static_cast<std::size_t>(cardinality) + static_cast<std::size_t>(v)]; }
  std::int64_t n(std::size_t ctx, int v) const {
    return counts[ctx * static_cast<std::size_t>(cardinality) + static_cast<std::size_t>(v)];
  }
};

// P(v | w_V) for every endogenous V, following the c-component factorisation.
struct EndogenousBN {
  std::vector<Cpt> cpts;     // endogenous topological order
  std::vector<int> cptOf;    // variable index -> position in cpts, -1 if exogenous
  std::int64_t total = 0;

  const Cpt& cpt(int v) const { return cpts.at(static_cast<std::size_t>(cptOf.at(static_cast<std::size_t>(v)))); }
};

// Context index of `ctx` under a full assignment indexed by variable.
std::size_t contextIndex(const Cpt& cpt, const std::vector<int>& assignment);

EndogenousBN fitEndogenous(const StructuralCausalModel& model, const Dataset& data);

// Sum over V and (v, w_V) of n(v, w_V) log P(v | w_V), in nats.
double lambdaStar(const StructuralCausalModel& model, const EndogenousBN& bn, const Dataset& data);

// l(theta_U): log-likelihood of the data under the FSCM obtained by plugging
// `thetaU` into `model`. Returns -infinity when an observed configuration is
// impossible.
double exoLogLik(const StructuralCausalModel& model, const ExoPmfs& thetaU, const Dataset& data);

// Joint endogenous PMF of the BN, scope in endogenous index order.
std::vector<double> endogenousJoint(const StructuralCausalModel& model, const EndogenousBN& bn);

}  // namespace scmb
