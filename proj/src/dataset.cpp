#include "scmb/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "scmb/error.hpp"
#include "scmb/inference.hpp"

namespace scmb {

namespace {

constexpr std::string_view kCountColumn = "__count";

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parseInteger(const std::string& s, std::size_t lineNo) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::SchemaError, "line " + std::to_string(lineNo) + ": '" + s + "' is not an integer");
  }
  return value;
}

}  // namespace

Dataset::Dataset(std::vector<std::string> columns, const std::vector<std::vector<int>>& rows,
                 const std::vector<std::int64_t>& counts)
    : columns_(std::move(columns)) {
  if (!counts.empty() && counts.size() != rows.size()) {
    throw Error(ErrorCode::InvalidArgument, "row and count vectors differ in length");
  }
  std::map<std::vector<int>, std::size_t> seen;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != columns_.size()) throw Error(ErrorCode::InvalidArgument, "row width differs from header");
    const std::int64_t c = counts.empty() ? 1 : counts[r];
    if (c < 0) throw Error(ErrorCode::InvalidArgument, "negative row count");
    if (c == 0) continue;
    for (int s : rows[r]) {
      if (s < 0) throw Error(ErrorCode::ValidationError, "negative state in data");
    }
    auto [it, inserted] = seen.emplace(rows[r], rows_.size());
    if (inserted) {
      rows_.push_back(rows[r]);
      counts_.push_back(c);
    } else {
      counts_[it->second] += c;
    }
    total_ += c;
  }
}

Dataset Dataset::readCsv(std::istream& in) {
  std::string line;
  std::size_t lineNo = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = splitCsvLine(line);
    break;
  }
  if (header.empty()) throw Error(ErrorCode::EmptyDataset, "CSV has no header");
  int countCol = -1;
  std::vector<std::string> columns;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == kCountColumn) {
      countCol = static_cast<int>(i);
    } else {
      columns.push_back(header[i]);
    }
  }
  std::vector<std::vector<int>> rows;
  std::vector<std::int64_t> counts;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = splitCsvLine(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(lineNo) + ": expected " +
                                              std::to_string(header.size()) + " fields");
    }
    std::vector<int> row;
    std::int64_t c = 1;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (static_cast<int>(i) == countCol) {
        c = parseInteger<std::int64_t>(cells[i], lineNo);
      } else {
        row.push_back(parseInteger<int>(cells[i], lineNo));
      }
    }
    rows.push_back(std::move(row));
    counts.push_back(c);
  }
  return Dataset(std::move(columns), rows, counts);
}

Dataset Dataset::readCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  return readCsv(in);
}

void Dataset::writeCsv(std::ostream& out) const {
  for (const auto& c : columns_) out << c << ',';
  out << kCountColumn << '\n';
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (int s : rows_[r]) out << s << ',';
    out << counts_[r] << '\n';
  }
}

int Dataset::column(std::string_view id) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == id) return static_cast<int>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "dataset has no column '" + std::string(id) + "'");
}

std::int64_t Dataset::count(const std::vector<std::pair<int, int>>& assignment) const {
  std::int64_t n = 0;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    bool match = true;
    for (const auto& [c, s] : assignment) {
      if (rows_[r][static_cast<std::size_t>(c)] != s) {
        match = false;
        break;
      }
    }
    if (match) n += counts_[r];
  }
  return n;
}

std::map<std::vector<int>, std::int64_t> Dataset::marginal(const std::vector<int>& cols) const {
  std::map<std::vector<int>, std::int64_t> out;
  std::vector<int> key(cols.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (std::size_t i = 0; i < cols.size(); ++i) key[i] = rows_[r][static_cast<std::size_t>(cols[i])];
    out[key] += counts_[r];
  }
  return out;
}

std::vector<int> Dataset::bind(const StructuralCausalModel& model) const {
  std::vector<int> map(model.size(), -1);
  for (int v : model.endogenous()) {
    int c = -1;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i] == model.id(v)) c = static_cast<int>(i);
    }
    if (c < 0) throw Error(ErrorCode::InvalidArgument, "dataset lacks a column for '" + model.id(v) + "'");
    for (const auto& row : rows_) {
      if (row[static_cast<std::size_t>(c)] >= model.cardinality(v)) {
        throw Error(ErrorCode::ValidationError, "state " + std::to_string(row[static_cast<std::size_t>(c)]) +
                                                    " out of range for '" + model.id(v) + "'");
      }
    }
    map[static_cast<std::size_t>(v)] = c;
  }
  return map;
}

Dataset Dataset::merged(const Dataset& other) const {
  if (columns_.empty()) return other;
  if (other.columns_ != columns_) throw Error(ErrorCode::InvalidArgument, "cannot merge datasets with different columns");
  auto rows = rows_;
  auto counts = counts_;
  rows.insert(rows.end(), other.rows_.begin(), other.rows_.end());
  counts.insert(counts.end(), other.counts_.begin(), other.counts_.end());
  return Dataset(columns_, rows, counts);
}

// ---------------------------------------------------------------------------

std::size_t contextIndex(const Cpt& cpt, const std::vector<int>& assignment) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < cpt.context.size(); ++i) {
    idx = idx * static_cast<std::size_t>(cpt.contextCards[i]) +
          static_cast<std::size_t>(assignment[static_cast<std::size_t>(cpt.context[i])]);
  }
  return idx;
}

EndogenousBN fitEndogenous(const StructuralCausalModel& model, const Dataset& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no records");
  const auto col = data.bind(model);
  EndogenousBN bn;
  bn.total = data.total();
  bn.cptOf.assign(model.size(), -1);

  std::map<int, const std::vector<int>*> contextOf;
  const auto comps = cComponents(model);
  for (const auto& c : comps) {
    for (const auto& [v, ctx] : c.contexts) contextOf[v] = &ctx;
  }

  std::vector<int> assignment(model.size(), 0);
  for (int v : model.endogenousOrder()) {
    Cpt cpt;
    cpt.variable = v;
    cpt.cardinality = model.cardinality(v);
    cpt.context = *contextOf.at(v);
    std::size_t nctx = 1;
    for (int w : cpt.context) {
      cpt.contextCards.push_back(model.cardinality(w));
      nctx *= static_cast<std::size_t>(model.cardinality(w));
    }
    const auto card = static_cast<std::size_t>(cpt.cardinality);
    cpt.counts.assign(nctx * card, 0);
    cpt.contextCounts.assign(nctx, 0);
    for (std::size_t r = 0; r < data.rows().size(); ++r) {
      const auto& row = data.rows()[r];
      for (int w : cpt.context) assignment[static_cast<std::size_t>(w)] = row[static_cast<std::size_t>(col[static_cast<std::size_t>(w)])];
      const auto ctx = contextIndex(cpt, assignment);
      const int s = row[static_cast<std::size_t>(col[static_cast<std::size_t>(v)])];
      cpt.counts[ctx * card + static_cast<std::size_t>(s)] += data.counts()[r];
      cpt.contextCounts[ctx] += data.counts()[r];
    }
    cpt.prob.assign(nctx * card, 0.0);
    cpt.unobserved.assign(nctx, 0);
    for (std::size_t ctx = 0; ctx < nctx; ++ctx) {
      if (cpt.contextCounts[ctx] == 0) {
        cpt.unobserved[ctx] = 1;
        for (std::size_t s = 0; s < card; ++s) cpt.prob[ctx * card + s] = 1.0 / static_cast<double>(card);
      } else {
        for (std::size_t s = 0; s < card; ++s) {
          cpt.prob[ctx * card + s] =
              static_cast<double>(cpt.counts[ctx * card + s]) / static_cast<double>(cpt.contextCounts[ctx]);
        }
      }
    }
    bn.cptOf[static_cast<std::size_t>(v)] = static_cast<int>(bn.cpts.size());
    bn.cpts.push_back(std::move(cpt));
  }
  return bn;
}

double lambdaStar(const StructuralCausalModel& model, const EndogenousBN& bn, const Dataset& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no records");
  const auto col = data.bind(model);
  std::vector<int> assignment(model.size(), 0);
  double total = 0.0;
  for (std::size_t r = 0; r < data.rows().size(); ++r) {
    const auto& row = data.rows()[r];
    for (int v : model.endogenous()) assignment[static_cast<std::size_t>(v)] = row[static_cast<std::size_t>(col[static_cast<std::size_t>(v)])];
    for (const auto& cpt : bn.cpts) {
      const double p = cpt.p(contextIndex(cpt, assignment), assignment[static_cast<std::size_t>(cpt.variable)]);
      if (p <= 0.0) return -std::numeric_limits<double>::infinity();
      total += static_cast<double>(data.counts()[r]) * std::log(p);
    }
  }
  return total;
}

double exoLogLik(const StructuralCausalModel& model, const ExoPmfs& thetaU, const Dataset& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no records");
  const auto col = data.bind(model);
  double total = 0.0;
  for (const auto& comp : cComponents(model)) {
    if (comp.endogenous.empty()) continue;
    const Factor q = componentFactor(model, comp, thetaU);
    std::vector<int> cols;
    for (int w : comp.closure) cols.push_back(col[static_cast<std::size_t>(w)]);
    for (const auto& [states, n] : data.marginal(cols)) {
      const double p = q.at(states);
      if (p <= 0.0) return -std::numeric_limits<double>::infinity();
      total += static_cast<double>(n) * std::log(p);
    }
  }
  return total;
}

std::vector<double> endogenousJoint(const StructuralCausalModel& model, const EndogenousBN& bn) {
  const auto& endo = model.endogenous();
  std::size_t n = 1;
  for (int v : endo) n *= static_cast<std::size_t>(model.cardinality(v));
  std::vector<double> joint(n, 0.0);
  std::vector<int> assignment(model.size(), 0);
  std::vector<int> digits(endo.size(), 0);
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (std::size_t i = 0; i < endo.size(); ++i) assignment[static_cast<std::size_t>(endo[i])] = digits[i];
    double p = 1.0;
    for (const auto& cpt : bn.cpts) p *= cpt.p(contextIndex(cpt, assignment), assignment[static_cast<std::size_t>(cpt.variable)]);
    joint[idx] = p;
    for (std::size_t i = endo.size(); i-- > 0;) {
      if (++digits[i] < model.cardinality(endo[i])) break;
      digits[i] = 0;
    }
  }
  return joint;
}

}  // namespace scmb
