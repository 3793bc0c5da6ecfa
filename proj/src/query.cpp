#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "scmb/error.hpp"
#include "scmb/model.hpp"

namespace scmb {

std::string_view toString(QueryKind kind) {
  switch (kind) {
    case QueryKind::Observational: return "observational";
    case QueryKind::Interventional: return "interventional";
    case QueryKind::Counterfactual: return "counterfactual";
    case QueryKind::PN: return "pn";
    case QueryKind::PS: return "ps";
    case QueryKind::PNS: return "pns";
  }
  return "unknown";
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }

void requireBoolean(const StructuralCausalModel& m, int v, const char* role) {
  if (v < 0 || v >= static_cast<int>(m.size())) bad(std::string(role) + " variable out of range");
  if (m.isExogenous(v)) bad(std::string(role) + " '" + m.id(v) + "' must be endogenous");
  if (m.cardinality(v) != 2) bad(std::string(role) + " '" + m.id(v) + "' must be Boolean");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

int parseState(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad("invalid state '" + std::string(s) + "'");
  return value;
}

// "Y''" -> (Y, 2)
std::pair<int, int> parseVariable(const StructuralCausalModel& m, std::string_view token) {
  int world = 0;
  while (!token.empty() && token.back() == kPrime.front()) {
    token.remove_suffix(1);
    ++world;
  }
  auto v = m.find(trim(token));
  if (!v) bad("unknown variable '" + std::string(token) + "'");
  return {*v, world};
}

std::vector<Literal> parseLiterals(const StructuralCausalModel& m, std::string_view text) {
  std::vector<Literal> out;
  if (trim(text).empty()) return out;
  for (auto item : split(text, ',')) {
    auto eq = item.find('=');
    if (eq == std::string_view::npos) bad("expected VAR=STATE, got '" + std::string(item) + "'");
    auto [v, w] = parseVariable(m, trim(item.substr(0, eq)));
    out.push_back({w, v, parseState(trim(item.substr(eq + 1)))});
  }
  return out;
}

std::map<int, int> parseInterventions(const StructuralCausalModel& m, std::string_view text) {
  std::map<int, int> out;
  for (const auto& lit : parseLiterals(m, text)) {
    if (lit.world != 0) bad("interventions cannot carry primes");
    if (!out.emplace(lit.variable, lit.state).second) bad("variable intervened twice");
  }
  return out;
}

std::pair<int, int> parseCauseEffect(const StructuralCausalModel& m, std::string_view text) {
  auto parts = split(text, ',');
  if (parts.size() != 2) bad("expected CAUSE,EFFECT");
  return {m.index(parts[0]), m.index(parts[1])};
}

std::string literalText(const StructuralCausalModel& m, const Literal& lit) {
  std::string s = m.id(lit.variable);
  for (int i = 0; i < lit.world; ++i) s += kPrime;
  return s + "=" + std::to_string(lit.state);
}

std::string literalsText(const StructuralCausalModel& m, const std::vector<Literal>& lits) {
  std::string out;
  for (std::size_t i = 0; i < lits.size(); ++i) {
    if (i) out += ",";
    out += literalText(m, lits[i]);
  }
  return out;
}

std::string interventionsText(const StructuralCausalModel& m, const std::map<int, int>& iv) {
  std::string out;
  for (const auto& [v, s] : iv) {
    if (!out.empty()) out += ",";
    out += m.id(v) + "=" + std::to_string(s);
  }
  return out;
}

}  // namespace

CounterfactualQuery pnsQuery(const StructuralCausalModel& model, int cause, int effect) {
  requireBoolean(model, cause, "cause");
  requireBoolean(model, effect, "effect");
  CounterfactualQuery q;
  q.kind = QueryKind::PNS;
  q.worlds = {World{{{cause, 1}}}, World{{{cause, 0}}}};
  q.target = {{0, effect, 1}, {1, effect, 0}};
  q.cause = cause;
  q.effect = effect;
  return q;
}

CounterfactualQuery pnQuery(const StructuralCausalModel& model, int cause, int effect) {
  requireBoolean(model, cause, "cause");
  requireBoolean(model, effect, "effect");
  CounterfactualQuery q;
  q.kind = QueryKind::PN;
  q.worlds = {World{}, World{{{cause, 0}}}};
  q.evidence = {{0, cause, 1}, {0, effect, 1}};
  q.target = {{1, effect, 0}};
  q.cause = cause;
  q.effect = effect;
  return q;
}

CounterfactualQuery psQuery(const StructuralCausalModel& model, int cause, int effect) {
  requireBoolean(model, cause, "cause");
  requireBoolean(model, effect, "effect");
  CounterfactualQuery q;
  q.kind = QueryKind::PS;
  q.worlds = {World{}, World{{{cause, 1}}}};
  q.evidence = {{0, cause, 0}, {0, effect, 0}};
  q.target = {{1, effect, 1}};
  q.cause = cause;
  q.effect = effect;
  return q;
}

void checkQuery(const StructuralCausalModel& model, const CounterfactualQuery& query) {
  const int n = static_cast<int>(model.size());
  if (query.worlds.empty()) bad("query has no worlds");
  if (query.target.empty()) bad("query has no target");
  for (const auto& w : query.worlds) {
    for (const auto& [v, s] : w.interventions) {
      if (v < 0 || v >= n) bad("intervention on unknown variable");
      if (model.isExogenous(v)) bad("cannot intervene on exogenous '" + model.id(v) + "'");
      if (s < 0 || s >= model.cardinality(v)) bad("intervention state out of range for '" + model.id(v) + "'");
    }
  }
  auto checkLiteral = [&](const Literal& lit) {
    if (lit.world < 0 || lit.world >= static_cast<int>(query.worlds.size())) bad("literal refers to an unknown world");
    if (lit.variable < 0 || lit.variable >= n) bad("literal on unknown variable");
    if (model.isExogenous(lit.variable)) bad("literal on exogenous '" + model.id(lit.variable) + "'");
    if (lit.state < 0 || lit.state >= model.cardinality(lit.variable)) {
      bad("state out of range for '" + model.id(lit.variable) + "'");
    }
  };
  for (const auto& lit : query.target) checkLiteral(lit);
  for (const auto& lit : query.evidence) {
    checkLiteral(lit);
    if (query.worlds[static_cast<std::size_t>(lit.world)].interventions.count(lit.variable)) {
      bad("'" + model.id(lit.variable) + "' is both observed and intervened in the same world");
    }
  }
  if (query.kind == QueryKind::PN || query.kind == QueryKind::PS || query.kind == QueryKind::PNS) {
    requireBoolean(model, query.cause, "cause");
    requireBoolean(model, query.effect, "effect");
  }
}

CounterfactualQuery parseQuery(const StructuralCausalModel& model, std::string_view text) {
  text = trim(text);
  auto colon = text.find(':');
  if (colon == std::string_view::npos) bad("query must start with a keyword followed by ':'");
  const std::string head(trim(text.substr(0, colon)));
  std::string_view rest = text.substr(colon + 1);

  CounterfactualQuery q;
  if (head == "pns" || head == "pn" || head == "ps") {
    auto [x, y] = parseCauseEffect(model, rest);
    q = head == "pns" ? pnsQuery(model, x, y) : head == "pn" ? pnQuery(model, x, y) : psQuery(model, x, y);
  } else if (head == "cf") {
    rest = trim(rest);
    if (rest.empty() || rest.front() != '[') bad("cf query needs a bracketed world list");
    auto close = rest.find(']');
    if (close == std::string_view::npos) bad("unterminated world list");
    q.kind = QueryKind::Counterfactual;
    q.worlds.clear();
    for (auto w : split(rest.substr(1, close - 1), '|')) {
      World world;
      if (!w.empty() && w != "none") {
        if (w.substr(0, 2) != "do") bad("world must read 'do X=x'");
        world.interventions = parseInterventions(model, trim(w.substr(2)));
      }
      q.worlds.push_back(std::move(world));
    }
    rest = trim(rest.substr(close + 1));
    if (rest.empty() || rest.front() != ':') bad("expected ':target' after the world list");
    for (auto seg : split(rest.substr(1), ':')) {
      if (seg.substr(0, 6) == "target") {
        q.target = parseLiterals(model, trim(seg.substr(6)));
      } else if (seg.substr(0, 3) == "obs") {
        q.evidence = parseLiterals(model, trim(seg.substr(3)));
      } else {
        bad("unknown cf segment '" + std::string(seg) + "'");
      }
    }
  } else {
    // do:...;obs:...;target:...
    q.worlds = {World{}};
    for (auto seg : split(text, ';')) {
      auto c = seg.find(':');
      if (c == std::string_view::npos) bad("segment without ':' in '" + std::string(seg) + "'");
      auto key = trim(seg.substr(0, c));
      auto body = seg.substr(c + 1);
      if (key == "do") {
        q.worlds[0].interventions = parseInterventions(model, body);
      } else if (key == "obs") {
        q.evidence = parseLiterals(model, body);
      } else if (key == "target") {
        q.target = parseLiterals(model, body);
      } else {
        bad("unknown query keyword '" + std::string(key) + "'");
      }
    }
    for (const auto& lit : q.evidence) {
      if (lit.world != 0) bad("primes are only allowed in cf queries");
    }
    for (const auto& lit : q.target) {
      if (lit.world != 0) bad("primes are only allowed in cf queries");
    }
    q.kind = q.worlds[0].interventions.empty() ? QueryKind::Observational : QueryKind::Interventional;
  }
  checkQuery(model, q);
  return q;
}

std::string formatQuery(const StructuralCausalModel& model, const CounterfactualQuery& query) {
  switch (query.kind) {
    case QueryKind::PN:
    case QueryKind::PS:
    case QueryKind::PNS:
      return std::string(toString(query.kind)) + ":" + model.id(query.cause) + "," + model.id(query.effect);
    case QueryKind::Counterfactual: {
      std::string out = "cf:[";
      for (std::size_t w = 0; w < query.worlds.size(); ++w) {
        if (w) out += " | ";
        const auto& iv = query.worlds[w].interventions;
        out += iv.empty() ? "none" : "do " + interventionsText(model, iv);
      }
      out += "]:target " + literalsText(model, query.target);
      if (!query.evidence.empty()) out += ":obs " + literalsText(model, query.evidence);
      return out;
    }
    default: {
      std::vector<std::string> parts;
      if (!query.worlds.empty() && !query.worlds[0].interventions.empty()) {
        parts.push_back("do:" + interventionsText(model, query.worlds[0].interventions));
      }
      if (!query.evidence.empty()) parts.push_back("obs:" + literalsText(model, query.evidence));
      parts.push_back("target:" + literalsText(model, query.target));
      std::string out;
      for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ";" : "") + parts[i];
      return out;
    }
  }
}

}  // namespace scmb
