#include "scmb/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "scmb/error.hpp"

namespace scmb {

namespace {

[[noreturn]] void schemaError(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::SchemaError, field + ": " + what);
}

const Json& member(const Json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) schemaError(path + key, "missing");
  return *it;
}

std::string getString(const Json& obj, const std::string& key, const std::string& path) {
  const auto& v = member(obj, key, path);
  if (!v.is_string()) schemaError(path + key, "expected a string");
  return v.get<std::string>();
}

std::int64_t getInt(const Json& v, const std::string& field) {
  if (!v.is_number_integer()) schemaError(field, "expected an integer");
  return v.get<std::int64_t>();
}

double getNumber(const Json& v, const std::string& field) {
  if (!v.is_number()) schemaError(field, "expected a number");
  return v.get<double>();
}

void rejectUnknown(const Json& obj, const std::set<std::string>& known, const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) schemaError(path + it.key(), "unknown field");
  }
}

bool scalarArray(const Json& j) {
  for (const auto& e : j) {
    if (e.is_structured()) return false;
  }
  return true;
}

void writeCanonical(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += inner;
      out += Json(it.key()).dump();
      out += ": ";
      writeCanonical(it.value(), out, indent + 2);
    }
    out += "\n" + pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
    } else if (scalarArray(j)) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        out += j[i].dump();
      }
      out += "]";
    } else {
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        writeCanonical(j[i], out, indent + 2);
      }
      out += "\n" + pad + "]";
    }
  } else {
    out += j.dump();
  }
}

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parseText(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, what + ": " + e.what());
  }
}

std::string kindName(VariableKind k) { return k == VariableKind::Exogenous ? "exogenous" : "endogenous"; }

}  // namespace

std::string dumpCanonical(const Json& doc) {
  std::string out;
  writeCanonical(doc, out, 0);
  out += "\n";
  return out;
}

Json readJsonFile(const std::string& path) { return parseText(readFile(path), path); }

StructuralCausalModel modelFromJson(const Json& doc) {
  if (!doc.is_object()) schemaError("(root)", "expected an object");
  rejectUnknown(doc, {"schema", "variables", "arcs", "equations", "pmfs"}, "");
  const auto& schema = member(doc, "schema", "");
  if (getInt(schema, "schema") != kSchemaVersion) schemaError("schema", "unsupported version " + schema.dump());

  const auto& vars = member(doc, "variables", "");
  if (!vars.is_array()) schemaError("variables", "expected an array");
  std::vector<Variable> variables;
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string path = "variables[" + std::to_string(i) + "].";
    const auto& v = vars[i];
    if (!v.is_object()) schemaError(path.substr(0, path.size() - 1), "expected an object");
    rejectUnknown(v, {"id", "cardinality", "kind"}, path);
    Variable var;
    var.id = getString(v, "id", path);
    const auto card = getInt(member(v, "cardinality", path), path + "cardinality");
    if (card < 1 || card > (std::int64_t{1} << 30)) schemaError(path + "cardinality", "expected a positive integer");
    var.cardinality = static_cast<int>(card);
    const auto kind = getString(v, "kind", path);
    if (kind == "endogenous") {
      var.kind = VariableKind::Endogenous;
    } else if (kind == "exogenous") {
      var.kind = VariableKind::Exogenous;
    } else {
      schemaError(path + "kind", "expected \"endogenous\" or \"exogenous\"");
    }
    if (!index.emplace(var.id, static_cast<int>(variables.size())).second) schemaError(path + "id", "duplicate id " + var.id);
    variables.push_back(std::move(var));
  }
  auto lookup = [&](const Json& v, const std::string& field) {
    if (!v.is_string()) schemaError(field, "expected a variable id");
    auto it = index.find(v.get<std::string>());
    if (it == index.end()) schemaError(field, "unknown variable " + v.get<std::string>());
    return it->second;
  };

  const auto& eqs = member(doc, "equations", "");
  if (!eqs.is_array()) schemaError("equations", "expected an array");
  std::vector<StructuralEquation> equations;
  std::set<std::pair<int, int>> derivedArcs;
  for (std::size_t i = 0; i < eqs.size(); ++i) {
    const std::string path = "equations[" + std::to_string(i) + "].";
    const auto& e = eqs[i];
    if (!e.is_object()) schemaError(path.substr(0, path.size() - 1), "expected an object");
    rejectUnknown(e, {"child", "parents", "table"}, path);
    StructuralEquation eq;
    eq.child = lookup(member(e, "child", path), path + "child");
    const auto& parents = member(e, "parents", path);
    if (!parents.is_array()) schemaError(path + "parents", "expected an array");
    for (std::size_t p = 0; p < parents.size(); ++p) {
      eq.parents.push_back(lookup(parents[p], path + "parents[" + std::to_string(p) + "]"));
      derivedArcs.emplace(eq.parents.back(), eq.child);
    }
    const auto& table = member(e, "table", path);
    if (!table.is_array()) schemaError(path + "table", "expected an array");
    eq.table.reserve(table.size());
    for (std::size_t t = 0; t < table.size(); ++t) {
      eq.table.push_back(static_cast<int>(getInt(table[t], path + "table[" + std::to_string(t) + "]")));
    }
    equations.push_back(std::move(eq));
  }

  if (auto it = doc.find("arcs"); it != doc.end()) {
    if (!it->is_array()) schemaError("arcs", "expected an array");
    std::set<std::pair<int, int>> listed;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "arcs[" + std::to_string(i) + "]";
      const auto& a = (*it)[i];
      if (!a.is_array() || a.size() != 2) schemaError(path, "expected [parent, child]");
      listed.emplace(lookup(a[0], path + "[0]"), lookup(a[1], path + "[1]"));
    }
    if (listed != derivedArcs) schemaError("arcs", "do not match the equation parents");
  }

  ExoPmfs pmfs;
  if (auto it = doc.find("pmfs"); it != doc.end()) {
    if (!it->is_object()) schemaError("pmfs", "expected an object");
    pmfs.assign(variables.size(), {});
    for (auto p = it->begin(); p != it->end(); ++p) {
      const std::string path = "pmfs." + p.key();
      auto v = index.find(p.key());
      if (v == index.end()) schemaError(path, "unknown variable");
      if (!p->is_array()) schemaError(path, "expected an array");
      Pmf pmf;
      for (std::size_t s = 0; s < p->size(); ++s) pmf.push_back(getNumber((*p)[s], path + "[" + std::to_string(s) + "]"));
      pmfs[static_cast<std::size_t>(v->second)] = std::move(pmf);
    }
  }
  return StructuralCausalModel(std::move(variables), std::move(equations), std::move(pmfs));
}

Json modelToJson(const StructuralCausalModel& model) {
  Json doc;
  doc["schema"] = kSchemaVersion;
  Json vars = Json::array();
  for (const auto& v : model.variables()) {
    Json j;
    j["id"] = v.id;
    j["cardinality"] = v.cardinality;
    j["kind"] = kindName(v.kind);
    vars.push_back(std::move(j));
  }
  doc["variables"] = std::move(vars);
  Json arcs = Json::array();
  Json eqs = Json::array();
  for (const auto& eq : model.equations()) {
    Json parents = Json::array();
    for (int p : eq.parents) {
      arcs.push_back(Json::array({model.id(p), model.id(eq.child)}));
      parents.push_back(model.id(p));
    }
    Json j;
    j["child"] = model.id(eq.child);
    j["parents"] = std::move(parents);
    j["table"] = eq.table;
    eqs.push_back(std::move(j));
  }
  doc["arcs"] = std::move(arcs);
  doc["equations"] = std::move(eqs);
  Json pmfs = Json::object();
  for (int u : model.exogenous()) {
    if (model.hasPmf(u)) pmfs[model.id(u)] = model.pmf(u);
  }
  if (!pmfs.empty()) doc["pmfs"] = std::move(pmfs);
  return doc;
}

StructuralCausalModel parseModelText(const std::string& text) {
  auto model = modelFromJson(parseText(text, "model"));
  const auto report = validate(model);
  if (!report.valid()) {
    const auto& first = report.errors.front();
    throw Error(ErrorCode::ValidationError, first.subject + ": " + first.message);
  }
  return model;
}

StructuralCausalModel parseModel(const std::string& path) { return parseModelText(readFile(path)); }

std::string serializeModel(const StructuralCausalModel& model) { return dumpCanonical(modelToJson(model)); }

CausalGraph graphFromJson(const Json& doc) {
  if (!doc.is_object()) schemaError("(root)", "expected an object");
  rejectUnknown(doc, {"schema", "nodes", "arcs"}, "");
  CausalGraph g;
  const auto& nodes = member(doc, "nodes", "");
  if (!nodes.is_array()) schemaError("nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "].";
    const auto& n = nodes[i];
    if (!n.is_object()) schemaError(path.substr(0, path.size() - 1), "expected an object");
    rejectUnknown(n, {"id", "cardinality"}, path);
    int card = 2;
    if (n.contains("cardinality")) card = static_cast<int>(getInt(n["cardinality"], path + "cardinality"));
    if (card < 1) schemaError(path + "cardinality", "expected a positive integer");
    g.nodes.emplace_back(getString(n, "id", path), card);
  }
  if (doc.contains("arcs")) {
    const auto& arcs = doc["arcs"];
    if (!arcs.is_array()) schemaError("arcs", "expected an array");
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      const auto& a = arcs[i];
      const std::string path = "arcs[" + std::to_string(i) + "]";
      if (!a.is_array() || a.size() != 2 || !a[0].is_string() || !a[1].is_string()) {
        schemaError(path, "expected [parent, child]");
      }
      g.arcs.emplace_back(a[0].get<std::string>(), a[1].get<std::string>());
    }
  }
  return g;
}

Json constraintsToJson(const StructuralCausalModel& model, const CredalSpec& spec) {
  Json out = Json::array();
  for (const auto& set : spec.sets) {
    Json j;
    j["exogenous"] = model.id(set.exogenous);
    j["cardinality"] = set.cardinality;
    Json matrix = Json::array(), rhs = Json::array(), exact = Json::array(), prov = Json::array();
    for (const auto& row : set.rows) {
      std::vector<int> dense(static_cast<std::size_t>(set.cardinality), 0);
      for (int u : row.support) dense[static_cast<std::size_t>(u)] = 1;
      matrix.push_back(dense);
      rhs.push_back(row.rhs);
      if (row.exactRhs) {
        exact.push_back(row.exactRhs->str());
      } else {
        exact.push_back(nullptr);
      }
      prov.push_back(row.provenance);
    }
    j["matrix"] = std::move(matrix);
    j["rhs"] = std::move(rhs);
    j["exactRhs"] = std::move(exact);
    j["provenance"] = std::move(prov);
    out.push_back(std::move(j));
  }
  return out;
}

Json toJson(const EmccResult& r, const StructuralCausalModel& model) {
  Json j;
  j["query"] = formatQuery(model, r.query);
  j["runs"] = r.rho.size();
  j["a"] = r.a;
  j["b"] = r.b;
  j["rho"] = r.rho;
  j["acceptedSeeds"] = r.acceptedSeeds;
  j["rejected"] = r.rejected;
  j["undefined"] = r.undefined;
  j["attempted"] = r.attempted;
  j["lambdaStar"] = r.lambdaStar;
  j["bestRejectedGap"] = r.bestGap;
  j["complete"] = r.complete;
  return j;
}

Json toJson(const CompatibilityVerdict& v) {
  Json j;
  j["compatible"] = v.compatible;
  j["lambdaStar"] = v.lambdaStar;
  j["bestLogLik"] = v.bestLogLik;
  j["bestGap"] = v.bestGap;
  j["restarts"] = v.runs;
  return j;
}

Json toJson(const CredibleReport& r) {
  Json j;
  j["case"] = std::string(toString(r.kind));
  j["a"] = r.a;
  j["b"] = r.b;
  j["k"] = r.k;
  j["epsilon"] = r.epsilon;
  j["coverage"] = r.coverage;
  j["alpha"] = r.fit.alpha;
  j["beta"] = r.fit.beta;
  j["support"] = Json::array({r.fit.lo, r.fit.hi});
  return j;
}

Json toJson(const ExperimentRecord& r) {
  Json j;
  j["model"] = r.model;
  j["seed"] = r.seed;
  j["endogenous"] = r.endogenous;
  j["exogenous"] = r.exogenous;
  j["quasiMarkovian"] = r.quasiMarkovian;
  j["maxExoCardinality"] = r.maxExoCardinality;
  j["query"] = r.query;
  j["records"] = r.records;
  Json t;
  t["method"] = r.truth.method;
  t["lower"] = r.truth.lower;
  t["upper"] = r.truth.upper;
  t["epsilon"] = r.truth.epsilon;
  t["runs"] = r.truth.runs;
  t["range"] = Json::array({r.truth.rangeLower, r.truth.rangeUpper});
  j["truth"] = std::move(t);
  Json curve = Json::array();
  for (const auto& p : r.curve) {
    Json c;
    c["runs"] = p.runs;
    c["a"] = p.a;
    c["b"] = p.b;
    c["rrmse"] = p.rrmse;
    curve.push_back(std::move(c));
  }
  j["curve"] = std::move(curve);
  j["error"] = r.error;
  return j;
}

Json toJson(const BenchConfig& c) {
  Json j;
  j["minNodes"] = c.minNodes;
  j["maxNodes"] = c.maxNodes;
  j["maxInDegree"] = c.maxInDegree;
  j["maxOutDegree"] = c.maxOutDegree;
  j["multiExoCardinality"] = c.multiExoCardinality;
  j["arcProbability"] = c.arcProbability;
  j["maxCanonicalCardinality"] = c.maxCanonicalCardinality;
  j["maxJointExoStates"] = c.maxJointExoStates;
  j["models"] = c.models;
  j["sampleSize"] = c.sampleSize;
  j["batchSize"] = c.batchSize;
  j["maxBatches"] = c.maxBatches;
  j["compatibilityRestarts"] = c.compatibilityRestarts;
  j["runCounts"] = c.runCounts;
  j["truthRuns"] = c.truthRuns;
  j["targetP"] = c.targetP;
  j["exactNodeLimit"] = c.exactNodeLimit;
  j["exactCombinationCap"] = c.exactCombinationCap;
  j["exactVertexBudget"] = c.exactVertexBudget;
  j["em"] = Json{{"maxIters", c.em.maxIters}, {"tol", c.em.tol}, {"relTol", c.em.relTol}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

BenchConfig benchConfigFromJson(const Json& doc) {
  if (!doc.is_object()) schemaError("(root)", "expected an object");
  rejectUnknown(doc,
                {"schema", "minNodes", "maxNodes", "maxInDegree", "maxOutDegree", "multiExoCardinality", "arcProbability",
                 "maxCanonicalCardinality", "maxJointExoStates", "models", "sampleSize", "batchSize", "maxBatches", "compatibilityRestarts",
                 "runCounts", "truthRuns", "targetP", "exactNodeLimit", "exactCombinationCap", "exactVertexBudget", "em",
                 "seed", "threads"},
                "");
  BenchConfig c;
  auto intField = [&](const char* key, auto& dst) {
    if (doc.contains(key)) {
      const auto v = getInt(doc[key], key);
      if (v < 0) schemaError(key, "expected a non-negative integer");
      dst = static_cast<std::remove_reference_t<decltype(dst)>>(v);
    }
  };
  intField("minNodes", c.minNodes);
  intField("maxNodes", c.maxNodes);
  intField("maxInDegree", c.maxInDegree);
  intField("maxOutDegree", c.maxOutDegree);
  intField("multiExoCardinality", c.multiExoCardinality);
  intField("maxCanonicalCardinality", c.maxCanonicalCardinality);
  intField("maxJointExoStates", c.maxJointExoStates);
  intField("models", c.models);
  intField("sampleSize", c.sampleSize);
  intField("batchSize", c.batchSize);
  intField("maxBatches", c.maxBatches);
  intField("compatibilityRestarts", c.compatibilityRestarts);
  intField("truthRuns", c.truthRuns);
  intField("exactNodeLimit", c.exactNodeLimit);
  intField("exactCombinationCap", c.exactCombinationCap);
  intField("exactVertexBudget", c.exactVertexBudget);
  intField("threads", c.threads);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) schemaError("seed", "expected a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("arcProbability")) c.arcProbability = getNumber(doc["arcProbability"], "arcProbability");
  if (doc.contains("targetP")) c.targetP = getNumber(doc["targetP"], "targetP");
  if (doc.contains("runCounts")) {
    const auto& rc = doc["runCounts"];
    if (!rc.is_array()) schemaError("runCounts", "expected an array");
    c.runCounts.clear();
    for (std::size_t i = 0; i < rc.size(); ++i) {
      c.runCounts.push_back(static_cast<int>(getInt(rc[i], "runCounts[" + std::to_string(i) + "]")));
    }
  }
  if (doc.contains("em")) {
    const auto& em = doc["em"];
    if (!em.is_object()) schemaError("em", "expected an object");
    rejectUnknown(em, {"maxIters", "tol", "relTol"}, "em.");
    if (em.contains("maxIters")) c.em.maxIters = static_cast<int>(getInt(em["maxIters"], "em.maxIters"));
    if (em.contains("tol")) c.em.tol = getNumber(em["tol"], "em.tol");
    if (em.contains("relTol")) c.em.relTol = getNumber(em["relTol"], "em.relTol");
  }
  c.em.keepHistory = false;
  c.check();
  return c;
}

void writeJsonLines(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << toJson(r).dump() << '\n';
}

void writeSummaryCsv(const std::vector<QuantileRow>& rows, std::ostream& out) {
  out << "runs,count,min,q1,median,q3,max\n";
  for (const auto& r : rows) {
    out << r.runs << ',' << r.count << ',' << Json(r.min).dump() << ',' << Json(r.q1).dump() << ','
        << Json(r.median).dump() << ',' << Json(r.q3).dump() << ',' << Json(r.max).dump() << '\n';
  }
}

}  // namespace scmb
