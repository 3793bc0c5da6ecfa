#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "scmb/bench.hpp"
#include "scmb/credal.hpp"
#include "scmb/credible.hpp"
#include "scmb/emcc.hpp"
#include "scmb/model.hpp"

namespace scmb {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Model files:
//   {"schema": 1,
//    "variables": [{"id": "Z", "cardinality": 2, "kind": "endogenous"}, ...],
//    "arcs": [["U_Z", "Z"], ...],
//    "equations": [{"child": "Z", "parents": ["U_Z"], "table": [0, 1]}, ...],
//    "pmfs": {"U_Z": [0.5, 0.5]}}                                  (optional)
// Tables are flat, lexicographic over the listed parents, last one fastest.
// Throws Error(SchemaError) naming the offending field.
StructuralCausalModel modelFromJson(const Json& doc);
Json modelToJson(const StructuralCausalModel& model);

// Reads, checks the schema and runs validate(); any validation error becomes
// Error(ValidationError) naming the subject.
StructuralCausalModel parseModel(const std::string& path);
StructuralCausalModel parseModelText(const std::string& text);
// Canonical text: fixed key order, two-space indent, scalar arrays inline,
// trailing newline. serialize(parse(x)) == x for files in this form.
std::string serializeModel(const StructuralCausalModel& model);

// Graph files for canonicalScm:
//   {"nodes": [{"id": "X", "cardinality": 2}, ...], "arcs": [["Z", "X"], ...]}
CausalGraph graphFromJson(const Json& doc);

// Per-exogenous constraint systems: matrix over Omega_U, rhs, exact rhs as
// "n/d" strings when available, and row provenance.
Json constraintsToJson(const StructuralCausalModel& model, const CredalSpec& spec);

Json toJson(const EmccResult& result, const StructuralCausalModel& model);
Json toJson(const CompatibilityVerdict& verdict);
Json toJson(const CredibleReport& report);
Json toJson(const ExperimentRecord& record);
Json toJson(const BenchConfig& config);

BenchConfig benchConfigFromJson(const Json& doc);

// Canonical text of any document (same layout as serializeModel).
std::string dumpCanonical(const Json& doc);
Json readJsonFile(const std::string& path);

// One JSON object per line.
void writeJsonLines(const std::vector<ExperimentRecord>& records, std::ostream& out);
// runs,count,min,q1,median,q3,max
void writeSummaryCsv(const std::vector<QuantileRow>& rows, std::ostream& out);

}  // namespace scmb
