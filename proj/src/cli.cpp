#include "scmb/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "scmb/bench.hpp"
#include "scmb/credal.hpp"
#include "scmb/credible.hpp"
#include "scmb/dataset.hpp"
#include "scmb/emcc.hpp"
#include "scmb/error.hpp"
#include "scmb/io.hpp"

namespace scmb {

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void emit(const Json& report, const std::string& outPath, std::ostream& out) {
  const auto text = dumpCanonical(report);
  if (outPath.empty()) {
    out << text;
    return;
  }
  std::ofstream f(outPath, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + outPath);
  f << text;
}

Json header(const std::string& command) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["command"] = command;
  return j;
}

// Credal map for the exact route, empty when the model is not quasi-Markovian.
std::optional<CredalSpec> credalSpec(const StructuralCausalModel& model, const EndogenousBN& bn) {
  if (model.markovian()) return markovMap(model, bn);
  if (model.quasiMarkovian()) return quasiMarkovMap(model, bn);
  return std::nullopt;
}

struct Common {
  std::string model;
  std::string data;
  std::string output;
  std::uint64_t seed = 0;
  int restarts = 20;
};

int cmdCompat(const Common& c, std::ostream& out) {
  const auto t0 = Clock::now();
  const auto model = parseModel(c.model).withoutPmfs();
  const auto data = Dataset::readCsv(c.data);
  const auto verdict = compatibilityTest(model, data, c.restarts, c.seed);
  Json report = header("compat");
  report["model"] = c.model;
  report["data"] = c.data;
  report["seed"] = c.seed;
  report["restarts"] = c.restarts;
  Json lp;
  std::optional<bool> lpCompatible;
  if (auto spec = credalSpec(model, fitEndogenous(model, data))) lpCompatible = isCompatible(*spec);
  lp["available"] = lpCompatible.has_value();
  lp["compatible"] = lpCompatible ? Json(*lpCompatible) : Json(nullptr);
  const bool compatible = lpCompatible.value_or(verdict.compatible);
  report["verdict"] = compatible ? "compatible" : "incompatible";
  report["agree"] = lpCompatible ? Json(*lpCompatible == verdict.compatible) : Json(nullptr);
  report["lp"] = std::move(lp);
  report["em"] = toJson(verdict);
  report["timing"] = Json{{"seconds", secondsSince(t0)}};
  emit(report, c.output, out);
  return compatible ? kExitOk : kExitIncompatible;
}

Json credibleBlock(const std::vector<double>& rho, std::optional<double> epsilon, std::optional<double> target) {
  Json j;
  if (epsilon) {
    try {
      j = toJson(credibleReport(rho, *epsilon));
    } catch (const Error& e) {
      j["epsilon"] = *epsilon;
      j["error"] = e.what();
    }
  }
  if (target) {
    Json s;
    s["target"] = *target;
    try {
      s["epsilon"] = epsilonStar(rho, *target);
    } catch (const Error& e) {
      s["epsilon"] = nullptr;
      s["error"] = e.what();
    }
    j["epsilonStar"] = std::move(s);
  }
  return j;
}

int cmdBounds(const Common& c, const std::string& queryText, const std::string& method, int runs,
              std::optional<double> epsilon, std::optional<double> target, std::ostream& out) {
  const auto t0 = Clock::now();
  const auto model = parseModel(c.model).withoutPmfs();
  const auto data = Dataset::readCsv(c.data);
  const auto query = parseQuery(model, queryText);
  Json report = header("bounds");
  report["model"] = c.model;
  report["data"] = c.data;
  report["query"] = formatQuery(model, query);
  report["method"] = method;
  report["seed"] = c.seed;

  if (method == "exact") {
    const auto bn = fitEndogenous(model, data);
    const auto spec = credalSpec(model, bn);
    if (!spec) throw Error(ErrorCode::NotQuasiMarkovian, "exact bounds need a quasi-Markovian model; use --method emcc");
    const bool compatible = isCompatible(*spec);
    report["compatibility"] = Json{{"test", "lp"}, {"compatible", compatible}};
    report["lambdaStar"] = lambdaStar(model, bn, data);
    if (!compatible) {
      report["verdict"] = "incompatible";
      report["timing"] = Json{{"seconds", secondsSince(t0)}};
      emit(report, c.output, out);
      return kExitIncompatible;
    }
    const auto b = exactBounds(model, *spec, query);
    report["verdict"] = "compatible";
    report["bounds"] = Json{{"lower", b.defined ? Json(b.lower) : Json(nullptr)},
                            {"upper", b.defined ? Json(b.upper) : Json(nullptr)},
                            {"defined", b.defined},
                            {"combinations", b.combinations},
                            {"undefinedCombinations", b.undefinedCombinations}};
  } else {
    report["runs"] = runs;
    report["restarts"] = c.restarts;
    EmProblem problem(model, data);
    const auto verdict = compatibilityTest(problem, c.restarts, c.seed);
    Json compat = toJson(verdict);
    compat["test"] = "em";
    report["compatibility"] = std::move(compat);
    report["lambdaStar"] = problem.lambdaStar();
    if (!verdict.compatible) {
      report["verdict"] = "incompatible";
      report["timing"] = Json{{"seconds", secondsSince(t0)}};
      emit(report, c.output, out);
      return kExitIncompatible;
    }
    EmccOptions eo;
    eo.runs = runs;
    eo.seed = c.seed;
    const auto res = runEmcc(problem, query, eo);
    report["verdict"] = "compatible";
    const bool any = !res.rho.empty();
    report["bounds"] = Json{{"lower", any ? Json(res.a) : Json(nullptr)},
                            {"upper", any ? Json(res.b) : Json(nullptr)},
                            {"defined", any}};
    report["emcc"] = toJson(res, model);
    if (any && (epsilon || target)) report["credible"] = credibleBlock(res.rho, epsilon, target);
  }
  report["timing"] = Json{{"seconds", secondsSince(t0)}};
  emit(report, c.output, out);
  return kExitOk;
}

int cmdCredible(const std::string& source, std::optional<double> epsilon, std::optional<double> target,
                const std::string& output, std::ostream& out) {
  const auto t0 = Clock::now();
  const auto doc = readJsonFile(source);
  if (!doc.contains("emcc") || !doc["emcc"].contains("rho") || !doc["emcc"]["rho"].is_array()) {
    throw Error(ErrorCode::SchemaError, "emcc.rho: missing; pass a report from `bounds --method emcc`");
  }
  const auto rho = doc["emcc"]["rho"].get<std::vector<double>>();
  if (rho.empty()) throw Error(ErrorCode::InvalidArgument, "the report holds no EMCC values");
  Json report = header("credible");
  report["source"] = source;
  if (doc.contains("query")) report["query"] = doc["query"];
  if (doc.contains("seed")) report["seed"] = doc["seed"];
  report["credible"] = credibleBlock(rho, epsilon, target);
  report["timing"] = Json{{"seconds", secondsSince(t0)}};
  emit(report, output, out);
  return kExitOk;
}

int cmdCanonical(const std::string& graphPath, const std::string& output, std::uint64_t cap, std::ostream& out) {
  const auto model = canonicalScm(graphFromJson(readJsonFile(graphPath)), cap);
  const auto text = serializeModel(model);
  if (output.empty()) {
    out << text;
    return kExitOk;
  }
  std::ofstream f(output, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + output);
  f << text;
  Json report = header("canonical");
  report["graph"] = graphPath;
  report["output"] = output;
  Json card = Json::object();
  for (int u : model.exogenous()) card[model.id(u)] = model.cardinality(u);
  report["exogenous"] = std::move(card);
  out << dumpCanonical(report);
  return kExitOk;
}

int cmdConstraints(const Common& c, std::ostream& out) {
  const auto model = parseModel(c.model).withoutPmfs();
  const auto data = Dataset::readCsv(c.data);
  const auto spec = credalSpec(model, fitEndogenous(model, data));
  if (!spec) throw Error(ErrorCode::NotQuasiMarkovian, "constraint export needs a quasi-Markovian model");
  Json report = header("constraints");
  report["model"] = c.model;
  report["data"] = c.data;
  report["constraints"] = constraintsToJson(model, *spec);
  emit(report, c.output, out);
  return kExitOk;
}

int cmdBench(const std::string& configPath, const std::string& outDir, unsigned threads, std::ostream& out) {
  const auto t0 = Clock::now();
  auto config = benchConfigFromJson(readJsonFile(configPath));
  if (threads > 0) config.threads = threads;
  const auto result = runBenchmark(config);
  std::filesystem::create_directories(outDir);
  {
    std::ofstream f(std::filesystem::path(outDir) / "records.jsonl", std::ios::binary);
    writeJsonLines(result.records, f);
  }
  {
    std::ofstream f(std::filesystem::path(outDir) / "summary.csv", std::ios::binary);
    writeSummaryCsv(result.summary, f);
  }
  Json report = header("bench");
  report["config"] = toJson(config);
  report["config"].erase("threads");
  int failures = 0;
  for (const auto& r : result.records) failures += r.ok() ? 0 : 1;
  report["models"] = result.records.size();
  report["failures"] = failures;
  Json summary = Json::array();
  for (const auto& q : result.summary) {
    summary.push_back(Json{{"runs", q.runs}, {"count", q.count}, {"min", q.min}, {"q1", q.q1},
                           {"median", q.median}, {"q3", q.q3}, {"max", q.max}});
  }
  report["summary"] = std::move(summary);
  report["outputs"] = Json::array({(std::filesystem::path(outDir) / "records.jsonl").string(),
                                   (std::filesystem::path(outDir) / "summary.csv").string()});
  report["timing"] = Json{{"seconds", secondsSince(t0)}};
  out << dumpCanonical(report);
  return kExitOk;
}

}  // namespace

int runCommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounds for partially identifiable causal queries on discrete structural causal models", "scmb"};
  app.require_subcommand(1);

  Common common;
  std::string queryText, method = "exact", reportPath, graphPath, configPath, outDir = ".";
  int runs = 20;
  std::optional<double> epsilon, target;
  std::uint64_t cap = kDefaultExogenousCap;
  unsigned threads = 0;

  auto* compat = app.add_subcommand("compat", "M-compatibility of a model with a dataset (LP and EM)");
  compat->add_option("model", common.model, "model JSON")->required()->check(CLI::ExistingFile);
  compat->add_option("data", common.data, "CSV data")->required()->check(CLI::ExistingFile);
  compat->add_option("--restarts", common.restarts, "EM restarts")->check(CLI::PositiveNumber);
  compat->add_option("--seed", common.seed, "base seed");
  compat->add_option("-o,--output", common.output, "report path (default stdout)");

  auto* bounds = app.add_subcommand("bounds", "exact or EMCC bounds of a query");
  bounds->add_option("model", common.model, "model JSON")->required()->check(CLI::ExistingFile);
  bounds->add_option("data", common.data, "CSV data")->required()->check(CLI::ExistingFile);
  bounds->add_option("--query", queryText, "query, e.g. pns:X,Y")->required();
  bounds->add_option("--method", method, "exact or emcc")->check(CLI::IsMember({"exact", "emcc"}));
  bounds->add_option("--runs", runs, "accepted EMCC runs")->check(CLI::PositiveNumber);
  bounds->add_option("--seed", common.seed, "base seed");
  bounds->add_option("--restarts", common.restarts, "EM restarts of the compatibility gate")->check(CLI::PositiveNumber);
  bounds->add_option("--epsilon", epsilon, "relative error for the credible block (emcc)");
  bounds->add_option("--target", target, "coverage target for epsilon* (emcc)");
  bounds->add_option("-o,--output", common.output, "report path (default stdout)");

  auto* credible = app.add_subcommand("credible", "credible interval of an EMCC report");
  credible->add_option("report", reportPath, "report from bounds --method emcc")->required()->check(CLI::ExistingFile);
  credible->add_option("--epsilon", epsilon, "relative error");
  credible->add_option("--target", target, "coverage target for epsilon*");
  credible->add_option("-o,--output", common.output, "report path (default stdout)");

  auto* canonical = app.add_subcommand("canonical", "canonical Markovian model of a causal graph");
  canonical->add_option("graph", graphPath, "graph JSON")->required()->check(CLI::ExistingFile);
  canonical->add_option("-o,--output", common.output, "model path (default stdout)");
  canonical->add_option("--cap", cap, "largest allowed exogenous cardinality");

  auto* constraints = app.add_subcommand("constraints", "export the per-exogenous constraint systems");
  constraints->add_option("model", common.model, "model JSON")->required()->check(CLI::ExistingFile);
  constraints->add_option("data", common.data, "CSV data")->required()->check(CLI::ExistingFile);
  constraints->add_option("-o,--output", common.output, "report path (default stdout)");

  auto* bench = app.add_subcommand("bench", "synthetic benchmark");
  bench->add_option("config", configPath, "benchmark config JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--out-dir", outDir, "directory for records.jsonl and summary.csv");
  bench->add_option("--threads", threads, "worker threads (default SCMB_THREADS or 1)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run `scmb --help` for usage\n";
    return kExitError;
  }

  try {
    if (*compat) return cmdCompat(common, out);
    if (*bounds) return cmdBounds(common, queryText, method, runs, epsilon, target, out);
    if (*credible) return cmdCredible(reportPath, epsilon, target, common.output, out);
    if (*canonical) return cmdCanonical(graphPath, common.output, cap, out);
    if (*constraints) return cmdConstraints(common, out);
    if (*bench) return cmdBench(configPath, outDir, threads, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace scmb
