// cens-mte: command-line front end. Talks to the library only through the
// C interface in censmte/censmte.h.
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "censmte/censmte.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitInvalid = 2;

struct TableDeleter {
  void operator()(cm_table* t) const { cm_table_free(t); }
};
struct ResultDeleter {
  void operator()(cm_result* r) const { cm_result_free(r); }
};
using TablePtr = std::unique_ptr<cm_table, TableDeleter>;
using ResultPtr = std::unique_ptr<cm_result, ResultDeleter>;

struct StatusError {
  cm_status status;
};

void check(cm_status s) {
  if (s != CM_OK) throw StatusError{s};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  cm_string_free(s);
  return out;
}

struct Options {
  std::string input;
  std::string colY = "y", colC = "c", colD = "d", colZ = "z", colX, colCluster, colDecider;
  bool looInstrument = false;
  std::size_t minCases = 0, minDeciders = 0;
  int basisDegree = 2;
  double trimEps = 0.01;
  int drPDegree = 1;
  bool naive = false;
  std::size_t gridSize = 64;
  std::string gridFile;
  std::size_t vPoints = 41;
  std::size_t bootB = 299;
  double alpha = 0.05;
  std::string clusterWeights = "on";
  std::string mode = "regdep";
  double bbar = 0.0;
  bool breakdown = false;
  std::size_t deltaCount = 8, minCell = 50;
  std::string spec, out, latentOut, fixture;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string outDir = ".";
  bool json = false;
  bool years = false;
};

json columnsJson(const Options& o) {
  json j = {{"y", o.colY}, {"c", o.colC}, {"d", o.colD}, {"z", o.colZ}};
  j["x"] = o.colX.empty() ? json(nullptr) : json(o.colX);
  j["cluster"] = o.colCluster.empty() ? json(nullptr) : json(o.colCluster);
  j["decider"] = o.colDecider.empty() ? json(nullptr) : json(o.colDecider);
  return j;
}

json configJson(const Options& o, const std::string& subcommand) {
  return {{"subcommand", subcommand},
          {"input", o.input},
          {"columns", columnsJson(o)},
          {"loo_instrument", o.looInstrument},
          {"min_cases", o.minCases},
          {"min_deciders_per_level", o.minDeciders},
          {"basis_degree", o.basisDegree},
          {"trim_eps", o.trimEps},
          {"dr_p_degree", o.drPDegree},
          {"naive", o.naive},
          {"grid_size", o.gridSize},
          {"grid_file", o.gridFile},
          {"v_points", o.vPoints},
          {"boot_B", o.bootB},
          {"alpha", o.alpha},
          {"cluster_weights", o.clusterWeights == "on"},
          {"bounds_mode", o.mode},
          {"bbar", o.bbar},
          {"breakdown", o.breakdown},
          {"delta_count", o.deltaCount},
          {"min_cell", o.minCell},
          {"spec", o.spec},
          {"n", o.n},
          {"latent_out", o.latentOut},
          {"out", o.out},
          {"fixture", o.fixture},
          {"seed", o.seed},
          {"threads", o.threads},
          {"out_dir", o.outDir},
          {"json", o.json},
          {"years", o.years}};
}

void addDataOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("input,--input", o.input, "Observation CSV")->required();
  cmd->add_option("--col-y", o.colY, "Observed duration column");
  cmd->add_option("--col-c", o.colC, "Censoring horizon column");
  cmd->add_option("--col-d", o.colD, "Treatment column");
  cmd->add_option("--col-z", o.colZ, "Instrument column");
  cmd->add_option("--col-x", o.colX, "Covariate level column (optional)");
  cmd->add_option("--col-cluster", o.colCluster, "Cluster column (defaults to x)");
  cmd->add_option("--col-decider", o.colDecider, "Decision-maker column (optional)");
  cmd->add_flag("--loo-instrument", o.looInstrument, "Replace z by the leave-one-out decider rate");
  cmd->add_option("--min-cases", o.minCases, "Drop deciders with fewer cases");
  cmd->add_option("--min-deciders", o.minDeciders, "Drop levels with fewer deciders");
  cmd->add_option("--basis-degree", o.basisDegree, "Instrument polynomial degree L")->check(CLI::Range(1, 10));
  cmd->add_option("--trim-eps", o.trimEps, "Propensity trimming constant");
  cmd->add_option("--dr-p-degree", o.drPDegree, "Powers of P in the distribution regression")->check(CLI::Range(1, 6));
  cmd->add_flag("--naive", o.naive, "Ignore censoring (comparator pipeline)");
  cmd->add_option("--grid-size", o.gridSize, "Number of quantile thresholds");
  cmd->add_option("--grid-file", o.gridFile, "CSV of explicit thresholds");
  cmd->add_option("--v-points", o.vPoints, "Points on the propensity grid");
  cmd->add_flag("--years", o.years, "Report durations in years (input in days)");
}

int report(const Options& o, const json& summary) {
  if (o.json) {
    std::printf("%s\n", summary.dump(2).c_str());
  } else {
    for (const auto& [key, value] : summary.items()) {
      std::printf("%s: %s\n", key.c_str(), value.is_string() ? value.get<std::string>().c_str() : value.dump().c_str());
    }
  }
  return kExitOk;
}

TablePtr loadPrepared(const Options& o, const json& config, json& prep) {
  cm_table* raw = nullptr;
  check(cm_table_load_csv(o.input.c_str(), columnsJson(o).dump().c_str(), &raw));
  TablePtr rawPtr(raw);
  cm_table* prepared = nullptr;
  char* rep = nullptr;
  check(cm_table_prepare(raw, config.dump().c_str(), &prepared, &rep));
  prep = json::parse(take(rep));
  return TablePtr(prepared);
}

int runEstimateLike(const Options& o, const std::string& sub) {
  const json config = configJson(o, sub);
  json prep;
  TablePtr table = loadPrepared(o, config, prep);
  cm_result* raw = nullptr;
  check(cm_estimate(table.get(), config.dump().c_str(), &raw));
  ResultPtr result(raw);
  json summary = {{"command", sub}, {"rows", prep["rows_out"]}, {"out_dir", o.outDir}};
  if (sub == "bootstrap") check(cm_bootstrap(table.get(), result.get(), config.dump().c_str()));
  if (sub == "bounds") {
    check(cm_bounds_write(result.get(), table.get(), config.dump().c_str()));
    summary["outputs"] = o.breakdown ? json::array({"breakdown.csv", "breakdown.json"})
                                     : json::array({"bounds.csv", "bounds_dmtr.csv"});
  } else {
    check(cm_result_write(result.get(), table.get()));
    summary["outputs"] = json::array({"surfaces.csv", "diagnostics.json", "distreg.json"});
  }
  char* diag = nullptr;
  check(cm_result_diagnostics_json(result.get(), table.get(), &diag));
  const json d = json::parse(take(diag));
  summary["first_stage_f"] = d["first_stage"]["fstat"];
  summary["n_trimmed"] = d["propensity"]["n_trimmed"];
  summary["unusable_cells"] = d["distreg"]["unusable_cells"];
  summary["preparation"] = prep;
  return report(o, summary);
}

int runSimulate(const Options& o) {
  std::string specText = "{}";
  if (!o.spec.empty()) {
    std::ifstream in(o.spec);
    if (!in) {
      std::fprintf(stderr, "%s\n",
                   json({{"error", "IoError"}, {"code", 2}, {"message", "cannot open spec file '" + o.spec + "'"},
                         {"detail", {{"path", o.spec}}}}).dump().c_str());
      return kExitInvalid;
    }
    specText.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  cm_table* raw = nullptr;
  check(cm_simulate(specText.c_str(), o.n, o.seed, o.threads, o.latentOut.empty() ? nullptr : o.latentOut.c_str(), &raw));
  TablePtr table(raw);
  check(cm_table_save_csv(table.get(), o.out.c_str()));
  char* summary = nullptr;
  check(cm_table_summary_json(table.get(), &summary));
  json s = json::parse(take(summary));
  s["out"] = o.out;
  return report(o, s);
}

int runToyCheck(const Options& o) {
  std::string fixture;
  if (!o.fixture.empty()) {
    std::ifstream in(o.fixture);
    if (!in) {
      std::fprintf(stderr, "%s\n",
                   json({{"error", "IoError"}, {"code", 2}, {"message", "cannot open fixture '" + o.fixture + "'"},
                         {"detail", {{"path", o.fixture}}}}).dump().c_str());
      return kExitInvalid;
    }
    fixture.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  char* out = nullptr;
  int pass = 0;
  check(cm_toy_check(fixture.empty() ? nullptr : fixture.c_str(), &out, &pass));
  const json r = json::parse(take(out));
  if (o.json) {
    std::printf("%s\n", r.dump(2).c_str());
  } else {
    std::printf("DMTE(1)    = %s (expected 0.05)\n", r["dmte_1"].dump().c_str());
    std::printf("DMTE(2)    = %s (expected 0.1)\n", r["dmte_2"].dump().c_str());
    std::printf("median QTE = %s (expected 7)\n", r["median_qte"].dump().c_str());
    std::printf("ATE        = %s (expected 5.55)\n", r["ate"].dump().c_str());
    std::printf("%s\n", pass ? "PASS" : "FAIL");
  }
  return pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marginal treatment effects for right-censored durations", "cens-mte"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  app.add_option("--out-dir", o.outDir, "Output directory");
  app.add_flag("--json", o.json, "Machine-readable console output");

  auto* estimate = app.add_subcommand("estimate", "Point estimates of every functional");
  addDataOptions(estimate, o);

  auto* bootstrap = app.add_subcommand("bootstrap", "Point estimates with weighted-bootstrap bands");
  addDataOptions(bootstrap, o);
  bootstrap->add_option("--boot-B", o.bootB, "Replicates")->check(CLI::PositiveNumber);
  bootstrap->add_option("--alpha", o.alpha, "One minus the band coverage")->check(CLI::Range(0.0, 1.0));
  bootstrap->add_option("--cluster-weights", o.clusterWeights, "One weight per cluster")
      ->check(CLI::IsMember({"on", "off"}));

  auto* bounds = app.add_subcommand("bounds", "Bounds under dependent censoring or the breakdown curve");
  addDataOptions(bounds, o);
  bounds->add_option("--mode", o.mode, "regdep or relax")->check(CLI::IsMember({"regdep", "relax"}));
  bounds->add_option("--bbar", o.bbar, "Relaxation magnitude")->check(CLI::Range(0.0, 1.0));
  bounds->add_flag("--breakdown", o.breakdown, "Emit the breakdown curve y,bbar");
  bounds->add_option("--delta-count", o.deltaCount, "Censoring offsets per threshold");
  bounds->add_option("--min-cell", o.minCell, "Observations required near each offset");

  auto* simulate = app.add_subcommand("simulate", "Draw a synthetic data set");
  simulate->add_option("--spec", o.spec, "DGP spec JSON (defaults to the reference design)");
  simulate->add_option("--n", o.n, "Rows")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--out", o.out, "Output CSV")->required();
  simulate->add_option("--latent-out", o.latentOut, "Latent draws CSV");

  auto* toy = app.add_subcommand("toy-check", "Exact check of the two-arm PMF example");
  toy->add_option("--fixture", o.fixture, "PMF JSON replacing the built-in table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "%s\n",
                 json({{"error", "InvalidArgument"}, {"code", 1}, {"message", e.what()}, {"detail", json::object()}})
                     .dump()
                     .c_str());
    return kExitInvalid;
  }

  try {
    if (estimate->parsed()) return runEstimateLike(o, "estimate");
    if (bootstrap->parsed()) return runEstimateLike(o, "bootstrap");
    if (bounds->parsed()) return runEstimateLike(o, "bounds");
    if (simulate->parsed()) return runSimulate(o);
    if (toy->parsed()) return runToyCheck(o);
  } catch (const StatusError&) {
    std::fprintf(stderr, "%s\n", cm_last_error());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n",
                 json({{"error", "Internal"}, {"code", 99}, {"message", e.what()}, {"detail", json::object()}}).dump().c_str());
    return kExitInvalid;
  }
  return kExitInvalid;
}
