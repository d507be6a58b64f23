#include "censmte/pipeline.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "censmte/error.hpp"

namespace censmte {

using nlohmann::json;

namespace {

constexpr double kDaysPerYear = 365.0;

[[noreturn]] void badConfig(const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); }

json columnMapToJson(const ColumnMap& m) {
  json j = {{"y", m.y}, {"c", m.c}, {"d", m.d}, {"z", m.z}};
  j["x"] = m.x ? json(*m.x) : json(nullptr);
  j["cluster"] = m.cluster ? json(*m.cluster) : json(nullptr);
  j["decider"] = m.decider ? json(*m.decider) : json(nullptr);
  return j;
}

std::optional<std::string> optionalString(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

ColumnMap columnMapFromJson(const json& j) {
  ColumnMap m;
  m.y = j.value("y", m.y);
  m.c = j.value("c", m.c);
  m.d = j.value("d", m.d);
  m.z = j.value("z", m.z);
  m.x = optionalString(j, "x");
  m.cluster = optionalString(j, "cluster");
  m.decider = optionalString(j, "decider");
  return m;
}

}  // namespace

void RunConfig::validate() const {
  static const std::vector<std::string> commands = {"estimate", "bootstrap", "bounds", "simulate", "toy-check"};
  if (std::find(commands.begin(), commands.end(), subcommand) == commands.end()) {
    badConfig("unknown subcommand '" + subcommand + "'");
  }
  if (basisDegree < 1 || basisDegree > 10) badConfig("basis degree must lie in [1, 10]");
  if (!(trimEps > 0.0 && trimEps < 0.5)) badConfig("trim epsilon must lie in (0, 0.5)");
  if (drPDegree < 1 || drPDegree > 6) badConfig("propensity degree of the distribution regression must lie in [1, 6]");
  if (gridSize < 1) badConfig("grid size must be >= 1");
  if (vPoints < 1) badConfig("v grid needs at least one point");
  for (std::size_t j = 0; j < tau.size(); ++j) {
    if (!(tau[j] > 0.0 && tau[j] < 1.0) || (j > 0 && !(tau[j] > tau[j - 1]))) {
      badConfig("tau grid must be strictly increasing inside (0, 1)");
    }
  }
  if (bootB < 1) badConfig("bootstrap B must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) badConfig("alpha must lie in (0, 1)");
  if (boundsMode != "regdep" && boundsMode != "relax") badConfig("bounds mode must be regdep or relax");
  if (!(bbar >= 0.0 && bbar <= 1.0)) badConfig("bbar must lie in [0, 1]");
  if (deltaCount < 1) badConfig("delta count must be >= 1");
}

EstimatorOptions RunConfig::estimatorOptions() const {
  EstimatorOptions o;
  o.propensity.basis = SeriesBasis(basisDegree);
  o.propensity.epsilon = trimEps;
  o.distreg.propensityDegree = drPDegree;
  o.distreg.threads = threads;
  o.dmtr.threads = threads;
  o.gridSize = gridSize;
  o.vPoints = vPoints;
  o.tau = tau;
  o.setNaive(naive);
  return o;
}

BootstrapPlan RunConfig::bootstrapPlan() const {
  BootstrapPlan p;
  p.B = bootB;
  p.alpha = alpha;
  p.clusterLevel = clusterWeights;
  p.seed = seed;
  p.threads = threads;
  return p;
}

json runConfigToJson(const RunConfig& c) {
  return {{"subcommand", c.subcommand},
          {"input", c.input},
          {"columns", columnMapToJson(c.columns)},
          {"loo_instrument", c.looInstrument},
          {"min_cases", c.minCases},
          {"min_deciders_per_level", c.minDecidersPerLevel},
          {"basis_degree", c.basisDegree},
          {"trim_eps", c.trimEps},
          {"dr_p_degree", c.drPDegree},
          {"naive", c.naive},
          {"grid_size", c.gridSize},
          {"grid_file", c.gridFile},
          {"v_points", c.vPoints},
          {"tau", c.tau},
          {"boot_B", c.bootB},
          {"alpha", c.alpha},
          {"cluster_weights", c.clusterWeights},
          {"bounds_mode", c.boundsMode},
          {"bbar", c.bbar},
          {"breakdown", c.breakdown},
          {"delta_count", c.deltaCount},
          {"min_cell", c.minCell},
          {"spec", c.specPath},
          {"n", c.n},
          {"latent_out", c.latentOut},
          {"out", c.out},
          {"fixture", c.fixture},
          {"seed", c.seed},
          {"threads", c.threads},
          {"out_dir", c.outDir},
          {"json", c.json},
          {"years", c.years}};
}

RunConfig runConfigFromJson(const json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) badConfig("config must be a JSON object");
    c.subcommand = j.value("subcommand", c.subcommand);
    c.input = j.value("input", c.input);
    if (j.contains("columns")) c.columns = columnMapFromJson(j.at("columns"));
    c.looInstrument = j.value("loo_instrument", c.looInstrument);
    c.minCases = j.value("min_cases", c.minCases);
    c.minDecidersPerLevel = j.value("min_deciders_per_level", c.minDecidersPerLevel);
    c.basisDegree = j.value("basis_degree", c.basisDegree);
    c.trimEps = j.value("trim_eps", c.trimEps);
    c.drPDegree = j.value("dr_p_degree", c.drPDegree);
    c.naive = j.value("naive", c.naive);
    c.gridSize = j.value("grid_size", c.gridSize);
    c.gridFile = j.value("grid_file", c.gridFile);
    c.vPoints = j.value("v_points", c.vPoints);
    c.tau = j.value("tau", c.tau);
    c.bootB = j.value("boot_B", c.bootB);
    c.alpha = j.value("alpha", c.alpha);
    c.clusterWeights = j.value("cluster_weights", c.clusterWeights);
    c.boundsMode = j.value("bounds_mode", c.boundsMode);
    c.bbar = j.value("bbar", c.bbar);
    c.breakdown = j.value("breakdown", c.breakdown);
    c.deltaCount = j.value("delta_count", c.deltaCount);
    c.minCell = j.value("min_cell", c.minCell);
    c.specPath = j.value("spec", c.specPath);
    c.n = j.value("n", c.n);
    c.latentOut = j.value("latent_out", c.latentOut);
    c.out = j.value("out", c.out);
    c.fixture = j.value("fixture", c.fixture);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.outDir = j.value("out_dir", c.outDir);
    c.json = j.value("json", c.json);
    c.years = j.value("years", c.years);
  } catch (const json::exception& e) {
    badConfig(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

json hashedConfig(const RunConfig& config) {
  json j = runConfigToJson(config);
  for (const char* key : {"threads", "out_dir", "json", "out", "latent_out"}) j.erase(key);
  return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string configHash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(hashedConfig(config).dump())));
  return buf;
}

ThresholdGrid loadGridFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open grid file '" + path + "'", {{"path", path}});
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const std::string cell = line.substr(0, comma);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      if (row == 1) continue;  // header
      throw Error(ErrorCode::kParse, "grid file value is not a number", {{"row", row}, {"path", path}});
    }
    values.push_back(v);
  }
  return ThresholdGrid(std::move(values));
}

PreparedTable prepareTable(const ObservationTable& raw, const RunConfig& config) {
  PreparedTable p;
  p.table = raw;
  if (config.minCases > 0 || config.minDecidersPerLevel > 0) {
    p.table = applyCaseloadFilter(p.table, config.minCases, config.minDecidersPerLevel);
    p.droppedByFilter = raw.size() - p.table.size();
  }
  if (config.looInstrument) {
    auto loo = buildLeaveOneOutInstrument(p.table, true);
    p.droppedByClipping = loo.droppedRows;
    p.zLow = loo.zLow;
    p.zHigh = loo.zHigh;
    p.table = std::move(loo.table);
  }
  p.table.validateOverlap();
  return p;
}

RunResult runEstimate(const ObservationTable& table, const RunConfig& config) {
  config.validate();
  const EstimatorOptions options = config.estimatorOptions();
  std::optional<ThresholdGrid> grid;
  if (!config.gridFile.empty()) grid = loadGridFile(config.gridFile);
  RunResult r;
  r.estimate = estimate(table, options, grid ? &*grid : nullptr);
  try {
    r.firstStage = firstStageTest(r.estimate.propensity, table);
    r.firstStageAvailable = true;
  } catch (const Error& e) {
    r.firstStageNote = e.what();
  }
  return r;
}

void runBootstrapInto(RunResult& result, const ObservationTable& table, const RunConfig& config) {
  result.bands = runBootstrap(table, config.estimatorOptions(), result.estimate.surfaces,
                              config.bootstrapPlan());
}

namespace {

json numberOrNull(double v) { return isMissing(v) ? json(nullptr) : json(v); }

}  // namespace

json diagnosticsJson(const RunResult& r, const ObservationTable& table, const RunConfig& config) {
  const auto& p = r.estimate.propensity;
  const auto& s = r.estimate.surfaces;
  const auto& f = r.estimate.distreg;
  json j;
  j["rows"] = table.size();
  j["treated"] = table.treatedCount();
  j["gamma_c_hat"] = table.gammaCHat();
  j["naive"] = config.naive;
  json levels = json::array();
  for (std::size_t x = 0; x < table.numLevels(); ++x) {
    const auto& l = table.xLevels()[x];
    levels.push_back({{"label", l.label}, {"rows", l.rows}, {"treated", l.treated}, {"w_hat", s.wHat[x]}});
  }
  j["levels"] = levels;
  json alphaX = json::object();
  for (std::size_t x = 0; x < p.alphaX.size(); ++x) alphaX[table.xLevels()[x].label] = p.alphaX[x];
  j["propensity"] = {{"alpha0", p.alpha0},
                     {"alphaX", alphaX},
                     {"alphaC", p.alphaC},
                     {"alphaZ_standardized", p.alphaZ},
                     {"z_mean", p.zMean},
                     {"z_scale", p.zScale},
                     {"raw_scale_z_polynomial", p.rawScaleZPolynomial()},
                     {"dropped_columns", p.droppedColumns},
                     {"epsilon", p.epsilon},
                     {"basis_degree", p.basis.degree},
                     {"n_trimmed", p.nTrimmed}};
  if (r.firstStageAvailable) {
    j["first_stage"] = {{"fstat", r.firstStage.fstat},
                        {"wald", r.firstStage.wald},
                        {"df", r.firstStage.df},
                        {"clusters", r.firstStage.clusters}};
  } else {
    j["first_stage"] = {{"fstat", nullptr}, {"note", r.firstStageNote}};
  }
  j["distreg"] = {{"columns", f.columnNames},
                  {"dropped_columns", f.droppedColumns},
                  {"propensity_degree", f.propensityDegree},
                  {"cells", f.cells.size()},
                  {"unusable_cells", f.unusableCells()}};
  json unusable = json::array();
  for (const auto& c : f.cells) {
    if (!c.usable()) {
      unusable.push_back({{"y", c.threshold}, {"d", c.arm}, {"status", cellStatusName(c.status)},
                          {"iterations", c.iterations}});
    }
  }
  j["unusable_cells"] = unusable;
  json missing = json::array();
  for (const auto& m : s.missing) {
    missing.push_back({{"d", m.d}, {"x", table.xLevels()[static_cast<std::size_t>(m.x)].label},
                       {"y", s.design.y[m.k]}, {"reason", m.reason}});
  }
  j["missing_cells"] = missing;
  j["imputed_entries"] = s.imputed;
  j["y_grid"] = s.design.y.values();
  j["v_grid"] = s.design.v;
  j["tau_grid"] = s.design.tau;
  json tauBar = json::array();
  for (std::size_t v = 0; v < s.design.v.size(); ++v) {
    for (std::size_t x = 0; x < s.wHat.size(); ++x) {
      tauBar.push_back({{"v", s.design.v[v]}, {"x", s.xLabels[x]}, {"tau_bar", numberOrNull(s.tauBar(v, x, 0))}});
    }
    tauBar.push_back({{"v", s.design.v[v]}, {"x", "avg"}, {"tau_bar", numberOrNull(s.tauBarAvg(v, 0, 0))}});
  }
  j["tau_bar"] = tauBar;
  if (r.bands) {
    j["bootstrap"] = {{"requested", r.bands->requested},
                      {"completed", r.bands->completed},
                      {"failed", r.bands->failed},
                      {"alpha", r.bands->alpha}};
  }
  return j;
}

// Shortest text that parses back to the same double.
std::string formatNumber(double v) {
  if (isMissing(v)) return "NA";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// Functional layout in the long table: which grid its first index uses and
// whether its values are durations.
struct FunctionalSpec {
  const char* name;
  enum Axis { kY, kTau, kNone } axis;
  bool duration;
  bool aggregated;
};

const std::vector<FunctionalSpec>& longFunctionals() {
  static const std::vector<FunctionalSpec> specs = {
      {"dmtr0", FunctionalSpec::kY, false, false},    {"dmtr1", FunctionalSpec::kY, false, false},
      {"dmte", FunctionalSpec::kY, false, false},     {"qmtr0", FunctionalSpec::kTau, true, false},
      {"qmtr1", FunctionalSpec::kTau, true, false},   {"qmte", FunctionalSpec::kTau, true, false},
      {"rmte", FunctionalSpec::kNone, true, false},   {"ramtr0", FunctionalSpec::kNone, true, false},
      {"ramtr1", FunctionalSpec::kNone, true, false}, {"tau_bar", FunctionalSpec::kNone, false, false},
      {"dmte_avg", FunctionalSpec::kY, false, true},  {"qmte_avg", FunctionalSpec::kTau, true, true},
      {"rmte_avg", FunctionalSpec::kNone, true, true},
  };
  return specs;
}

const Array3& longArray(const MteSurfaces& s, const std::string& name) {
  if (name == "qmtr0") return s.qmtr[0];
  if (name == "qmtr1") return s.qmtr[1];
  if (name == "ramtr0") return s.ramtr[0];
  if (name == "ramtr1") return s.ramtr[1];
  if (name == "tau_bar") return s.tauBar;
  return functionalArray(s, name);
}

}  // namespace

std::string surfacesCsv(const RunResult& r, const RunConfig& config) {
  const auto& s = r.estimate.surfaces;
  const double unit = config.years ? kDaysPerYear : 1.0;
  std::ostringstream out;
  out << "functional,y_or_tau,v,x,value,lo,hi\n";
  for (const auto& spec : longFunctionals()) {
    const std::string name = spec.name;
    const Array3& a = longArray(s, name);
    const Band* band = nullptr;
    if (r.bands) {
      auto it = r.bands->bands.find(name);
      if (it != r.bands->bands.end()) band = &it->second;
    }
    const std::size_t first = spec.axis == FunctionalSpec::kY     ? s.design.y.size()
                              : spec.axis == FunctionalSpec::kTau ? s.design.tau.size()
                                                                  : 1;
    const std::size_t X = spec.aggregated ? 1 : s.wHat.size();
    const double scale = spec.duration ? unit : 1.0;
    for (std::size_t i = 0; i < first; ++i) {
      std::string axis;
      if (spec.axis == FunctionalSpec::kY) axis = formatNumber(s.design.y[i] / unit);
      if (spec.axis == FunctionalSpec::kTau) axis = formatNumber(s.design.tau[i]);
      for (std::size_t j = 0; j < s.design.v.size(); ++j) {
        for (std::size_t x = 0; x < X; ++x) {
          // Arrays without a leading grid index are laid out [v][x][0].
          const double value = spec.axis == FunctionalSpec::kNone
                                   ? (spec.aggregated ? a(j, 0, 0) : a(j, x, 0))
                                   : a(i, j, x);
          out << name << ',' << axis << ',' << formatNumber(s.design.v[j]) << ','
              << (spec.aggregated ? std::string("avg") : s.xLabels[x]) << ',' << formatNumber(value / scale);
          if (band) {
            const Array3& lo = band->lo;
            const Array3& hi = band->hi;
            const double l = spec.axis == FunctionalSpec::kNone ? (spec.aggregated ? lo(j, 0, 0) : lo(j, x, 0)) : lo(i, j, x);
            const double h = spec.axis == FunctionalSpec::kNone ? (spec.aggregated ? hi(j, 0, 0) : hi(j, x, 0)) : hi(i, j, x);
            out << ',' << formatNumber(l / scale) << ',' << formatNumber(h / scale) << '\n';
          } else {
            out << ",,\n";
          }
        }
      }
    }
  }
  return out.str();
}

BoundsRun runBounds(const RunResult& r, const ObservationTable& table, const RunConfig& config) {
  const auto& fit = r.estimate.distreg;
  const auto& design = r.estimate.surfaces.design;
  BoundsRun run;
  run.xLabels = r.estimate.surfaces.xLabels;
  run.deltas = buildDeltaGrid(table, design.y, {config.deltaCount, config.minCell});
  if (config.breakdown) {
    run.breakdown = breakdownCurve(fit, table, design, run.deltas);
  } else if (config.boundsMode == "relax") {
    run.surface = boundsContinuousRelaxation(fit, table, design, run.deltas, config.bbar);
  } else {
    run.surface = boundsRegressionDependence(fit, table, design, run.deltas);
  }
  return run;
}

std::string boundsCsv(const BoundsRun& run, const RunConfig& config) {
  const auto& s = *run.surface;
  const double unit = config.years ? kDaysPerYear : 1.0;
  const std::string tail = std::string(",") + boundsModeName(s.mode) + ',' + formatNumber(s.bbar) + '\n';
  std::ostringstream out;
  out << "y,v,x,lb,ub,mode,bbar\n";
  for (std::size_t k = 0; k < s.design.y.size(); ++k) {
    for (std::size_t j = 0; j < s.design.v.size(); ++j) {
      const std::string head = formatNumber(s.design.y[k] / unit) + ',' + formatNumber(s.design.v[j]) + ',';
      for (std::size_t x = 0; x < s.wHat.size(); ++x) {
        out << head << run.xLabels[x] << ',' << formatNumber(s.dmteLo(k, j, x)) << ','
            << formatNumber(s.dmteHi(k, j, x)) << tail;
      }
      out << head << "avg," << formatNumber(s.dmteLoAvg(k, j, 0)) << ',' << formatNumber(s.dmteHiAvg(k, j, 0))
          << tail;
    }
  }
  return out.str();
}

std::string boundsArmCsv(const BoundsRun& run, const RunConfig& config) {
  const auto& s = *run.surface;
  const double unit = config.years ? kDaysPerYear : 1.0;
  const std::string tail = std::string(",") + boundsModeName(s.mode) + ',' + formatNumber(s.bbar) + '\n';
  std::ostringstream out;
  out << "d,y,v,x,lb,ub,mode,bbar\n";
  for (int d = 0; d < 2; ++d) {
    for (std::size_t k = 0; k < s.design.y.size(); ++k) {
      for (std::size_t j = 0; j < s.design.v.size(); ++j) {
        for (std::size_t x = 0; x < s.wHat.size(); ++x) {
          out << d << ',' << formatNumber(s.design.y[k] / unit) << ',' << formatNumber(s.design.v[j]) << ','
              << run.xLabels[x] << ',' << formatNumber(s.lb[d](k, j, x)) << ',' << formatNumber(s.ub[d](k, j, x))
              << tail;
        }
      }
    }
  }
  return out.str();
}

std::string breakdownCsv(const BoundsRun& run, const RunConfig& config) {
  const auto& b = *run.breakdown;
  const double unit = config.years ? kDaysPerYear : 1.0;
  std::ostringstream out;
  out << "y,bbar\n";
  for (std::size_t k = 0; k < b.y.size(); ++k) out << formatNumber(b.y[k] / unit) << ',' << formatNumber(b.bbar[k]) << '\n';
  return out.str();
}

void writeWithSidecar(const std::string& path, const std::string& content, const RunConfig& config) {
  auto write = [](const std::string& target, const std::string& bytes) {
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + target + "'", {{"path", target}});
    out << bytes;
    if (!out) throw Error(ErrorCode::kIo, "failed writing '" + target + "'", {{"path", target}});
  };
  write(path, content);
  const auto rows = static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
  const json meta = {{"file", std::filesystem::path(path).filename().string()},
                     {"rows", rows == 0 ? 0 : rows - 1},
                     {"config", hashedConfig(config)},
                     {"config_hash", configHash(config)},
                     {"content_hash", [&] {
                        char buf[17];
                        std::snprintf(buf, sizeof buf, "%016llx",
                                      static_cast<unsigned long long>(fnv1a64(content)));
                        return std::string(buf);
                      }()},
                     {"generator", "cens-mte"}};
  write(path + ".meta.json", meta.dump(2) + "\n");
}

namespace {

std::string joinPath(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensureDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory '" + dir + "'", {{"path", dir}});
}

void writePlain(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'", {{"path", path}});
  out << content;
}

}  // namespace

std::vector<std::string> writeEstimateOutputs(const RunResult& result, const ObservationTable& table,
                                              const RunConfig& config) {
  ensureDir(config.outDir);
  writeWithSidecar(joinPath(config.outDir, "surfaces.csv"), surfacesCsv(result, config), config);
  json diag = diagnosticsJson(result, table, config);
  diag["config_hash"] = configHash(config);
  writePlain(joinPath(config.outDir, "diagnostics.json"), diag.dump(2) + "\n");
  writePlain(joinPath(config.outDir, "distreg.json"), result.estimate.distreg.toJson().dump(1) + "\n");
  return {"surfaces.csv", "surfaces.csv.meta.json", "diagnostics.json", "distreg.json"};
}

std::vector<std::string> writeBoundsOutputs(const BoundsRun& run, const RunConfig& config) {
  ensureDir(config.outDir);
  if (run.breakdown) {
    writeWithSidecar(joinPath(config.outDir, "breakdown.csv"), breakdownCsv(run, config), config);
    json robust = json::array();
    for (std::size_t k = 0; k < run.breakdown->y.size(); ++k) {
      robust.push_back({{"y", run.breakdown->y[k]},
                        {"bbar", numberOrNull(run.breakdown->bbar[k])},
                        {"robust", static_cast<bool>(run.breakdown->robust[k])}});
    }
    writePlain(joinPath(config.outDir, "breakdown.json"),
               json{{"threshold", kRobustBreakdown}, {"curve", robust}, {"config_hash", configHash(config)}}.dump(2) + "\n");
    return {"breakdown.csv", "breakdown.csv.meta.json", "breakdown.json"};
  }
  writeWithSidecar(joinPath(config.outDir, "bounds.csv"), boundsCsv(run, config), config);
  writeWithSidecar(joinPath(config.outDir, "bounds_dmtr.csv"), boundsArmCsv(run, config), config);
  return {"bounds.csv", "bounds.csv.meta.json", "bounds_dmtr.csv", "bounds_dmtr.csv.meta.json"};
}

}  // namespace censmte
