#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "censmte/bootstrap.hpp"
#include "censmte/bounds.hpp"
#include "censmte/dataset.hpp"
#include "censmte/estimator.hpp"

namespace censmte {

// Every knob of a command-line run. Serializes to JSON and back losslessly.
struct RunConfig {
  std::string subcommand = "estimate";
  std::string input;
  ColumnMap columns;

  // Sample preparation.
  bool looInstrument = false;
  std::size_t minCases = 0;
  std::size_t minDecidersPerLevel = 0;

  // Estimation.
  int basisDegree = 2;
  double trimEps = 0.01;
  int drPDegree = 1;
  bool naive = false;
  std::size_t gridSize = 64;
  std::string gridFile;
  std::size_t vPoints = 41;
  std::vector<double> tau = defaultTauGrid();

  // Bootstrap.
  std::size_t bootB = 299;
  double alpha = 0.05;
  bool clusterWeights = true;

  // Bounds.
  std::string boundsMode = "regdep";  // regdep | relax
  double bbar = 0.0;
  bool breakdown = false;
  std::size_t deltaCount = 8;
  std::size_t minCell = 50;

  // Simulation.
  std::string specPath;
  std::size_t n = 0;
  std::string latentOut;
  std::string out;

  // Toy check.
  std::string fixture;

  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string outDir = ".";
  bool json = false;
  bool years = false;

  void validate() const;
  EstimatorOptions estimatorOptions() const;
  BootstrapPlan bootstrapPlan() const;
};

nlohmann::json runConfigToJson(const RunConfig& config);
RunConfig runConfigFromJson(const nlohmann::json& j);

// Config fields that do not change any output (threads, output paths, the
// JSON console flag) are left out so the hash identifies the results.
nlohmann::json hashedConfig(const RunConfig& config);
std::uint64_t fnv1a64(const std::string& bytes);
std::string configHash(const RunConfig& config);

ThresholdGrid loadGridFile(const std::string& path);

struct PreparedTable {
  ObservationTable table;
  std::size_t droppedByFilter = 0;
  std::size_t droppedByClipping = 0;
  std::optional<double> zLow, zHigh;
};

// Caseload filter, then the leave-one-out instrument, then the overlap check.
PreparedTable prepareTable(const ObservationTable& raw, const RunConfig& config);

struct RunResult {
  Estimate estimate;
  FirstStageTest firstStage;
  bool firstStageAvailable = false;
  std::string firstStageNote;
  std::optional<ConfidenceBands> bands;
};

RunResult runEstimate(const ObservationTable& table, const RunConfig& config);
void runBootstrapInto(RunResult& result, const ObservationTable& table, const RunConfig& config);

nlohmann::json diagnosticsJson(const RunResult& result, const ObservationTable& table,
                               const RunConfig& config);

// Long-format table functional,y_or_tau,v,x,value,lo,hi. Durations are
// divided by 365 when config.years is set.
std::string surfacesCsv(const RunResult& result, const RunConfig& config);

struct BoundsRun {
  std::vector<std::string> xLabels;
  DeltaGrid deltas;
  std::optional<BoundsSurface> surface;
  std::optional<BreakdownCurve> breakdown;
};

BoundsRun runBounds(const RunResult& result, const ObservationTable& table, const RunConfig& config);
std::string boundsCsv(const BoundsRun& run, const RunConfig& config);       // y,v,x,lb,ub,mode,bbar
std::string boundsArmCsv(const BoundsRun& run, const RunConfig& config);    // d,y,v,x,lb,ub,mode,bbar
std::string breakdownCsv(const BoundsRun& run, const RunConfig& config);    // y,bbar

// Writes `content` to path and a `<path>.meta.json` sidecar carrying the
// hashed config, its FNV-1a hash and the row count.
void writeWithSidecar(const std::string& path, const std::string& content, const RunConfig& config);

// Output files written by each command, relative to config.outDir.
std::vector<std::string> writeEstimateOutputs(const RunResult& result, const ObservationTable& table,
                                              const RunConfig& config);
std::vector<std::string> writeBoundsOutputs(const BoundsRun& run, const RunConfig& config);

std::string formatNumber(double v);

}  // namespace censmte
