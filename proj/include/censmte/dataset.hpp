#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace censmte {

struct Observation {
  double y = 0.0;        // observed duration min(Y*, C), days
  double c = 0.0;        // censoring horizon, days
  int d = 0;             // treatment indicator
  double z = 0.0;        // instrument
  int x = 0;             // index into ObservationTable::xLevels
  int cluster = 0;       // index into ObservationTable::clusterLabels
  int decider = -1;      // index into ObservationTable::deciderLabels, -1 if absent
};

struct LevelInfo {
  std::string label;
  std::size_t rows = 0;
  std::size_t treated = 0;
};

struct ColumnMap {
  std::string y = "y";
  std::string c = "c";
  std::string d = "d";
  std::string z = "z";
  std::optional<std::string> x;
  std::optional<std::string> cluster;
  std::optional<std::string> decider;
};

class ObservationTable {
 public:
  ObservationTable() = default;

  // Builds a table from rows whose integer ids already index the label lists.
  // Validates every row invariant and recomputes level counts and gammaCHat.
  ObservationTable(std::vector<Observation> rows, std::vector<std::string> xLabels,
                   std::vector<std::string> clusterLabels,
                   std::vector<std::string> deciderLabels = {});

  const std::vector<Observation>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const Observation& operator[](std::size_t i) const { return rows_[i]; }

  const std::vector<LevelInfo>& xLevels() const { return xLevels_; }
  std::size_t numLevels() const { return xLevels_.size(); }
  const std::vector<std::string>& clusterLabels() const { return clusterLabels_; }
  std::size_t numClusters() const { return clusterLabels_.size(); }
  const std::vector<std::string>& deciderLabels() const { return deciderLabels_; }
  bool hasDeciders() const { return !deciderLabels_.empty(); }

  double gammaCHat() const { return gammaCHat_; }
  std::size_t treatedCount() const;

  // Throws ErrorCode::kOverlap if some x level lacks a treated or an
  // untreated row.
  void validateOverlap() const;

  // Keeps rows where keep[i] is true and compacts every label list to the
  // levels still present.
  ObservationTable subset(const std::vector<bool>& keep) const;

  // Same rows and labels, new instrument values.
  ObservationTable withInstrument(const std::vector<double>& z) const;

 private:
  std::vector<Observation> rows_;
  std::vector<LevelInfo> xLevels_;
  std::vector<std::string> clusterLabels_;
  std::vector<std::string> deciderLabels_;
  double gammaCHat_ = 0.0;
};

ObservationTable loadCsv(const std::string& path, const ColumnMap& schema);

// Writes every column needed to reload the table bit-for-bit with
// ColumnMap{"y","c","d","z","x","cluster","decider"}.
void saveCsv(const ObservationTable& table, const std::string& path);

struct LeaveOneOutResult {
  ObservationTable table;
  std::size_t droppedRows = 0;  // rows outside the common per-arm instrument range
  double zLow = 0.0;
  double zHigh = 0.0;
};

// z_i = mean treatment of the other cases of the same decider. With
// clipToCommonSupport, rows whose z falls outside the intersection of the
// treated and untreated [min z, max z] ranges are dropped.
LeaveOneOutResult buildLeaveOneOutInstrument(const ObservationTable& table,
                                             bool clipToCommonSupport = true);

// Drops deciders with fewer than minCases rows, then x levels with fewer than
// minDecidersPerLevel deciders, repeating until nothing changes.
ObservationTable applyCaseloadFilter(const ObservationTable& table, std::size_t minCases,
                                     std::size_t minDecidersPerLevel);

}  // namespace censmte
