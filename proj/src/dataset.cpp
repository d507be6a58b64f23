#include "censmte/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "censmte/error.hpp"

namespace censmte {

namespace {

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  out.push_back(std::move(field));
  for (auto& f : out) {
    auto first = f.find_first_not_of(" \t\r");
    auto last = f.find_last_not_of(" \t\r");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return out;
}

double parseDouble(const std::string& text, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw Error(ErrorCode::kParse,
                "cannot parse '" + text + "' as a number in column " + column + " at row " +
                    std::to_string(row),
                {{"row", row}, {"column", column}, {"value", text}});
  }
  return value;
}

// Shortest text that parses back to the same double.
std::string formatDouble(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

class LabelIndex {
 public:
  int intern(const std::string& label) {
    auto [it, inserted] = index_.emplace(label, static_cast<int>(labels_.size()));
    if (inserted) labels_.push_back(label);
    return it->second;
  }
  std::vector<std::string> release() { return std::move(labels_); }

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> labels_;
};

void checkRow(const Observation& o, std::size_t row) {
  auto violation = [&](const std::string& what) {
    throw Error(ErrorCode::kInvariantViolation, what + " at row " + std::to_string(row),
                {{"row", row}, {"y", o.y}, {"c", o.c}, {"d", o.d}});
  };
  if (!(o.y >= 0.0)) violation("negative duration y");
  if (!(o.c >= 0.0)) violation("negative censoring horizon c");
  if (o.y > o.c) violation("y > c");
  if (o.d != 0 && o.d != 1) violation("treatment d not in {0,1}");
}

}  // namespace

ObservationTable::ObservationTable(std::vector<Observation> rows,
                                   std::vector<std::string> xLabels,
                                   std::vector<std::string> clusterLabels,
                                   std::vector<std::string> deciderLabels)
    : rows_(std::move(rows)),
      clusterLabels_(std::move(clusterLabels)),
      deciderLabels_(std::move(deciderLabels)) {
  xLevels_.resize(xLabels.size());
  for (std::size_t i = 0; i < xLabels.size(); ++i) xLevels_[i].label = std::move(xLabels[i]);
  gammaCHat_ = 0.0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& o = rows_[i];
    checkRow(o, i);
    if (o.x < 0 || static_cast<std::size_t>(o.x) >= xLevels_.size() || o.cluster < 0 ||
        static_cast<std::size_t>(o.cluster) >= clusterLabels_.size() ||
        (o.decider >= 0 && static_cast<std::size_t>(o.decider) >= deciderLabels_.size())) {
      throw Error(ErrorCode::kInvariantViolation,
                  "level id outside its declared set at row " + std::to_string(i), {{"row", i}});
    }
    xLevels_[o.x].rows += 1;
    xLevels_[o.x].treated += static_cast<std::size_t>(o.d);
    gammaCHat_ = std::max(gammaCHat_, o.c);
  }
}

std::size_t ObservationTable::treatedCount() const {
  std::size_t n = 0;
  for (const auto& o : rows_) n += static_cast<std::size_t>(o.d);
  return n;
}

void ObservationTable::validateOverlap() const {
  for (const auto& level : xLevels_) {
    if (level.treated == 0 || level.treated == level.rows) {
      throw Error(ErrorCode::kOverlap,
                  "covariate level '" + level.label + "' lacks a treated or untreated row",
                  {{"level", level.label}, {"rows", level.rows}, {"treated", level.treated}});
    }
  }
}

ObservationTable ObservationTable::subset(const std::vector<bool>& keep) const {
  std::vector<int> xMap(xLevels_.size(), -1), cMap(clusterLabels_.size(), -1),
      dMap(deciderLabels_.size(), -1);
  std::vector<std::string> xs, cs, ds;
  std::vector<Observation> out;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!keep[i]) continue;
    Observation o = rows_[i];
    if (xMap[o.x] < 0) {
      xMap[o.x] = static_cast<int>(xs.size());
      xs.push_back(xLevels_[o.x].label);
    }
    if (cMap[o.cluster] < 0) {
      cMap[o.cluster] = static_cast<int>(cs.size());
      cs.push_back(clusterLabels_[o.cluster]);
    }
    o.x = xMap[o.x];
    o.cluster = cMap[o.cluster];
    if (o.decider >= 0) {
      if (dMap[o.decider] < 0) {
        dMap[o.decider] = static_cast<int>(ds.size());
        ds.push_back(deciderLabels_[o.decider]);
      }
      o.decider = dMap[o.decider];
    }
    out.push_back(o);
  }
  return ObservationTable(std::move(out), std::move(xs), std::move(cs), std::move(ds));
}

ObservationTable ObservationTable::withInstrument(const std::vector<double>& z) const {
  if (z.size() != rows_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "instrument length does not match row count");
  }
  ObservationTable out = *this;
  for (std::size_t i = 0; i < z.size(); ++i) out.rows_[i].z = z[i];
  return out;
}

ObservationTable loadCsv(const std::string& path, const ColumnMap& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path, {{"path", path}});
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParse, "missing header row in " + path, {{"row", 0}});
  }
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  const auto header = splitCsvLine(line);
  auto find = [&](const std::string& name, bool required) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) {
        throw Error(ErrorCode::kMissingColumn, "column '" + name + "' not found in " + path,
                    {{"column", name}});
      }
      return -1;
    }
    return static_cast<int>(it - header.begin());
  };
  const int iy = find(schema.y, true);
  const int ic = find(schema.c, true);
  const int id = find(schema.d, true);
  const int iz = find(schema.z, true);
  const int ix = schema.x ? find(*schema.x, true) : -1;
  const int icl = schema.cluster ? find(*schema.cluster, true) : -1;
  const int idc = schema.decider ? find(*schema.decider, true) : -1;

  LabelIndex xs, cs, ds;
  std::vector<Observation> rows;
  std::size_t rowNo = 0;
  while (std::getline(in, line)) {
    ++rowNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = splitCsvLine(line);
    if (f.size() != header.size()) {
      throw Error(ErrorCode::kParse,
                  "row " + std::to_string(rowNo) + " has " + std::to_string(f.size()) +
                      " fields, header has " + std::to_string(header.size()),
                  {{"row", rowNo}});
    }
    Observation o;
    o.y = parseDouble(f[iy], rowNo, schema.y);
    o.c = parseDouble(f[ic], rowNo, schema.c);
    const double d = parseDouble(f[id], rowNo, schema.d);
    if (d != 0.0 && d != 1.0) {
      throw Error(ErrorCode::kInvariantViolation,
                  "treatment d not in {0,1} at row " + std::to_string(rowNo),
                  {{"row", rowNo}, {"column", schema.d}, {"value", f[id]}});
    }
    o.d = static_cast<int>(d);
    o.z = parseDouble(f[iz], rowNo, schema.z);
    const std::string xLabel = ix >= 0 ? f[ix] : std::string("all");
    o.x = xs.intern(xLabel);
    o.cluster = cs.intern(icl >= 0 ? f[icl] : xLabel);
    if (idc >= 0) o.decider = ds.intern(f[idc]);
    checkRow(o, rowNo);
    rows.push_back(o);
  }
  if (rows.empty()) throw Error(ErrorCode::kEmptyResult, "no data rows in " + path);
  return ObservationTable(std::move(rows), xs.release(), cs.release(), ds.release());
}

void saveCsv(const ObservationTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path, {{"path", path}});
  out << "y,c,d,z,x,cluster,decider\n";
  for (const auto& o : table.rows()) {
    out << formatDouble(o.y) << ',' << formatDouble(o.c) << ',' << o.d << ','
        << formatDouble(o.z) << ',' << csvField(table.xLevels()[o.x].label) << ','
        << csvField(table.clusterLabels()[o.cluster]) << ','
        << (o.decider >= 0 ? csvField(table.deciderLabels()[o.decider]) : std::string()) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path, {{"path", path}});
}

LeaveOneOutResult buildLeaveOneOutInstrument(const ObservationTable& table,
                                             bool clipToCommonSupport) {
  if (!table.hasDeciders()) {
    throw Error(ErrorCode::kInvalidArgument, "leave-one-out instrument needs decider ids");
  }
  const std::size_t nd = table.deciderLabels().size();
  std::vector<double> treated(nd, 0.0);
  std::vector<std::size_t> cases(nd, 0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& o = table[i];
    if (o.decider < 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "row " + std::to_string(i) + " has no decider id", {{"row", i}});
    }
    treated[o.decider] += o.d;
    cases[o.decider] += 1;
  }
  for (std::size_t j = 0; j < nd; ++j) {
    if (cases[j] == 1) {
      throw Error(ErrorCode::kSingletonDecider,
                  "decider '" + table.deciderLabels()[j] + "' has a single case",
                  {{"decider", table.deciderLabels()[j]}});
    }
  }
  std::vector<double> z(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& o = table[i];
    z[i] = (treated[o.decider] - o.d) / static_cast<double>(cases[o.decider] - 1);
  }
  LeaveOneOutResult result;
  result.table = table.withInstrument(z);
  double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double hi[2] = {-std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < table.size(); ++i) {
    int d = table[i].d;
    lo[d] = std::min(lo[d], z[i]);
    hi[d] = std::max(hi[d], z[i]);
  }
  result.zLow = std::max(lo[0], lo[1]);
  result.zHigh = std::min(hi[0], hi[1]);
  if (clipToCommonSupport) {
    std::vector<bool> keep(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
      keep[i] = z[i] >= result.zLow && z[i] <= result.zHigh;
      if (!keep[i]) ++result.droppedRows;
    }
    if (result.droppedRows == table.size()) {
      throw Error(ErrorCode::kEmptyResult, "treatment arms share no instrument range");
    }
    if (result.droppedRows > 0) result.table = result.table.subset(keep);
  }
  return result;
}

ObservationTable applyCaseloadFilter(const ObservationTable& table, std::size_t minCases,
                                     std::size_t minDecidersPerLevel) {
  if (!table.hasDeciders()) {
    throw Error(ErrorCode::kInvalidArgument, "caseload filter needs decider ids");
  }
  std::vector<bool> keep(table.size(), true);
  for (;;) {
    bool changed = false;
    std::vector<std::size_t> cases(table.deciderLabels().size(), 0);
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (keep[i] && table[i].decider >= 0) cases[table[i].decider] += 1;
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (keep[i] && (table[i].decider < 0 || cases[table[i].decider] < minCases)) {
        keep[i] = false;
        changed = true;
      }
    }
    std::vector<std::vector<int>> decidersPerLevel(table.numLevels());
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (keep[i]) decidersPerLevel[table[i].x].push_back(table[i].decider);
    }
    std::vector<std::size_t> distinct(table.numLevels());
    for (std::size_t l = 0; l < table.numLevels(); ++l) {
      auto& v = decidersPerLevel[l];
      std::sort(v.begin(), v.end());
      distinct[l] = static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (keep[i] && distinct[table[i].x] < minDecidersPerLevel) {
        keep[i] = false;
        changed = true;
      }
    }
    if (!changed) break;
  }
  if (std::none_of(keep.begin(), keep.end(), [](bool k) { return k; })) {
    throw Error(ErrorCode::kEmptyResult, "caseload filter removed every row",
                {{"minCases", minCases}, {"minDecidersPerLevel", minDecidersPerLevel}});
  }
  return table.subset(keep);
}

}  // namespace censmte
