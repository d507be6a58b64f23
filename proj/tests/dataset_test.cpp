#include <cmath>
#include <random>

#include "doctest.h"
#include "censmte/dataset.hpp"
#include "censmte/error.hpp"
#include "censmte/oracle.hpp"
#include "support.hpp"

using namespace censmte;
using testsupport::makeTable;
using testsupport::scratchDir;
using testsupport::writeFile;

namespace {

ErrorCode codeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

}  // namespace

TEST_CASE("csv loader reads the four-row example and its censoring bound") {
  auto dir = scratchDir("csv4");
  auto path = writeFile(dir / "t.csv", "y,c,d,z\n3,5,1,0.2\n5,5,0,0.4\n1,4,1,0.6\n2,3,0,0.8\n");
  auto t = loadCsv(path, ColumnMap{});
  CHECK(t.size() == 4);
  CHECK(t.gammaCHat() == 5.0);
  CHECK(t.treatedCount() == 2);
  CHECK(t.numLevels() == 1);
  CHECK(t[2].z == 0.6);
}

TEST_CASE("csv loader rejects malformed input with typed errors") {
  auto dir = scratchDir("csvbad");
  SUBCASE("y above c") {
    auto p = writeFile(dir / "a.csv", "y,c,d,z\n6,5,1,0.2\n1,5,0,0.3\n");
    CHECK(codeOf([&] { loadCsv(p, {}); }) == ErrorCode::kInvariantViolation);
  }
  SUBCASE("treatment outside {0,1}") {
    auto p = writeFile(dir / "b.csv", "y,c,d,z\n1,5,2,0.2\n");
    CHECK(codeOf([&] { loadCsv(p, {}); }) == ErrorCode::kInvariantViolation);
  }
  SUBCASE("missing column") {
    auto p = writeFile(dir / "c.csv", "y,c,d\n1,5,1\n");
    CHECK(codeOf([&] { loadCsv(p, {}); }) == ErrorCode::kMissingColumn);
  }
  SUBCASE("unparsable number carries row and column") {
    auto p = writeFile(dir / "d.csv", "y,c,d,z\n1,5,1,0.2\n1,abc,0,0.2\n");
    try {
      loadCsv(p, {});
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
      CHECK(e.detail()["row"] == 2);
      CHECK(e.detail()["column"] == "c");
    }
  }
  SUBCASE("unreadable path") {
    CHECK(codeOf([&] { loadCsv((dir / "none.csv").string(), {}); }) == ErrorCode::kIo);
  }
}

TEST_CASE("save then load reproduces every field bit for bit") {
  DgpSpec spec = referenceDgpSpec();
  spec.levels = {{"a", 0.5, 0.0, 1.0}, {"b", 0.5, 0.05, 1.3}};
  spec.clusters = 17;
  spec.scale = 365.0;
  auto sim = simulate(spec, 3000, 11);
  auto dir = scratchDir("roundtrip");
  saveCsv(sim.table, (dir / "t.csv").string());
  ColumnMap map;
  map.x = "x";
  map.cluster = "cluster";
  map.decider = "decider";
  auto back = loadCsv((dir / "t.csv").string(), map);
  REQUIRE(back.size() == sim.table.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = sim.table[i];
    const auto& b = back[i];
    CHECK(a.y == b.y);
    CHECK(a.c == b.c);
    CHECK(a.d == b.d);
    CHECK(a.z == b.z);
    CHECK(sim.table.xLevels()[a.x].label == back.xLevels()[b.x].label);
    CHECK(sim.table.clusterLabels()[a.cluster] == back.clusterLabels()[b.cluster]);
  }
  CHECK(back.gammaCHat() == sim.table.gammaCHat());
}

TEST_CASE("leave-one-out instrument on a hand example") {
  // decider 0 cases d = 1, 0, 1; decider 1 cases d = 0, 1
  auto t = makeTable({{1, 5, 1, 0, 0, 0, 0},
                      {1, 5, 0, 0, 0, 0, 0},
                      {1, 5, 1, 0, 0, 0, 0},
                      {1, 5, 0, 0, 0, 0, 1},
                      {1, 5, 1, 0, 0, 0, 1}},
                     1, 1, 2);
  auto r = buildLeaveOneOutInstrument(t, false);
  CHECK(r.table[0].z == 0.5);
  CHECK(r.table[1].z == 1.0);
  CHECK(r.table[2].z == 0.5);
  CHECK(r.table[3].z == 1.0);
  CHECK(r.table[4].z == 0.0);
  // common support: treated z in [0, 0.5], untreated in [1, 1]
  CHECK(codeOf([&] { buildLeaveOneOutInstrument(t, true); }) == ErrorCode::kEmptyResult);
}

TEST_CASE("leave-one-out instrument rejects singleton deciders") {
  auto t = makeTable({{1, 5, 1, 0, 0, 0, 0}, {1, 5, 0, 0, 0, 0, 0}, {1, 5, 0, 0, 0, 0, 1}}, 1, 1, 2);
  CHECK(codeOf([&] { buildLeaveOneOutInstrument(t); }) == ErrorCode::kSingletonDecider);
}

TEST_CASE("flipping one case moves the instrument of its co-cases only") {
  std::mt19937_64 gen(5);
  std::bernoulli_distribution coin(0.4);
  std::vector<Observation> rows;
  for (int i = 0; i < 60; ++i) rows.push_back({1, 5, coin(gen) ? 1 : 0, 0, 0, 0, i % 4});
  auto base = buildLeaveOneOutInstrument(makeTable(rows, 1, 1, 4), false).table;
  auto flipped = rows;
  flipped[9].d = 1 - flipped[9].d;
  auto other = buildLeaveOneOutInstrument(makeTable(flipped, 1, 1, 4), false).table;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 9 || rows[i].decider != rows[9].decider) {
      CHECK(other[i].z == base[i].z);
    } else {
      CHECK(std::abs(other[i].z - base[i].z) == doctest::Approx(1.0 / 14.0));
    }
  }
}

TEST_CASE("leave-one-out leniency tracks each decider's treatment rate") {
  // 50 deciders x 100 cases, decider j treats with probability q_j.
  std::mt19937_64 gen(2024);
  std::vector<Observation> rows;
  std::vector<double> q(50);
  for (int j = 0; j < 50; ++j) {
    q[j] = 0.1 + 0.8 * j / 49.0;
    std::bernoulli_distribution treat(q[j]);
    for (int i = 0; i < 100; ++i) rows.push_back({1, 5, treat(gen) ? 1 : 0, 0, 0, 0, j});
  }
  auto t = buildLeaveOneOutInstrument(makeTable(rows, 1, 1, 50), false).table;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double sd = std::sqrt(q[t[i].decider] * (1 - q[t[i].decider]) / 99.0);
    CHECK(std::abs(t[i].z - q[t[i].decider]) <= 5.0 * sd + 1e-12);
  }
}

TEST_CASE("caseload filter drops thin deciders then thin levels") {
  std::vector<Observation> rows;
  // level 0: deciders 0 (20 cases) and 1 (19 cases); level 1: decider 2 only
  for (int i = 0; i < 20; ++i) rows.push_back({1, 5, i % 2, 0, 0, 0, 0});
  for (int i = 0; i < 19; ++i) rows.push_back({1, 5, i % 2, 0, 0, 0, 1});
  for (int i = 0; i < 30; ++i) rows.push_back({1, 5, i % 2, 0, 1, 0, 2});
  auto t = makeTable(rows, 2, 1, 3);

  auto byCases = applyCaseloadFilter(t, 20, 1);
  CHECK(byCases.size() == 50);

  // after the case filter each level keeps a single decider
  CHECK(codeOf([&] { applyCaseloadFilter(t, 20, 2); }) == ErrorCode::kEmptyResult);
}

TEST_CASE("caseload filter is idempotent and monotone in its thresholds") {
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<int> pick(0, 39);
  std::vector<Observation> rows;
  for (int i = 0; i < 800; ++i) {
    int j = pick(gen) % (1 + pick(gen));
    rows.push_back({1, 5, i % 2, 0, j % 3, 0, j});
  }
  auto t = makeTable(rows, 3, 1, 40);
  auto once = applyCaseloadFilter(t, 15, 2);
  auto twice = applyCaseloadFilter(once, 15, 2);
  CHECK(once.size() == twice.size());
  auto stricter = applyCaseloadFilter(t, 25, 2);
  CHECK(stricter.size() <= once.size());
}

TEST_CASE("subset compacts label lists and keeps gamma-C consistent") {
  auto t = makeTable({{1, 5, 1, 0, 0, 0}, {1, 9, 0, 0, 1, 1}, {1, 4, 0, 0, 0, 2}}, 2, 3);
  auto s = t.subset({true, false, true});
  CHECK(s.size() == 2);
  CHECK(s.numLevels() == 1);
  CHECK(s.numClusters() == 2);
  CHECK(s.gammaCHat() == 5.0);
}
