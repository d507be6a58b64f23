#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "censmte/error.hpp"
#include "censmte/mte.hpp"
#include "support.hpp"

using namespace censmte;
using testsupport::makeTable;

namespace {

// Distribution regression with hand-set coefficients (const, x:1, c, p).
DistRegFit handFit(const std::vector<double>& grid) {
  DistRegFit fit;
  fit.grid = ThresholdGrid(grid);
  fit.numLevels = 2;
  fit.includeC = true;
  fit.propensityDegree = 1;
  fit.columnNames = {"const", "x:b", "c", "p"};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (int d = 0; d < 2; ++d) {
      DistRegCell cell;
      cell.threshold = grid[k];
      cell.arm = d;
      cell.beta = {-1.0 + 0.4 * k - 0.3 * d, 0.25, -0.05, d ? -1.5 : 2.0};
      fit.cells.push_back(cell);
    }
  }
  return fit;
}

double handGamma(const DistRegFit& fit, std::size_t k, int d, double v, double c, int x) {
  const auto& b = fit.cell(k, d).beta;
  const double idx = b[0] + (x == 1 ? b[1] : 0.0) + b[2] * c + b[3] * v;
  const double g = 1.0 / (1.0 + std::exp(-idx));
  return b[3] * g * (1.0 - g);
}

ObservationTable smallTable() {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Observation> rows;
  for (int i = 0; i < 80; ++i) {
    Observation o;
    o.c = 1.0 + 5.0 * u(gen);
    o.y = o.c * u(gen);
    o.d = i % 3 == 0 ? 1 : 0;
    o.x = i % 2;
    o.z = u(gen);
    rows.push_back(o);
  }
  return makeTable(rows, 2, 1);
}

EvalDesign designFor(std::vector<double> grid, std::vector<double> v) {
  EvalDesign d;
  d.y = ThresholdGrid(std::move(grid));
  d.v = std::move(v);
  d.tau = {0.1, 0.25, 0.5, 0.75};
  return d;
}

// Exponential CDF surfaces, rate depending on v, arm and level.
Array3 exponentialArm(const EvalDesign& design, int d, std::size_t levels) {
  Array3 a(design.y.size(), design.v.size(), levels);
  for (std::size_t k = 0; k < design.y.size(); ++k)
    for (std::size_t j = 0; j < design.v.size(); ++j)
      for (std::size_t x = 0; x < levels; ++x) {
        const double rate = (d ? 0.5 + 2.0 * design.v[j] : 1.0 + design.v[j]) * (1.0 + 0.5 * x);
        a(k, j, x) = 1.0 - std::exp(-rate * design.y[k]);
      }
  return a;
}

}  // namespace

TEST_CASE("rearrangement sorts, clamps and is idempotent") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-0.3, 1.3);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> v(1 + rep % 17);
    for (auto& e : v) e = u(gen);
    auto once = v;
    rearrangeAndClamp(once);
    CHECK(std::is_sorted(once.begin(), once.end()));
    for (double e : once) {
      CHECK(e >= 0.0);
      CHECK(e <= 1.0);
    }
    auto twice = once;
    rearrangeAndClamp(twice);
    CHECK(twice == once);
    auto sortedInput = v;
    std::sort(sortedInput.begin(), sortedInput.end());
    for (auto& e : sortedInput) e = std::clamp(e, 0.0, 1.0);
    CHECK(once == sortedInput);
  }
}

TEST_CASE("monotone input passes through rearrangement untouched") {
  std::vector<double> v{0.0, 0.1, 0.1, 0.5, 1.0};
  auto w = v;
  rearrangeAndClamp(w);
  CHECK(w == v);
}

TEST_CASE("missing entries take the nearest threshold, lower on ties") {
  const double m = kMissing;
  std::vector<double> v{m, 0.2, m, m, m, 0.5, m};
  CHECK(imputeNearest(v) == 5);
  CHECK(v == std::vector<double>{0.2, 0.2, 0.2, 0.2, 0.5, 0.5, 0.5});
  std::vector<double> all{m, m};
  CHECK(imputeNearest(all) == 0);
  CHECK(isMissing(all[0]));
}

TEST_CASE("generalized inverse of a grid CDF") {
  ThresholdGrid g({1.0, 2.0, 3.0});
  std::vector<double> cdf{0.1, 0.4, 0.7};
  CHECK(quantileFromCdf(cdf, g, 0.4, 0.7).value() == 2.0);
  CHECK(quantileFromCdf(cdf, g, 0.41, 0.7).value() == 3.0);
  CHECK(quantileFromCdf(cdf, g, 0.05, 0.7).value() == 1.0);
  CHECK_FALSE(quantileFromCdf(cdf, g, 0.7, 0.7).has_value());
  CHECK_FALSE(quantileFromCdf(cdf, g, 0.2, kMissing).has_value());
}

TEST_CASE("integration path stops at the censoring bound") {
  auto path = integrationPath(ThresholdGrid({1.0, 2.0, 3.0, 12.0}), 10.0);
  CHECK(path.nodes == std::vector<double>{0.0, 1.0, 2.0, 3.0, 10.0});
  CHECK(path.source.front() == std::numeric_limits<std::size_t>::max());
  CHECK(path.source.back() == 2);
  std::vector<double> fiber{0.5, 0.5, 0.5, 0.9};
  // 0 -> 0.5 over [0, 1] then flat 0.5 to 10
  CHECK(integrateFiber(path, fiber, 0.0) == doctest::Approx(0.25 + 0.5 * 9.0));
}

TEST_CASE("raw DMTR is the signed mean derivative over uncensored rows") {
  auto t = smallTable();
  std::vector<double> grid{0.5, 1.5, 3.0, 5.5};
  auto fit = handFit(grid);
  auto design = designFor(grid, {0.2, 0.5, 0.8});
  auto raw = estimateDmtr(fit, t, design);
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (std::size_t j = 0; j < design.v.size(); ++j)
      for (int x = 0; x < 2; ++x)
        for (int d = 0; d < 2; ++d) {
          double sum = 0.0;
          int count = 0;
          for (const auto& o : t.rows()) {
            if (o.d == d && o.x == x && o.c > grid[k]) {
              sum += handGamma(fit, k, d, design.v[j], o.c, x);
              ++count;
            }
          }
          if (count == 0) {
            CHECK(isMissing(raw.arm[d](k, j, x)));
          } else {
            CHECK(raw.arm[d](k, j, x) == doctest::Approx((2 * d - 1) * sum / count).epsilon(1e-12));
          }
        }
}

TEST_CASE("weighted DMTR reproduces replicated rows") {
  auto t = smallTable();
  std::vector<double> grid{0.5, 1.5, 3.0};
  auto fit = handFit(grid);
  auto design = designFor(grid, {0.3, 0.6});
  std::vector<double> w(t.size());
  std::vector<Observation> rep;
  for (std::size_t i = 0; i < t.size(); ++i) {
    w[i] = 1 + i % 3;
    for (int r = 0; r < static_cast<int>(w[i]); ++r) rep.push_back(t[i]);
  }
  auto a = estimateDmtr(fit, t, design, {}, w);
  auto b = estimateDmtr(fit, makeTable(rep, 2, 1), design);
  for (int d = 0; d < 2; ++d)
    for (std::size_t i = 0; i < a.arm[d].data().size(); ++i)
      CHECK(a.arm[d].data()[i] == doctest::Approx(b.arm[d].data()[i]).epsilon(1e-12));
}

TEST_CASE("naive DMTR averages every row of the arm") {
  auto t = smallTable();
  std::vector<double> grid{5.9};
  auto fit = handFit(grid);
  auto design = designFor(grid, {0.5});
  DmtrOptions naive;
  naive.naive = true;
  auto raw = estimateDmtr(fit, t, design, naive);
  double sum = 0.0;
  int count = 0;
  for (const auto& o : t.rows())
    if (o.d == 1 && o.x == 0) {
      sum += handGamma(fit, 0, 1, 0.5, o.c, 0);
      ++count;
    }
  CHECK(raw.arm[1](0, 0, 0) == doctest::Approx(sum / count).epsilon(1e-12));
}

TEST_CASE("conditional DMTR refuses thresholds beyond the horizon") {
  std::vector<double> grid{0.5, 1.5, 3.0};
  auto fit = handFit(grid);
  auto design = designFor(grid, {0.4});
  auto all = estimateConditionalDmtr(fit, design, 2.0);
  CHECK(all.k == std::vector<std::size_t>{0, 1});
  CHECK(all.arm[1](1, 0, 1) == doctest::Approx(handGamma(fit, 1, 1, 0.4, 2.0, 1)).epsilon(1e-12));
  try {
    estimateConditionalDmtr(fit, design, 2.0, std::vector<std::size_t>{2});
    FAIL("expected InvalidHorizon");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidHorizon);
  }
}

TEST_CASE("assembled functionals satisfy their defining identities") {
  std::vector<double> grid;
  for (int k = 1; k <= 40; ++k) grid.push_back(0.1 * k);
  auto design = designFor(grid, {0.25, 0.5, 0.75});
  const double gammaC = 3.05;
  auto d0 = exponentialArm(design, 0, 2), d1 = exponentialArm(design, 1, 2);
  auto s = assembleFromDmtr(d0, d1, design, gammaC, {0.3, 0.7}, {"a", "b"});
  const auto last = s.lastIdentifiedThreshold();
  REQUIRE(last.has_value());
  CHECK(grid[*last] == doctest::Approx(3.0));

  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t x = 0; x < 2; ++x) {
      for (std::size_t k = 0; k < grid.size(); ++k) CHECK(s.dmte(k, j, x) == d1(k, j, x) - d0(k, j, x));
      // tau-bar at the last identified threshold
      CHECK(s.tauBar(j, x, 0) == std::min(d0(*last, j, x), d1(*last, j, x)));
      // quantiles: smallest grid point reaching tau
      for (std::size_t t = 0; t < design.tau.size(); ++t) {
        const double tau = design.tau[t];
        for (int d = 0; d < 2; ++d) {
          const Array3& a = d ? d1 : d0;
          double expect = std::numeric_limits<double>::quiet_NaN();
          if (tau < s.tauBar(j, x, 0)) {
            for (std::size_t k = 0; k < grid.size(); ++k)
              if (a(k, j, x) >= tau) {
                expect = grid[k];
                break;
              }
          }
          if (std::isnan(expect)) {
            CHECK(isMissing(s.qmtr[d](t, j, x)));
          } else {
            CHECK(s.qmtr[d](t, j, x) == expect);
          }
        }
        if (!isMissing(s.qmte(t, j, x))) CHECK(s.qmte(t, j, x) == s.qmtr[1](t, j, x) - s.qmtr[0](t, j, x));
      }
      // RMTE two ways: minus the DMTE integral and the restricted-mean difference
      auto rm = restrictedMeanDecomposition(s, j, x);
      CHECK(std::abs(s.rmte(j, x, 0) - (rm.ramtr1 - rm.ramtr0)) <= 1e-10);
      std::vector<double> nodes{0.0}, diff{0.0};
      for (std::size_t k = 0; k <= *last; ++k) {
        nodes.push_back(grid[k]);
        diff.push_back(s.dmte(k, j, x));
      }
      nodes.push_back(gammaC);
      diff.push_back(diff.back());
      double integral = 0.0;
      for (std::size_t i = 1; i < nodes.size(); ++i) integral += 0.5 * (nodes[i] - nodes[i - 1]) * (diff[i] + diff[i - 1]);
      CHECK(std::abs(s.rmte(j, x, 0) + integral) <= 1e-10);
    }
    // aggregation is the share-weighted sum
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(std::abs(s.dmteAvg(k, j, 0) - (0.3 * s.dmte(k, j, 0) + 0.7 * s.dmte(k, j, 1))) <= 1e-12);
    }
    CHECK(std::abs(s.rmteAvg(j, 0, 0) - (0.3 * s.rmte(j, 0, 0) + 0.7 * s.rmte(j, 1, 0))) <= 1e-12);
  }
}

TEST_CASE("surfaces from estimated DMTR are monotone and bounded") {
  auto t = smallTable();
  std::vector<double> grid{0.5, 1.0, 1.5, 2.0, 3.0, 4.0};
  auto fit = handFit(grid);
  auto design = designFor(grid, {0.2, 0.5, 0.8});
  auto s = assembleSurfaces(fit, t, design);
  for (int d = 0; d < 2; ++d)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t x = 0; x < 2; ++x) {
        auto f = s.dmtr[d].fiber(j, x);
        CHECK(std::is_sorted(f.begin(), f.end()));
        CHECK(f.front() >= 0.0);
        CHECK(f.back() <= 1.0);
      }
  auto shares = levelShares(t);
  CHECK(shares[0] + shares[1] == doctest::Approx(1.0));
  CHECK(s.wHat == shares);
}
