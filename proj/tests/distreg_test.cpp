#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "censmte/distreg.hpp"
#include "censmte/error.hpp"
#include "support.hpp"

using namespace censmte;
using testsupport::makeTable;

namespace {

struct LogitData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

LogitData logitData(std::size_t n, const Eigen::Vector3d& beta, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LogitData out{Eigen::MatrixXd(n, 3), Eigen::VectorXd(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.X.row(r) << 1.0, norm(gen), u(gen);
    const double p = 1.0 / (1.0 + std::exp(-out.X.row(r).dot(beta)));
    out.y(r) = u(gen) < p ? 1.0 : 0.0;
  }
  return out;
}

// Textbook iteratively reweighted least squares; no step control.
Eigen::VectorXd irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd p = (-(X * b)).array().exp().matrix();
    p = (1.0 / (1.0 + p.array())).matrix();
    const Eigen::VectorXd s = w.array() * p.array() * (1.0 - p.array());
    const Eigen::MatrixXd H = X.transpose() * s.asDiagonal() * X;
    const Eigen::VectorXd g = X.transpose() * (w.array() * (y - p).array()).matrix();
    b += H.ldlt().solve(g);
  }
  return b;
}

// Censored durations with a propensity-like covariate in [0, 1].
ObservationTable durationTable(std::size_t n, std::uint64_t seed, std::size_t levels) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Observation> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Observation o;
    o.z = u(gen);
    o.d = u(gen) < 0.2 + 0.6 * o.z ? 1 : 0;
    o.x = static_cast<int>(i % levels);
    o.c = 2.0 + 8.0 * u(gen);
    const double rate = (o.d ? 0.8 : 1.2) * (1.0 + 0.3 * o.x) * (0.5 + o.z);
    o.y = std::min(-std::log(u(gen)) / rate, o.c);
    rows.push_back(o);
  }
  return makeTable(std::move(rows), levels, 1);
}

std::vector<double> instrumentAsPropensity(const ObservationTable& t) {
  std::vector<double> p(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) p[i] = 0.2 + 0.6 * t[i].z;
  return p;
}

}  // namespace

TEST_CASE("logit solver agrees with plain IRLS and zeroes the score") {
  auto data = logitData(5000, Eigen::Vector3d(-0.5, 1.2, 0.8), 17);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(5000);
  auto r = fitLogit(data.X, data.y, w);
  REQUIRE(r.converged);
  auto ref = irls(data.X, data.y, w);
  for (int j = 0; j < 3; ++j) CHECK(r.beta(j) == doctest::Approx(ref(j)).epsilon(1e-7));
  CHECK(r.maxAbsScore <= 1e-8);
}

TEST_CASE("logit solver recovers the data-generating coefficients") {
  const Eigen::Vector3d truth(0.3, -0.7, 1.5);
  auto data = logitData(40000, truth, 23);
  auto r = fitLogit(data.X, data.y, Eigen::VectorXd::Ones(40000));
  REQUIRE(r.converged);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(r.beta(j) - truth(j)) < 0.1);
}

TEST_CASE("integer weights match replicated rows") {
  auto data = logitData(400, Eigen::Vector3d(0.1, 0.9, -0.4), 31);
  Eigen::VectorXd w(400);
  for (int i = 0; i < 400; ++i) w(i) = 1 + i % 3;
  Eigen::Index total = static_cast<Eigen::Index>(w.sum());
  Eigen::MatrixXd Xr(total, 3);
  Eigen::VectorXd yr(total);
  Eigen::Index r = 0;
  for (int i = 0; i < 400; ++i) {
    for (int c = 0; c < static_cast<int>(w(i)); ++c, ++r) {
      Xr.row(r) = data.X.row(i);
      yr(r) = data.y(i);
    }
  }
  auto weighted = fitLogit(data.X, data.y, w);
  auto replicated = fitLogit(Xr, yr, Eigen::VectorXd::Ones(total));
  for (int j = 0; j < 3; ++j) CHECK(weighted.beta(j) == doctest::Approx(replicated.beta(j)).epsilon(1e-9));
}

TEST_CASE("log-likelihood trace never decreases") {
  auto data = logitData(3000, Eigen::Vector3d(2.0, 3.0, -2.0), 41);
  LogitOptions opt;
  opt.keepTrace = true;
  auto r = fitLogit(data.X, data.y, Eigen::VectorXd::Ones(3000), opt);
  REQUIRE(r.trace.size() >= 2);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i] >= r.trace[i - 1] - 1e-12 * std::abs(r.trace[i - 1]));
  }
}

TEST_CASE("threshold grid validation") {
  CHECK_THROWS_AS(ThresholdGrid({1.0, 1.0}), Error);
  CHECK_THROWS_AS(ThresholdGrid({-1.0, 1.0}), Error);
  CHECK_NOTHROW(ThresholdGrid({0.0, 0.5, 3.0}));
}

TEST_CASE("default grid holds distinct empirical quantiles of y") {
  auto t = durationTable(2000, 3, 1);
  auto g = defaultThresholdGrid(t, 64);
  CHECK(g.size() <= 64);
  CHECK(g.size() > 50);
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] > g[k - 1]);
}

TEST_CASE("cells with a constant outcome are flagged, not fitted") {
  auto t = durationTable(500, 5, 1);
  double ymax = 0.0;
  for (const auto& o : t.rows()) ymax = std::max(ymax, o.y);
  ThresholdGrid grid({ymax + 1.0});
  auto fit = fitDistReg(t, instrumentAsPropensity(t), grid);
  // every row has y <= threshold, so the d = 1 event equals D and is not constant
  CHECK(fit.cell(0, 1).status == CellStatus::kConverged);
  ThresholdGrid below({1e-9});
  auto none = fitDistReg(t, instrumentAsPropensity(t), below);
  CHECK(none.cell(0, 0).status == CellStatus::kAllSameOutcome);
  CHECK(none.cell(0, 1).status == CellStatus::kAllSameOutcome);
  CHECK(none.unusableCells() == 2);
  CHECK_THROWS_AS(GammaEvaluator(none, 0, 1, 0.5), Error);
}

TEST_CASE("closed-form derivative matches central differences") {
  for (int degree : {1, 2}) {
    auto t = durationTable(3000, 7, 2);
    DistRegOptions opt;
    opt.propensityDegree = degree;
    auto fit = fitDistReg(t, instrumentAsPropensity(t), ThresholdGrid({0.3, 0.8, 1.5}), opt);
    for (std::size_t k = 0; k < 3; ++k) {
      for (int d = 0; d < 2; ++d) {
        REQUIRE(fit.cell(k, d).usable());
        for (double v : {0.25, 0.5, 0.75}) {
          for (int x = 0; x < 2; ++x) {
            const double h = 1e-5;
            const double fd = (fit.cdf(k, d, v + h, 4.0, x) - fit.cdf(k, d, v - h, 4.0, x)) / (2 * h);
            CHECK(std::abs(evalGamma(fit, k, d, v, 4.0, x) - fd) <= 1e-6);
            GammaEvaluator ge(fit, k, d, v);
            CHECK(ge(4.0, x) == doctest::Approx(evalGamma(fit, k, d, v, 4.0, x)).epsilon(1e-12));
          }
        }
      }
    }
  }
}

TEST_CASE("rescaling durations leaves fitted probabilities unchanged") {
  auto t = durationTable(2000, 9, 1);
  std::vector<Observation> scaled = t.rows();
  for (auto& o : scaled) {
    o.y *= 365.0;
    o.c *= 365.0;
  }
  auto ts = makeTable(scaled, 1, 1);
  auto p = instrumentAsPropensity(t);
  auto a = fitDistReg(t, p, ThresholdGrid({0.5, 1.0}));
  auto b = fitDistReg(ts, p, ThresholdGrid({0.5 * 365.0, 1.0 * 365.0}));
  for (std::size_t k = 0; k < 2; ++k) {
    for (int d = 0; d < 2; ++d) {
      CHECK(a.cdf(k, d, 0.4, 5.0, 0) ==
            doctest::Approx(b.cdf(k, d, 0.4, 5.0 * 365.0, 0)).epsilon(1e-8));
    }
  }
}

TEST_CASE("naive design drops the censoring column") {
  auto t = durationTable(800, 11, 1);
  DistRegOptions opt;
  opt.includeC = false;
  auto fit = fitDistReg(t, instrumentAsPropensity(t), ThresholdGrid({0.5}), opt);
  CHECK(fit.columnNames == std::vector<std::string>{"const", "p"});
}

TEST_CASE("fits are identical for any worker count") {
  auto t = durationTable(1500, 13, 2);
  auto p = instrumentAsPropensity(t);
  ThresholdGrid g({0.2, 0.5, 0.9, 1.4});
  DistRegOptions one, four;
  four.threads = 4;
  auto a = fitDistReg(t, p, g, one);
  auto b = fitDistReg(t, p, g, four);
  for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].beta == b.cells[i].beta);
}
