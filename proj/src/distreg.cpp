#include "censmte/distreg.hpp"

#include <algorithm>
#include <cmath>

#include "censmte/error.hpp"
#include "censmte/linalg.hpp"
#include "censmte/parallel.hpp"

namespace censmte {

ThresholdGrid::ThresholdGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::kInvalidArgument, "threshold grid is empty");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!(values_[k] >= 0.0) || !std::isfinite(values_[k])) {
      throw Error(ErrorCode::kInvalidArgument, "thresholds must be finite and nonnegative",
                  {{"k", k}, {"value", values_[k]}});
    }
    if (k > 0 && !(values_[k] > values_[k - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "thresholds must be strictly increasing",
                  {{"k", k}, {"value", values_[k]}});
    }
  }
}

ThresholdGrid defaultThresholdGrid(const ObservationTable& table, std::size_t points) {
  if (table.empty()) throw Error(ErrorCode::kInvalidArgument, "empty table");
  if (points < 1) throw Error(ErrorCode::kInvalidArgument, "grid needs at least one point");
  std::vector<double> y;
  y.reserve(table.size());
  for (const auto& o : table.rows()) y.push_back(o.y);
  std::sort(y.begin(), y.end());
  std::vector<double> out;
  for (std::size_t j = 0; j < points; ++j) {
    const double prob = points == 1 ? 0.5 : 0.01 + 0.98 * static_cast<double>(j) / (points - 1);
    const double h = (static_cast<double>(y.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, y.size() - 1);
    const double q = y[lo] + (h - static_cast<double>(lo)) * (y[hi] - y[lo]);
    if (out.empty() || q > out.back()) out.push_back(q);
  }
  return ThresholdGrid(std::move(out));
}

namespace {

constexpr double kResolvableGain = 1e-12;

// Weighted log-likelihood at eta; also writes the fitted probabilities.
// One exp and one log1p per row.
double evaluate(const Eigen::VectorXd& eta, const Eigen::VectorXd& b, const Eigen::VectorXd& w,
                Eigen::VectorXd& prob) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta(i);
    const double t = std::exp(-std::abs(e));
    const double log1pexp = std::max(e, 0.0) + std::log1p(t);
    prob(i) = e >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
    ll += w(i) * (b(i) * e - log1pexp);
  }
  return ll;
}

}  // namespace

LogitResult fitLogit(const Eigen::MatrixXd& X, const Eigen::VectorXd& outcome,
                     const Eigen::VectorXd& weights, const LogitOptions& options) {
  const Eigen::Index p = X.cols();
  const double wsum = weights.sum();
  LogitResult r;
  r.beta = Eigen::VectorXd::Zero(p);
  const double mean = weights.dot(outcome) / wsum;
  r.beta(0) = std::log(mean / (1.0 - mean));

  Eigen::VectorXd eta = X * r.beta;
  Eigen::VectorXd prob(eta.size()), trialProb(eta.size());
  r.logLik = evaluate(eta, outcome, weights, prob) / wsum;
  for (r.iterations = 0;; ++r.iterations) {
    const Eigen::VectorXd resid = weights.cwiseProduct(outcome - prob);
    const Eigen::VectorXd score = X.transpose() * resid / wsum;
    r.maxAbsScore = score.cwiseAbs().maxCoeff();
    if (r.maxAbsScore <= options.scoreTolerance) {
      r.converged = true;
      break;
    }
    if (r.iterations >= options.maxIterations) break;
    const Eigen::VectorXd curv = weights.cwiseProduct(prob.cwiseProduct((1.0 - prob.array()).matrix()));
    const Eigen::MatrixXd H = X.transpose() * curv.asDiagonal() * X / wsum;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd step = ldlt.solve(score);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) break;

    // Close to the optimum the predicted gain g'H^{-1}g falls below what the
    // summed log-likelihood can resolve; take the plain Newton step there.
    const double predicted = score.dot(step);
    if (predicted < kResolvableGain) {
      r.beta += step;
      eta = X * r.beta;
      r.logLik = evaluate(eta, outcome, weights, prob) / wsum;
      if (options.keepTrace) r.trace.push_back(r.logLik);
      continue;
    }
    bool accepted = false;
    for (int h = 0; h <= options.maxHalvings; ++h) {
      const Eigen::VectorXd trial = r.beta + step;
      const Eigen::VectorXd trialEta = X * trial;
      const double ll = evaluate(trialEta, outcome, weights, trialProb) / wsum;
      if (std::isfinite(ll) && ll >= r.logLik) {
        r.beta = trial;
        eta = trialEta;
        prob.swap(trialProb);
        r.logLik = ll;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    if (options.keepTrace) r.trace.push_back(r.logLik);
  }
  return r;
}

const char* cellStatusName(CellStatus status) {
  switch (status) {
    case CellStatus::kConverged: return "converged";
    case CellStatus::kAllSameOutcome: return "AllSameOutcome";
    case CellStatus::kNonconvergence: return "Nonconvergence";
  }
  return "unknown";
}

double DistRegFit::index(std::size_t k, int d, double v, double c, int x) const {
  const auto& beta = cell(k, d).beta;
  std::size_t col = 0;
  double eta = beta[col++];
  if (x > 0) eta += beta[static_cast<std::size_t>(x)];
  col += numLevels - 1;
  if (includeC) eta += beta[col++] * c;
  double pow = 1.0;
  for (int j = 0; j < propensityDegree; ++j) {
    pow *= v;
    eta += beta[col++] * pow;
  }
  return eta;
}

double DistRegFit::cdf(std::size_t k, int d, double v, double c, int x) const {
  const auto& cl = cell(k, d);
  if (!cl.usable()) {
    throw Error(ErrorCode::kUnusableCell, "distribution regression cell is unusable",
                {{"k", k}, {"d", d}, {"status", cellStatusName(cl.status)}});
  }
  return logistic(index(k, d, v, c, x));
}

std::size_t DistRegFit::unusableCells() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const DistRegCell& c) { return !c.usable(); }));
}

nlohmann::json DistRegFit::toJson() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json beta = nlohmann::json::object();
    for (std::size_t j = 0; j < columnNames.size(); ++j) beta[columnNames[j]] = c.beta[j];
    out.push_back({{"y", c.threshold},
                   {"d", c.arm},
                   {"beta", beta},
                   {"converged", c.usable()},
                   {"status", cellStatusName(c.status)},
                   {"iterations", c.iterations}});
  }
  return out;
}

DistRegFit fitDistReg(const ObservationTable& table, std::span<const double> propensity,
                      const ThresholdGrid& grid, const DistRegOptions& options,
                      std::span<const double> weights) {
  const std::size_t n = table.size();
  if (propensity.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "propensity length does not match row count");
  }
  if (grid.size() == 0) throw Error(ErrorCode::kInvalidArgument, "threshold grid is empty");
  if (options.propensityDegree < 1) {
    throw Error(ErrorCode::kInvalidArgument, "propensity degree must be >= 1");
  }
  DistRegFit fit;
  fit.grid = grid;
  fit.numLevels = table.numLevels();
  fit.includeC = options.includeC;
  fit.propensityDegree = options.propensityDegree;
  fit.columnNames.push_back("const");
  for (std::size_t l = 1; l < fit.numLevels; ++l) fit.columnNames.push_back("x:" + table.xLevels()[l].label);
  if (fit.includeC) fit.columnNames.push_back("c");
  for (int j = 1; j <= fit.propensityDegree; ++j) {
    fit.columnNames.push_back(j == 1 ? std::string("p") : "p^" + std::to_string(j));
  }
  const auto p = static_cast<Eigen::Index>(fit.columnNames.size());
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), p);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto& o = table[i];
    Eigen::Index col = 0;
    X(r, col++) = 1.0;
    if (o.x > 0) X(r, o.x) = 1.0;
    col += static_cast<Eigen::Index>(fit.numLevels) - 1;
    if (fit.includeC) X(r, col++) = o.c;
    double pow = 1.0;
    for (int j = 0; j < fit.propensityDegree; ++j) {
      pow *= propensity[i];
      X(r, col++) = pow;
    }
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  if (!weights.empty()) {
    if (weights.size() != n) throw Error(ErrorCode::kInvalidArgument, "weight length mismatch");
    for (std::size_t i = 0; i < n; ++i) w(static_cast<Eigen::Index>(i)) = weights[i];
  }
  const std::vector<int> kept = selectIndependentColumns(X);
  {
    std::vector<bool> isKept(fit.columnNames.size(), false);
    for (int j : kept) isKept[j] = true;
    for (std::size_t j = 0; j < isKept.size(); ++j) {
      if (!isKept[j]) fit.droppedColumns.push_back(fit.columnNames[j]);
    }
  }
  if (kept.empty() || kept.front() != 0) {
    throw Error(ErrorCode::kRankDeficient, "distribution regression design lost its intercept");
  }
  const Eigen::MatrixXd Xk = takeColumns(X, kept);

  fit.cells.resize(grid.size() * 2);
  parallelFor(fit.cells.size(), options.threads, [&](std::size_t idx) {
    const std::size_t k = idx / 2;
    const int d = static_cast<int>(idx % 2);
    DistRegCell& cell = fit.cells[idx];
    cell.threshold = grid[k];
    cell.arm = d;
    cell.beta.assign(fit.columnNames.size(), 0.0);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    double pos = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool event = table[i].y <= grid[k] && table[i].d == d;
      b(static_cast<Eigen::Index>(i)) = event ? 1.0 : 0.0;
      const double wi = w(static_cast<Eigen::Index>(i));
      if (wi > 0.0) {
        tot += wi;
        if (event) pos += wi;
      }
    }
    if (pos <= 0.0 || pos >= tot) {
      cell.status = CellStatus::kAllSameOutcome;
      return;
    }
    LogitResult r = fitLogit(Xk, b, w, options.logit);
    cell.iterations = r.iterations;
    cell.maxAbsScore = r.maxAbsScore;
    cell.trace = std::move(r.trace);
    cell.status = r.converged && r.beta.allFinite() ? CellStatus::kConverged
                                                    : CellStatus::kNonconvergence;
    for (std::size_t j = 0; j < kept.size(); ++j) cell.beta[kept[j]] = r.beta(static_cast<Eigen::Index>(j));
  });
  return fit;
}

double evalGamma(const DistRegFit& fit, std::size_t k, int d, double v, double c, int x) {
  const double g = fit.cdf(k, d, v, c, x);
  const auto& beta = fit.cell(k, d).beta;
  std::size_t col = 1 + (fit.numLevels - 1) + (fit.includeC ? 1 : 0);
  double slope = 0.0, pow = 1.0;
  for (int j = 1; j <= fit.propensityDegree; ++j) {
    slope += j * beta[col++] * pow;
    pow *= v;
  }
  return slope * g * (1.0 - g);
}

GammaEvaluator::GammaEvaluator(const DistRegFit& fit, std::size_t k, int d, double v) {
  const auto& cl = fit.cell(k, d);
  if (!cl.usable()) {
    throw Error(ErrorCode::kUnusableCell, "distribution regression cell is unusable",
                {{"k", k}, {"d", d}, {"status", cellStatusName(cl.status)}});
  }
  const auto& beta = cl.beta;
  std::size_t col = 0;
  base_ = beta[col++];
  betaX_.assign(fit.numLevels, 0.0);
  for (std::size_t l = 1; l < fit.numLevels; ++l) betaX_[l] = beta[col++];
  if (fit.includeC) betaC_ = beta[col++];
  double pow = 1.0;
  for (int j = 1; j <= fit.propensityDegree; ++j) {
    const double b = beta[col++];
    slope_ += j * b * pow;
    pow *= v;
    base_ += b * pow;
  }
}

}  // namespace censmte
