#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "censmte/dataset.hpp"

namespace censmte {

class ThresholdGrid {
 public:
  ThresholdGrid() = default;
  // Throws InvalidArgument unless values are nonnegative and strictly increasing.
  explicit ThresholdGrid(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }

 private:
  std::vector<double> values_;
};

// `points` empirical quantiles (type 7) of the observed durations at
// probabilities evenly spaced over [0.01, 0.99], with duplicates removed.
ThresholdGrid defaultThresholdGrid(const ObservationTable& table, std::size_t points = 64);

inline double logistic(double u) {
  return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

struct LogitOptions {
  int maxIterations = 100;
  double scoreTolerance = 1e-8;  // on the weight-normalized score
  int maxHalvings = 30;
  bool keepTrace = false;
};

struct LogitResult {
  Eigen::VectorXd beta;
  bool converged = false;
  int iterations = 0;
  double maxAbsScore = 0.0;
  double logLik = 0.0;
  std::vector<double> trace;  // log-likelihood after each accepted step
};

// Weighted logistic MLE by Newton-Raphson with step halving, started at the
// intercept-only solution (column 0 must be the intercept).
LogitResult fitLogit(const Eigen::MatrixXd& X, const Eigen::VectorXd& outcome,
                     const Eigen::VectorXd& weights, const LogitOptions& options = {});

enum class CellStatus { kConverged, kAllSameOutcome, kNonconvergence };

const char* cellStatusName(CellStatus status);

struct DistRegCell {
  double threshold = 0.0;
  int arm = 0;
  CellStatus status = CellStatus::kConverged;
  int iterations = 0;
  double maxAbsScore = 0.0;
  // Full-length coefficient vector in DistRegFit::columnNames order; dropped
  // columns hold 0.
  std::vector<double> beta;
  std::vector<double> trace;

  bool usable() const { return status == CellStatus::kConverged; }
};

struct DistRegOptions {
  bool includeC = true;      // false drops C (naive comparator)
  int propensityDegree = 1;  // powers of P in the index; 1 is the plain DR model
  LogitOptions logit;
  unsigned threads = 1;
};

// Coefficients theta(y_k, d) = (beta0, betaX, betaC, betaP) of
// P[Y <= y_k, D = d | P, C, X] = logistic(beta0 + betaX[x] + betaC c + betaP p).
class DistRegFit {
 public:
  ThresholdGrid grid;
  std::size_t numLevels = 1;
  bool includeC = true;
  int propensityDegree = 1;
  std::vector<std::string> columnNames;
  std::vector<std::string> droppedColumns;
  std::vector<DistRegCell> cells;  // index k * 2 + d

  const DistRegCell& cell(std::size_t k, int d) const { return cells[k * 2 + d]; }

  double index(std::size_t k, int d, double v, double c, int x) const;
  // Gamma-hat(v, c, x; y_k, d); requires a usable cell.
  double cdf(std::size_t k, int d, double v, double c, int x) const;

  std::size_t unusableCells() const;
  nlohmann::json toJson() const;
};

// Fits every (k, d) cell. Weights (bootstrap multipliers) are optional; the
// unweighted fit is weights == 1.
DistRegFit fitDistReg(const ObservationTable& table, std::span<const double> propensity,
                      const ThresholdGrid& grid, const DistRegOptions& options = {},
                      std::span<const double> weights = {});

// Closed-form derivative of the fitted CDF in its propensity argument:
// betaP * Gamma * (1 - Gamma) (with the chain rule for higher P powers).
// Throws UnusableCell when the (k, d) cell did not converge.
double evalGamma(const DistRegFit& fit, std::size_t k, int d, double v, double c, int x);

// Binds one (k, d) cell and a fixed v so the derivative can be swept over
// many (c, x) pairs without re-reading coefficients.
class GammaEvaluator {
 public:
  GammaEvaluator(const DistRegFit& fit, std::size_t k, int d, double v);

  double cdf(double c, int x) const { return logistic(base_ + betaC_ * c + betaX_[x]); }
  double operator()(double c, int x) const {
    const double g = cdf(c, x);
    return slope_ * g * (1.0 - g);
  }

  // Index = base() + offset(c, x); derivative = slope() * Gamma (1 - Gamma).
  double base() const { return base_; }
  double slope() const { return slope_; }
  double offset(double c, int x) const { return betaC_ * c + betaX_[x]; }

 private:
  double base_ = 0.0;   // beta0 + sum_j betaP_j v^j
  double slope_ = 0.0;  // d index / d v
  double betaC_ = 0.0;
  std::vector<double> betaX_;
};

}  // namespace censmte
