#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "censmte/dataset.hpp"
#include "censmte/distreg.hpp"

namespace censmte {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool isMissing(double v) { return std::isnan(v); }

// Dense row-major 3-index array; NaN marks a missing or unidentified entry.
class Array3 {
 public:
  Array3() = default;
  Array3(std::size_t n0, std::size_t n1, std::size_t n2, double fill = kMissing)
      : n0_(n0), n1_(n1), n2_(n2), data_(n0 * n1 * n2, fill) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t l) { return data_[(i * n1_ + j) * n2_ + l]; }
  double operator()(std::size_t i, std::size_t j, std::size_t l) const {
    return data_[(i * n1_ + j) * n2_ + l];
  }
  std::size_t dim0() const { return n0_; }
  std::size_t dim1() const { return n1_; }
  std::size_t dim2() const { return n2_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  // Values along the first index for fixed (j, l).
  std::vector<double> fiber(std::size_t j, std::size_t l) const;
  void setFiber(std::size_t j, std::size_t l, std::span<const double> values);

 private:
  std::size_t n0_ = 0, n1_ = 0, n2_ = 0;
  std::vector<double> data_;
};

struct EvalDesign {
  std::vector<double> v;    // propensity evaluation points
  std::vector<double> tau;  // quantile levels, strictly increasing
  ThresholdGrid y;
};

std::vector<double> defaultTauGrid();

// v: `vPoints` equispaced points on [q05, q95] of the fitted propensity.
EvalDesign makeEvalDesign(std::span<const double> propensity, ThresholdGrid grid,
                          std::size_t vPoints = 41, std::vector<double> tau = defaultTauGrid());

struct EmptyCell {
  int d = 0;
  int x = 0;
  std::size_t k = 0;
  std::string reason;  // "EmptyCell" or the distreg cell status
};

// DMTR before rearrangement, per arm indexed [k][v][x].
struct RawDmtr {
  Array3 arm[2];
  std::vector<EmptyCell> missing;
};

struct DmtrOptions {
  bool naive = false;  // average over every (d, x) row instead of C > y_k
  unsigned threads = 1;
};

// (2d - 1) times the average of gamma-hat_d(y_k, v, C_i, x) over rows with
// D = d, X = x and C > y_k. Empty averages and unusable cells are recorded
// and left missing. Weights, when given, make the averages weighted.
RawDmtr estimateDmtr(const DistRegFit& fit, const ObservationTable& table,
                     const EvalDesign& design, const DmtrOptions& options = {},
                     std::span<const double> weights = {});

// Fills missing entries from the nearest available threshold (lower index on
// ties). Returns the number of filled entries; all-missing input is left alone.
std::size_t imputeNearest(std::vector<double>& values);

// Sorts ascending (rearrangement) then clamps to [0, 1]. Idempotent.
void rearrangeAndClamp(std::vector<double>& values);

// Applies imputeNearest + rearrangeAndClamp to every (v, x) fiber.
// Returns the number of imputed entries.
std::size_t monotonizeAndClamp(Array3& surface);

// Smallest grid threshold whose CDF value reaches tau; nullopt when
// tau >= tauBar (beyond the identified range).
std::optional<double> quantileFromCdf(std::span<const double> cdf, const ThresholdGrid& grid,
                                      double tau, double tauBar);

struct MteSurfaces {
  EvalDesign design;
  double gammaC = 0.0;
  std::vector<std::string> xLabels;
  std::vector<double> wHat;  // sample share of each x level

  Array3 dmtr[2];  // [k][v][x], monotone in k, inside [0, 1]
  Array3 dmte;     // [k][v][x]
  Array3 qmtr[2];  // [tau][v][x]; missing = unidentified
  Array3 qmte;     // [tau][v][x]
  Array3 tauBar;   // [v][x][0]
  Array3 tauBarArm[2];
  Array3 rmte;     // [v][x][0]
  Array3 ramtr[2];

  Array3 dmtrAvg[2];  // [k][v][0]
  Array3 dmteAvg;
  Array3 qmteAvg;     // [tau][v][0]
  Array3 rmteAvg;     // [v][0][0]
  Array3 tauBarAvg;   // [v][0][0]

  std::size_t imputed = 0;
  std::vector<EmptyCell> missing;

  // Index of the largest threshold <= gammaC, or nullopt.
  std::optional<std::size_t> lastIdentifiedThreshold() const;

  std::optional<double> invertToQmtr(double tau, std::size_t vIndex, std::size_t x, int d) const;
};

// Builds every functional from already-monotone DMTR arms ([k][v][x]).
MteSurfaces assembleFromDmtr(const Array3& dmtr0, const Array3& dmtr1, const EvalDesign& design,
                             double gammaC, std::vector<double> wHat,
                             std::vector<std::string> xLabels);

std::vector<double> levelShares(const ObservationTable& table, std::span<const double> weights = {});

// estimateDmtr -> monotonizeAndClamp -> assembleFromDmtr. Weights, when
// given, enter both the DMTR averages and the covariate shares.
MteSurfaces assembleSurfaces(const DistRegFit& fit, const ObservationTable& table,
                             const EvalDesign& design, const DmtrOptions& options = {},
                             std::span<const double> weights = {});

// Restricted means of min(Y*(d), gammaC) at one (v, x): integral of
// 1 - dmtr_d over [0, gammaC], on the same nodes as the RMTE integral.
struct RestrictedMeans {
  double ramtr1 = 0.0;
  double ramtr0 = 0.0;
};
RestrictedMeans restrictedMeanDecomposition(const MteSurfaces& surfaces, std::size_t vIndex,
                                            std::size_t x);

// Integration nodes {0} + {y_k <= gammaC} + {gammaC} and matching values of
// a fiber along k: the y = 0 node gets `atZero`, gammaC carries the last value.
struct IntegrationPath {
  std::vector<double> nodes;
  std::vector<std::size_t> source;  // grid index per node, SIZE_MAX for the y = 0 node
};
IntegrationPath integrationPath(const ThresholdGrid& grid, double gammaC);
double integrateFiber(const IntegrationPath& path, std::span<const double> fiber, double atZero);

struct ConditionalDmtr {
  double c = 0.0;
  std::vector<std::size_t> k;  // thresholds evaluated
  Array3 arm[2];               // [k-position][v][x]
};

// DMTR_d(y_k, v, c, x) = (2d - 1) gamma-hat_d(y_k, v, c, x) at one censoring
// value. By default every threshold below c is evaluated; requesting a
// threshold with y_k >= c throws InvalidHorizon.
ConditionalDmtr estimateConditionalDmtr(const DistRegFit& fit, const EvalDesign& design, double c,
                                        std::optional<std::vector<std::size_t>> thresholds = std::nullopt);

}  // namespace censmte
