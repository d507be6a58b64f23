#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "censmte/dataset.hpp"

namespace censmte {

// Polynomial series psi^L(z) = (z, z^2, ..., z^L).
struct SeriesBasis {
  int degree = 2;

  explicit SeriesBasis(int L = 2);
  // Writes psi^L(z) into out[0..L).
  void evaluate(double z, std::span<double> out) const;
};

// Maps raw fitted values into [eps, 1 - eps] exactly as
// P + (1 - eps - P) 1{P > 1} + (eps - P) 1{P < 0}; the identity on [0, 1].
double trimPropensity(double raw, double epsilon);

struct PropensityFit {
  SeriesBasis basis{2};
  double epsilon = 0.01;
  bool includeC = true;

  // Coefficients of D on [1, X dummies, C, psi^L(z_std)]; z_std = (z - zMean) / zScale.
  double alpha0 = 0.0;
  std::vector<double> alphaX;  // one per level, reference level 0 fixed at 0
  double alphaC = 0.0;
  std::vector<double> alphaZ;  // standardized scale
  double zMean = 0.0;
  double zScale = 1.0;

  std::vector<std::string> columnNames;    // full design, before dropping
  std::vector<int> keptColumns;            // indices into columnNames
  std::vector<std::string> droppedColumns;

  std::vector<double> fittedRaw;  // P-tilde per row
  std::vector<double> fitted;     // P-hat per row
  std::size_t nTrimmed = 0;

  double predictRaw(double c, int x, double z) const;
  double predict(double c, int x, double z) const {
    return trimPropensity(predictRaw(c, x, z), epsilon);
  }

  // Intercept and polynomial coefficients re-expressed in the raw z scale:
  // result[0] absorbs the constant, result[j] multiplies z^j.
  std::vector<double> rawScaleZPolynomial() const;
};

struct PropensityOptions {
  SeriesBasis basis{2};
  double epsilon = 0.01;
  bool includeC = true;  // false drops C from the design (naive comparator)
};

// Design matrix [1, X dummies, C, psi^L(z_std)] with the column names.
Eigen::MatrixXd propensityDesign(const ObservationTable& table, const PropensityFit& spec);

// Least squares of `response` on the partially linear series design; weights,
// when given, turn it into weighted least squares. Collinear columns are
// dropped (reported in droppedColumns) rather than rejected.
PropensityFit fitPropensityResponse(const ObservationTable& table, std::span<const double> response,
                                    const PropensityOptions& options,
                                    std::span<const double> weights = {});

// Linear probability model of D. Throws DegenerateTreatment if D is constant.
PropensityFit fitPropensity(const ObservationTable& table, const PropensityOptions& options,
                            std::span<const double> weights = {});

struct FirstStageTest {
  double fstat = 0.0;   // Wald / df
  double wald = 0.0;
  int df = 0;           // number of instrument terms tested
  std::size_t clusters = 0;
};

// Cluster-robust (CR0) Wald test of alphaZ = 0 for an unweighted fit.
FirstStageTest firstStageTest(const PropensityFit& fit, const ObservationTable& table);

inline double firstStageFStat(const PropensityFit& fit, const ObservationTable& table) {
  return firstStageTest(fit, table).fstat;
}

}  // namespace censmte
