#include "censmte/propensity.hpp"

#include <cmath>
#include <numeric>

#include "censmte/error.hpp"
#include "censmte/linalg.hpp"

namespace censmte {

SeriesBasis::SeriesBasis(int L) : degree(L) {
  if (L < 1) throw Error(ErrorCode::kInvalidArgument, "series degree must be >= 1", {{"L", L}});
}

void SeriesBasis::evaluate(double z, std::span<double> out) const {
  double p = 1.0;
  for (int j = 0; j < degree; ++j) {
    p *= z;
    out[j] = p;
  }
}

double trimPropensity(double raw, double epsilon) {
  return raw + (1.0 - epsilon - raw) * (raw > 1.0 ? 1.0 : 0.0) +
         (epsilon - raw) * (raw < 0.0 ? 1.0 : 0.0);
}

double PropensityFit::predictRaw(double c, int x, double z) const {
  double p = alpha0 + alphaX[x];
  if (includeC) p += alphaC * c;
  const double zs = (z - zMean) / zScale;
  double pow = 1.0;
  for (double a : alphaZ) {
    pow *= zs;
    p += a * pow;
  }
  return p;
}

std::vector<double> PropensityFit::rawScaleZPolynomial() const {
  const int L = basis.degree;
  std::vector<double> out(L + 1, 0.0);
  out[0] = alpha0;
  for (int j = 1; j <= L; ++j) {
    const double scaled = alphaZ[j - 1] / std::pow(zScale, j);
    double binom = 1.0;  // C(j, i), built up as i grows
    for (int i = 0; i <= j; ++i) {
      out[i] += scaled * binom * std::pow(-zMean, j - i);
      binom = binom * (j - i) / (i + 1);
    }
  }
  return out;
}

Eigen::MatrixXd propensityDesign(const ObservationTable& table, const PropensityFit& spec) {
  const auto n = static_cast<Eigen::Index>(table.size());
  const int nx = static_cast<int>(table.numLevels());
  const int L = spec.basis.degree;
  const int p = 1 + (nx - 1) + (spec.includeC ? 1 : 0) + L;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);
  std::vector<double> psi(L);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = table[static_cast<std::size_t>(i)];
    int col = 0;
    X(i, col++) = 1.0;
    if (o.x > 0) X(i, o.x) = 1.0;
    col += nx - 1;
    if (spec.includeC) X(i, col++) = o.c;
    spec.basis.evaluate((o.z - spec.zMean) / spec.zScale, psi);
    for (int j = 0; j < L; ++j) X(i, col++) = psi[j];
  }
  return X;
}

namespace {

std::vector<std::string> designNames(const ObservationTable& table, const PropensityFit& spec) {
  std::vector<std::string> names{"const"};
  for (std::size_t l = 1; l < table.numLevels(); ++l) names.push_back("x:" + table.xLevels()[l].label);
  if (spec.includeC) names.push_back("c");
  for (int j = 1; j <= spec.basis.degree; ++j) names.push_back("z^" + std::to_string(j));
  return names;
}

}  // namespace

PropensityFit fitPropensityResponse(const ObservationTable& table, std::span<const double> response,
                                    const PropensityOptions& options,
                                    std::span<const double> weights) {
  const std::size_t n = table.size();
  if (response.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "response length does not match row count");
  }
  if (!weights.empty() && weights.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "weight length does not match row count");
  }
  if (!(options.epsilon > 0.0 && options.epsilon < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "trim epsilon must lie in (0, 0.5)",
                {{"epsilon", options.epsilon}});
  }
  PropensityFit fit;
  fit.basis = options.basis;
  fit.epsilon = options.epsilon;
  fit.includeC = options.includeC;

  // The z transform only depends on the data, never on bootstrap weights;
  // fitted values do not depend on it in any case.
  double mean = 0.0;
  for (const auto& o : table.rows()) mean += o.z;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& o : table.rows()) var += (o.z - mean) * (o.z - mean);
  var /= static_cast<double>(n);
  fit.zMean = mean;
  fit.zScale = var > 0.0 ? std::sqrt(var) : 1.0;

  fit.columnNames = designNames(table, fit);
  const Eigen::MatrixXd X = propensityDesign(table, fit);
  Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(response.data(), static_cast<Eigen::Index>(n));
  Eigen::MatrixXd Xw = X;
  Eigen::VectorXd yw = yv;
  if (!weights.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(weights[i] >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative weight");
      const double s = std::sqrt(weights[i]);
      Xw.row(static_cast<Eigen::Index>(i)) *= s;
      yw(static_cast<Eigen::Index>(i)) *= s;
    }
  }
  fit.keptColumns = selectIndependentColumns(Xw);
  if (fit.keptColumns.empty()) {
    throw Error(ErrorCode::kRankDeficient, "propensity design has no usable column");
  }
  {
    std::vector<bool> kept(fit.columnNames.size(), false);
    for (int j : fit.keptColumns) kept[j] = true;
    for (std::size_t j = 0; j < kept.size(); ++j) {
      if (!kept[j]) fit.droppedColumns.push_back(fit.columnNames[j]);
    }
  }
  const Eigen::MatrixXd Xk = takeColumns(Xw, fit.keptColumns);
  const Eigen::VectorXd beta = Xk.householderQr().solve(yw);

  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fit.columnNames.size()));
  for (std::size_t k = 0; k < fit.keptColumns.size(); ++k) {
    full(fit.keptColumns[k]) = beta(static_cast<Eigen::Index>(k));
  }
  const int nx = static_cast<int>(table.numLevels());
  int col = 0;
  fit.alpha0 = full(col++);
  fit.alphaX.assign(nx, 0.0);
  for (int l = 1; l < nx; ++l) fit.alphaX[l] = full(col++);
  if (fit.includeC) fit.alphaC = full(col++);
  fit.alphaZ.resize(fit.basis.degree);
  for (int j = 0; j < fit.basis.degree; ++j) fit.alphaZ[j] = full(col++);

  const Eigen::VectorXd raw = X * full;
  fit.fittedRaw.resize(n);
  fit.fitted.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.fittedRaw[i] = raw(static_cast<Eigen::Index>(i));
    fit.fitted[i] = trimPropensity(fit.fittedRaw[i], fit.epsilon);
    if (fit.fitted[i] != fit.fittedRaw[i]) ++fit.nTrimmed;
  }
  return fit;
}

PropensityFit fitPropensity(const ObservationTable& table, const PropensityOptions& options,
                            std::span<const double> weights) {
  const std::size_t treated = table.treatedCount();
  if (treated == 0 || treated == table.size()) {
    throw Error(ErrorCode::kDegenerateTreatment, "treatment indicator is constant",
                {{"treated", treated}, {"rows", table.size()}});
  }
  std::vector<double> d(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) d[i] = table[i].d;
  return fitPropensityResponse(table, d, options, weights);
}

FirstStageTest firstStageTest(const PropensityFit& fit, const ObservationTable& table) {
  FirstStageTest out;
  out.clusters = table.numClusters();
  if (out.clusters < 2) {
    throw Error(ErrorCode::kTooFewClusters, "cluster-robust F statistic needs >= 2 clusters",
                {{"clusters", out.clusters}});
  }
  const Eigen::MatrixXd X = takeColumns(propensityDesign(table, fit), fit.keptColumns);
  const Eigen::Index p = X.cols();
  const std::size_t n = table.size();

  // Bread (X'X)^-1 from the R factor of a QR decomposition.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd bread = Rinv * Rinv.transpose();

  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.clusters), p);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = table[i].d - fit.fittedRaw[i];
    scores.row(table[i].cluster) += u * X.row(static_cast<Eigen::Index>(i));
  }
  const Eigen::MatrixXd meat = scores.transpose() * scores;
  const Eigen::MatrixXd V = bread * meat * bread;

  std::vector<Eigen::Index> zIdx;
  std::vector<double> zCoef;
  for (std::size_t k = 0; k < fit.keptColumns.size(); ++k) {
    const std::string& name = fit.columnNames[fit.keptColumns[k]];
    if (name.rfind("z^", 0) == 0) {
      zIdx.push_back(static_cast<Eigen::Index>(k));
      zCoef.push_back(fit.alphaZ[std::stoi(name.substr(2)) - 1]);
    }
  }
  out.df = static_cast<int>(zIdx.size());
  if (out.df == 0) return out;
  Eigen::MatrixXd Vzz(out.df, out.df);
  Eigen::VectorXd a(out.df);
  for (int r = 0; r < out.df; ++r) {
    a(r) = zCoef[r];
    for (int c = 0; c < out.df; ++c) Vzz(r, c) = V(zIdx[r], zIdx[c]);
  }
  out.wald = a.dot(Vzz.completeOrthogonalDecomposition().solve(a));
  out.fstat = out.wald / out.df;
  return out;
}

}  // namespace censmte
