#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "censmte/dataset.hpp"
#include "censmte/mte.hpp"

namespace censmte {

// Exponential arm law with rate lambda(v) = a + b v, times the covariate
// level's rate multiplier.
struct ExponentialArm {
  double a = 1.0;
  double b = 0.0;
  double rate(double v) const { return a + b * v; }
};

enum class CensoringLaw { kDegenerate, kUniform, kCohort };
enum class Dependence { kIndependent, kNegRegDep, kRelaxed };
enum class InstrumentLaw { kUniform, kDeciders };

struct CovariateLevel {
  std::string label;
  double share = 1.0;
  double propensityShift = 0.0;  // added to P(z, c)
  double rateScale = 1.0;        // multiplies both arms' rates
};

struct DgpSpec {
  // P(z, c) = p0 + pz z + pz2 z^2 + pc c (+ level shift); D = 1{P >= V}.
  double p0 = 0.2, pz = 0.6, pz2 = 0.0, pc = 0.0;

  InstrumentLaw instrument = InstrumentLaw::kUniform;
  double zLo = 0.0, zHi = 1.0;
  // Decider instrument: each row is assigned one of `deciders` decision
  // makers uniformly; decider j's instrument value is zLo + (zHi - zLo) (j + 0.5) / deciders.
  int deciders = 0;

  CensoringLaw censoring = CensoringLaw::kUniform;
  double c0 = 50.0;               // degenerate
  double cLo = 2.0, cHi = 10.0;   // uniform
  std::vector<double> cohortValues;  // cohort grid, equally likely

  ExponentialArm arm[2] = {{1.0, 1.0}, {0.5, 2.0}};

  Dependence dependence = Dependence::kIndependent;
  double kappa = 0.0;  // negRegDep: rate multiplier 1 + kappa (c - cbar) / range
  double bbar = 0.0;   // relaxed: point mass at 0 with probability bbar (c - min) / range

  std::vector<CovariateLevel> levels{{"all", 1.0, 0.0, 1.0}};
  int clusters = 0;  // > 0: rows assigned to this many clusters uniformly; 0: cluster = x

  double scale = 1.0;  // multiplies every emitted duration (e.g. 365 for days)

  // Throws InvalidSpec on any violated invariant.
  void validate() const;

  double propensity(double z, double c, int x) const;
  double censoringMean() const;
  double censoringRange() const;
  double censoringMax() const;
  // Relative position of c in the censoring support, in [-1/2, 1/2].
  double centeredPosition(double c) const;
};

DgpSpec dgpSpecFromJson(const nlohmann::json& j);
nlohmann::json dgpSpecToJson(const DgpSpec& spec);
DgpSpec loadDgpSpec(const std::string& path);

// The acceptance-suite design: rates 1 + v and 0.5 + 2v, P = 0.2 + 0.6 z,
// C ~ U(2, 10), independent censoring, single level.
DgpSpec referenceDgpSpec();

struct LatentDraws {
  std::vector<double> v, y0, y1, p;
};

struct Simulation {
  ObservationTable table;
  LatentDraws latent;
};

Simulation simulate(const DgpSpec& spec, std::size_t n, std::uint64_t seed, unsigned threads = 1);

void saveLatentCsv(const LatentDraws& latent, const std::string& path);

// Population quantities on a design (durations in the spec's native unit,
// before `scale`). Arrays follow MteSurfaces' layout; x is the spec's level
// index and *Avg uses the level shares.
struct OracleCurves {
  EvalDesign design;
  double gammaC = 0.0;
  Array3 dmtr[2];  // [k][v][x]
  Array3 dmte;
  Array3 qmtr[2];  // [tau][v][x]
  Array3 qmte;
  Array3 tauBar;   // [v][x][0]
  Array3 rmte;     // [v][x][0]
  Array3 mte;      // [v][x][0], unrestricted
  Array3 dmteAvg;  // [k][v][0]
  Array3 rmteAvg;  // [v][0][0]
  Array3 mteAvg;   // [v][0][0]
};

// Exact CDF of Y*(d) given V = v in level x, marginal over C.
double trueDmtr(const DgpSpec& spec, int d, double y, double v, int x = 0);
// Same, conditional on C = c.
double trueConditionalDmtr(const DgpSpec& spec, int d, double y, double v, double c, int x = 0);
double trueQmtr(const DgpSpec& spec, int d, double tau, double v, int x = 0);
// E[min(Y*(d), horizon) | V = v]; horizon = +inf gives the mean.
double trueRestrictedMean(const DgpSpec& spec, int d, double v, double horizon, int x = 0);
double trueMte(const DgpSpec& spec, double v, int x = 0);
// Share-weighted MTE(v).
double trueMteAvg(const DgpSpec& spec, double v);

// gammaC defaults to the spec's censoring maximum.
OracleCurves trueCurves(const DgpSpec& spec, const EvalDesign& design,
                        std::optional<double> gammaC = std::nullopt);

// Finite joint PMF of (Y*(0), Y*(1)) stored as integer masses over a common
// denominator so that every derived probability is one division.
struct DiscretePmf {
  std::vector<double> y0;                   // support of Y*(0)
  std::vector<double> y1;                   // support of Y*(1)
  std::vector<std::vector<long long>> mass;  // mass[i][j] = P[Y*(1) = y1[i], Y*(0) = y0[j]] * denominator
  long long denominator = 1;

  void validate() const;
  long long marginalMass(int d, std::size_t index) const;
};

DiscretePmf toyPmf();
DiscretePmf pmfFromJson(const nlohmann::json& j);
nlohmann::json pmfToJson(const DiscretePmf& pmf);

struct BruteForceCurves {
  std::vector<double> y;
  std::vector<double> cdf[2];   // P[Y*(d) <= y]
  std::vector<double> dmte;     // cdf[1] - cdf[0], from integer masses
  std::vector<double> tau;
  std::vector<double> quantile[2];  // left-continuous generalized inverse
  std::vector<double> qte;
  double mean[2] = {0.0, 0.0};
  double ate = 0.0;
  double restrictedMean[2] = {0.0, 0.0};
  double rmte = 0.0;
};

BruteForceCurves bruteForceCurves(const DiscretePmf& pmf, std::vector<double> y,
                                  std::vector<double> tau, double horizon);

struct ToyCheck {
  double dmte1 = 0.0, dmte2 = 0.0, medianQte = 0.0, ate = 0.0;
  bool pass = false;
  nlohmann::json toJson() const;
};

// Evaluates DMTE(1), DMTE(2), the median QTE and the ATE and compares them
// with 0.05, 0.10, 7 and 5.55 exactly.
ToyCheck runToyCheck(const DiscretePmf& pmf = toyPmf());

struct Interval {
  double lo = 0.0, hi = 0.0;
};

// Integral of MTE(v) over the union of (disjoint) intervals inside (0, 1).
double policyValue(const DgpSpec& spec, const std::vector<Interval>& rule);

// {v in (0, 1) : MTE(v) > 0} as disjoint intervals.
std::vector<Interval> positiveMteRule(const DgpSpec& spec);

struct PolicySearch {
  double bestValue = 0.0;
  std::uint32_t bestMask = 0;
  double thresholdValue = 0.0;
  bool optimal = false;  // no union beats the threshold rule by more than tol
};

// Exhaustive search over every union of the `cells` equal-width intervals
// of (0, 1).
PolicySearch searchPolicies(const DgpSpec& spec, int cells = 20, double tol = 1e-12);

}  // namespace censmte
