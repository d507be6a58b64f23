#pragma once

#include <span>

#include "censmte/distreg.hpp"
#include "censmte/mte.hpp"
#include "censmte/propensity.hpp"

namespace censmte {

struct EstimatorOptions {
  PropensityOptions propensity;
  DistRegOptions distreg;
  DmtrOptions dmtr;
  std::size_t gridSize = 64;  // ignored when an explicit grid is given
  std::size_t vPoints = 41;
  std::vector<double> tau = defaultTauGrid();

  // The comparator that ignores censoring: C leaves both regressions and
  // the DMTR averages use every row of the arm.
  void setNaive(bool naive) {
    propensity.includeC = !naive;
    distreg.includeC = !naive;
    dmtr.naive = naive;
  }
  bool naive() const { return dmtr.naive; }
};

struct Estimate {
  PropensityFit propensity;
  DistRegFit distreg;
  MteSurfaces surfaces;
};

// Full point estimate. When `design` is null the threshold grid (unless
// `grid` is given) and the v grid are built from the data.
Estimate estimate(const ObservationTable& table, const EstimatorOptions& options,
                  const ThresholdGrid* grid = nullptr, const EvalDesign* design = nullptr);

// Refit of every stage under multiplier weights on a fixed design.
MteSurfaces estimateWeighted(const ObservationTable& table, const EstimatorOptions& options,
                             const EvalDesign& design, std::span<const double> weights);

}  // namespace censmte
