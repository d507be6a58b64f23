#include "censmte/estimator.hpp"

#include "censmte/error.hpp"

namespace censmte {

Estimate estimate(const ObservationTable& table, const EstimatorOptions& options,
                  const ThresholdGrid* grid, const EvalDesign* design) {
  Estimate e;
  e.propensity = fitPropensity(table, options.propensity);
  EvalDesign built;
  if (design == nullptr) {
    ThresholdGrid y = grid != nullptr ? *grid : defaultThresholdGrid(table, options.gridSize);
    built = makeEvalDesign(e.propensity.fitted, std::move(y), options.vPoints, options.tau);
    design = &built;
  }
  e.distreg = fitDistReg(table, e.propensity.fitted, design->y, options.distreg);
  e.surfaces = assembleSurfaces(e.distreg, table, *design, options.dmtr);
  return e;
}

MteSurfaces estimateWeighted(const ObservationTable& table, const EstimatorOptions& options,
                             const EvalDesign& design, std::span<const double> weights) {
  const PropensityFit p = fitPropensity(table, options.propensity, weights);
  const DistRegFit fit = fitDistReg(table, p.fitted, design.y, options.distreg, weights);
  for (int d = 0; d < 2; ++d) {
    bool any = false;
    for (std::size_t k = 0; k < fit.grid.size(); ++k) any = any || fit.cell(k, d).usable();
    if (!any) throw Error(ErrorCode::kReplicateFailure, "no usable distribution regression cell", {{"d", d}});
  }
  return assembleSurfaces(fit, table, design, options.dmtr, weights);
}

}  // namespace censmte
