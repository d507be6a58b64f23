#pragma once

#include <cstddef>
#include <vector>

#include "censmte/dataset.hpp"
#include "censmte/distreg.hpp"
#include "censmte/mte.hpp"

namespace censmte {

struct DeltaGridOptions {
  std::size_t count = 8;    // delta_j = j (gammaC - y_k) / count, j = 1..count
  std::size_t minCell = 50;  // observations required with C within h of y_k + delta
};

// Offsets delta > 0 per threshold such that y_k + delta is supported by the
// observed censoring values.
struct DeltaGrid {
  std::vector<std::vector<double>> deltas;              // [k][j]
  std::vector<std::vector<std::size_t>> windowCounts;   // [k][j]
  std::vector<double> halfWidth;                        // h per k

  std::size_t size() const { return deltas.size(); }
};

// Throws EmptyDeltaGrid(k) when some y_k < gammaC keeps no offset; thresholds
// at or beyond gammaC get an empty list.
DeltaGrid buildDeltaGrid(const ObservationTable& table, const ThresholdGrid& grid,
                         const DeltaGridOptions& options = {});

// Unconditional empirical censoring probabilities at (y, y + delta).
struct CensorProbs {
  double belowY = 0.0;    // P(C <= y)
  double between = 0.0;   // P(y <= C <= y + delta)
  double aboveYD = 0.0;   // P(y + delta <= C)
};
CensorProbs censorProbs(std::span<const double> sortedC, double y, double delta);

enum class BoundsMode { kRegressionDependence, kContinuousRelaxation };
const char* boundsModeName(BoundsMode mode);

struct BoundsSurface {
  BoundsMode mode = BoundsMode::kRegressionDependence;
  double bbar = 0.0;
  EvalDesign design;
  std::vector<double> wHat;

  // [k][v][x]. `raw` are the displayed formulas as written; `ordered` swaps
  // any lb > ub pair; `lb`/`ub` are ordered, rearranged along k, clamped to
  // [0, 1] and ordered again.
  Array3 rawLb[2], rawUb[2];
  Array3 orderedLb[2], orderedUb[2];
  Array3 lb[2], ub[2];
  Array3 gammaMax[2], gammaMin[2];  // max / min over delta of gamma-hat_d
  std::size_t swappedRaw = 0;       // pairs swapped in `ordered`
  std::size_t swappedFinal = 0;     // pairs swapped after rearrangement

  // DMTE bounds: lower = LB1 - UB0, upper = UB1 - LB0.
  Array3 dmteLoRaw, dmteHiRaw;  // from raw bounds
  Array3 dmteLo, dmteHi;        // from final bounds
  Array3 dmteLoRawAvg, dmteHiRawAvg;  // [k][v][0], share-weighted
  Array3 dmteLoAvg, dmteHiAvg;

  // Censoring probabilities per [k][j] of the delta grid.
  std::vector<std::vector<CensorProbs>> probs;
};

BoundsSurface boundsRegressionDependence(const DistRegFit& fit, const ObservationTable& table,
                                         const EvalDesign& design, const DeltaGrid& deltas);

BoundsSurface boundsContinuousRelaxation(const DistRegFit& fit, const ObservationTable& table,
                                         const EvalDesign& design, const DeltaGrid& deltas,
                                         double bbar);

// True when the aggregated raw DMTE bounds contain 0 at every v for threshold k.
bool dmteBoundsContainZero(const BoundsSurface& surface, std::size_t k);

// Smallest relaxation at which the aggregated DMTE bounds at y_k contain 0
// for every v. NaN when y_k has no offsets or no usable cells.
double breakdownPoint(const DistRegFit& fit, const ObservationTable& table, const EvalDesign& design,
                      const DeltaGrid& deltas, std::size_t k);

struct BreakdownCurve {
  std::vector<double> y;
  std::vector<double> bbar;
  std::vector<bool> robust;  // bbar >= 0.1
};

BreakdownCurve breakdownCurve(const DistRegFit& fit, const ObservationTable& table,
                              const EvalDesign& design, const DeltaGrid& deltas);

inline constexpr double kRobustBreakdown = 0.1;

}  // namespace censmte
