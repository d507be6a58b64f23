#include "censmte/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "censmte/error.hpp"

namespace censmte {

namespace {

std::vector<double> sortedCensoring(const ObservationTable& table) {
  std::vector<double> c;
  c.reserve(table.size());
  for (const auto& o : table.rows()) c.push_back(o.c);
  std::sort(c.begin(), c.end());
  return c;
}

double shareAtMost(std::span<const double> s, double t) {
  return static_cast<double>(std::upper_bound(s.begin(), s.end(), t) - s.begin()) /
         static_cast<double>(s.size());
}

double shareBelow(std::span<const double> s, double t) {
  return static_cast<double>(std::lower_bound(s.begin(), s.end(), t) - s.begin()) /
         static_cast<double>(s.size());
}

// Gamma-hat extremes over the offsets, shared by both modes.
struct Extremes {
  Array3 gmax[2], gmin[2];
  Array3 maxLb[2], minUb[2];  // regression-dependence envelopes
  std::vector<std::vector<CensorProbs>> probs;
};

Extremes computeExtremes(const DistRegFit& fit, const ObservationTable& table,
                         const EvalDesign& design, const DeltaGrid& deltas) {
  const std::size_t K = design.y.size(), V = design.v.size(), X = table.numLevels();
  if (deltas.size() != K) throw Error(ErrorCode::kInvalidArgument, "delta grid does not match the threshold grid");
  if (fit.grid.values() != design.y.values()) {
    throw Error(ErrorCode::kInvalidArgument, "evaluation grid differs from the fitted grid");
  }
  const auto c = sortedCensoring(table);
  Extremes e;
  e.probs.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    for (double delta : deltas.deltas[k]) e.probs[k].push_back(censorProbs(c, design.y[k], delta));
  }
  for (int d = 0; d < 2; ++d) {
    e.gmax[d] = Array3(K, V, X);
    e.gmin[d] = Array3(K, V, X);
    e.maxLb[d] = Array3(K, V, X);
    e.minUb[d] = Array3(K, V, X);
    const double sign = d == 1 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto& ds = deltas.deltas[k];
      if (ds.empty() || !fit.cell(k, d).usable()) continue;
      for (std::size_t j = 0; j < V; ++j) {
        const GammaEvaluator gamma(fit, k, d, design.v[j]);
        for (std::size_t x = 0; x < X; ++x) {
          double gmax = -INFINITY, gmin = INFINITY, lb = -INFINITY, ub = INFINITY;
          for (std::size_t m = 0; m < ds.size(); ++m) {
            const double g = gamma(design.y[k] + ds[m], static_cast<int>(x));
            const CensorProbs& p = e.probs[k][m];
            gmax = std::max(gmax, g);
            gmin = std::min(gmin, g);
            lb = std::max(lb, p.aboveYD * sign * g);
            ub = std::min(ub, p.belowY + p.aboveYD + p.between * sign * g);
          }
          e.gmax[d](k, j, x) = gmax;
          e.gmin[d](k, j, x) = gmin;
          e.maxLb[d](k, j, x) = lb;
          e.minUb[d](k, j, x) = ub;
        }
      }
    }
  }
  return e;
}

// Rearranges the finite entries of a fiber and clamps them to [0, 1].
void rearrangeFinite(std::vector<double>& f) {
  std::vector<std::size_t> idx;
  std::vector<double> vals;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!isMissing(f[k])) {
      idx.push_back(k);
      vals.push_back(f[k]);
    }
  }
  rearrangeAndClamp(vals);
  for (std::size_t i = 0; i < idx.size(); ++i) f[idx[i]] = vals[i];
}

std::size_t orderPairs(Array3& lb, Array3& ub) {
  std::size_t swapped = 0;
  for (std::size_t i = 0; i < lb.data().size(); ++i) {
    double& l = lb.data()[i];
    double& u = ub.data()[i];
    if (l > u) {
      std::swap(l, u);
      ++swapped;
    }
  }
  return swapped;
}

Array3 aggregate(const Array3& a, const std::vector<double>& w) {
  Array3 out(a.dim0(), a.dim1(), 1, 0.0);
  for (std::size_t i = 0; i < a.dim0(); ++i) {
    for (std::size_t j = 0; j < a.dim1(); ++j) {
      double acc = 0.0;
      for (std::size_t x = 0; x < a.dim2(); ++x) acc += w[x] * a(i, j, x);
      out(i, j, 0) = acc;
    }
  }
  return out;
}

Array3 difference(const Array3& a, const Array3& b) {
  Array3 out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

BoundsSurface finish(BoundsSurface s, const Extremes& e) {
  for (int d = 0; d < 2; ++d) {
    s.gammaMax[d] = e.gmax[d];
    s.gammaMin[d] = e.gmin[d];
    s.orderedLb[d] = s.rawLb[d];
    s.orderedUb[d] = s.rawUb[d];
    s.swappedRaw += orderPairs(s.orderedLb[d], s.orderedUb[d]);
    s.lb[d] = s.orderedLb[d];
    s.ub[d] = s.orderedUb[d];
    for (Array3* a : {&s.lb[d], &s.ub[d]}) {
      for (std::size_t j = 0; j < a->dim1(); ++j) {
        for (std::size_t x = 0; x < a->dim2(); ++x) {
          auto f = a->fiber(j, x);
          rearrangeFinite(f);
          a->setFiber(j, x, f);
        }
      }
    }
    s.swappedFinal += orderPairs(s.lb[d], s.ub[d]);
  }
  s.dmteLoRaw = difference(s.rawLb[1], s.rawUb[0]);
  s.dmteHiRaw = difference(s.rawUb[1], s.rawLb[0]);
  s.dmteLo = difference(s.lb[1], s.ub[0]);
  s.dmteHi = difference(s.ub[1], s.lb[0]);
  s.dmteLoRawAvg = aggregate(s.dmteLoRaw, s.wHat);
  s.dmteHiRawAvg = aggregate(s.dmteHiRaw, s.wHat);
  s.dmteLoAvg = aggregate(s.dmteLo, s.wHat);
  s.dmteHiAvg = aggregate(s.dmteHi, s.wHat);
  s.probs = e.probs;
  return s;
}

BoundsSurface relaxationFrom(const Extremes& e, const EvalDesign& design, std::vector<double> wHat,
                             double bbar) {
  BoundsSurface s;
  s.mode = BoundsMode::kContinuousRelaxation;
  s.bbar = bbar;
  s.design = design;
  s.wHat = std::move(wHat);
  for (int d = 0; d < 2; ++d) {
    const double sign = d == 1 ? 1.0 : -1.0;
    s.rawLb[d] = e.gmax[d];
    s.rawUb[d] = e.gmin[d];
    for (auto& v : s.rawLb[d].data()) v = -bbar + sign * v;
    for (auto& v : s.rawUb[d].data()) v = bbar + sign * v;
  }
  return finish(std::move(s), e);
}

}  // namespace

CensorProbs censorProbs(std::span<const double> sortedC, double y, double delta) {
  CensorProbs p;
  p.belowY = shareAtMost(sortedC, y);
  p.between = shareAtMost(sortedC, y + delta) - shareBelow(sortedC, y);
  p.aboveYD = 1.0 - shareBelow(sortedC, y + delta);
  return p;
}

DeltaGrid buildDeltaGrid(const ObservationTable& table, const ThresholdGrid& grid,
                         const DeltaGridOptions& options) {
  if (options.count < 1) throw Error(ErrorCode::kInvalidArgument, "delta grid needs at least one offset");
  const auto c = sortedCensoring(table);
  const double gammaC = table.gammaCHat();
  DeltaGrid g;
  g.deltas.resize(grid.size());
  g.windowCounts.resize(grid.size());
  g.halfWidth.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double y = grid[k];
    if (!(y < gammaC)) continue;
    const double step = (gammaC - y) / static_cast<double>(options.count);
    const double h = 0.5 * step;
    g.halfWidth[k] = h;
    for (std::size_t j = 1; j <= options.count; ++j) {
      const double delta = step * static_cast<double>(j);
      const double at = y + delta;
      const auto count = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), at + h) -
                                                  std::lower_bound(c.begin(), c.end(), at - h));
      if (count >= options.minCell) {
        g.deltas[k].push_back(delta);
        g.windowCounts[k].push_back(count);
      }
    }
    if (g.deltas[k].empty()) {
      throw Error(ErrorCode::kEmptyDeltaGrid, "no supported censoring offset for threshold",
                  {{"k", k}, {"y", y}, {"minCell", options.minCell}});
    }
  }
  return g;
}

const char* boundsModeName(BoundsMode mode) {
  return mode == BoundsMode::kRegressionDependence ? "regdep" : "relax";
}

BoundsSurface boundsRegressionDependence(const DistRegFit& fit, const ObservationTable& table,
                                         const EvalDesign& design, const DeltaGrid& deltas) {
  const Extremes e = computeExtremes(fit, table, design, deltas);
  BoundsSurface s;
  s.mode = BoundsMode::kRegressionDependence;
  s.design = design;
  s.wHat = levelShares(table);
  for (int d = 0; d < 2; ++d) {
    s.rawLb[d] = e.maxLb[d];
    s.rawUb[d] = e.minUb[d];
  }
  return finish(std::move(s), e);
}

BoundsSurface boundsContinuousRelaxation(const DistRegFit& fit, const ObservationTable& table,
                                         const EvalDesign& design, const DeltaGrid& deltas,
                                         double bbar) {
  if (!(bbar >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "relaxation magnitude must be >= 0");
  return relaxationFrom(computeExtremes(fit, table, design, deltas), design, levelShares(table), bbar);
}

bool dmteBoundsContainZero(const BoundsSurface& s, std::size_t k) {
  for (std::size_t j = 0; j < s.design.v.size(); ++j) {
    const double lo = s.dmteLoRawAvg(k, j, 0), hi = s.dmteHiRawAvg(k, j, 0);
    if (isMissing(lo) || isMissing(hi) || lo > 0.0 || hi < 0.0) return false;
  }
  return true;
}

namespace {

double breakdownFrom(const Extremes& e, const EvalDesign& design, const std::vector<double>& w,
                     std::size_t k) {
  const BoundsSurface base = relaxationFrom(e, design, w, 0.0);
  double need = 0.0;
  for (std::size_t j = 0; j < design.v.size(); ++j) {
    const double lo = base.dmteLoRawAvg(k, j, 0), hi = base.dmteHiRawAvg(k, j, 0);
    if (isMissing(lo) || isMissing(hi)) return kMissing;
    // Both ends move by 2 B: the lower end must fall to 0 and the upper end
    // must rise to 0.
    need = std::max({need, 0.5 * lo, -0.5 * hi});
  }
  // Guard against rounding in the re-evaluated bounds.
  double b = need;
  for (int guard = 0; guard < 64 && !dmteBoundsContainZero(relaxationFrom(e, design, w, b), k); ++guard) {
    b = std::nextafter(b, INFINITY);
  }
  return b;
}

}  // namespace

double breakdownPoint(const DistRegFit& fit, const ObservationTable& table, const EvalDesign& design,
                      const DeltaGrid& deltas, std::size_t k) {
  if (k >= design.y.size()) throw Error(ErrorCode::kInvalidArgument, "threshold index out of range");
  return breakdownFrom(computeExtremes(fit, table, design, deltas), design, levelShares(table), k);
}

BreakdownCurve breakdownCurve(const DistRegFit& fit, const ObservationTable& table,
                              const EvalDesign& design, const DeltaGrid& deltas) {
  const Extremes e = computeExtremes(fit, table, design, deltas);
  const auto w = levelShares(table);
  BreakdownCurve c;
  for (std::size_t k = 0; k < design.y.size(); ++k) {
    const double b = breakdownFrom(e, design, w, k);
    c.y.push_back(design.y[k]);
    c.bbar.push_back(b);
    c.robust.push_back(!isMissing(b) && b >= kRobustBreakdown);
  }
  return c;
}

}  // namespace censmte
