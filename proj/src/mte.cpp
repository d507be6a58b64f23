#include "censmte/mte.hpp"

#include <algorithm>
#include <cstdint>

#include "censmte/error.hpp"
#include "censmte/parallel.hpp"
#include "censmte/stats.hpp"

namespace censmte {

namespace {

// |index| range where the factored logistic evaluation cannot overflow.
constexpr double kFastRange = 300.0;

}  // namespace

std::vector<double> Array3::fiber(std::size_t j, std::size_t l) const {
  std::vector<double> out(n0_);
  for (std::size_t i = 0; i < n0_; ++i) out[i] = (*this)(i, j, l);
  return out;
}

void Array3::setFiber(std::size_t j, std::size_t l, std::span<const double> values) {
  for (std::size_t i = 0; i < n0_; ++i) (*this)(i, j, l) = values[i];
}

std::vector<double> defaultTauGrid() {
  std::vector<double> tau;
  for (int j = 1; j <= 19; ++j) tau.push_back(j / 20.0);
  return tau;
}

EvalDesign makeEvalDesign(std::span<const double> propensity, ThresholdGrid grid,
                          std::size_t vPoints, std::vector<double> tau) {
  if (propensity.empty()) throw Error(ErrorCode::kInvalidArgument, "no propensity values");
  if (vPoints < 1) throw Error(ErrorCode::kInvalidArgument, "v grid needs at least one point");
  for (std::size_t j = 0; j < tau.size(); ++j) {
    if (!(tau[j] > 0.0 && tau[j] < 1.0) || (j > 0 && !(tau[j] > tau[j - 1]))) {
      throw Error(ErrorCode::kInvalidArgument, "tau grid must be strictly increasing inside (0, 1)");
    }
  }
  std::vector<double> sorted(propensity.begin(), propensity.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = quantileSorted(sorted, 0.05);
  const double hi = quantileSorted(sorted, 0.95);
  EvalDesign design;
  design.y = std::move(grid);
  design.tau = std::move(tau);
  if (vPoints == 1) {
    design.v = {0.5 * (lo + hi)};
  } else {
    for (std::size_t j = 0; j < vPoints; ++j) {
      design.v.push_back(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(vPoints - 1));
    }
  }
  return design;
}

RawDmtr estimateDmtr(const DistRegFit& fit, const ObservationTable& table, const EvalDesign& design,
                     const DmtrOptions& options, std::span<const double> weights) {
  const std::size_t K = design.y.size();
  const std::size_t V = design.v.size();
  const std::size_t X = table.numLevels();
  if (fit.grid.values() != design.y.values()) {
    throw Error(ErrorCode::kInvalidArgument, "evaluation grid differs from the fitted grid");
  }
  if (!weights.empty() && weights.size() != table.size()) {
    throw Error(ErrorCode::kInvalidArgument, "weight length mismatch");
  }

  // Per (d, x): censoring values sorted descending, with cumulative weights,
  // so {C > y_k} is a prefix.
  struct Group {
    std::vector<double> c;
    std::vector<double> w;
  };
  std::vector<Group> groups(2 * X);
  {
    std::vector<std::vector<std::pair<double, double>>> tmp(2 * X);
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto& o = table[i];
      const double wi = weights.empty() ? 1.0 : weights[i];
      if (wi > 0.0) tmp[static_cast<std::size_t>(o.d) * X + static_cast<std::size_t>(o.x)].emplace_back(o.c, wi);
    }
    for (std::size_t g = 0; g < tmp.size(); ++g) {
      std::stable_sort(tmp[g].begin(), tmp[g].end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      for (const auto& [c, w] : tmp[g]) {
        groups[g].c.push_back(c);
        groups[g].w.push_back(w);
      }
    }
  }

  RawDmtr out;
  out.arm[0] = Array3(K, V, X);
  out.arm[1] = Array3(K, V, X);
  for (int d = 0; d < 2; ++d) {
    for (std::size_t k = 0; k < K; ++k) {
      const auto& cell = fit.cell(k, d);
      for (std::size_t x = 0; x < X; ++x) {
        const auto& g = groups[static_cast<std::size_t>(d) * X + x];
        const bool empty = options.naive
                               ? g.c.empty()
                               : (g.c.empty() || !(g.c.front() > design.y[k]));
        if (!cell.usable()) {
          out.missing.push_back({d, static_cast<int>(x), k, cellStatusName(cell.status)});
        } else if (empty) {
          out.missing.push_back({d, static_cast<int>(x), k, "EmptyCell"});
        }
      }
    }
  }

  const std::size_t tasks = 2 * K;
  parallelFor(tasks, options.threads, [&](std::size_t t) {
    const int d = static_cast<int>(t % 2);
    const std::size_t k = t / 2;
    if (!fit.cell(k, d).usable()) return;
    const double sign = d == 1 ? 1.0 : -1.0;
    for (std::size_t x = 0; x < X; ++x) {
      const auto& g = groups[static_cast<std::size_t>(d) * X + x];
      std::size_t m = g.c.size();
      if (!options.naive) {
        m = static_cast<std::size_t>(
            std::partition_point(g.c.begin(), g.c.end(), [&](double c) { return c > design.y[k]; }) -
            g.c.begin());
      }
      if (m == 0) continue;
      double wsum = 0.0;
      for (std::size_t i = 0; i < m; ++i) wsum += g.w[i];
      // Gamma (1 - Gamma) = q / (1 + q)^2 with q = exp(-base) exp(-offset_i);
      // the row factors do not depend on v. Extreme indices take the direct path.
      const GammaEvaluator probe(fit, k, d, design.v.front());
      std::vector<double> rowFactor(m);
      std::vector<std::size_t> extreme;
      for (std::size_t i = 0; i < m; ++i) {
        const double off = probe.offset(g.c[i], static_cast<int>(x));
        if (std::abs(off) <= kFastRange) {
          rowFactor[i] = std::exp(-off);
        } else {
          rowFactor[i] = 0.0;
          extreme.push_back(i);
        }
      }
      for (std::size_t j = 0; j < V; ++j) {
        const GammaEvaluator gamma(fit, k, d, design.v[j]);
        double acc = 0.0;
        if (std::abs(gamma.base()) <= kFastRange) {
          const double a = std::exp(-gamma.base());
          for (std::size_t i = 0; i < m; ++i) {
            const double q = a * rowFactor[i];
            acc += g.w[i] * (q / ((1.0 + q) * (1.0 + q)));
          }
          double direct = 0.0;
          for (std::size_t i : extreme) {
            const double gi = gamma.cdf(g.c[i], static_cast<int>(x));
            direct += g.w[i] * gi * (1.0 - gi);
          }
          acc = gamma.slope() * (acc + direct);
        } else {
          for (std::size_t i = 0; i < m; ++i) acc += g.w[i] * gamma(g.c[i], static_cast<int>(x));
        }
        out.arm[d](k, j, x) = sign * acc / wsum;
      }
    }
  });
  return out;
}

std::size_t imputeNearest(std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> avail;
  for (std::size_t k = 0; k < n; ++k) {
    if (!isMissing(values[k])) avail.push_back(k);
  }
  if (avail.empty() || avail.size() == n) return 0;
  const std::vector<double> orig = values;
  std::size_t filled = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!isMissing(orig[k])) continue;
    auto it = std::lower_bound(avail.begin(), avail.end(), k);
    std::size_t best;
    if (it == avail.end()) {
      best = avail.back();
    } else if (it == avail.begin()) {
      best = *it;
    } else {
      const std::size_t hi = *it, lo = *(it - 1);
      best = (k - lo <= hi - k) ? lo : hi;
    }
    values[k] = orig[best];
    ++filled;
  }
  return filled;
}

void rearrangeAndClamp(std::vector<double>& values) {
  if (std::any_of(values.begin(), values.end(), isMissing)) return;
  std::sort(values.begin(), values.end());
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
}

std::size_t monotonizeAndClamp(Array3& surface) {
  std::size_t imputed = 0;
  for (std::size_t j = 0; j < surface.dim1(); ++j) {
    for (std::size_t l = 0; l < surface.dim2(); ++l) {
      auto f = surface.fiber(j, l);
      imputed += imputeNearest(f);
      rearrangeAndClamp(f);
      surface.setFiber(j, l, f);
    }
  }
  return imputed;
}

std::optional<double> quantileFromCdf(std::span<const double> cdf, const ThresholdGrid& grid,
                                      double tau, double tauBar) {
  if (isMissing(tauBar) || !(tau < tauBar)) return std::nullopt;
  for (std::size_t k = 0; k < cdf.size() && k < grid.size(); ++k) {
    if (cdf[k] >= tau) return grid[k];
  }
  return std::nullopt;
}

IntegrationPath integrationPath(const ThresholdGrid& grid, double gammaC) {
  IntegrationPath path;
  path.nodes.push_back(0.0);
  path.source.push_back(SIZE_MAX);
  std::size_t last = SIZE_MAX;
  for (std::size_t k = 0; k < grid.size() && grid[k] <= gammaC; ++k) {
    if (grid[k] > 0.0) {
      path.nodes.push_back(grid[k]);
      path.source.push_back(k);
    }
    last = k;
  }
  if (path.nodes.back() < gammaC) {
    path.nodes.push_back(gammaC);
    path.source.push_back(last);
  }
  return path;
}

double integrateFiber(const IntegrationPath& path, std::span<const double> fiber, double atZero) {
  std::vector<double> values(path.nodes.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    values[j] = path.source[j] == SIZE_MAX ? atZero : fiber[path.source[j]];
  }
  return trapezoid(path.nodes, values);
}

std::optional<std::size_t> MteSurfaces::lastIdentifiedThreshold() const {
  std::optional<std::size_t> last;
  for (std::size_t k = 0; k < design.y.size() && design.y[k] <= gammaC; ++k) last = k;
  return last;
}

std::optional<double> MteSurfaces::invertToQmtr(double tau, std::size_t vIndex, std::size_t x,
                                                int d) const {
  const auto f = dmtr[d].fiber(vIndex, x);
  return quantileFromCdf(f, design.y, tau, tauBarArm[d](vIndex, x, 0));
}

namespace {

// Fills qmtr/qmte/tauBar/rmte style outputs for one pair of monotone arms.
struct Derived {
  double tauBar0, tauBar1;
  std::vector<double> qmtr0, qmtr1, qmte;
  double rmte, ramtr0, ramtr1;
};

Derived derive(std::span<const double> f0, std::span<const double> f1, const EvalDesign& design,
               const IntegrationPath& path, std::optional<std::size_t> last) {
  Derived r;
  r.tauBar0 = last ? f0[*last] : kMissing;
  r.tauBar1 = last ? f1[*last] : kMissing;
  const std::size_t T = design.tau.size();
  r.qmtr0.assign(T, kMissing);
  r.qmtr1.assign(T, kMissing);
  r.qmte.assign(T, kMissing);
  for (std::size_t t = 0; t < T; ++t) {
    const auto q0 = quantileFromCdf(f0, design.y, design.tau[t], r.tauBar0);
    const auto q1 = quantileFromCdf(f1, design.y, design.tau[t], r.tauBar1);
    if (q0) r.qmtr0[t] = *q0;
    if (q1) r.qmtr1[t] = *q1;
    if (q0 && q1) r.qmte[t] = *q1 - *q0;
  }
  std::vector<double> dmte(f0.size()), s0(f0.size()), s1(f0.size());
  for (std::size_t k = 0; k < f0.size(); ++k) {
    dmte[k] = f1[k] - f0[k];
    s0[k] = 1.0 - f0[k];
    s1[k] = 1.0 - f1[k];
  }
  r.rmte = -integrateFiber(path, dmte, 0.0);
  r.ramtr0 = integrateFiber(path, s0, 1.0);
  r.ramtr1 = integrateFiber(path, s1, 1.0);
  return r;
}

}  // namespace

MteSurfaces assembleFromDmtr(const Array3& dmtr0, const Array3& dmtr1, const EvalDesign& design,
                             double gammaC, std::vector<double> wHat,
                             std::vector<std::string> xLabels) {
  const std::size_t K = design.y.size(), V = design.v.size(), X = wHat.size();
  const std::size_t T = design.tau.size();
  if (dmtr0.dim0() != K || dmtr0.dim1() != V || dmtr0.dim2() != X || dmtr1.dim0() != K ||
      dmtr1.dim1() != V || dmtr1.dim2() != X) {
    throw Error(ErrorCode::kInvalidArgument, "DMTR surface shape does not match the design");
  }
  MteSurfaces s;
  s.design = design;
  s.gammaC = gammaC;
  s.wHat = std::move(wHat);
  s.xLabels = std::move(xLabels);
  s.dmtr[0] = dmtr0;
  s.dmtr[1] = dmtr1;
  s.dmte = Array3(K, V, X);
  for (std::size_t i = 0; i < s.dmte.data().size(); ++i) {
    s.dmte.data()[i] = dmtr1.data()[i] - dmtr0.data()[i];
  }
  for (int d = 0; d < 2; ++d) {
    s.qmtr[d] = Array3(T, V, X);
    s.tauBarArm[d] = Array3(V, X, 1);
    s.ramtr[d] = Array3(V, X, 1);
    s.dmtrAvg[d] = Array3(K, V, 1, 0.0);
  }
  s.qmte = Array3(T, V, X);
  s.tauBar = Array3(V, X, 1);
  s.rmte = Array3(V, X, 1);

  const auto path = integrationPath(design.y, gammaC);
  const auto last = s.lastIdentifiedThreshold();
  for (std::size_t j = 0; j < V; ++j) {
    for (std::size_t x = 0; x < X; ++x) {
      const auto f0 = dmtr0.fiber(j, x), f1 = dmtr1.fiber(j, x);
      const Derived r = derive(f0, f1, design, path, last);
      s.tauBarArm[0](j, x, 0) = r.tauBar0;
      s.tauBarArm[1](j, x, 0) = r.tauBar1;
      s.tauBar(j, x, 0) = std::min(r.tauBar0, r.tauBar1);
      if (isMissing(r.tauBar0) || isMissing(r.tauBar1)) s.tauBar(j, x, 0) = kMissing;
      for (std::size_t t = 0; t < T; ++t) {
        s.qmtr[0](t, j, x) = r.qmtr0[t];
        s.qmtr[1](t, j, x) = r.qmtr1[t];
        s.qmte(t, j, x) = r.qmte[t];
      }
      s.rmte(j, x, 0) = r.rmte;
      s.ramtr[0](j, x, 0) = r.ramtr0;
      s.ramtr[1](j, x, 0) = r.ramtr1;
    }
  }

  // Covariate aggregation.
  for (int d = 0; d < 2; ++d) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < V; ++j) {
        double acc = 0.0;
        for (std::size_t x = 0; x < X; ++x) acc += s.wHat[x] * s.dmtr[d](k, j, x);
        s.dmtrAvg[d](k, j, 0) = acc;
      }
    }
  }
  s.dmteAvg = Array3(K, V, 1);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < V; ++j) {
      double acc = 0.0;
      for (std::size_t x = 0; x < X; ++x) acc += s.wHat[x] * s.dmte(k, j, x);
      s.dmteAvg(k, j, 0) = acc;
    }
  }
  s.qmteAvg = Array3(T, V, 1);
  s.rmteAvg = Array3(V, 1, 1);
  s.tauBarAvg = Array3(V, 1, 1);
  for (std::size_t j = 0; j < V; ++j) {
    const auto f0 = s.dmtrAvg[0].fiber(j, 0), f1 = s.dmtrAvg[1].fiber(j, 0);
    const Derived r = derive(f0, f1, design, path, last);
    s.tauBarAvg(j, 0, 0) = std::min(r.tauBar0, r.tauBar1);
    for (std::size_t t = 0; t < T; ++t) s.qmteAvg(t, j, 0) = r.qmte[t];
    s.rmteAvg(j, 0, 0) = -integrateFiber(path, s.dmteAvg.fiber(j, 0), 0.0);
  }
  return s;
}

std::vector<double> levelShares(const ObservationTable& table, std::span<const double> weights) {
  std::vector<double> w(table.numLevels(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double wi = weights.empty() ? 1.0 : weights[i];
    w[static_cast<std::size_t>(table[i].x)] += wi;
    total += wi;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidArgument, "weights sum to zero");
  for (double& v : w) v /= total;
  return w;
}

MteSurfaces assembleSurfaces(const DistRegFit& fit, const ObservationTable& table,
                             const EvalDesign& design, const DmtrOptions& options,
                             std::span<const double> weights) {
  RawDmtr raw = estimateDmtr(fit, table, design, options, weights);
  std::size_t imputed = monotonizeAndClamp(raw.arm[0]);
  imputed += monotonizeAndClamp(raw.arm[1]);
  std::vector<std::string> labels;
  for (const auto& l : table.xLevels()) labels.push_back(l.label);
  MteSurfaces s = assembleFromDmtr(raw.arm[0], raw.arm[1], design, table.gammaCHat(),
                                   levelShares(table, weights), std::move(labels));
  s.imputed = imputed;
  s.missing = std::move(raw.missing);
  return s;
}

RestrictedMeans restrictedMeanDecomposition(const MteSurfaces& surfaces, std::size_t vIndex,
                                            std::size_t x) {
  return {surfaces.ramtr[1](vIndex, x, 0), surfaces.ramtr[0](vIndex, x, 0)};
}

ConditionalDmtr estimateConditionalDmtr(const DistRegFit& fit, const EvalDesign& design, double c,
                                        std::optional<std::vector<std::size_t>> thresholds) {
  ConditionalDmtr out;
  out.c = c;
  if (thresholds) {
    for (std::size_t k : *thresholds) {
      if (k >= design.y.size()) throw Error(ErrorCode::kInvalidArgument, "threshold index out of range");
      if (!(c > design.y[k])) {
        throw Error(ErrorCode::kInvalidHorizon, "censoring value must exceed the threshold",
                    {{"k", k}, {"y", design.y[k]}, {"c", c}});
      }
    }
    out.k = *thresholds;
  } else {
    for (std::size_t k = 0; k < design.y.size(); ++k) {
      if (design.y[k] < c) out.k.push_back(k);
    }
  }
  const std::size_t X = fit.numLevels;
  for (int d = 0; d < 2; ++d) {
    out.arm[d] = Array3(out.k.size(), design.v.size(), X);
    const double sign = d == 1 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < out.k.size(); ++i) {
      if (!fit.cell(out.k[i], d).usable()) continue;
      for (std::size_t j = 0; j < design.v.size(); ++j) {
        const GammaEvaluator gamma(fit, out.k[i], d, design.v[j]);
        for (std::size_t x = 0; x < X; ++x) out.arm[d](i, j, x) = sign * gamma(c, static_cast<int>(x));
      }
    }
  }
  return out;
}

}  // namespace censmte
