#include "censmte/bootstrap.hpp"

#include <cmath>

#include "censmte/error.hpp"
#include "censmte/parallel.hpp"
#include "censmte/rng.hpp"
#include "censmte/stats.hpp"

namespace censmte {

void BootstrapPlan::validate() const {
  if (B < 1) throw Error(ErrorCode::kInvalidArgument, "bootstrap needs B >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  if (!(maxFailureShare >= 0.0 && maxFailureShare <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "failure share must lie in [0, 1]");
  }
}

std::vector<double> replicateWeights(const ObservationTable& table, const BootstrapPlan& plan,
                                     std::size_t b) {
  std::vector<double> w(table.size(), 1.0);
  if (plan.weightLaw == WeightLaw::kConstant) return w;
  const CounterRng rng(plan.seed, static_cast<std::uint64_t>(b) + 1);
  if (plan.clusterLevel) {
    std::vector<double> cw(table.numClusters());
    for (std::size_t g = 0; g < cw.size(); ++g) cw[g] = rng.exponential(g);
    for (std::size_t i = 0; i < table.size(); ++i) w[i] = cw[static_cast<std::size_t>(table[i].cluster)];
  } else {
    for (std::size_t i = 0; i < table.size(); ++i) w[i] = rng.exponential(i);
  }
  return w;
}

const std::vector<std::string>& bandFunctionals() {
  static const std::vector<std::string> names = {"dmtr0", "dmtr1", "dmte", "qmte", "rmte",
                                                 "dmte_avg", "qmte_avg", "rmte_avg"};
  return names;
}

const Array3& functionalArray(const MteSurfaces& s, const std::string& name) {
  if (name == "dmtr0") return s.dmtr[0];
  if (name == "dmtr1") return s.dmtr[1];
  if (name == "dmte") return s.dmte;
  if (name == "qmte") return s.qmte;
  if (name == "rmte") return s.rmte;
  if (name == "dmte_avg") return s.dmteAvg;
  if (name == "qmte_avg") return s.qmteAvg;
  if (name == "rmte_avg") return s.rmteAvg;
  throw Error(ErrorCode::kInvalidArgument, "unknown functional '" + name + "'");
}

namespace {

bool isQuantileType(const std::string& name) { return name == "qmte" || name == "qmte_avg"; }

}  // namespace

ConfidenceBands runBootstrap(const ObservationTable& table, const EstimatorOptions& options,
                             const MteSurfaces& point, const BootstrapPlan& plan) {
  plan.validate();
  if (plan.clusterLevel && plan.weightLaw != WeightLaw::kConstant && table.numClusters() < 2) {
    // One shared multiplier rescales every row and reproduces the estimate.
    throw Error(ErrorCode::kTooFewClusters, "cluster-level weights need at least two clusters",
                {{"clusters", table.numClusters()}});
  }
  const auto& names = bandFunctionals();

  // Each replicate's functionals, flattened per name; empty when it failed.
  std::vector<std::vector<std::vector<double>>> draws(plan.B);
  std::vector<char> ok(plan.B, 0);
  EstimatorOptions inner = options;
  inner.distreg.threads = 1;
  inner.dmtr.threads = 1;
  parallelFor(plan.B, plan.threads, [&](std::size_t b) {
    try {
      const auto w = replicateWeights(table, plan, b);
      const MteSurfaces s = estimateWeighted(table, inner, point.design, w);
      auto& out = draws[b];
      for (const auto& name : names) out.push_back(functionalArray(s, name).data());
      ok[b] = 1;
    } catch (const Error&) {
      draws[b].clear();
    }
  });

  ConfidenceBands bands;
  bands.requested = plan.B;
  bands.alpha = plan.alpha;
  for (std::size_t b = 0; b < plan.B; ++b) {
    if (ok[b]) {
      ++bands.completed;
    } else {
      bands.failed.push_back(b);
    }
  }
  if (static_cast<double>(bands.failed.size()) > plan.maxFailureShare * static_cast<double>(plan.B) ||
      bands.completed == 0) {
    throw Error(ErrorCode::kReplicateFailure, "too many bootstrap replicates failed",
                {{"failed", bands.failed.size()}, {"requested", plan.B}, {"replicates", bands.failed}});
  }

  for (std::size_t f = 0; f < names.size(); ++f) {
    const Array3& est = functionalArray(point, names[f]);
    Band band;
    band.estimate = est;
    band.cstar = Array3(est.dim0(), est.dim1(), est.dim2());
    band.lo = band.cstar;
    band.hi = band.cstar;
    const bool quantileType = isQuantileType(names[f]);
    std::vector<double> dev;
    dev.reserve(bands.completed);
    for (std::size_t p = 0; p < est.data().size(); ++p) {
      const double theta = est.data()[p];
      if (isMissing(theta)) continue;
      dev.clear();
      for (std::size_t b = 0; b < plan.B; ++b) {
        if (!ok[b]) continue;
        const double t = draws[b][f][p];
        if (!isMissing(t)) dev.push_back(std::abs(t - theta));
      }
      const double share = static_cast<double>(dev.size()) / static_cast<double>(bands.completed);
      if (dev.empty() || (quantileType && share < plan.minIdentifiedShare)) continue;
      const double c = empiricalInverseCdf(dev, 1.0 - plan.alpha);
      band.cstar.data()[p] = c;
      band.lo.data()[p] = theta - c;
      band.hi.data()[p] = theta + c;
    }
    if (plan.keepReplicates) {
      for (std::size_t b = 0; b < plan.B; ++b) {
        if (ok[b]) band.replicates.push_back(draws[b][f]);
      }
    }
    bands.bands.emplace(names[f], std::move(band));
  }
  return bands;
}

}  // namespace censmte
