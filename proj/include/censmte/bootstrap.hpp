#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "censmte/estimator.hpp"

namespace censmte {

enum class WeightLaw {
  kExponential,  // unit-rate exponential: mean 1, variance 1
  kConstant,     // every weight 1; reproduces the point estimate (testing)
};

struct BootstrapPlan {
  std::size_t B = 299;
  double alpha = 0.05;
  WeightLaw weightLaw = WeightLaw::kExponential;
  bool clusterLevel = true;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool keepReplicates = false;
  double maxFailureShare = 0.10;
  double minIdentifiedShare = 0.95;  // quantile-type points

  void validate() const;
};

// Multiplier weights of replicate b (0-based), one per row. Cluster-level
// plans draw one weight per cluster and broadcast it.
std::vector<double> replicateWeights(const ObservationTable& table, const BootstrapPlan& plan,
                                     std::size_t b);

// Symmetric pointwise band for one functional; arrays share the point
// estimate's layout. Unidentified or unavailable points are NaN.
struct Band {
  Array3 estimate;
  Array3 cstar;
  Array3 lo;
  Array3 hi;
  std::vector<std::vector<double>> replicates;  // [b][flat index], when kept
};

struct ConfidenceBands {
  std::size_t requested = 0;
  std::size_t completed = 0;
  std::vector<std::size_t> failed;  // replicate indices dropped
  double alpha = 0.05;
  std::map<std::string, Band> bands;  // keyed by functional name
};

// Functional names covered by the bands, in output order.
const std::vector<std::string>& bandFunctionals();

// The point-estimate array for a functional name.
const Array3& functionalArray(const MteSurfaces& surfaces, const std::string& name);

// Weighted bootstrap around `point`: every replicate refits the propensity
// score, the distribution regressions and the surfaces on point.design.
// Throws ReplicateFailure when more than maxFailureShare of replicates fail.
ConfidenceBands runBootstrap(const ObservationTable& table, const EstimatorOptions& options,
                             const MteSurfaces& point, const BootstrapPlan& plan);

}  // namespace censmte
