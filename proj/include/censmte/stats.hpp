#pragma once

#include <span>
#include <vector>

namespace censmte {

// Linear-interpolation quantile (R type 7) of an ascending-sorted sample.
double quantileSorted(std::span<const double> sorted, double prob);

// Right-continuous inverse of the empirical CDF: the smallest sample value q
// with F_n(q) >= prob. Sorts a copy of the input.
double empiricalInverseCdf(std::vector<double> sample, double prob);

// Trapezoid rule over (nodes, values); both must have the same length.
double trapezoid(std::span<const double> nodes, std::span<const double> values);

}  // namespace censmte
