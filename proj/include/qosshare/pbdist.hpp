#pragma once

// Exact Poisson-binomial law of a sum of independent Bernoulli trials.

#include <span>
#include <utility>
#include <vector>

namespace qosshare::pb {

/// pmf[l] = P(sum = l), l = 0..n, by the O(n^2) convolution recurrence.
std::vector<double> pmf(std::span<const double> probs);

/// P(sum > x), strict. Evaluated from the upper tail for accuracy.
double tail_exceeds(std::span<const double> probs, double x);

/// (mean, variance) = (sum p, sum p(1-p)).
std::pair<double, double> mean_var(std::span<const double> probs);

}  // namespace qosshare::pb
