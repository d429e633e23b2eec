#include "qosshare/pbdist.hpp"

#include <cmath>

#include "qosshare/error.hpp"

namespace qosshare::pb {

namespace {

void check(std::span<const double> probs) {
    for (double p : probs) require(p >= 0.0 && p <= 1.0, "pb: probabilities must lie in [0,1]");
}

}  // namespace

std::vector<double> pmf(std::span<const double> probs) {
    check(probs);
    std::vector<double> dist(probs.size() + 1, 0.0);
    dist[0] = 1.0;
    std::size_t len = 1;
    for (double p : probs) {
        const double q = 1.0 - p;
        dist[len] = dist[len - 1] * p;
        for (std::size_t l = len - 1; l > 0; --l) dist[l] = dist[l] * q + dist[l - 1] * p;
        dist[0] *= q;
        ++len;
    }
    return dist;
}

double tail_exceeds(std::span<const double> probs, double x) {
    const auto dist = pmf(probs);
    const auto n = static_cast<double>(probs.size());
    if (x < 0.0) return 1.0;
    if (x >= n) return 0.0;
    // smallest integer l with l > x
    const auto first = static_cast<std::size_t>(std::floor(x)) + 1;
    double tail = 0.0;
    for (std::size_t l = dist.size(); l-- > first;) tail += dist[l];
    return std::min(tail, 1.0);
}

std::pair<double, double> mean_var(std::span<const double> probs) {
    check(probs);
    double m = 0.0, v = 0.0;
    for (double p : probs) {
        m += p;
        v += p * (1.0 - p);
    }
    return {m, v};
}

}  // namespace qosshare::pb
