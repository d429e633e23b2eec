#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qosshare/model.hpp"
#include "qosshare/pbdist.hpp"

using namespace qosshare;

namespace {

std::vector<double> enumerate(const std::vector<double>& p) {
    const std::size_t n = p.size();
    std::vector<double> out(n + 1, 0.0);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double w = 1.0;
        int k = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const bool on = (mask >> j) & 1u;
            w *= on ? p[j] : 1.0 - p[j];
            k += on;
        }
        out[static_cast<std::size_t>(k)] += w;
    }
    return out;
}

}  // namespace

TEST_CASE("pmf examples") {
    CHECK(pb::pmf({}) == std::vector<double>{1.0});
    const std::vector<double> half{0.5, 0.5};
    const auto h = pb::pmf(half);
    CHECK(h[0] == doctest::Approx(0.25));
    CHECK(h[1] == doctest::Approx(0.5));
    CHECK(h[2] == doctest::Approx(0.25));
    const std::vector<double> p{0.8, 0.9, 0.6};
    const auto f = pb::pmf(p);
    CHECK(f[3] == doctest::Approx(0.432).epsilon(1e-14));
    CHECK(f[0] == doctest::Approx(0.008).epsilon(1e-14));
}

TEST_CASE("tail examples") {
    const std::vector<double> zeros(4, 0.0);
    CHECK(pb::tail_exceeds(zeros, 0.0) == 0.0);
    const std::vector<double> half{0.5, 0.5};
    CHECK(pb::tail_exceeds(half, 0.0) == doctest::Approx(0.75));
    const std::vector<double> ones(5, 1.0);
    CHECK(pb::tail_exceeds(ones, 4.0) == 1.0);
    CHECK(pb::tail_exceeds(ones, 5.0) == 0.0);  // strict
    const std::vector<double> b(2, 0.8);
    CHECK(pb::tail_exceeds(b, 2.016) == 0.0);
    const std::vector<double> b3(3, 0.8);
    CHECK(pb::tail_exceeds(b3, 2.016) == doctest::Approx(0.512));
}

TEST_CASE("mean and variance") {
    const std::vector<double> p{0.8, 0.9, 0.6};
    const auto [m, v] = pb::mean_var(p);
    CHECK(m == doctest::Approx(2.3));
    CHECK(v == doctest::Approx(0.49));  // 0.16 + 0.09 + 0.24
    const std::vector<double> one(3, 1.0);
    CHECK(pb::mean_var(one).second == 0.0);
}

TEST_CASE("pmf matches enumeration and sums to one") {
    RandomStream rng(11, StreamTag::Test);
    for (int rep = 0; rep < 40; ++rep) {
        const int n = 1 + static_cast<int>(rng.uniform() * 14);
        std::vector<double> p(static_cast<std::size_t>(n));
        for (double& x : p) x = rng.uniform();
        const auto a = pb::pmf(p);
        const auto b = enumerate(p);
        for (std::size_t l = 0; l < a.size(); ++l) CHECK(std::abs(a[l] - b[l]) < 1e-12);
    }
    std::vector<double> big(10000);
    for (double& x : big) x = rng.uniform();
    const auto f = pb::pmf(big);
    CHECK(std::abs(std::accumulate(f.begin(), f.end(), 0.0) - 1.0) < 1e-12);
}

TEST_CASE("tail is monotone") {
    RandomStream rng(12, StreamTag::Test);
    std::vector<double> p(12);
    for (double& x : p) x = rng.uniform();
    double prev = 1.0;
    for (double x = -1.0; x < 13.0; x += 0.25) {
        const double t = pb::tail_exceeds(p, x);
        CHECK(t <= prev + 1e-15);
        prev = t;
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
        auto q = p;
        q[j] = std::min(1.0, q[j] + 0.1);
        CHECK(pb::tail_exceeds(q, 5.5) >= pb::tail_exceeds(p, 5.5) - 1e-15);
    }
}
