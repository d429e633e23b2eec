#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qosshare/analysis.hpp"
#include "qosshare/error.hpp"

using namespace qosshare;

TEST_CASE("throughput bound") {
    const Topology t = Topology::full_mesh(1, 1, std::vector<double>(10, 0.9), 1.0);
    QosSpec s = QosSpec::none(t, 300);
    s.gamma[0] = 0.0204;
    s.q[0] = 0.99;
    CHECK(throughput_bound(s, t)[0] == doctest::Approx(60.588).epsilon(1e-12));
    s.q[0] = 0.0;
    CHECK(throughput_bound(s, t)[0] == 0.0);
    s.q[0] = 0.5;
    s.gamma[0] = 0.0;
    CHECK(throughput_bound(s, t)[0] == 0.0);
}

TEST_CASE("sufficient gamma q (Eq. 28)") {
    // (156 + 90000 + 300 + 2*144*1600) / (2*12*10*300*1601)
    const double hand = 551256.0 / 115272000.0;
    const double v = sufficient_gamma_q(1600.0, 156.0, 12.0, 300, 1.0, 10);
    CHECK(v == doctest::Approx(hand).epsilon(1e-14));
    CHECK(std::abs(v - 4.78222e-3) < 1e-8);
    CHECK(6.83175e-3 * 0.7 >= v);
    CHECK(sufficient_gamma_q(1e12, 156.0, 12.0, 300, 1.0, 10) == doctest::Approx(12.0 / 3000.0).epsilon(1e-6));
    CHECK_THROWS_AS(sufficient_gamma_q(1600.0, 0.0, 0.0, 300, 1.0, 10), Error);
}

TEST_CASE("delay bound (Eq. 27)") {
    const Topology t = Topology::full_mesh(2, 1, std::vector<double>(10, 0.9), 1.0);
    QosSpec s = QosSpec::none(t, 300);
    s.gamma[0] = 6.83175e-3;
    s.q[0] = 0.7;
    s.gamma[1] = 0.003;
    s.q[1] = 0.5;
    const ArrivalProcess arr({PoissonArrivals{12.0}, PoissonArrivals{12.0}}, 1000);
    const auto d = delay_bound(s, t, arr);
    REQUIRE(d[0].has_value());
    const double mu = 3000.0 * 6.83175e-3 * 0.7;
    const double hand = (156.0 + 90000.0 + 300.0 - 24.0 * mu) / (24.0 * (mu - 12.0));
    CHECK(*d[0] == doctest::Approx(hand).epsilon(1e-9));
    CHECK(*d[0] <= 1600.0);
    CHECK(!d[1].has_value());  // K T_s gamma q = 4.5 < 12
}

TEST_CASE("guarantee report") {
    const Topology t = Topology::full_mesh(1, 2, std::vector<double>(10, 0.9), 1.0);
    QosSpec s = QosSpec::none(t, 300);
    s.gamma[1] = 6.83175e-3;
    s.q[1] = 0.7;
    const ArrivalProcess arr({NoArrivals{}, PoissonArrivals{12.0}}, 1000);
    const GuaranteeReport r = guarantee_report(t, s, arr, {{1, 1600.0}});
    CHECK(r.pairs.size() == 2);
    CHECK(!r.pairs[0].delay.has_value());
    CHECK(r.pairs[0].throughput == 0.0);
    CHECK(std::abs(*r.pairs[1].gamma_q_threshold - 4.78222e-3) < 1e-8);
    CHECK(r.pairs[1].rate_covered);
    CHECK(r.approximation_gap == doctest::Approx(r.constants.k1 / std::sqrt(300.0)));
}

TEST_CASE("stability membership") {
    const Topology t = Topology::full_mesh(2, 1, {0.9, 0.8}, 2.0);
    QosSpec s = QosSpec::none(t, 5);
    s.gamma[0] = 0.1;
    s.q[0] = 0.5;
    const std::vector<double> zero{0.0, 0.0};
    const Membership m0 = stability_membership(zero, t, s);
    CHECK(m0.member);
    REQUIRE(m0.witness.has_value());
    for (const auto& [pair, slack] : check_linearized_feasible(*m0.witness, t, s)) CHECK(slack > -1e-9);

    const std::vector<double> huge{20.0, 0.0};  // above K T_s r_max = 8.5
    CHECK(!stability_membership(huge, t, s).member);

    // enlarging lambda never turns a non-member into a member
    bool was_member = true;
    for (double l = 0.5; l < 9.0; l += 0.5) {
        const std::vector<double> lam{l, l / 2};
        const bool now = stability_membership(lam, t, s).member;
        CHECK((was_member || !now));
        was_member = now;
    }
    const Membership ps = stability_membership(std::vector<double>{2.0, 1.0}, t, s, PriorMode::PerSlot);
    CHECK(ps.member == stability_membership(std::vector<double>{2.0, 1.0}, t, s).member);
}

TEST_CASE("Slater margin") {
    const Topology e = Topology::full_mesh(101, 1, {0.8}, 1.0);
    QosSpec s = QosSpec::none(e, 300);
    for (int p = 0; p < 101; ++p) {
        s.gamma[static_cast<std::size_t>(p)] = 6.72e-3;
        s.q[static_cast<std::size_t>(p)] = 2e-4;
    }
    const SlaterEstimate est = slater_margin(e, s, std::nullopt);
    CHECK(est.zeta > 0.0);
    CHECK(est.assumption_holds);
    CHECK(est.k2.has_value());
    CHECK(!est.k4.has_value());

    const Topology t = Topology::full_mesh(2, 1, {0.9, 0.8}, 2.0);
    QosSpec q = QosSpec::none(t, 5);
    const SlaterEstimate none = slater_margin(t, q, std::nullopt);
    CHECK(none.unbounded);
    CHECK(std::isinf(none.zeta));
    CHECK(!none.k2.has_value());

    q.gamma[0] = 0.1;
    q.q[0] = 0.5;
    const SlaterEstimate a = slater_margin(t, q, std::nullopt);
    REQUIRE(a.zeta > 0.0);
    q.gamma[0] += a.zeta;  // the boundary of feasibility
    const SlaterEstimate b = slater_margin(t, q, std::nullopt);
    CHECK(b.zeta < 1e-9);
    CHECK(!b.assumption_holds);
    q.gamma[0] += 0.01;
    CHECK_THROWS_AS(slater_margin(t, q, std::nullopt), Error);

    q.gamma[0] = 0.1;
    const std::vector<double> lam{2.0, 1.0};
    const SlaterEstimate c = slater_margin(t, q, std::span<const double>(lam));
    REQUIRE(c.delta_min.has_value());
    CHECK(*c.delta_min == doctest::Approx(1.0 / 10.0));
    REQUIRE(c.epsilon.has_value());
    CHECK(*c.epsilon == doctest::Approx(2.0 * *c.k2 / (2.0 * 0.1) / std::sqrt(5.0)));
    CHECK(c.k3(10.0, 4.0, 3.0, 2, 5).value() == doctest::Approx((100.0 + 12.0) / c.zeta));
}
