#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "qosshare/error.hpp"
#include "qosshare/policy.hpp"

using namespace qosshare;

namespace {

double h_value(const Topology& t, const SchedulePrior& p, const std::vector<double>& q, double v,
               const UtilityFunction& f) {
    const auto x = p.expected_service(t);
    double h = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) h += q[i] * x[i];
    return h + v * f.value(x);
}

}  // namespace

TEST_CASE("V rule") {
    CHECK(VRule{5.0, 1.0 / 3.0}.eval(3000) == doctest::Approx(5.0 * std::cbrt(3000.0)));
    CHECK(VRule{}.eval(500) == doctest::Approx(39.685).epsilon(1e-4));
    PolicyConfig c;
    c.v = 2.5;
    CHECK(c.resolve_v(100) == 2.5);
}

TEST_CASE("max-weight behaviour with no QoS and V = 0") {
    const Topology t = Topology::full_mesh(2, 1, {0.9, 0.6}, 2.0);
    const QueueState q{{0, 7}, 0};
    const UtilityFunction f = UtilityFunction::zero(t.pair_count());
    const SchedulePrior p = mdp_decide(q, t, QosSpec::none(t, 1), f, 0.0);
    // both InPs serve client 1
    for (int k = 0; k < 2; ++k) CHECK(p.at(*t.link_index(k, 1), 0, 0) == doctest::Approx(1.0));
    // value agrees with vertex enumeration of the same LP
    const LinearizedDomain d = build_linearized_polyhedron(t, QosSpec::none(t, 1), PriorMode::PerSlot);
    std::vector<double> c(static_cast<std::size_t>(d.poly.var_count()), 0.0);
    for (int l = 0; l < t.link_count(); ++l) c[static_cast<std::size_t>(l)] = q.backlog[static_cast<std::size_t>(t.link(l).client)] * t.link(l).success_prob;
    const auto ref = oracle::enumerate_vertices(c, d.poly);
    CHECK(h_value(t, p, {0.0, 7.0}, 0.0, f) == doctest::Approx(ref.value));
    const SchedulePrior dp = dp_noqos_decide(q, t, 1, f, 0.0);
    CHECK(dp.values()[0] == p.values()[0]);
}

TEST_CASE("QoS-constrained decisions stay in the domain and trail DP") {
    const Topology t = Topology::full_mesh(3, 2, {0.9, 0.8}, 1.0);
    QosSpec s = QosSpec::none(t, 6);
    s.gamma[t.pair(0, 0)] = 0.15;
    s.q[t.pair(0, 0)] = 0.6;
    s.gamma[t.pair(1, 1)] = 0.05;
    s.q[t.pair(1, 1)] = 0.5;
    const UtilityFunction f(UtilityFunction::AlphaFair{{1.0, 0.5}, {0.5, 0.75}}, 2);
    const QueueState q{{0, 3, 0, 0, 4, 9}, 0};
    for (PriorMode mode : {PriorMode::PerSlot, PriorMode::FrameConstant}) {
        SolverOptions opts;
        opts.tol = 1e-7;
        const SchedulePrior m = mdp_decide(q, t, s, f, 2.0, mode, opts);
        CHECK_NOTHROW(m.validate(t));
        for (const auto& [pair, slack] : check_linearized_feasible(m, t, s)) CHECK(slack > -1e-7);
        const SchedulePrior d = dp_noqos_decide(q, t, 6, f, 2.0, mode, opts);
        const std::vector<double> qd(q.backlog.begin(), q.backlog.end());
        CHECK(h_value(t, d, qd, 2.0, f) >= h_value(t, m, qd, 2.0, f) - 1e-5 * h_value(t, d, qd, 2.0, f));
    }
}

TEST_CASE("zero backlog maximizes utility alone; larger V never lowers utility") {
    const Topology t = Topology::full_mesh(2, 2, {0.9, 0.7}, 1.0);
    QosSpec s = QosSpec::none(t, 4);
    s.gamma[t.pair(0, 0)] = 0.1;
    s.q[t.pair(0, 0)] = 0.5;
    const UtilityFunction f(UtilityFunction::AlphaFair{{1.0, 0.5}, {0.5, 0.75}}, 2);
    SolverOptions opts;
    opts.tol = 1e-8;
    const QueueState q0 = QueueState::empty(4);
    const SchedulePrior a = mdp_decide(q0, t, s, f, 1.0, PriorMode::PerSlot, opts);
    const SchedulePrior b = mdp_decide(q0, t, s, f, 10.0, PriorMode::PerSlot, opts);
    CHECK(f.value(a.expected_service(t)) == doctest::Approx(f.value(b.expected_service(t))).epsilon(1e-6));

    const QueueState q{{5, 0, 0, 2}, 0};
    double prev = -INFINITY;
    for (double v : {0.5, 2.0, 8.0, 32.0}) {
        const SchedulePrior p = mdp_decide(q, t, s, f, v, PriorMode::PerSlot, opts);
        const double u = f.value(p.expected_service(t));
        CHECK(u >= prev - 1e-6);
        prev = u;
    }
}

TEST_CASE("infeasible spec is rejected up front") {
    const Topology t = Topology::full_mesh(1, 1, {0.5}, 1.0);
    QosSpec s = QosSpec::none(t, 2);
    s.gamma[0] = 0.99;
    s.q[0] = 0.5;
    const UtilityFunction f = UtilityFunction::zero(1);
    try {
        Policy p(t, s, f, PolicyConfig{"mdp", PolicyKind::Mdp, 1.0, std::nullopt, PriorMode::PerSlot, {}}, 10);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Infeasible);
    }
}

TEST_CASE("stationary policy") {
    const Topology t = Topology::full_mesh(4, 1, {0.8}, 1.0);
    const UtilityFunction f = UtilityFunction::zero(4);
    const QosSpec s = QosSpec::none(t, 5);
    const SchedulePrior u = SchedulePrior::uniform(t, 5, PriorMode::PerSlot);
    Policy p(t, s, f, PolicyConfig{"u", PolicyKind::Stationary, 0.0, u, PriorMode::PerSlot, {}}, 10);
    const auto d1 = p.decide(QueueState::empty(4));
    const auto d2 = p.decide(QueueState{{3, 1, 4, 1}, 5});
    CHECK(std::equal(d1.prior.values().begin(), d1.prior.values().end(), d2.prior.values().begin()));
    CHECK(stationary_decide(u).values()[0] == u.values()[0]);

    SchedulePrior bad = u;
    bad.at(0, 0, 0) = 0.9;
    CHECK_THROWS_AS(Policy(t, s, f, PolicyConfig{"b", PolicyKind::Stationary, 0.0, bad, PriorMode::PerSlot, {}}, 10),
                    Error);
}
