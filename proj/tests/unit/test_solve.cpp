#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "qosshare/robust.hpp"
#include "qosshare/solve.hpp"

using namespace qosshare;

namespace {

Polyhedron random_lp(RandomStream& rng, int n, int m) {
    Polyhedron p;
    for (int j = 0; j < n; ++j) p.add_variable(0.0, 1.0 + 4.0 * rng.uniform());
    for (int i = 0; i < m; ++i) {
        Row r;
        for (int j = 0; j < n; ++j)
            if (rng.uniform() < 0.7) r.terms.push_back({j, std::round((rng.uniform() * 4 - 2) * 4) / 4});
        const double u = rng.uniform();
        r.sense = u < 0.6 ? RowSense::Le : u < 0.85 ? RowSense::Ge : RowSense::Eq;
        r.rhs = std::round((rng.uniform() * 4 - 1) * 4) / 4;
        p.add_row(r);
    }
    return p;
}

}  // namespace

TEST_CASE("toy LPs") {
    Polyhedron p;
    p.add_variable(0.0, kInf);
    p.add_variable(0.0, kInf);
    p.add_row({{{0, 1.0}, {1, 1.0}}, RowSense::Eq, 1.0, ""});
    const std::vector<double> c{3.0, 1.0};
    const SolveReport r = lp_solve(c, p);
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(3.0));
    CHECK(r.point[0] == doctest::Approx(1.0));

    Polyhedron box;
    box.add_variable(0.0, 0.7);
    const std::vector<double> one{1.0};
    CHECK(lp_solve(one, box).objective == doctest::Approx(0.7));

    // redundant duplicated rows change nothing
    Polyhedron dup = p;
    dup.add_row({{{0, 1.0}, {1, 1.0}}, RowSense::Eq, 1.0, ""});
    dup.add_row({{{0, 2.0}, {1, 2.0}}, RowSense::Eq, 2.0, ""});
    const SolveReport rd = lp_solve(c, dup);
    CHECK(rd.status == SolveStatus::Optimal);
    CHECK(rd.objective == doctest::Approx(3.0));

    Polyhedron unb;
    unb.add_variable(0.0, kInf);
    CHECK(lp_solve(one, unb).status == SolveStatus::Unbounded);

    Polyhedron inf;
    inf.add_variable(0.0, 1.0);
    inf.add_row({{{0, 1.0}}, RowSense::Ge, 2.0, ""});
    CHECK(lp_solve(one, inf).status == SolveStatus::Infeasible);
}

TEST_CASE("LP matches vertex enumeration") {
    RandomStream rng(21, StreamTag::Test);
    int feasible = 0;
    for (int rep = 0; rep < 150; ++rep) {
        const int n = 2 + static_cast<int>(rng.uniform() * 4);
        const int m = 1 + static_cast<int>(rng.uniform() * 6);
        const Polyhedron p = random_lp(rng, n, m);
        std::vector<double> c(static_cast<std::size_t>(n));
        for (double& x : c) x = rng.uniform() * 2 - 1;
        const auto ref = oracle::enumerate_vertices(c, p);
        const SolveReport r = lp_solve(c, p);
        if (!ref.feasible) {
            CHECK(r.status == SolveStatus::Infeasible);
            continue;
        }
        ++feasible;
        REQUIRE(r.status == SolveStatus::Optimal);
        CHECK(std::abs(r.objective - ref.value) < 1e-8);
        CHECK(p.max_violation(r.point) < 1e-9);
    }
    CHECK(feasible > 30);
}

TEST_CASE("warm re-solves agree with cold solves") {
    RandomStream rng(22, StreamTag::Test);
    const Polyhedron p = random_lp(rng, 5, 4);
    LpSolver warm(p);
    for (int rep = 0; rep < 60; ++rep) {
        std::vector<double> c(5);
        for (double& x : c) x = rng.uniform() * 2 - 1;
        const SolveReport a = warm.maximize(c);
        const SolveReport b = lp_solve(c, p);
        REQUIRE(a.status == b.status);
        if (a.status == SolveStatus::Optimal) CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-10));
    }
}

TEST_CASE("drift objective hand expansion") {
    const Topology t = Topology::full_mesh(1, 1, {0.5}, 1.0);
    const UtilityFunction f(UtilityFunction::Linear{{3.0}});
    const DriftObjective h(t, 1, PriorMode::PerSlot, {2.0}, 1.0, f);
    const std::vector<double> z{0.4};
    CHECK(h.value(z) == doctest::Approx(2.5 * 0.4));
    CHECK(h.linear());

    const UtilityFunction af(UtilityFunction::AlphaFair{{1.0}, {0.5}}, 1);
    const DriftObjective pure(t, 1, PriorMode::PerSlot, {0.0}, 1.0, af);
    CHECK(pure.value(z) == doctest::Approx(af.value(std::vector<double>{0.2})));
    const DriftObjective lin(t, 1, PriorMode::PerSlot, {1.0}, 0.0, af);
    CHECK(lin.linear());
}

TEST_CASE("alpha-fair gradient matches finite differences") {
    const UtilityFunction f(UtilityFunction::AlphaFair{{0.106, 0.516, 0.7}, {0.5, 0.875, 0.75}}, 3);
    RandomStream rng(23, StreamTag::Test);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(6);
        for (double& v : x) v = 0.01 + 20.0 * rng.uniform();
        std::vector<double> g(6);
        f.gradient(x, g);
        for (std::size_t j = 0; j < x.size(); ++j) {
            auto lo = x, hi = x;
            lo[j] -= 1e-6;
            hi[j] += 1e-6;
            const double fd = (f.value(hi) - f.value(lo)) / 2e-6;
            CHECK(std::abs(fd - g[j]) <= 1e-5 * std::abs(g[j]));
        }
    }
    CHECK(f.f_min(6, 50.0) == 0.0);
    CHECK(f.f_max(6, 50.0) > 0.0);
}

TEST_CASE("Frank-Wolfe on a drift objective") {
    const Topology t = Topology::full_mesh(3, 2, {0.9, 0.7}, 1.0);
    QosSpec s = QosSpec::none(t, 4);
    s.gamma[t.pair(0, 0)] = 0.1;
    s.q[t.pair(0, 0)] = 0.5;
    const LinearizedDomain d = build_linearized_polyhedron(t, s, PriorMode::FrameConstant);
    const UtilityFunction f(UtilityFunction::AlphaFair{{1.0, 0.5}, {0.5, 0.75}}, 2);
    const DriftObjective h(t, 4, PriorMode::FrameConstant, {3, 0, 1, 0, 0, 2}, 2.0, f);
    SolverOptions opts;
    opts.tol = 1e-7;
    const SolveReport r = maximize_over_polyhedron(h, d.poly, opts);
    REQUIRE(r.status == SolveStatus::GapReached);
    CHECK(d.poly.max_violation(r.point) < 1e-9);
    // certificate re-evaluation
    std::vector<double> g(r.point.size());
    h.gradient(r.point, g);
    const SolveReport lp = lp_solve(g, d.poly);
    double gx = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) gx += g[j] * r.point[j];
    CHECK(std::abs((lp.objective - gx) - r.gap) < 1e-9);
    // no feasible vertex does better than the bound
    CHECK(h.value(lp.point) <= r.objective + r.gap + 1e-9);

    // warm start gives the same optimum up to tolerance
    FrankWolfe fw(d.poly, opts);
    const DriftObjective h2(t, 4, PriorMode::FrameConstant, {0, 5, 0, 0, 1, 0}, 2.0, f);
    fw.maximize(h2);
    const SolveReport warm = fw.maximize(h);
    CHECK(std::abs(warm.objective - r.objective) <= r.gap + warm.gap + 1e-9);
}
