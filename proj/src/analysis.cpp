#include "qosshare/analysis.hpp"

#include <cmath>
#include <limits>

#include "qosshare/error.hpp"
#include "qosshare/solve.hpp"

namespace qosshare {

std::vector<double> throughput_bound(const QosSpec& spec, const Topology& topo) {
    const double KTs = static_cast<double>(topo.inp_count()) * spec.frame_slots;
    std::vector<double> out(static_cast<std::size_t>(topo.pair_count()), 0.0);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = KTs * spec.gamma[p] * spec.q[p];
    return out;
}

std::vector<std::optional<double>> delay_bound(const QosSpec& spec, const Topology& topo,
                                               const ArrivalProcess& arrivals) {
    const double Ts = spec.frame_slots;
    const std::vector<double> mu = throughput_bound(spec, topo);
    std::vector<std::optional<double>> out(mu.size());
    for (std::size_t p = 0; p < mu.size(); ++p) {
        const double lam = arrivals.mean(static_cast<PairId>(p));
        if (lam <= 0.0 || mu[p] <= lam) continue;
        const double u = topo.rate_cap(topo.client_of(static_cast<PairId>(p)));
        const double num = arrivals.second_moment(static_cast<PairId>(p)) + Ts * Ts * u * u + Ts * u - 2.0 * lam * mu[p];
        out[p] = num / (2.0 * lam * (mu[p] - lam));
    }
    return out;
}

double sufficient_gamma_q(double w_star, double second_moment, double lambda, int frame_slots,
                          double rate_cap, int inps) {
    require(w_star > 0.0, "sufficient_gamma_q: W* must be positive");
    if (lambda <= 0.0) fail(ErrorCode::InvalidArgument, "sufficient_gamma_q: lambda must be positive");
    const double Ts = frame_slots;
    const double num = second_moment + Ts * Ts * rate_cap * rate_cap + Ts * rate_cap + 2.0 * lambda * lambda * w_star;
    return num / (2.0 * lambda * inps * Ts * (w_star + 1.0));
}

GuaranteeReport guarantee_report(const Topology& topo, const QosSpec& spec,
                                 const ArrivalProcess& arrivals,
                                 const std::map<PairId, double>& w_star) {
    GuaranteeReport rep;
    rep.constants = theory_constants(topo, spec, arrivals);
    rep.approximation_gap = rep.constants.k1 / std::sqrt(static_cast<double>(spec.frame_slots));
    const ProtectionLevel level = gamma_level(spec, topo);
    const std::vector<double> mu = throughput_bound(spec, topo);
    const auto delays = delay_bound(spec, topo, arrivals);
    const double KTs = static_cast<double>(topo.inp_count()) * spec.frame_slots;
    for (PairId p = 0; p < topo.pair_count(); ++p) {
        const auto i = static_cast<std::size_t>(p);
        PairGuarantee g;
        g.pair = p;
        g.lambda = arrivals.mean(p);
        g.gamma_level = level.at(p);
        g.throughput = mu[i];
        g.delay = delays[i];
        g.rate_covered = spec.gamma[i] * spec.q[i] > g.lambda / KTs;
        if (auto it = w_star.find(p); it != w_star.end()) {
            g.w_star = it->second;
            if (g.lambda > 0.0)
                g.gamma_q_threshold = sufficient_gamma_q(it->second, arrivals.second_moment(p), g.lambda,
                                                         spec.frame_slots, topo.rate_cap(topo.client_of(p)),
                                                         topo.inp_count());
        }
        if (spec.active(p)) {
            g.condition_threshold = rep.constants.condition_threshold.at(p);
            g.condition_met = rep.constants.condition_met.at(p);
        }
        rep.pairs.push_back(g);
    }
    return rep;
}

namespace {

// Copy of the domain polyhedron with an optional zeta column on the QoS rows
// and expected-service rows for positive lambda.
Polyhedron extended(const LinearizedDomain& dom, const Topology& topo, const QosSpec& spec,
                    std::optional<std::span<const double>> lambda, bool with_zeta, int& zeta_var) {
    Polyhedron out;
    const Polyhedron& src = dom.poly;
    for (int j = 0; j < src.var_count(); ++j) out.add_variable(src.lower(j), src.upper(j), src.name(j));
    zeta_var = -1;
    if (with_zeta) zeta_var = out.add_variable(0.0, 1.0, "zeta");
    const double KTs = static_cast<double>(topo.inp_count()) * spec.frame_slots;
    for (Row r : src.rows()) {
        if (with_zeta && r.tag.rfind("qos", 0) == 0) r.terms.push_back({zeta_var, -KTs});
        out.add_row(std::move(r));
    }
    if (lambda) {
        require(static_cast<int>(lambda->size()) == topo.pair_count(), "lambda size mismatch");
        const SchedulePrior shape(topo, spec.frame_slots, dom.layout.mode);
        const double mult = dom.layout.mode == PriorMode::PerSlot ? 1.0 : static_cast<double>(spec.frame_slots);
        for (PairId p = 0; p < topo.pair_count(); ++p) {
            const double lam = (*lambda)[static_cast<std::size_t>(p)];
            require(lam >= 0.0 && std::isfinite(lam), "lambda must be finite and nonnegative");
            if (lam == 0.0) continue;
            const int i = topo.client_of(p), c = topo.class_of(p);
            Row r{{}, RowSense::Ge, lam, "rate i" + std::to_string(i) + " c" + std::to_string(c)};
            for (int l : topo.links_of_client(i))
                for (int s = 0; s < shape.stored_slots(); ++s)
                    r.terms.push_back({static_cast<int>(shape.index(l, c, s)), topo.link(l).success_prob * mult});
            out.add_row(std::move(r));
        }
    }
    return out;
}

}  // namespace

Membership stability_membership(std::span<const double> lambda, const Topology& topo,
                                const QosSpec& spec, PriorMode mode) {
    const LinearizedDomain dom = build_linearized_polyhedron(topo, spec, mode);
    int unused = -1;
    const Polyhedron poly = extended(dom, topo, spec, lambda, false, unused);
    const std::vector<double> zero(static_cast<std::size_t>(poly.var_count()), 0.0);
    const SolveReport rep = lp_solve(zero, poly);
    Membership m;
    if (rep.status != SolveStatus::Optimal) {
        m.evidence = "no prior in the linearized domain serves every pair at its arrival rate";
        return m;
    }
    m.member = true;
    m.witness = dom.prior_of(topo, std::span<const double>(rep.point).first(static_cast<std::size_t>(dom.poly.var_count())));
    m.evidence = "witness prior found";
    return m;
}

std::optional<double> SlaterEstimate::k3(double backlog_inf, double v, double f_range, int inps,
                                         int frame_slots) const {
    if (unbounded || !assumption_holds) return std::nullopt;
    return backlog_inf * inps * frame_slots / zeta + v * f_range / zeta;
}

SlaterEstimate slater_margin(const Topology& topo, const QosSpec& spec,
                             std::optional<std::span<const double>> lambda, PriorMode mode) {
    SlaterEstimate est;
    est.k1 = k1_constant(topo, spec);
    const LinearizedDomain dom = build_linearized_polyhedron(topo, spec, mode);
    const bool has_rows = !dom.layout.active.empty();
    int zeta_var = -1;
    const Polyhedron poly = extended(dom, topo, spec, lambda, has_rows, zeta_var);
    std::vector<double> cost(static_cast<std::size_t>(poly.var_count()), 0.0);
    if (has_rows) cost[static_cast<std::size_t>(zeta_var)] = 1.0;
    const SolveReport rep = lp_solve(cost, poly);
    if (rep.status != SolveStatus::Optimal)
        fail(ErrorCode::Infeasible, lambda ? "slater_margin: no prior in the linearized domain supports lambda"
                                           : "slater_margin: linearized domain is empty");
    est.witness = dom.prior_of(topo, std::span<const double>(rep.point).first(static_cast<std::size_t>(dom.poly.var_count())));

    if (lambda) {
        bool any = false;
        for (double l : *lambda) any = any || l > 0.0;
        if (any) est.delta_min = min_load_factor(*lambda, topo, spec.frame_slots);
    }
    if (!has_rows) {
        est.unbounded = true;
        est.assumption_holds = true;
        est.zeta = std::numeric_limits<double>::infinity();
        return est;
    }
    est.zeta = std::max(0.0, rep.point[static_cast<std::size_t>(zeta_var)]);
    est.assumption_holds = est.zeta > 1e-9;
    if (!est.assumption_holds) return est;
    const double K = topo.inp_count();
    est.k2 = topo.class_count() * topo.client_count() * K * est.k1 / est.zeta;
    if (est.delta_min) {
        est.k4 = 2.0 * *est.k2 / (K * *est.delta_min);
        est.epsilon = *est.k4 / std::sqrt(static_cast<double>(spec.frame_slots));
    }
    return est;
}

}  // namespace qosshare
