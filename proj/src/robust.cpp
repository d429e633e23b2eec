#include "qosshare/robust.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "qosshare/error.hpp"

namespace qosshare {

double protection_B(std::span<const double> p_hat, double gamma_level) {
    return protection_B_replicated(p_hat, 1, gamma_level);
}

double protection_B_replicated(std::span<const double> p_hat, int copies, double gamma_level) {
    require(copies > 0, "protection_B: copies must be positive");
    require(gamma_level >= 0.0, "protection_B: Gamma must be nonnegative");
    const double n = static_cast<double>(p_hat.size()) * copies;
    if (gamma_level > n) {
        std::ostringstream msg;
        msg << "protection_B: Gamma " << gamma_level << " exceeds the " << n << " available trials";
        fail(ErrorCode::InvalidArgument, msg.str());
    }
    std::vector<double> sorted(p_hat.begin(), p_hat.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    // Entry e_j (1-based, descending) carries weight clamp(Gamma - (j - 1), 0, 1);
    // a block of `copies` equal entries starting after b*copies carries the sum.
    double total = 0.0;
    const double c = static_cast<double>(copies);
    for (std::size_t b = 0; b < sorted.size(); ++b) {
        const double w = std::clamp(gamma_level - static_cast<double>(b) * c, 0.0, c);
        if (w == 0.0) break;
        total += w * sorted[b];
    }
    return total;
}

std::vector<double> deviation_widths(std::span<const double> trial_probs) {
    std::vector<double> out(trial_probs.size());
    std::transform(trial_probs.begin(), trial_probs.end(), out.begin(),
                   [](double x) { return std::max(x, 1.0 - x); });
    return out;
}

ProtectionLevel gamma_level(const QosSpec& spec, const Topology& topo) {
    ProtectionLevel out{std::vector<double>(static_cast<std::size_t>(topo.pair_count()), 0.0)};
    const double n = static_cast<double>(topo.inp_count()) * spec.frame_slots;
    for (int p = 0; p < topo.pair_count(); ++p) {
        const double q = spec.q.at(static_cast<std::size_t>(p));
        if (q >= 1.0) fail(ErrorCode::InvalidArgument, "gamma_level: q must be below 1");
        require(q >= 0.0, "gamma_level: q must be nonnegative");
        if (q == 0.0) continue;
        out.gamma[static_cast<std::size_t>(p)] = std::sqrt(2.0 * n * -std::log1p(-q));
    }
    return out;
}

// ---------------------------------------------------------------------------

LinearizedDomain build_linearized_polyhedron(const Topology& topo, const QosSpec& spec,
                                             PriorMode mode) {
    spec.validate(topo);
    LinearizedDomain dom;
    LinearizedLayout& lay = dom.layout;
    Polyhedron& poly = dom.poly;
    const int C = topo.class_count();
    const int Ts = spec.frame_slots;
    lay.mode = mode;
    lay.frame_slots = Ts;
    lay.stored_slots = mode == PriorMode::PerSlot ? Ts : 1;
    const int S = lay.stored_slots;
    const double mult = mode == PriorMode::PerSlot ? 1.0 : static_cast<double>(Ts);

    const SchedulePrior shape(topo, Ts, mode);
    lay.prior_count = static_cast<int>(shape.values().size());
    for (int l = 0; l < topo.link_count(); ++l) {
        const Link& e = topo.link(l);
        for (int c = 0; c < C; ++c)
            for (int s = 0; s < S; ++s) {
                std::ostringstream name;
                name << "p[k" << e.inp << ",i" << e.client << ",c" << c << ",t" << s << "]";
                const int idx = poly.add_variable(0.0, 1.0, name.str());
                if (static_cast<std::size_t>(idx) != shape.index(l, c, s))
                    fail(ErrorCode::Runtime, "polyhedron: prior layout mismatch");
            }
    }

    // per-InP simplex
    for (int k = 0; k < topo.inp_count(); ++k)
        for (int s = 0; s < S; ++s) {
            Row row{{}, RowSense::Eq, 1.0, "simplex k" + std::to_string(k) + " t" + std::to_string(s)};
            for (int l : topo.links_of_inp(k))
                for (int c = 0; c < C; ++c)
                    row.terms.push_back({static_cast<int>(shape.index(l, c, s)), 1.0});
            poly.add_row(std::move(row));
        }
    // client rate caps
    for (int i = 0; i < topo.client_count(); ++i)
        for (int s = 0; s < S; ++s) {
            Row row{{}, RowSense::Le, topo.rate_cap(i), "cap i" + std::to_string(i) + " t" + std::to_string(s)};
            for (int l : topo.links_of_client(i))
                for (int c = 0; c < C; ++c)
                    row.terms.push_back({static_cast<int>(shape.index(l, c, s)), 1.0});
            poly.add_row(std::move(row));
        }

    const ProtectionLevel level = gamma_level(spec, topo);
    const double KTs = static_cast<double>(topo.inp_count()) * Ts;
    for (PairId pair : spec.active_set()) {
        const int i = topo.client_of(pair);
        const int c = topo.class_of(pair);
        const std::string tag = "i" + std::to_string(i) + " c" + std::to_string(c);
        lay.active.push_back(pair);
        lay.gamma.push_back(level.at(pair));
        const int s_var = poly.add_variable(0.0, kInf, "s[" + tag + "]");
        lay.s_index.push_back(s_var);
        lay.v_offset.push_back(poly.var_count());
        Row qos{{}, RowSense::Ge, KTs * spec.gamma.at(static_cast<std::size_t>(pair)), "qos " + tag};
        qos.terms.push_back({s_var, -level.at(pair)});
        for (int l : topo.links_of_client(i)) {
            const double r = topo.link(l).success_prob;
            for (int s = 0; s < S; ++s) {
                const int p_var = static_cast<int>(shape.index(l, c, s));
                const int v_var = poly.add_variable(
                    0.0, kInf, "v[" + tag + ",k" + std::to_string(topo.link(l).inp) + ",t" + std::to_string(s) + "]");
                qos.terms.push_back({p_var, r * mult});
                qos.terms.push_back({v_var, -mult});
                poly.add_row(Row{{{s_var, 1.0}, {v_var, 1.0}, {p_var, -r}}, RowSense::Ge, 0.0, "aux+ " + tag});
                poly.add_row(Row{{{s_var, 1.0}, {v_var, 1.0}, {p_var, r}}, RowSense::Ge, 1.0, "aux- " + tag});
            }
        }
        poly.add_row(std::move(qos));
    }
    return dom;
}

SchedulePrior LinearizedDomain::prior_of(const Topology& topo, std::span<const double> point) const {
    require(static_cast<int>(point.size()) == poly.var_count(), "prior_of: point size mismatch");
    return SchedulePrior(topo, layout.frame_slots, layout.mode,
                         std::vector<double>(point.begin(), point.begin() + layout.prior_count));
}

std::vector<double> LinearizedDomain::lift(const Topology& topo, const SchedulePrior& prior) const {
    require(prior.mode() == layout.mode && prior.frame_slots() == layout.frame_slots,
            "lift: prior layout does not match the domain");
    std::vector<double> z(static_cast<std::size_t>(poly.var_count()), 0.0);
    std::copy(prior.values().begin(), prior.values().end(), z.begin());
    const int copies = layout.mode == PriorMode::PerSlot ? 1 : layout.frame_slots;
    for (std::size_t a = 0; a < layout.active.size(); ++a) {
        const PairId pair = layout.active[a];
        const int i = topo.client_of(pair);
        const int c = topo.class_of(pair);
        std::vector<double> widths;
        for (int l : topo.links_of_client(i))
            for (int s = 0; s < layout.stored_slots; ++s) {
                const double x = topo.link(l).success_prob * prior.at(l, c, s);
                widths.push_back(std::max(x, 1.0 - x));
            }
        // The dual minimizer is s = the (floor(Gamma)+1)-th largest width of the
        // expanded vector, or 0 once Gamma covers every trial.
        std::vector<double> sorted = widths;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const double n = static_cast<double>(sorted.size()) * copies;
        double s_val = 0.0;
        if (layout.gamma[a] < n) {
            const auto pos = static_cast<std::size_t>(std::floor(layout.gamma[a]));
            s_val = sorted[pos / static_cast<std::size_t>(copies)];
        }
        z[static_cast<std::size_t>(layout.s_index[a])] = s_val;
        for (std::size_t j = 0; j < widths.size(); ++j)
            z[static_cast<std::size_t>(layout.v_offset[a]) + j] = std::max(0.0, widths[j] - s_val);
    }
    return z;
}

std::map<PairId, double> check_linearized_feasible(const SchedulePrior& prior,
                                                   const Topology& topo, const QosSpec& spec) {
    std::map<PairId, double> out;
    const ProtectionLevel level = gamma_level(spec, topo);
    const double KTs = static_cast<double>(topo.inp_count()) * spec.frame_slots;
    const int copies = prior.mode() == PriorMode::PerSlot ? 1 : prior.frame_slots();
    for (PairId pair : spec.active_set()) {
        const int i = topo.client_of(pair);
        const int c = topo.class_of(pair);
        std::vector<double> widths;
        double mean = 0.0;
        for (int l : topo.links_of_client(i))
            for (int s = 0; s < prior.stored_slots(); ++s) {
                const double x = topo.link(l).success_prob * prior.at(l, c, s);
                mean += x * copies;
                widths.push_back(std::max(x, 1.0 - x));
            }
        const double n = static_cast<double>(widths.size()) * copies;
        const double b = protection_B_replicated(widths, copies, std::min(level.at(pair), n));
        out[pair] = mean - b - KTs * spec.gamma.at(static_cast<std::size_t>(pair));
    }
    return out;
}

double k1_constant(const Topology& topo, const QosSpec& spec) {
    const double K = topo.inp_count();
    const double q_inf = spec.q.empty() ? 0.0 : *std::max_element(spec.q.begin(), spec.q.end());
    return std::sqrt(2.0 * -std::log1p(-q_inf)) / std::sqrt(K) +
           2.0 * std::sqrt(topo.u_max() * std::numbers::pi * std::exp(3.0)) / K;
}

TheoryConstants theory_constants(const Topology& topo, const QosSpec& spec,
                                 const ArrivalProcess& arrivals) {
    TheoryConstants tc;
    const double K = topo.inp_count();
    tc.k1 = k1_constant(topo, spec);
    const double slack = 1.0 - topo.r_max();
    for (PairId pair : spec.active_set()) {
        const double g = spec.gamma.at(static_cast<std::size_t>(pair));
        const double q = spec.q.at(static_cast<std::size_t>(pair));
        const double denom = slack * K * g * q * q * q;
        const double threshold = denom > 0.0 ? 0.795 * 0.795 / denom : kInf;
        tc.condition_threshold[pair] = threshold;
        tc.condition_met[pair] = static_cast<double>(spec.frame_slots) > threshold;
        tc.condition_all = tc.condition_all && tc.condition_met[pair];
    }
    const double A = static_cast<double>(arrivals.a_max());
    const double Ts = spec.frame_slots;
    tc.b1 = topo.client_count() * topo.class_count() * A * A + Ts * Ts * K * K;
    return tc;
}

}  // namespace qosshare
