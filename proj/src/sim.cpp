#include "qosshare/sim.hpp"

#include <algorithm>
#include <cmath>

#include "qosshare/error.hpp"
#include "qosshare/robust.hpp"

namespace qosshare {

namespace {

struct Choice {
    int link;
    int cls;
};

// Cumulative activation masses of InP k in slot tau, over (link, class).
void build_cdf(const SchedulePrior& prior, const Topology& topo, int k, int tau,
               std::vector<double>& cdf, std::vector<Choice>& choices) {
    cdf.clear();
    choices.clear();
    double acc = 0.0;
    for (int l : topo.links_of_inp(k))
        for (int c = 0; c < topo.class_count(); ++c) {
            acc += std::clamp(prior.at(l, c, tau), 0.0, 1.0);
            cdf.push_back(acc);
            choices.push_back({l, c});
        }
    if (acc <= 0.0) fail(ErrorCode::Validation, "run_frame: InP " + std::to_string(k) + " has an empty prior block");
}

}  // namespace

FrameService run_frame(const SchedulePrior& prior, const Topology& topo,
                       std::span<RandomStream> activation, std::span<RandomStream> success) {
    const int K = topo.inp_count();
    require(static_cast<int>(activation.size()) == K && static_cast<int>(success.size()) == K,
            "run_frame: one activation and one success stream per InP");
    FrameService out{std::vector<std::int64_t>(static_cast<std::size_t>(topo.pair_count()), 0),
                     std::vector<std::int64_t>(static_cast<std::size_t>(topo.pair_count()), 0)};
    const bool constant = prior.mode() == PriorMode::FrameConstant;
    std::vector<std::vector<double>> cdf(static_cast<std::size_t>(K));
    std::vector<std::vector<Choice>> choices(static_cast<std::size_t>(K));
    for (int tau = 0; tau < prior.frame_slots(); ++tau) {
        for (int k = 0; k < K; ++k) {
            auto& c = cdf[static_cast<std::size_t>(k)];
            auto& ch = choices[static_cast<std::size_t>(k)];
            if (!constant || tau == 0) build_cdf(prior, topo, k, tau, c, ch);
            const double u = activation[static_cast<std::size_t>(k)].uniform() * c.back();
            auto it = std::upper_bound(c.begin(), c.end(), u);
            if (it == c.end()) --it;
            // the end fallback may land on a zero-mass tail entry
            auto idx = static_cast<std::size_t>(it - c.begin());
            while (idx > 0 && c[idx] == c[idx - 1]) --idx;
            const Choice pick = ch[idx];
            const Link& link = topo.link(pick.link);
            const PairId pair = topo.pair(link.client, pick.cls);
            ++out.attempts[static_cast<std::size_t>(pair)];
            if (success[static_cast<std::size_t>(k)].uniform() < link.success_prob)
                ++out.service[static_cast<std::size_t>(pair)];
        }
    }
    return out;
}

RunResult run_scenario(const Instance& inst, Policy& policy, const RunConfig& cfg) {
    require(cfg.horizon >= 1, "run: horizon must be at least one frame");
    const Topology& topo = inst.topo;
    const int P = topo.pair_count();
    const int K = topo.inp_count();
    const int Ts = inst.spec.frame_slots;
    require(inst.arrivals.pair_count() == P, "run: arrival process size mismatch");
    require(policy.frame_slots() == Ts, "run: policy frame length mismatch");

    std::vector<RandomStream> arrival_rng, activation_rng, success_rng;
    for (int p = 0; p < P; ++p)
        arrival_rng.emplace_back(cfg.seed, StreamTag::Arrivals, static_cast<std::uint32_t>(p));
    for (int k = 0; k < K; ++k) {
        activation_rng.emplace_back(cfg.seed, StreamTag::Activation, static_cast<std::uint32_t>(k));
        success_rng.emplace_back(cfg.seed, StreamTag::LinkSuccess, static_cast<std::uint32_t>(k));
    }

    RunResult result;
    RunSummary& sum = result.summary;
    sum.policy = policy.config().name;
    sum.v = policy.v();
    sum.horizon = cfg.horizon;
    sum.seed = cfg.seed;
    const auto Pn = static_cast<std::size_t>(P);
    std::vector<double> met(Pn, 0.0), backlog_acc(Pn, 0.0), service_acc(Pn, 0.0);
    double utility_acc = 0.0, gap_acc = 0.0, iter_acc = 0.0;
    const double capacity = static_cast<double>(K) * Ts;
    const std::vector<double> lambda = inst.arrivals.means();

    QueueState q = QueueState::empty(P);
    for (std::int64_t t = 0; t < cfg.horizon; ++t) {
        for (std::size_t p = 0; p < Pn; ++p) backlog_acc[p] += static_cast<double>(q.backlog[p]);
        Decision dec = policy.decide(q);
        if (cfg.debug_slack && policy.config().kind == PolicyKind::Mdp) {
            for (const auto& [pair, slack] : check_linearized_feasible(dec.prior, topo, inst.spec)) {
                sum.min_slack = std::min(sum.min_slack.value_or(slack), slack);
                if (slack < -1e-6 * capacity)
                    fail(ErrorCode::Runtime, "run: frame " + std::to_string(t) + " prior leaves the linearized domain");
            }
        }
        const FrameService fs = run_frame(dec.prior, topo, activation_rng, success_rng);
        const std::vector<std::int64_t> a = sample_arrivals(inst.arrivals, arrival_rng);
        const std::vector<double> x = dec.prior.expected_service(topo);
        const double f = inst.utility.value(x);
        QueueState next = queue_update(q, a, fs.service);

        FrameMetrics m;
        m.frame = t;
        m.delivery_ratio.resize(Pn);
        m.qos_met.resize(Pn);
        for (std::size_t p = 0; p < Pn; ++p) {
            m.delivery_ratio[p] = static_cast<double>(fs.service[p]) / capacity;
            m.qos_met[p] = m.delivery_ratio[p] > inst.spec.gamma[p];
            met[p] += m.qos_met[p];
            service_acc[p] += static_cast<double>(fs.service[p]);
        }
        utility_acc += f;
        gap_acc += dec.report.gap;
        iter_acc += dec.report.iterations;
        sum.max_gap = std::max(sum.max_gap, dec.report.gap);
        sum.max_iteration_frames += dec.report.status == SolveStatus::MaxIterations;
        if (cfg.record == Record::PerFrame) {
            m.arrivals = a;
            m.service = fs.service;
            m.backlog = next.backlog;
            m.expected_service = x;
            m.utility = f;
            m.solver_gap = dec.report.gap;
            m.solver_iterations = dec.report.iterations;
            result.frames.push_back(std::move(m));
        }
        q = std::move(next);
    }

    const double T = static_cast<double>(cfg.horizon);
    sum.reliability.resize(Pn);
    sum.mean_delay.resize(Pn);
    sum.mean_service.resize(Pn);
    for (std::size_t p = 0; p < Pn; ++p) {
        sum.reliability[p] = met[p] / T;
        sum.mean_service[p] = service_acc[p] / T;
        if (lambda[p] > 0.0) sum.mean_delay[p] = backlog_acc[p] / T / lambda[p];
    }
    sum.final_backlog = q.backlog;
    for (auto b : q.backlog) sum.total_final_backlog += b;
    sum.time_avg_utility = utility_acc / T;
    sum.mean_gap = gap_acc / T;
    sum.mean_iterations = iter_acc / T;
    return result;
}

}  // namespace qosshare
