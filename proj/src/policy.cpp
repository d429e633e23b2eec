#include "qosshare/policy.hpp"

#include <cmath>

#include "qosshare/error.hpp"

namespace qosshare {

double VRule::eval(std::int64_t horizon) const {
    require(horizon >= 1, "V rule: horizon must be positive");
    require(coefficient >= 0.0, "V rule: coefficient must be nonnegative");
    return coefficient * std::pow(static_cast<double>(horizon), exponent);
}

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Mdp: return "mdp";
        case PolicyKind::DpNoQos: return "dp_noqos";
        case PolicyKind::Stationary: return "stationary";
    }
    return "unknown";
}

double PolicyConfig::resolve_v(std::int64_t horizon) const {
    if (const double* fixed_v = std::get_if<double>(&v)) {
        require(*fixed_v >= 0.0, "policy: V must be nonnegative");
        return *fixed_v;
    }
    return std::get<VRule>(v).eval(horizon);
}

namespace {

std::vector<double> as_double(const QueueState& q) {
    return {q.backlog.begin(), q.backlog.end()};
}

}  // namespace

Policy::Policy(const Topology& topo, const QosSpec& spec, const UtilityFunction& utility,
               PolicyConfig config, std::int64_t horizon)
    : topo_(&topo), utility_(&utility), config_(std::move(config)), frame_slots_(spec.frame_slots) {
    v_ = config_.resolve_v(horizon);
    if (config_.kind == PolicyKind::Stationary) {
        if (!config_.fixed) fail(ErrorCode::Validation, "policy " + config_.name + ": stationary policy needs a prior");
        config_.fixed->validate(topo);
        if (config_.fixed->frame_slots() != spec.frame_slots)
            fail(ErrorCode::Validation, "policy " + config_.name + ": prior frame length mismatch");
        return;
    }
    const QosSpec used = config_.kind == PolicyKind::Mdp ? spec : QosSpec::none(topo, spec.frame_slots);
    domain_ = std::make_unique<LinearizedDomain>(build_linearized_polyhedron(topo, used, config_.mode));
    const std::vector<double> zero(static_cast<std::size_t>(domain_->poly.var_count()), 0.0);
    if (lp_solve(zero, domain_->poly).status == SolveStatus::Infeasible)
        fail(ErrorCode::Infeasible, "policy " + config_.name + ": QoS spec unsupportable (linearized domain is empty)");
    solver_.emplace(domain_->poly, config_.solver);
}

Decision Policy::decide(const QueueState& q) {
    if (config_.kind == PolicyKind::Stationary) return Decision{*config_.fixed, {}};
    const DriftObjective h(*topo_, frame_slots_, config_.mode, as_double(q), v_, *utility_);
    SolveReport rep = solver_->maximize(h);
    if (!rep.feasible()) fail(ErrorCode::Runtime, "policy " + config_.name + ": solver returned " + to_string(rep.status));
    SchedulePrior prior = domain_->prior_of(*topo_, rep.point);
    return Decision{std::move(prior), std::move(rep)};
}

SchedulePrior mdp_decide(const QueueState& q, const Topology& topo, const QosSpec& spec,
                         const UtilityFunction& utility, double v, PriorMode mode, SolverOptions opts) {
    PolicyConfig cfg{"mdp", PolicyKind::Mdp, v, std::nullopt, mode, opts};
    Policy p(topo, spec, utility, std::move(cfg), 1);
    return p.decide(q).prior;
}

SchedulePrior dp_noqos_decide(const QueueState& q, const Topology& topo, int frame_slots,
                              const UtilityFunction& utility, double v, PriorMode mode,
                              SolverOptions opts) {
    PolicyConfig cfg{"dp_noqos", PolicyKind::DpNoQos, v, std::nullopt, mode, opts};
    Policy p(topo, QosSpec::none(topo, frame_slots), utility, std::move(cfg), 1);
    return p.decide(q).prior;
}

SchedulePrior stationary_decide(const SchedulePrior& fixed) { return fixed; }

}  // namespace qosshare
