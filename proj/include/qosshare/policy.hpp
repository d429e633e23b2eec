#pragma once

// Per-frame scheduling policies: MDP (maximize h_t over the linearized
// domain), the same without QoS rows, and a fixed stationary prior.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "qosshare/model.hpp"
#include "qosshare/robust.hpp"
#include "qosshare/solve.hpp"

namespace qosshare {

/// V = coefficient * T^exponent, resolved once from the horizon.
struct VRule {
    double coefficient = 5.0;
    double exponent = 1.0 / 3.0;

    double eval(std::int64_t horizon) const;
};

enum class PolicyKind { Mdp, DpNoQos, Stationary };

std::string to_string(PolicyKind kind);

struct PolicyConfig {
    std::string name;
    PolicyKind kind = PolicyKind::Mdp;
    std::variant<double, VRule> v = 0.0;
    std::optional<SchedulePrior> fixed;  // Stationary only
    PriorMode mode = PriorMode::PerSlot;
    SolverOptions solver;

    double resolve_v(std::int64_t horizon) const;
};

struct Decision {
    SchedulePrior prior;
    SolveReport report;  // default (iterations 0) for stationary policies
};

/// One policy instance per run: holds the domain and the solver warm start.
class Policy {
public:
    Policy(const Topology& topo, const QosSpec& spec, const UtilityFunction& utility,
           PolicyConfig config, std::int64_t horizon);

    Decision decide(const QueueState& q);

    const PolicyConfig& config() const noexcept { return config_; }
    double v() const noexcept { return v_; }
    int frame_slots() const noexcept { return frame_slots_; }

private:
    const Topology* topo_;
    const UtilityFunction* utility_;
    PolicyConfig config_;
    double v_ = 0.0;
    int frame_slots_ = 1;
    std::unique_ptr<LinearizedDomain> domain_;  // stable address: the solver points into it
    std::optional<FrankWolfe> solver_;
};

/// Stateless forms of the three policies.
SchedulePrior mdp_decide(const QueueState& q, const Topology& topo, const QosSpec& spec,
                         const UtilityFunction& utility, double v,
                         PriorMode mode = PriorMode::PerSlot, SolverOptions opts = {});
SchedulePrior dp_noqos_decide(const QueueState& q, const Topology& topo, int frame_slots,
                              const UtilityFunction& utility, double v,
                              PriorMode mode = PriorMode::PerSlot, SolverOptions opts = {});
SchedulePrior stationary_decide(const SchedulePrior& fixed);

}  // namespace qosshare
