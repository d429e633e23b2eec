#pragma once

// Closed-form guarantees (throughput, delay, sufficient gamma*q), stability
// region membership and the Slater margin with the constants built on it.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qosshare/model.hpp"
#include "qosshare/robust.hpp"

namespace qosshare {

/// K T_s gamma q per pair.
std::vector<double> throughput_bound(const QosSpec& spec, const Topology& topo);

/// Eq. 27 per pair, in frames; absent when lambda = 0 or K T_s gamma q <= lambda.
std::vector<std::optional<double>> delay_bound(const QosSpec& spec, const Topology& topo,
                                               const ArrivalProcess& arrivals);

/// Right-hand side of Eq. 28: the gamma*q that guarantees mean delay <= W*.
double sufficient_gamma_q(double w_star, double second_moment, double lambda, int frame_slots,
                          double rate_cap, int inps);

struct PairGuarantee {
    PairId pair = 0;
    double lambda = 0.0;
    double gamma_level = 0.0;
    double throughput = 0.0;
    std::optional<double> delay;
    std::optional<double> w_star;
    std::optional<double> gamma_q_threshold;  // when W* is configured
    bool rate_covered = false;                // gamma q > lambda / (K T_s)
    std::optional<double> condition_threshold;  // Eq. 20, active pairs only
    bool condition_met = true;
};

struct GuaranteeReport {
    std::vector<PairGuarantee> pairs;
    TheoryConstants constants;
    double approximation_gap = 0.0;  // K1 / sqrt(T_s)
};

GuaranteeReport guarantee_report(const Topology& topo, const QosSpec& spec,
                                 const ArrivalProcess& arrivals,
                                 const std::map<PairId, double>& w_star = {});

struct Membership {
    bool member = false;
    std::optional<SchedulePrior> witness;
    std::string evidence;
};

/// Is lambda in the approximate stability region: does some p in the
/// linearized domain give every pair expected service >= lambda?
Membership stability_membership(std::span<const double> lambda, const Topology& topo,
                                 const QosSpec& spec, PriorMode mode = PriorMode::FrameConstant);

struct SlaterEstimate {
    double zeta = 0.0;
    bool unbounded = false;  // no QoS rows: zeta is +inf
    bool assumption_holds = false;
    std::optional<SchedulePrior> witness;
    double k1 = 0.0;
    std::optional<double> k2;
    std::optional<double> delta_min;
    std::optional<double> k4;
    std::optional<double> epsilon;

    /// Lemma 6's constant for a given backlog norm, V and utility range.
    std::optional<double> k3(double backlog_inf, double v, double f_range, int inps,
                             int frame_slots) const;
};

/// Largest zeta in [0, 1] with K T_s (gamma + zeta) <= sum r p - B on every
/// active pair (plus expected service >= lambda when given). Throws
/// Infeasible if the linearized domain (with those rows) is empty.
SlaterEstimate slater_margin(const Topology& topo, const QosSpec& spec,
                             std::optional<std::span<const double>> lambda,
                             PriorMode mode = PriorMode::FrameConstant);

}  // namespace qosshare
