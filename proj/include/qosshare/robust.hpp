#pragma once

// Robust linearization of the per-frame probabilistic service guarantee:
// the protection function, protection levels, the linearized domain as an
// explicit polyhedron (dual form), and the constants attached to it.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "qosshare/model.hpp"
#include "qosshare/polyhedron.hpp"

namespace qosshare {

/// Sum of the floor(Gamma) largest entries of p_hat plus (Gamma - floor)
/// times the next largest. Throws if Gamma < 0 or Gamma > p_hat.size().
double protection_B(std::span<const double> p_hat, double gamma_level);

/// protection_B on the vector where every entry of `p_hat` appears `copies`
/// times, without materializing it.
double protection_B_replicated(std::span<const double> p_hat, int copies, double gamma_level);

/// max(r p, 1 - r p) for each trial probability r p.
std::vector<double> deviation_widths(std::span<const double> trial_probs);

/// Gamma per pair (zero off the active set).
struct ProtectionLevel {
    std::vector<double> gamma;

    double at(PairId p) const { return gamma.at(static_cast<std::size_t>(p)); }
};

/// Gamma = sqrt(2 K T_s ln(1 / (1 - q))) on the active set.
ProtectionLevel gamma_level(const QosSpec& spec, const Topology& topo);

/// Variable layout of the linearized domain: prior entries first (in
/// SchedulePrior storage order), then one s per active pair, then that pair's
/// v block ordered by (client link, stored slot).
struct LinearizedLayout {
    PriorMode mode = PriorMode::PerSlot;
    int frame_slots = 1;
    int stored_slots = 1;
    int prior_count = 0;
    std::vector<PairId> active;
    std::vector<int> s_index;   // per active pair
    std::vector<int> v_offset;  // per active pair
    std::vector<double> gamma;  // per active pair
};

struct LinearizedDomain {
    Polyhedron poly;
    LinearizedLayout layout;

    /// Prior entries of a point of the lifted polyhedron.
    SchedulePrior prior_of(const Topology& topo, std::span<const double> point) const;

    /// Lift a prior to the polyhedron's variable space, choosing the
    /// auxiliaries that attain the protection function.
    std::vector<double> lift(const Topology& topo, const SchedulePrior& prior) const;
};

/// The linearized domain in dual form: per-InP simplex equalities, client
/// rate caps, and for each active pair the QoS row together with the
/// auxiliary rows s + v >= r p, s + v >= 1 - r p.
LinearizedDomain build_linearized_polyhedron(const Topology& topo, const QosSpec& spec,
                                             PriorMode mode);

/// Per active pair: sum r p - B - K T_s gamma, with B from protection_B on the
/// primal (sorted) form. Gamma above the pair's trial count is clamped to it.
std::map<PairId, double> check_linearized_feasible(const SchedulePrior& prior,
                                                   const Topology& topo, const QosSpec& spec);

struct TheoryConstants {
    double k1 = 0.0;
    std::map<PairId, double> condition_threshold;  // K^c_i; +inf when q -> 0
    std::map<PairId, bool> condition_met;          // T_s > K^c_i
    bool condition_all = true;
    double b1 = 0.0;
    std::optional<double> epsilon_margin;
};

/// Eq. 22: sqrt(2 ln(1/(1 - max q))) / sqrt(K) + 2 sqrt(U_max pi e^3) / K.
double k1_constant(const Topology& topo, const QosSpec& spec);

TheoryConstants theory_constants(const Topology& topo, const QosSpec& spec,
                                 const ArrivalProcess& arrivals);

}  // namespace qosshare
