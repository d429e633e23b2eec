#pragma once

// Domain vocabulary: network topology, QoS requirements, arrival processes,
// queue backlogs and the per-frame scheduling prior.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qosshare {

/// A (client, class) pair flattened as client * class_count + class.
using PairId = int;

struct Link {
    int inp = 0;
    int client = 0;
    double success_prob = 0.0;  // r_ki, strictly inside (0, 1)
};

/// InPs, clients, job classes and the bipartite link set E.
///
/// Links are kept in canonical (inp, client) order; every other module
/// indexes links by their position in that order.
class Topology {
public:
    Topology(int inps, int clients, int classes, std::vector<Link> links,
             std::vector<double> rate_caps);

    /// Every InP connected to every client; r given per InP.
    static Topology full_mesh(int clients, int classes, const std::vector<double>& r_by_inp,
                              double rate_cap);

    int inp_count() const noexcept { return inps_; }
    int client_count() const noexcept { return clients_; }
    int class_count() const noexcept { return classes_; }
    int pair_count() const noexcept { return clients_ * classes_; }
    PairId pair(int client, int cls) const noexcept { return client * classes_ + cls; }
    int client_of(PairId p) const noexcept { return p / classes_; }
    int class_of(PairId p) const noexcept { return p % classes_; }

    std::span<const Link> links() const noexcept { return links_; }
    const Link& link(int l) const { return links_.at(static_cast<std::size_t>(l)); }
    int link_count() const noexcept { return static_cast<int>(links_.size()); }
    const std::vector<int>& links_of_inp(int k) const { return by_inp_.at(static_cast<std::size_t>(k)); }
    const std::vector<int>& links_of_client(int i) const {
        return by_client_.at(static_cast<std::size_t>(i));
    }
    std::optional<int> link_index(int inp, int client) const;

    double rate_cap(int client) const { return caps_.at(static_cast<std::size_t>(client)); }
    double u_max() const noexcept { return u_max_; }
    double r_max() const noexcept { return r_max_; }

private:
    int inps_;
    int clients_;
    int classes_;
    std::vector<Link> links_;
    std::vector<double> caps_;
    std::vector<std::vector<int>> by_inp_;
    std::vector<std::vector<int>> by_client_;
    double u_max_ = 0.0;
    double r_max_ = 0.0;
};

/// SLA triple (T_s, gamma, q). Pairs with q == 0 carry no requirement.
struct QosSpec {
    int frame_slots = 1;
    std::vector<double> gamma;  // per pair, [0, 1)
    std::vector<double> q;      // per pair, [0, 1)

    static QosSpec none(const Topology& topo, int frame_slots);

    bool active(PairId p) const { return q.at(static_cast<std::size_t>(p)) > 0.0; }
    std::vector<PairId> active_set() const;
    void validate(const Topology& topo) const;
};

// ---------------------------------------------------------------------------
// Randomness

enum class StreamTag : std::uint32_t {
    Arrivals = 1,
    Activation = 2,
    LinkSuccess = 3,
    Test = 99,
};

/// Independent named random stream. The engine is std::mt19937_64 seeded
/// through std::seed_seq, both of which are fully specified by the standard;
/// all variates are derived here so outputs do not depend on the standard
/// library's distribution implementations.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, StreamTag tag, std::uint32_t a = 0, std::uint32_t b = 0);

    double uniform();  // [0, 1)
    bool bernoulli(double p) { return uniform() < p; }
    std::int64_t poisson(double rate);

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Arrivals

struct NoArrivals {};
struct ConstantArrivals {
    std::int64_t rate = 0;
};
struct PoissonArrivals {
    double rate = 0.0;
};
/// Pareto(shape, scale) rounded to the nearest integer and capped at A_max.
struct ParetoArrivals {
    double shape = 2.5;
    double scale = 1.0;
};

using ArrivalKind = std::variant<NoArrivals, ConstantArrivals, PoissonArrivals, ParetoArrivals>;

class ArrivalProcess {
public:
    ArrivalProcess(std::vector<ArrivalKind> per_pair, std::int64_t a_max);

    /// Pareto scale such that the capped, rounded mean equals `rate`.
    static ParetoArrivals calibrated_pareto(double rate, double shape, std::int64_t a_max);

    std::int64_t a_max() const noexcept { return a_max_; }
    int pair_count() const noexcept { return static_cast<int>(kinds_.size()); }
    const ArrivalKind& kind(PairId p) const { return kinds_.at(static_cast<std::size_t>(p)); }

    /// Exact mean of the capped integer process.
    double mean(PairId p) const;
    /// Exact second moment E[a^2] of the capped integer process.
    double second_moment(PairId p) const;
    std::vector<double> means() const;

    std::int64_t sample(PairId p, RandomStream& rng) const;

private:
    std::vector<ArrivalKind> kinds_;
    std::int64_t a_max_;
};

/// One frame of arrivals, drawn from each pair's own stream.
std::vector<std::int64_t> sample_arrivals(const ArrivalProcess& proc,
                                          std::span<RandomStream> streams);

// ---------------------------------------------------------------------------
// Queues

struct QueueState {
    std::vector<std::int64_t> backlog;  // per pair
    std::int64_t frame = 0;

    static QueueState empty(int pair_count) {
        return QueueState{std::vector<std::int64_t>(static_cast<std::size_t>(pair_count), 0), 0};
    }
};

/// Q(t+1) = max(0, Q(t) + a(t) - mu(t)), entrywise.
QueueState queue_update(const QueueState& q, std::span<const std::int64_t> arrivals,
                        std::span<const std::int64_t> service);

/// delta(lambda) = min over positive rates of lambda / (K * T_s).
double min_load_factor(std::span<const double> lambda, const Topology& topo, int frame_slots);

// ---------------------------------------------------------------------------
// Scheduling prior

enum class PriorMode {
    PerSlot,
    FrameConstant,
};

std::string to_string(PriorMode mode);

/// Link activation probabilities p(k, i, c, tau), stored link-major:
/// index = (link * C + c) * stored_slots + tau, where stored_slots is T_s in
/// PerSlot mode and 1 in FrameConstant mode.
class SchedulePrior {
public:
    SchedulePrior(const Topology& topo, int frame_slots, PriorMode mode);
    SchedulePrior(const Topology& topo, int frame_slots, PriorMode mode, std::vector<double> values);

    /// p = 1 / |N(k)| / C on every link and slot.
    static SchedulePrior uniform(const Topology& topo, int frame_slots, PriorMode mode);

    PriorMode mode() const noexcept { return mode_; }
    int frame_slots() const noexcept { return frame_slots_; }
    int stored_slots() const noexcept { return mode_ == PriorMode::PerSlot ? frame_slots_ : 1; }
    int class_count() const noexcept { return classes_; }
    int link_count() const noexcept { return links_; }

    std::size_t index(int link, int cls, int slot) const {
        const int s = mode_ == PriorMode::PerSlot ? slot : 0;
        return (static_cast<std::size_t>(link) * static_cast<std::size_t>(classes_) +
                static_cast<std::size_t>(cls)) *
                   static_cast<std::size_t>(stored_slots()) +
               static_cast<std::size_t>(s);
    }
    double at(int link, int cls, int slot) const { return values_[index(link, cls, slot)]; }
    double& at(int link, int cls, int slot) { return values_[index(link, cls, slot)]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// Expand to PerSlot storage (identity for PerSlot priors).
    SchedulePrior expanded() const;

    /// Expected per-frame service sum_k sum_tau r_ki p, per pair.
    std::vector<double> expected_service(const Topology& topo) const;

    /// Per-trial success probabilities r_ki p(k,i,c,tau) of one pair, over
    /// k in N(i) and all T_s slots (FrameConstant entries are replicated).
    std::vector<double> trial_probs(const Topology& topo, PairId pair) const;

    /// Throws Validation if the per-InP simplex or client rate cap is
    /// violated beyond `tol`, or an entry leaves [-tol, 1 + tol].
    void validate(const Topology& topo, double tol = 1e-9) const;

    /// Clamp to [0,1] and rescale each (k, tau) block to sum to one.
    /// Requires validate() to pass first.
    SchedulePrior normalized(const Topology& topo) const;

private:
    PriorMode mode_;
    int frame_slots_;
    int classes_;
    int links_;
    std::vector<double> values_;
};

}  // namespace qosshare
