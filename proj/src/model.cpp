#include "qosshare/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "qosshare/error.hpp"

namespace qosshare {

// ---------------------------------------------------------------------------
// Topology

Topology::Topology(int inps, int clients, int classes, std::vector<Link> links,
                   std::vector<double> rate_caps)
    : inps_(inps), clients_(clients), classes_(classes), links_(std::move(links)),
      caps_(std::move(rate_caps)) {
    require(inps_ > 0 && clients_ > 0 && classes_ > 0,
            "topology: inp, client and class counts must be positive");
    require(static_cast<int>(caps_.size()) == clients_,
            "topology: one rate cap per client required");
    std::sort(links_.begin(), links_.end(), [](const Link& a, const Link& b) {
        return a.inp != b.inp ? a.inp < b.inp : a.client < b.client;
    });
    by_inp_.assign(static_cast<std::size_t>(inps_), {});
    by_client_.assign(static_cast<std::size_t>(clients_), {});
    for (std::size_t l = 0; l < links_.size(); ++l) {
        const Link& e = links_[l];
        require(e.inp >= 0 && e.inp < inps_ && e.client >= 0 && e.client < clients_,
                "topology: link endpoint out of range");
        require(e.success_prob > 0.0 && e.success_prob < 1.0,
                "topology: success probability must lie in (0,1)");
        if (l > 0) {
            require(!(links_[l - 1].inp == e.inp && links_[l - 1].client == e.client),
                    "topology: duplicate link");
        }
        by_inp_[static_cast<std::size_t>(e.inp)].push_back(static_cast<int>(l));
        by_client_[static_cast<std::size_t>(e.client)].push_back(static_cast<int>(l));
        r_max_ = std::max(r_max_, e.success_prob);
    }
    for (int i = 0; i < clients_; ++i) {
        std::ostringstream msg;
        msg << "topology: client " << i << " has no incident link";
        require(!by_client_[static_cast<std::size_t>(i)].empty(), msg.str());
        require(caps_[static_cast<std::size_t>(i)] > 0.0, "topology: rate caps must be positive");
    }
    for (int k = 0; k < inps_; ++k) {
        std::ostringstream msg;
        msg << "topology: InP " << k << " has no incident link";
        require(!by_inp_[static_cast<std::size_t>(k)].empty(), msg.str());
    }
    u_max_ = *std::max_element(caps_.begin(), caps_.end());
}

Topology Topology::full_mesh(int clients, int classes, const std::vector<double>& r_by_inp,
                             double rate_cap) {
    std::vector<Link> links;
    for (int k = 0; k < static_cast<int>(r_by_inp.size()); ++k)
        for (int i = 0; i < clients; ++i) links.push_back({k, i, r_by_inp[static_cast<std::size_t>(k)]});
    return Topology(static_cast<int>(r_by_inp.size()), clients, classes, std::move(links),
                    std::vector<double>(static_cast<std::size_t>(clients), rate_cap));
}

std::optional<int> Topology::link_index(int inp, int client) const {
    if (inp < 0 || inp >= inps_) return std::nullopt;
    for (int l : by_inp_[static_cast<std::size_t>(inp)])
        if (links_[static_cast<std::size_t>(l)].client == client) return l;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// QoS

QosSpec QosSpec::none(const Topology& topo, int frame_slots) {
    const auto n = static_cast<std::size_t>(topo.pair_count());
    return QosSpec{frame_slots, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

std::vector<PairId> QosSpec::active_set() const {
    std::vector<PairId> out;
    for (std::size_t p = 0; p < q.size(); ++p)
        if (q[p] > 0.0) out.push_back(static_cast<PairId>(p));
    return out;
}

void QosSpec::validate(const Topology& topo) const {
    const auto n = static_cast<std::size_t>(topo.pair_count());
    require(frame_slots > 0, "qos: frame_slots must be positive");
    require(gamma.size() == n && q.size() == n, "qos: gamma/q must have one entry per pair");
    for (std::size_t p = 0; p < n; ++p) {
        require(q[p] >= 0.0 && q[p] < 1.0, "qos: q must lie in [0,1)");
        require(gamma[p] >= 0.0 && gamma[p] < 1.0, "qos: gamma must lie in [0,1)");
    }
}

// ---------------------------------------------------------------------------
// RandomStream

RandomStream::RandomStream(std::uint64_t seed, StreamTag tag, std::uint32_t a, std::uint32_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(tag), a, b};
    engine_.seed(seq);
}

double RandomStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::int64_t RandomStream::poisson(double rate) {
    require(rate >= 0.0 && std::isfinite(rate), "poisson: rate must be finite and nonnegative");
    // Inversion on chunks of mean <= 64 keeps exp(-rate) well away from underflow.
    std::int64_t total = 0;
    double remaining = rate;
    while (remaining > 0.0) {
        const double chunk = std::min(remaining, 64.0);
        remaining -= chunk;
        const double u = uniform();
        double prob = std::exp(-chunk);
        double cdf = prob;
        std::int64_t k = 0;
        while (u >= cdf && k < 100000) {
            ++k;
            prob *= chunk / static_cast<double>(k);
            cdf += prob;
            if (prob == 0.0) break;
        }
        total += k;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Arrivals

namespace {

double pareto_survival(double x, const ParetoArrivals& p) {
    if (x <= p.scale) return 1.0;
    return std::pow(p.scale / x, p.shape);
}

// Moments of min(floor(X + 1/2), a_max) for X ~ Pareto(shape, scale).
std::pair<double, double> pareto_moments(const ParetoArrivals& p, std::int64_t a_max) {
    double m1 = 0.0, m2 = 0.0;
    for (std::int64_t j = 1; j < a_max; ++j) {
        const double jj = static_cast<double>(j);
        const double mass = pareto_survival(jj - 0.5, p) - pareto_survival(jj + 0.5, p);
        m1 += jj * mass;
        m2 += jj * jj * mass;
    }
    const double top = pareto_survival(static_cast<double>(a_max) - 0.5, p);
    const double a = static_cast<double>(a_max);
    return {m1 + a * top, m2 + a * a * top};
}

std::pair<double, double> poisson_moments(double rate, std::int64_t a_max) {
    if (rate == 0.0) return {0.0, 0.0};
    double m1 = 0.0, m2 = 0.0, below = 0.0;
    for (std::int64_t j = 0; j < a_max; ++j) {
        const double jj = static_cast<double>(j);
        const double mass = std::exp(-rate + jj * std::log(rate) - std::lgamma(jj + 1.0));
        below += mass;
        m1 += jj * mass;
        m2 += jj * jj * mass;
    }
    const double top = std::max(0.0, 1.0 - below);
    const double a = static_cast<double>(a_max);
    return {m1 + a * top, m2 + a * a * top};
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

ArrivalProcess::ArrivalProcess(std::vector<ArrivalKind> per_pair, std::int64_t a_max)
    : kinds_(std::move(per_pair)), a_max_(a_max) {
    require(a_max_ > 0, "arrivals: a_max must be positive");
    for (const auto& k : kinds_) {
        std::visit(overloaded{
                       [](const NoArrivals&) {},
                       [&](const ConstantArrivals& c) {
                           require(c.rate >= 0 && c.rate <= a_max_,
                                   "arrivals: constant rate must lie in [0, a_max]");
                       },
                       [](const PoissonArrivals& c) {
                           require(c.rate >= 0.0 && std::isfinite(c.rate),
                                   "arrivals: poisson rate must be finite and nonnegative");
                       },
                       [](const ParetoArrivals& c) {
                           require(c.shape > 1.0 && c.scale > 0.0,
                                   "arrivals: pareto needs shape > 1 and scale > 0");
                       },
                   },
                   k);
    }
}

ParetoArrivals ArrivalProcess::calibrated_pareto(double rate, double shape, std::int64_t a_max) {
    require(shape > 1.0, "arrivals: pareto shape must exceed 1");
    require(rate > 0.0 && rate < static_cast<double>(a_max),
            "arrivals: pareto rate must lie in (0, a_max)");
    double lo = 1e-9, hi = static_cast<double>(a_max) + 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (pareto_moments({shape, mid}, a_max).first < rate)
            lo = mid;
        else
            hi = mid;
    }
    return {shape, 0.5 * (lo + hi)};
}

double ArrivalProcess::mean(PairId p) const {
    return std::visit(overloaded{
                          [](const NoArrivals&) { return 0.0; },
                          [](const ConstantArrivals& c) { return static_cast<double>(c.rate); },
                          [&](const PoissonArrivals& c) { return poisson_moments(c.rate, a_max_).first; },
                          [&](const ParetoArrivals& c) { return pareto_moments(c, a_max_).first; },
                      },
                      kind(p));
}

double ArrivalProcess::second_moment(PairId p) const {
    return std::visit(overloaded{
                          [](const NoArrivals&) { return 0.0; },
                          [](const ConstantArrivals& c) {
                              return static_cast<double>(c.rate) * static_cast<double>(c.rate);
                          },
                          [&](const PoissonArrivals& c) { return poisson_moments(c.rate, a_max_).second; },
                          [&](const ParetoArrivals& c) { return pareto_moments(c, a_max_).second; },
                      },
                      kind(p));
}

std::vector<double> ArrivalProcess::means() const {
    std::vector<double> out(kinds_.size());
    for (std::size_t p = 0; p < kinds_.size(); ++p) out[p] = mean(static_cast<PairId>(p));
    return out;
}

std::int64_t ArrivalProcess::sample(PairId p, RandomStream& rng) const {
    return std::visit(overloaded{
                          [](const NoArrivals&) -> std::int64_t { return 0; },
                          [](const ConstantArrivals& c) -> std::int64_t { return c.rate; },
                          [&](const PoissonArrivals& c) -> std::int64_t {
                              return std::min(rng.poisson(c.rate), a_max_);
                          },
                          [&](const ParetoArrivals& c) -> std::int64_t {
                              const double u = 1.0 - rng.uniform();  // (0, 1]
                              const double x = c.scale * std::pow(u, -1.0 / c.shape);
                              if (x >= static_cast<double>(a_max_)) return a_max_;
                              return std::min(static_cast<std::int64_t>(std::floor(x + 0.5)), a_max_);
                          },
                      },
                      kind(p));
}

std::vector<std::int64_t> sample_arrivals(const ArrivalProcess& proc,
                                          std::span<RandomStream> streams) {
    require(static_cast<int>(streams.size()) == proc.pair_count(),
            "sample_arrivals: one stream per pair required");
    std::vector<std::int64_t> out(streams.size());
    for (std::size_t p = 0; p < streams.size(); ++p)
        out[p] = proc.sample(static_cast<PairId>(p), streams[p]);
    return out;
}

// ---------------------------------------------------------------------------
// Queues

QueueState queue_update(const QueueState& q, std::span<const std::int64_t> arrivals,
                        std::span<const std::int64_t> service) {
    require(arrivals.size() == q.backlog.size() && service.size() == q.backlog.size(),
            "queue_update: size mismatch");
    QueueState next{std::vector<std::int64_t>(q.backlog.size()), q.frame + 1};
    for (std::size_t p = 0; p < q.backlog.size(); ++p) {
        require(arrivals[p] >= 0 && service[p] >= 0, "queue_update: negative arrivals or service");
        next.backlog[p] = std::max<std::int64_t>(0, q.backlog[p] + arrivals[p] - service[p]);
    }
    return next;
}

double min_load_factor(std::span<const double> lambda, const Topology& topo, int frame_slots) {
    double best = std::numeric_limits<double>::infinity();
    for (double l : lambda)
        if (l > 0.0) best = std::min(best, l);
    if (!std::isfinite(best)) fail(ErrorCode::Validation, "min_load_factor: empty system");
    return best / (static_cast<double>(topo.inp_count()) * frame_slots);
}

// ---------------------------------------------------------------------------
// SchedulePrior

std::string to_string(PriorMode mode) {
    return mode == PriorMode::PerSlot ? "per_slot" : "frame_constant";
}

SchedulePrior::SchedulePrior(const Topology& topo, int frame_slots, PriorMode mode)
    : mode_(mode), frame_slots_(frame_slots), classes_(topo.class_count()),
      links_(topo.link_count()) {
    require(frame_slots_ > 0, "prior: frame_slots must be positive");
    values_.assign(static_cast<std::size_t>(links_) * static_cast<std::size_t>(classes_) *
                       static_cast<std::size_t>(stored_slots()),
                   0.0);
}

SchedulePrior::SchedulePrior(const Topology& topo, int frame_slots, PriorMode mode,
                             std::vector<double> values)
    : SchedulePrior(topo, frame_slots, mode) {
    require(values.size() == values_.size(), "prior: value count does not match layout");
    values_ = std::move(values);
}

SchedulePrior SchedulePrior::uniform(const Topology& topo, int frame_slots, PriorMode mode) {
    SchedulePrior p(topo, frame_slots, mode);
    for (int k = 0; k < topo.inp_count(); ++k) {
        const auto& ls = topo.links_of_inp(k);
        const double v = 1.0 / static_cast<double>(ls.size() * static_cast<std::size_t>(topo.class_count()));
        for (int l : ls)
            for (int c = 0; c < topo.class_count(); ++c)
                for (int s = 0; s < p.stored_slots(); ++s) p.at(l, c, s) = v;
    }
    return p;
}

SchedulePrior SchedulePrior::expanded() const {
    if (mode_ == PriorMode::PerSlot) return *this;
    SchedulePrior out = *this;
    out.mode_ = PriorMode::PerSlot;
    out.values_.assign(values_.size() * static_cast<std::size_t>(frame_slots_), 0.0);
    for (int l = 0; l < links_; ++l)
        for (int c = 0; c < classes_; ++c)
            for (int s = 0; s < frame_slots_; ++s) out.at(l, c, s) = at(l, c, 0);
    return out;
}

std::vector<double> SchedulePrior::expected_service(const Topology& topo) const {
    std::vector<double> x(static_cast<std::size_t>(topo.pair_count()), 0.0);
    const double mult = mode_ == PriorMode::PerSlot ? 1.0 : static_cast<double>(frame_slots_);
    for (int l = 0; l < links_; ++l) {
        const Link& e = topo.link(l);
        for (int c = 0; c < classes_; ++c) {
            double acc = 0.0;
            for (int s = 0; s < stored_slots(); ++s) acc += at(l, c, s);
            x[static_cast<std::size_t>(topo.pair(e.client, c))] += e.success_prob * acc * mult;
        }
    }
    return x;
}

std::vector<double> SchedulePrior::trial_probs(const Topology& topo, PairId pair) const {
    const int i = topo.client_of(pair);
    const int c = topo.class_of(pair);
    std::vector<double> out;
    out.reserve(topo.links_of_client(i).size() * static_cast<std::size_t>(frame_slots_));
    for (int l : topo.links_of_client(i)) {
        const double r = topo.link(l).success_prob;
        for (int s = 0; s < frame_slots_; ++s) out.push_back(r * at(l, c, s));
    }
    return out;
}

void SchedulePrior::validate(const Topology& topo, double tol) const {
    require(links_ == topo.link_count() && classes_ == topo.class_count(),
            "prior: layout does not match topology");
    for (double v : values_) {
        if (!(v >= -tol && v <= 1.0 + tol)) fail(ErrorCode::Validation, "prior: entry outside [0,1]");
    }
    for (int s = 0; s < stored_slots(); ++s) {
        for (int k = 0; k < topo.inp_count(); ++k) {
            double sum = 0.0;
            for (int l : topo.links_of_inp(k))
                for (int c = 0; c < classes_; ++c) sum += at(l, c, s);
            if (std::abs(sum - 1.0) > tol) {
                std::ostringstream msg;
                msg << "prior: InP " << k << " slot " << s << " sums to " << sum << ", expected 1";
                fail(ErrorCode::Validation, msg.str());
            }
        }
        for (int i = 0; i < topo.client_count(); ++i) {
            double sum = 0.0;
            for (int l : topo.links_of_client(i))
                for (int c = 0; c < classes_; ++c) sum += at(l, c, s);
            if (sum > topo.rate_cap(i) + tol) {
                std::ostringstream msg;
                msg << "prior: client " << i << " slot " << s << " exceeds rate cap (" << sum << " > "
                    << topo.rate_cap(i) << ")";
                fail(ErrorCode::Validation, msg.str());
            }
        }
    }
}

SchedulePrior SchedulePrior::normalized(const Topology& topo) const {
    SchedulePrior out = *this;
    for (double& v : out.values_) v = std::clamp(v, 0.0, 1.0);
    for (int s = 0; s < stored_slots(); ++s) {
        for (int k = 0; k < topo.inp_count(); ++k) {
            double sum = 0.0;
            for (int l : topo.links_of_inp(k))
                for (int c = 0; c < classes_; ++c) sum += out.at(l, c, s);
            if (sum <= 0.0) fail(ErrorCode::Validation, "prior: InP block has no mass");
            for (int l : topo.links_of_inp(k))
                for (int c = 0; c < classes_; ++c) out.at(l, c, s) /= sum;
        }
    }
    return out;
}

}  // namespace qosshare
