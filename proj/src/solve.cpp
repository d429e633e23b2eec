#include <algorithm>
#include <cmath>
#include <numeric>

#include "qosshare/error.hpp"
#include "qosshare/solve.hpp"

namespace qosshare {

// ---------------------------------------------------------------------------
// UtilityFunction

UtilityFunction::UtilityFunction(AlphaFair spec, int class_count, std::vector<bool> mask)
    : kind_(Kind::AlphaFair), classes_(class_count), weights_(std::move(spec.weights)),
      alphas_(std::move(spec.alphas)), mask_(std::move(mask)) {
    require(class_count > 0, "utility: class count must be positive");
    require(static_cast<int>(weights_.size()) == class_count &&
                static_cast<int>(alphas_.size()) == class_count,
            "utility: alpha-fair needs one weight and one alpha per class");
    for (std::size_t c = 0; c < alphas_.size(); ++c) {
        require(alphas_[c] > 0.0 && alphas_[c] < 1.0, "utility: alpha must lie in (0, 1)");
        require(weights_[c] >= 0.0, "utility: weights must be nonnegative");
    }
}

UtilityFunction::UtilityFunction(Linear spec, std::vector<bool> mask)
    : kind_(Kind::Linear), coeffs_(std::move(spec.coeffs)), mask_(std::move(mask)) {
    require(mask_.empty() || mask_.size() == coeffs_.size(), "utility: mask size mismatch");
}

UtilityFunction::UtilityFunction(Custom spec) : kind_(Kind::Custom), custom_(std::move(spec)) {
    require(static_cast<bool>(custom_.value) && static_cast<bool>(custom_.gradient),
            "utility: custom utility needs value and gradient");
}

UtilityFunction UtilityFunction::zero(int pair_count) {
    return UtilityFunction(Linear{std::vector<double>(static_cast<std::size_t>(pair_count), 0.0)});
}

bool UtilityFunction::linear() const noexcept { return kind_ == Kind::Linear; }

double UtilityFunction::value(std::span<const double> x) const {
    double f = 0.0;
    switch (kind_) {
        case Kind::AlphaFair:
            for (std::size_t p = 0; p < x.size(); ++p) {
                if (!applies(p)) continue;
                const auto c = p % static_cast<std::size_t>(classes_);
                const double e = 1.0 - alphas_[c];
                f += weights_[c] * std::pow(std::max(x[p], 0.0), e) / e;
            }
            return f;
        case Kind::Linear:
            require(x.size() == coeffs_.size(), "utility: size mismatch");
            for (std::size_t p = 0; p < x.size(); ++p)
                if (applies(p)) f += coeffs_[p] * x[p];
            return f;
        case Kind::Custom: return custom_.value(x);
    }
    return f;
}

void UtilityFunction::gradient(std::span<const double> x, std::span<double> out) const {
    switch (kind_) {
        case Kind::AlphaFair:
            for (std::size_t p = 0; p < x.size(); ++p) {
                if (!applies(p)) {
                    out[p] = 0.0;
                    continue;
                }
                const auto c = p % static_cast<std::size_t>(classes_);
                out[p] = weights_[c] * std::pow(std::max(x[p], kGradientFloor), -alphas_[c]);
            }
            return;
        case Kind::Linear:
            for (std::size_t p = 0; p < x.size(); ++p) out[p] = applies(p) ? coeffs_[p] : 0.0;
            return;
        case Kind::Custom: custom_.gradient(x, out); return;
    }
}

double UtilityFunction::f_min(int, double x_max) const {
    switch (kind_) {
        case Kind::AlphaFair: return 0.0;
        case Kind::Linear: {
            double f = 0.0;
            for (std::size_t p = 0; p < coeffs_.size(); ++p)
                if (applies(p)) f += std::min(0.0, coeffs_[p]) * x_max;
            return f;
        }
        case Kind::Custom: return custom_.f_min;
    }
    return 0.0;
}

double UtilityFunction::f_max(int pairs, double x_max) const {
    switch (kind_) {
        case Kind::AlphaFair: {
            double f = 0.0;
            for (std::size_t p = 0; p < static_cast<std::size_t>(pairs); ++p) {
                if (!applies(p)) continue;
                const auto c = p % static_cast<std::size_t>(classes_);
                const double e = 1.0 - alphas_[c];
                f += weights_[c] * std::pow(x_max, e) / e;
            }
            return f;
        }
        case Kind::Linear: {
            double f = 0.0;
            for (std::size_t p = 0; p < coeffs_.size(); ++p)
                if (applies(p)) f += std::max(0.0, coeffs_[p]) * x_max;
            return f;
        }
        case Kind::Custom: return custom_.f_max;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Objectives

double LinearObjective::value(std::span<const double> z) const {
    return std::inner_product(c_.begin(), c_.end(), z.begin(), 0.0);
}

void LinearObjective::gradient(std::span<const double>, std::span<double> out) const {
    std::copy(c_.begin(), c_.end(), out.begin());
}

DriftObjective::DriftObjective(const Topology& topo, int frame_slots, PriorMode mode,
                               std::vector<double> backlog, double v, const UtilityFunction& utility)
    : backlog_(std::move(backlog)), v_(v), utility_(&utility), pairs_(topo.pair_count()) {
    require(v >= 0.0, "drift objective: V must be nonnegative");
    require(static_cast<int>(backlog_.size()) == pairs_, "drift objective: backlog size mismatch");
    const SchedulePrior shape(topo, frame_slots, mode);
    const double mult = mode == PriorMode::PerSlot ? 1.0 : static_cast<double>(frame_slots);
    for (int l = 0; l < topo.link_count(); ++l) {
        const Link& e = topo.link(l);
        for (int c = 0; c < topo.class_count(); ++c)
            for (int s = 0; s < shape.stored_slots(); ++s)
                entries_.push_back(Entry{static_cast<int>(shape.index(l, c, s)), topo.pair(e.client, c),
                                         e.success_prob * mult});
    }
}

std::vector<double> DriftObjective::service(std::span<const double> z) const {
    std::vector<double> x(static_cast<std::size_t>(pairs_), 0.0);
    for (const Entry& e : entries_)
        x[static_cast<std::size_t>(e.pair)] += e.coef * z[static_cast<std::size_t>(e.var)];
    return x;
}

double DriftObjective::value(std::span<const double> z) const {
    const std::vector<double> x = service(z);
    double h = std::inner_product(backlog_.begin(), backlog_.end(), x.begin(), 0.0);
    if (v_ != 0.0) h += v_ * utility_->value(x);
    return h;
}

void DriftObjective::gradient(std::span<const double> z, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> gx(backlog_);
    if (v_ != 0.0) {
        const std::vector<double> x = service(z);
        std::vector<double> gf(x.size());
        utility_->gradient(x, gf);
        for (std::size_t p = 0; p < gx.size(); ++p) gx[p] += v_ * gf[p];
    }
    for (const Entry& e : entries_)
        out[static_cast<std::size_t>(e.var)] = e.coef * gx[static_cast<std::size_t>(e.pair)];
}

// ---------------------------------------------------------------------------
// Frank-Wolfe

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

bool same_vertex(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t j = 0; j < a.size(); ++j)
        if (std::abs(a[j] - b[j]) > 1e-10) return false;
    return true;
}

// Largest step in [0, hi] along d for a concave objective, by bisection on
// the directional derivative.
double line_search(const Objective& obj, const std::vector<double>& x, const std::vector<double>& d,
                   double hi) {
    std::vector<double> y(x.size()), g(x.size());
    auto slope = [&](double step) {
        for (std::size_t j = 0; j < x.size(); ++j) y[j] = x[j] + step * d[j];
        obj.gradient(y, g);
        return dot(g, d);
    };
    if (slope(hi) >= 0.0) return hi;
    double lo = 0.0;
    for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace

struct FrankWolfe::Impl {
    const Polyhedron* poly;
    SolverOptions opts;
    LpSolver lp;
    std::vector<std::vector<double>> vertices;
    std::vector<double> weights;

    Impl(const Polyhedron& p, SolverOptions o) : poly(&p), opts(o), lp(p) {
        require(o.tol > 0.0 && o.max_iterations > 0, "solver: invalid options");
    }

    std::vector<double> current() const {
        std::vector<double> x(static_cast<std::size_t>(poly->var_count()), 0.0);
        for (std::size_t a = 0; a < vertices.size(); ++a)
            for (std::size_t j = 0; j < x.size(); ++j) x[j] += weights[a] * vertices[a][j];
        return x;
    }

    SolveReport maximize(const Objective& obj) {
        const auto n = static_cast<std::size_t>(poly->var_count());
        std::vector<double> g(n);
        SolveReport rep;

        if (obj.linear()) {
            std::vector<double> zero(n, 0.0);
            obj.gradient(zero, g);
            rep = lp.maximize(g);
            if (rep.status == SolveStatus::Optimal) {
                vertices.assign(1, rep.point);
                weights.assign(1, 1.0);
                rep.objective = obj.value(rep.point);
            }
            return rep;
        }

        if (vertices.empty()) {
            std::vector<double> zero(n, 0.0);
            obj.gradient(zero, g);
            SolveReport v0 = lp.maximize(g);
            if (v0.status != SolveStatus::Optimal) return v0;
            vertices.assign(1, v0.point);
            weights.assign(1, 1.0);
        }

        std::vector<double> x = current();
        std::vector<double> d(n);
        rep.status = SolveStatus::MaxIterations;
        for (int it = 0; it < opts.max_iterations; ++it) {
            rep.iterations = it + 1;
            obj.gradient(x, g);
            SolveReport s = lp.maximize(g);
            if (s.status != SolveStatus::Optimal) fail(ErrorCode::Runtime, "solver: LP oracle failed on a nonempty polytope");
            const double h = obj.value(x);
            const double gap_fw = std::max(0.0, dot(g, s.point) - dot(g, x));
            rep.gap = gap_fw;
            rep.cert_gradient = g;
            rep.cert_vertex = s.point;
            if (gap_fw <= opts.tol * std::max(1.0, std::abs(h))) {
                rep.status = SolveStatus::GapReached;
                break;
            }

            std::size_t away = 0;
            double away_val = kInf;
            for (std::size_t a = 0; a < vertices.size(); ++a) {
                const double v = dot(g, vertices[a]);
                if (v < away_val) {
                    away_val = v;
                    away = a;
                }
            }
            const double gap_away = dot(g, x) - away_val;

            if (gap_fw >= gap_away || vertices.size() == 1) {
                for (std::size_t j = 0; j < n; ++j) d[j] = s.point[j] - x[j];
                const double step = line_search(obj, x, d, 1.0);
                if (step >= 1.0) {
                    vertices.assign(1, s.point);
                    weights.assign(1, 1.0);
                } else {
                    for (double& w : weights) w *= 1.0 - step;
                    auto hit = std::find_if(vertices.begin(), vertices.end(),
                                            [&](const auto& v) { return same_vertex(v, s.point); });
                    if (hit == vertices.end()) {
                        vertices.push_back(s.point);
                        weights.push_back(step);
                    } else {
                        weights[static_cast<std::size_t>(hit - vertices.begin())] += step;
                    }
                }
            } else {
                const double wa = weights[away];
                const double hi = wa / (1.0 - wa);
                for (std::size_t j = 0; j < n; ++j) d[j] = x[j] - vertices[away][j];
                const double step = line_search(obj, x, d, hi);
                for (double& w : weights) w *= 1.0 + step;
                weights[away] -= step;
                if (step >= hi || weights[away] <= 1e-15) {
                    vertices.erase(vertices.begin() + static_cast<std::ptrdiff_t>(away));
                    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(away));
                }
            }
            const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
            for (double& w : weights) w /= total;
            x = current();
        }
        rep.point = x;
        rep.objective = obj.value(x);
        return rep;
    }
};

FrankWolfe::FrankWolfe(const Polyhedron& poly, SolverOptions opts)
    : impl_(std::make_unique<Impl>(poly, opts)) {}
FrankWolfe::~FrankWolfe() = default;
FrankWolfe::FrankWolfe(FrankWolfe&&) noexcept = default;
FrankWolfe& FrankWolfe::operator=(FrankWolfe&&) noexcept = default;

SolveReport FrankWolfe::maximize(const Objective& obj) { return impl_->maximize(obj); }

void FrankWolfe::reset() {
    impl_->vertices.clear();
    impl_->weights.clear();
}

SolveReport maximize_over_polyhedron(const Objective& obj, const Polyhedron& poly, SolverOptions opts) {
    FrankWolfe fw(poly, opts);
    return fw.maximize(obj);
}

}  // namespace qosshare
