#pragma once

// Brute-force reference computations shared by the unit and acceptance tests.
// Each one deliberately avoids the library routine it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qosshare/polyhedron.hpp"

namespace oracle {

/// Eq. 12 literally: max over subsets S with |S| = floor(G) and an extra index
/// j outside S of sum_S p + (G - floor G) p_j. Exponential; n <= 20.
inline double protection_subsets(const std::vector<double>& p, double gamma) {
    const int n = static_cast<int>(p.size());
    const int fl = static_cast<int>(std::floor(gamma));
    const double frac = gamma - fl;
    double best = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != fl) continue;
        double base = 0.0;
        for (int j = 0; j < n; ++j)
            if ((mask >> j) & 1u) base += p[static_cast<std::size_t>(j)];
        double extra = 0.0;
        for (int j = 0; j < n; ++j)
            if (!((mask >> j) & 1u)) extra = std::max(extra, frac * p[static_cast<std::size_t>(j)]);
        best = std::max(best, base + extra);
    }
    return best;
}

/// Optimum of the dual subproblem min G s + sum v, s + v_j >= p_j, s, v >= 0.
/// Eliminating v gives a convex piecewise-linear function of s whose kinks
/// sit at 0 and at the p_j; the minimum is attained at one of them.
inline double protection_dual(const std::vector<double>& p, double gamma) {
    std::vector<double> cand{0.0};
    cand.insert(cand.end(), p.begin(), p.end());
    double best = INFINITY;
    for (double s : cand) {
        double val = gamma * s;
        for (double x : p) val += std::max(0.0, x - s);
        best = std::min(best, val);
    }
    return best;
}

/// Solve a square system by Gaussian elimination with partial pivoting.
inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> a,
                                                       std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-10) return std::nullopt;
        std::swap(a[piv], a[c]);
        std::swap(b[piv], b[c]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            if (f == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t c = 0; c < n; ++c) b[c] /= a[c][c];
    return b;
}

struct VertexOptimum {
    bool feasible = false;
    double value = -INFINITY;
    std::vector<double> point;
};

/// Maximize c.x over a bounded polyhedron by enumerating every basic
/// feasible solution (n active constraints chosen among rows and bounds).
inline VertexOptimum enumerate_vertices(const std::vector<double>& c, const qosshare::Polyhedron& poly) {
    struct Cons {
        std::vector<double> a;
        double b;
        bool eq;
    };
    const auto n = static_cast<std::size_t>(poly.var_count());
    std::vector<Cons> cons;
    for (const auto& r : poly.rows()) {
        Cons k{std::vector<double>(n, 0.0), r.rhs, r.sense == qosshare::RowSense::Eq};
        for (const auto& t : r.terms) k.a[static_cast<std::size_t>(t.var)] += t.coef;
        cons.push_back(k);
    }
    for (std::size_t j = 0; j < n; ++j) {
        Cons lo{std::vector<double>(n, 0.0), poly.lower(static_cast<int>(j)), false};
        lo.a[j] = 1.0;
        cons.push_back(lo);
        if (std::isfinite(poly.upper(static_cast<int>(j)))) {
            Cons hi{std::vector<double>(n, 0.0), poly.upper(static_cast<int>(j)), false};
            hi.a[j] = 1.0;
            cons.push_back(hi);
        }
    }
    VertexOptimum best;
    std::vector<std::size_t> pick;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (pick.size() == n) {
            for (std::size_t i = 0; i < cons.size(); ++i)
                if (cons[i].eq && std::find(pick.begin(), pick.end(), i) == pick.end()) return;
            std::vector<std::vector<double>> a;
            std::vector<double> b;
            for (std::size_t i : pick) {
                a.push_back(cons[i].a);
                b.push_back(cons[i].b);
            }
            const auto x = solve_square(a, b);
            if (!x) return;
            if (poly.max_violation(*x) > 1e-9) return;
            double v = 0.0;
            for (std::size_t j = 0; j < n; ++j) v += c[j] * (*x)[j];
            if (!best.feasible || v > best.value) {
                best.feasible = true;
                best.value = v;
                best.point = *x;
            }
            return;
        }
        for (std::size_t i = start; i < cons.size(); ++i) {
            if (cons.size() - i < n - pick.size()) break;
            pick.push_back(i);
            rec(i + 1);
            pick.pop_back();
        }
    };
    if (n == 0) return best;
    rec(0);
    return best;
}

}  // namespace oracle
