// Dense two-phase tableau simplex. Variables are shifted to y = x - lower;
// finite upper bounds become rows unless a nonnegative row already implies
// them.

#include <algorithm>
#include <cmath>
#include <limits>

#include "qosshare/error.hpp"
#include "qosshare/solve.hpp"

namespace qosshare {

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::GapReached: return "gap_reached";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-8;
constexpr int kDegenerateLimit = 50;
constexpr long kMaxPivots = 200000;
constexpr int kRefactorEvery = 25;

}  // namespace

struct LpSolver::Impl {
    const Polyhedron* poly;
    int n = 0;                   // structural columns
    std::vector<double> shift;   // lower bounds
    // standard form: rows over structural + slack columns, rhs >= 0
    std::vector<std::vector<double>> a0;
    std::vector<double> b0;
    std::vector<int> slack_col;  // per row, -1 if none
    std::vector<bool> slack_unit;  // slack has +1 coefficient after normalization
    int cols = 0;                // structural + slack

    // working tableau (row-major, width cols + 1), no artificial columns
    std::vector<double> t;
    std::vector<int> basis;
    int m = 0;
    std::vector<int> kept_rows;  // indices into a0 of the live rows
    bool ready = false;
    bool infeasible = false;
    int warm_solves = 0;
    long pivots = 0;

    explicit Impl(const Polyhedron& p) : poly(&p) { build_standard_form(); }

    void build_standard_form() {
        n = poly->var_count();
        shift.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) shift[static_cast<std::size_t>(j)] = poly->lower(j);

        struct Std {
            std::vector<std::pair<int, double>> terms;
            RowSense sense;
            double rhs;
        };
        std::vector<Std> rows;
        for (const Row& r : poly->rows()) {
            Std s{{}, r.sense, r.rhs};
            for (const Term& t : r.terms) {
                if (t.coef == 0.0) continue;
                s.terms.emplace_back(t.var, t.coef);
                s.rhs -= t.coef * shift[static_cast<std::size_t>(t.var)];
            }
            rows.push_back(std::move(s));
        }
        // bounds implied by rows with nonnegative coefficients and a <= / = sense
        std::vector<double> implied(static_cast<std::size_t>(n), kInf);
        for (const Std& s : rows) {
            if (s.sense == RowSense::Ge) continue;
            if (!std::all_of(s.terms.begin(), s.terms.end(), [](auto& t) { return t.second >= 0.0; }))
                continue;
            for (auto& [var, coef] : s.terms) {
                auto& cur = implied[static_cast<std::size_t>(var)];
                cur = std::min(cur, s.rhs / coef);
            }
        }
        for (int j = 0; j < n; ++j) {
            const double width = poly->upper(j) - shift[static_cast<std::size_t>(j)];
            if (std::isinf(width) || implied[static_cast<std::size_t>(j)] <= width) continue;
            rows.push_back(Std{{{j, 1.0}}, RowSense::Le, width});
        }

        const int m0 = static_cast<int>(rows.size());
        int slacks = 0;
        for (const Std& s : rows) slacks += s.sense != RowSense::Eq;
        cols = n + slacks;
        a0.assign(static_cast<std::size_t>(m0), std::vector<double>(static_cast<std::size_t>(cols), 0.0));
        b0.assign(static_cast<std::size_t>(m0), 0.0);
        slack_col.assign(static_cast<std::size_t>(m0), -1);
        slack_unit.assign(static_cast<std::size_t>(m0), false);
        int next_slack = n;
        for (int i = 0; i < m0; ++i) {
            const Std& s = rows[static_cast<std::size_t>(i)];
            auto& row = a0[static_cast<std::size_t>(i)];
            for (auto& [var, coef] : s.terms) row[static_cast<std::size_t>(var)] += coef;
            double rhs = s.rhs;
            double slack = 0.0;
            if (s.sense != RowSense::Eq) {
                slack = s.sense == RowSense::Le ? 1.0 : -1.0;
                slack_col[static_cast<std::size_t>(i)] = next_slack;
                row[static_cast<std::size_t>(next_slack++)] = slack;
            }
            if (rhs < 0.0 || (rhs == 0.0 && slack < 0.0)) {
                for (double& v : row) v = -v;
                rhs = -rhs;
                slack = -slack;
            }
            b0[static_cast<std::size_t>(i)] = rhs;
            slack_unit[static_cast<std::size_t>(i)] = slack > 0.0;
        }
    }

    // ---- tableau primitives -------------------------------------------------

    double& at(std::vector<double>& tab, int width, int i, int j) {
        return tab[static_cast<std::size_t>(i) * static_cast<std::size_t>(width) + static_cast<std::size_t>(j)];
    }

    static void pivot(std::vector<double>& tab, int rows, int width, std::vector<double>& d,
                      std::vector<int>& bas, int r, int q) {
        double* pr = tab.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(width);
        const double inv = 1.0 / pr[q];
        for (int j = 0; j < width; ++j) pr[j] *= inv;
        pr[q] = 1.0;
        for (int i = 0; i < rows; ++i) {
            if (i == r) continue;
            double* pi = tab.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(width);
            const double f = pi[q];
            if (f == 0.0) continue;
            for (int j = 0; j < width; ++j) pi[j] -= f * pr[j];
            pi[q] = 0.0;
            double& rhs = pi[width - 1];
            if (rhs < 0.0 && rhs > -1e-11) rhs = 0.0;
        }
        if (!d.empty()) {
            const double f = d[static_cast<std::size_t>(q)];
            if (f != 0.0)
                for (int j = 0; j < width; ++j) d[static_cast<std::size_t>(j)] -= f * pr[j];
            d[static_cast<std::size_t>(q)] = 0.0;
        }
        bas[static_cast<std::size_t>(r)] = q;
    }

    // d_j = c_j - c_B . T_j; the last entry holds -(objective)
    static std::vector<double> reduced_costs(const std::vector<double>& tab, int rows, int width,
                                             const std::vector<double>& c, const std::vector<int>& bas) {
        std::vector<double> d(static_cast<std::size_t>(width), 0.0);
        for (int j = 0; j < width - 1; ++j) d[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)];
        for (int i = 0; i < rows; ++i) {
            const double cb = c[static_cast<std::size_t>(bas[static_cast<std::size_t>(i)])];
            if (cb == 0.0) continue;
            const double* pi = tab.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(width);
            for (int j = 0; j < width; ++j) d[static_cast<std::size_t>(j)] -= cb * pi[j];
        }
        return d;
    }

    enum class Outcome { Optimal, Unbounded };

    // Primal simplex (maximize) on columns [0, allowed). Dantzig pricing with a
    // switch to Bland's rule after a run of degenerate pivots.
    Outcome iterate(std::vector<double>& tab, int rows, int width, std::vector<double>& d,
                    std::vector<int>& bas, int allowed) {
        int degenerate = 0;
        bool bland = false;
        for (;;) {
            int q = -1;
            double best = kCostTol;
            for (int j = 0; j < allowed; ++j) {
                const double dj = d[static_cast<std::size_t>(j)];
                if (dj <= kCostTol) continue;
                if (bland) {
                    q = j;
                    break;
                }
                if (dj > best) {
                    best = dj;
                    q = j;
                }
            }
            if (q < 0) return Outcome::Optimal;

            int r = -1;
            double ratio = kInf;
            double piv = 0.0;
            for (int i = 0; i < rows; ++i) {
                const double* pi = tab.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(width);
                const double a = pi[q];
                if (a <= kPivotTol) continue;
                const double rt = std::max(0.0, pi[width - 1]) / a;
                const double tie = 1e-12 * (1.0 + std::abs(ratio));
                if (r < 0 || rt < ratio - tie) {
                    r = i;
                    ratio = rt;
                    piv = a;
                } else if (rt <= ratio + tie) {
                    const bool take = bland ? bas[static_cast<std::size_t>(i)] < bas[static_cast<std::size_t>(r)]
                                            : a > piv;
                    if (take) {
                        r = i;
                        piv = a;
                        ratio = std::min(ratio, rt);
                    }
                }
            }
            if (r < 0) return Outcome::Unbounded;
            if (ratio <= 1e-12) {
                if (++degenerate > kDegenerateLimit) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }
            pivot(tab, rows, width, d, bas, r, q);
            if (++pivots > kMaxPivots) fail(ErrorCode::Runtime, "lp: pivot limit exceeded");
        }
    }

    // ---- phases -------------------------------------------------------------

    void cold_start() {
        ready = false;
        infeasible = false;
        const int m0 = static_cast<int>(a0.size());
        std::vector<int> art_rows;
        for (int i = 0; i < m0; ++i)
            if (!slack_unit[static_cast<std::size_t>(i)]) art_rows.push_back(i);
        const int na = static_cast<int>(art_rows.size());
        const int width = cols + na + 1;
        std::vector<double> tab(static_cast<std::size_t>(m0) * static_cast<std::size_t>(width), 0.0);
        std::vector<int> bas(static_cast<std::size_t>(m0), -1);
        for (int i = 0; i < m0; ++i) {
            std::copy(a0[static_cast<std::size_t>(i)].begin(), a0[static_cast<std::size_t>(i)].end(),
                      tab.begin() + static_cast<std::ptrdiff_t>(i) * width);
            at(tab, width, i, width - 1) = b0[static_cast<std::size_t>(i)];
            if (slack_unit[static_cast<std::size_t>(i)]) bas[static_cast<std::size_t>(i)] = slack_col[static_cast<std::size_t>(i)];
        }
        for (int a = 0; a < na; ++a) {
            const int i = art_rows[static_cast<std::size_t>(a)];
            at(tab, width, i, cols + a) = 1.0;
            bas[static_cast<std::size_t>(i)] = cols + a;
        }

        if (na > 0) {
            std::vector<double> c1(static_cast<std::size_t>(width - 1), 0.0);
            for (int a = 0; a < na; ++a) c1[static_cast<std::size_t>(cols + a)] = -1.0;
            std::vector<double> d = reduced_costs(tab, m0, width, c1, bas);
            iterate(tab, m0, width, d, bas, width - 1);
            double scale = 1.0;
            for (double b : b0) scale = std::max(scale, std::abs(b));
            double infeas = 0.0;
            for (int i = 0; i < m0; ++i)
                if (bas[static_cast<std::size_t>(i)] >= cols) infeas += at(tab, width, i, width - 1);
            if (infeas > kFeasTol * scale) {
                infeasible = true;
                return;
            }
            // drive zero-level artificials out, dropping redundant rows
            std::vector<double> none;
            for (int i = 0; i < m0; ++i) {
                if (bas[static_cast<std::size_t>(i)] < cols) continue;
                int q = -1;
                double big = kPivotTol;
                for (int j = 0; j < cols; ++j) {
                    const double v = std::abs(at(tab, width, i, j));
                    if (v > big) {
                        big = v;
                        q = j;
                    }
                }
                if (q >= 0) pivot(tab, m0, width, none, bas, i, q);
            }
        }

        // compact: drop artificial columns and redundant rows
        kept_rows.clear();
        basis.clear();
        t.clear();
        for (int i = 0; i < m0; ++i) {
            if (bas[static_cast<std::size_t>(i)] >= cols) continue;
            kept_rows.push_back(i);
            basis.push_back(bas[static_cast<std::size_t>(i)]);
            const double* src = tab.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(width);
            t.insert(t.end(), src, src + cols);
            t.push_back(std::max(0.0, src[width - 1]));
        }
        m = static_cast<int>(kept_rows.size());
        ready = true;
        warm_solves = 0;
    }

    // Rebuild the tableau for the current basis from the original rows.
    bool refactor() {
        const int width = cols + 1;
        std::vector<double> tab;
        tab.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(width));
        for (int r : kept_rows) {
            tab.insert(tab.end(), a0[static_cast<std::size_t>(r)].begin(), a0[static_cast<std::size_t>(r)].end());
            tab.push_back(b0[static_cast<std::size_t>(r)]);
        }
        std::vector<int> bas(static_cast<std::size_t>(m), -1);
        std::vector<bool> used(static_cast<std::size_t>(m), false);
        std::vector<double> none;
        for (int q : basis) {
            int r = -1;
            double big = 1e-7;
            for (int i = 0; i < m; ++i) {
                if (used[static_cast<std::size_t>(i)]) continue;
                const double v = std::abs(at(tab, width, i, q));
                if (v > big) {
                    big = v;
                    r = i;
                }
            }
            if (r < 0) return false;
            used[static_cast<std::size_t>(r)] = true;
            pivot(tab, m, width, none, bas, r, q);
        }
        for (int i = 0; i < m; ++i) {
            double& rhs = at(tab, width, i, width - 1);
            if (rhs < -1e-9) return false;
            rhs = std::max(rhs, 0.0);
        }
        t = std::move(tab);
        basis = std::move(bas);
        warm_solves = 0;
        return true;
    }

    std::vector<double> extract() const {
        std::vector<double> x(shift);
        const int width = cols + 1;
        for (int i = 0; i < m; ++i) {
            const int q = basis[static_cast<std::size_t>(i)];
            if (q < n)
                x[static_cast<std::size_t>(q)] +=
                    t[static_cast<std::size_t>(i) * static_cast<std::size_t>(width) + static_cast<std::size_t>(cols)];
        }
        return x;
    }

    SolveReport phase2(std::span<const double> costs) {
        SolveReport rep;
        const int width = cols + 1;
        std::vector<double> c(static_cast<std::size_t>(cols), 0.0);
        std::copy(costs.begin(), costs.end(), c.begin());
        std::vector<double> d = reduced_costs(t, m, width, c, basis);
        const long before = pivots;
        const Outcome out = iterate(t, m, width, d, basis, cols);
        rep.iterations = static_cast<int>(pivots - before);
        rep.point = extract();
        double obj = 0.0;
        for (int j = 0; j < n; ++j) obj += costs[static_cast<std::size_t>(j)] * rep.point[static_cast<std::size_t>(j)];
        rep.objective = obj;
        rep.status = out == Outcome::Optimal ? SolveStatus::Optimal : SolveStatus::Unbounded;
        return rep;
    }

    SolveReport solve(std::span<const double> costs) {
        require(static_cast<int>(costs.size()) == n, "lp: cost vector size mismatch");
        for (double c : costs) require(std::isfinite(c), "lp: non-finite cost");
        if (!ready && !infeasible) cold_start();
        if (infeasible) return SolveReport{SolveStatus::Infeasible, {}, 0.0, 0.0, 0, {}, {}};
        if (++warm_solves >= kRefactorEvery && !refactor()) cold_start();

        SolveReport rep = phase2(costs);
        if (poly->max_violation(rep.point) > 1e-9) {
            if (!refactor()) cold_start();
            rep = phase2(costs);
            if (poly->max_violation(rep.point) > 1e-9) {
                cold_start();
                rep = phase2(costs);
            }
        }
        return rep;
    }
};

LpSolver::LpSolver(const Polyhedron& poly) : impl_(std::make_unique<Impl>(poly)) {}
LpSolver::~LpSolver() = default;
LpSolver::LpSolver(LpSolver&&) noexcept = default;
LpSolver& LpSolver::operator=(LpSolver&&) noexcept = default;

SolveReport LpSolver::maximize(std::span<const double> costs) { return impl_->solve(costs); }
long LpSolver::pivots() const { return impl_->pivots; }

SolveReport lp_solve(std::span<const double> costs, const Polyhedron& poly) {
    LpSolver solver(poly);
    return solver.maximize(costs);
}

}  // namespace qosshare
