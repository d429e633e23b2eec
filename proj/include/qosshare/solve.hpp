#pragma once

// LP oracle (dense two-phase simplex) and the conditional-gradient solver for
// concave objectives over a Polyhedron.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qosshare/model.hpp"
#include "qosshare/polyhedron.hpp"

namespace qosshare {

enum class SolveStatus { Optimal, GapReached, MaxIterations, Infeasible, Unbounded };

std::string to_string(SolveStatus s);

struct SolveReport {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<double> point;
    double objective = 0.0;
    double gap = 0.0;  // certified upper bound on optimum - objective
    int iterations = 0;
    // Conditional-gradient certificate: gap == cert_gradient . (cert_vertex - point)
    // with cert_vertex an LP maximizer of cert_gradient. Empty for pure LPs.
    std::vector<double> cert_gradient;
    std::vector<double> cert_vertex;

    bool feasible() const {
        return status == SolveStatus::Optimal || status == SolveStatus::GapReached ||
               status == SolveStatus::MaxIterations;
    }
};

/// Maximizes c.x over a fixed polyhedron. Keeps the final basis so repeated
/// solves with new costs start phase 2 from the last optimum.
class LpSolver {
public:
    explicit LpSolver(const Polyhedron& poly);
    ~LpSolver();
    LpSolver(LpSolver&&) noexcept;
    LpSolver& operator=(LpSolver&&) noexcept;

    SolveReport maximize(std::span<const double> costs);

    /// Total simplex pivots since construction.
    long pivots() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot LP: exact vertex optimum, or Infeasible / Unbounded.
SolveReport lp_solve(std::span<const double> costs, const Polyhedron& poly);

// ---------------------------------------------------------------------------
// Objectives

/// Utility of the expected per-pair service x (one entry per pair).
class UtilityFunction {
public:
    struct AlphaFair {
        std::vector<double> weights;  // per class
        std::vector<double> alphas;   // per class, each in (0, 1)
    };
    struct Linear {
        std::vector<double> coeffs;  // per pair
    };
    /// Caller promises concavity and continuity; bounds are taken as given.
    struct Custom {
        std::function<double(std::span<const double>)> value;
        std::function<void(std::span<const double>, std::span<double>)> gradient;
        double f_min = 0.0;
        double f_max = 0.0;
    };

    static constexpr double kGradientFloor = 1e-6;

    /// `mask` selects the pairs the utility applies to (empty: all pairs).
    UtilityFunction(AlphaFair spec, int class_count, std::vector<bool> mask = {});
    UtilityFunction(Linear spec, std::vector<bool> mask = {});
    UtilityFunction(Custom spec);

    static UtilityFunction zero(int pair_count);

    double value(std::span<const double> x) const;
    /// df/dx; AlphaFair floors x at kGradientFloor here (value() is unfloored).
    void gradient(std::span<const double> x, std::span<double> out) const;
    bool linear() const noexcept;

    /// Bounds of f over x in [0, x_max]^pairs.
    double f_min(int pairs, double x_max) const;
    double f_max(int pairs, double x_max) const;

private:
    enum class Kind { AlphaFair, Linear, Custom } kind_;
    int classes_ = 1;
    std::vector<double> weights_, alphas_, coeffs_;
    std::vector<bool> mask_;
    Custom custom_;

    bool applies(std::size_t pair) const { return mask_.empty() || mask_[pair]; }
};

/// Concave objective on the variable vector of a polyhedron.
class Objective {
public:
    virtual ~Objective() = default;
    virtual double value(std::span<const double> z) const = 0;
    virtual void gradient(std::span<const double> z, std::span<double> out) const = 0;
    virtual bool linear() const = 0;
};

class LinearObjective : public Objective {
public:
    explicit LinearObjective(std::vector<double> coeffs) : c_(std::move(coeffs)) {}
    double value(std::span<const double> z) const override;
    void gradient(std::span<const double> z, std::span<double> out) const override;
    bool linear() const override { return true; }

private:
    std::vector<double> c_;
};

/// h_t(p) = sum_(i,c) Q_ic * x_ic(p) + V f(x(p)), where x_ic(p) is the
/// expected per-frame service sum_k r_ki sum_tau p. Reads the prior entries
/// at the front of the variable vector (SchedulePrior storage order);
/// trailing auxiliaries have zero gradient.
class DriftObjective : public Objective {
public:
    DriftObjective(const Topology& topo, int frame_slots, PriorMode mode,
                   std::vector<double> backlog, double v, const UtilityFunction& utility);

    double value(std::span<const double> z) const override;
    void gradient(std::span<const double> z, std::span<double> out) const override;
    bool linear() const override { return v_ == 0.0 || utility_->linear(); }

    /// Expected service x per pair at z.
    std::vector<double> service(std::span<const double> z) const;

private:
    struct Entry {
        int var;
        int pair;
        double coef;  // r (times T_s in FrameConstant mode)
    };
    std::vector<Entry> entries_;
    std::vector<double> backlog_;
    double v_;
    const UtilityFunction* utility_;
    int pairs_;
};

// ---------------------------------------------------------------------------
// Conditional gradient

struct SolverOptions {
    double tol = 1e-5;  // relative: stop when gap <= tol * max(1, |h|)
    int max_iterations = 5000;
};

/// Away-step Frank-Wolfe over a fixed polyhedron. The active vertex set is
/// kept between solves, so consecutive frames warm-start from the last point.
class FrankWolfe {
public:
    FrankWolfe(const Polyhedron& poly, SolverOptions opts = {});
    ~FrankWolfe();
    FrankWolfe(FrankWolfe&&) noexcept;
    FrankWolfe& operator=(FrankWolfe&&) noexcept;

    SolveReport maximize(const Objective& obj);
    void reset();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Cold-start maximization (LP directly when the objective is linear).
SolveReport maximize_over_polyhedron(const Objective& obj, const Polyhedron& poly,
                                     SolverOptions opts = {});

}  // namespace qosshare
