#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace qosshare {

enum class RowSense { Le, Ge, Eq };

struct Term {
    int var = 0;
    double coef = 0.0;
};

struct Row {
    std::vector<Term> terms;
    RowSense sense = RowSense::Le;
    double rhs = 0.0;
    std::string tag;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// {x : lower <= x <= upper, rows}. Lower bounds must be finite.
class Polyhedron {
public:
    int add_variable(double lower, double upper, std::string name = {});
    void add_row(Row row);

    int var_count() const noexcept { return static_cast<int>(lower_.size()); }
    int row_count() const noexcept { return static_cast<int>(rows_.size()); }
    const std::vector<Row>& rows() const noexcept { return rows_; }
    double lower(int j) const { return lower_.at(static_cast<std::size_t>(j)); }
    double upper(int j) const { return upper_.at(static_cast<std::size_t>(j)); }
    const std::string& name(int j) const { return names_.at(static_cast<std::size_t>(j)); }

    double activity(const Row& row, std::span<const double> x) const;
    /// Largest violation over rows and bounds (0 if x is inside).
    double max_violation(std::span<const double> x) const;

    /// Sparse triplet dump: one "row col coef" line per nonzero, then senses
    /// and right-hand sides, then bounds.
    void write_text(std::ostream& out) const;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<std::string> names_;
    std::vector<Row> rows_;
};

}  // namespace qosshare
