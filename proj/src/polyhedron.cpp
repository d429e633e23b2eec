#include "qosshare/polyhedron.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qosshare/error.hpp"

namespace qosshare {

int Polyhedron::add_variable(double lower, double upper, std::string name) {
    require(std::isfinite(lower), "polyhedron: lower bounds must be finite");
    require(upper >= lower, "polyhedron: empty variable range");
    lower_.push_back(lower);
    upper_.push_back(upper);
    names_.push_back(std::move(name));
    return var_count() - 1;
}

void Polyhedron::add_row(Row row) {
    for (const Term& t : row.terms) {
        require(t.var >= 0 && t.var < var_count(), "polyhedron: row references unknown variable");
        require(std::isfinite(t.coef), "polyhedron: non-finite coefficient");
    }
    require(std::isfinite(row.rhs), "polyhedron: non-finite right-hand side");
    rows_.push_back(std::move(row));
}

double Polyhedron::activity(const Row& row, std::span<const double> x) const {
    double acc = 0.0;
    for (const Term& t : row.terms) acc += t.coef * x[static_cast<std::size_t>(t.var)];
    return acc;
}

double Polyhedron::max_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (int j = 0; j < var_count(); ++j) {
        const double v = x[static_cast<std::size_t>(j)];
        worst = std::max({worst, lower(j) - v, v - upper(j)});
    }
    for (const Row& r : rows_) {
        const double a = activity(r, x);
        switch (r.sense) {
            case RowSense::Le: worst = std::max(worst, a - r.rhs); break;
            case RowSense::Ge: worst = std::max(worst, r.rhs - a); break;
            case RowSense::Eq: worst = std::max(worst, std::abs(a - r.rhs)); break;
        }
    }
    return worst;
}

void Polyhedron::write_text(std::ostream& out) const {
    out << "# polyhedron vars=" << var_count() << " rows=" << row_count() << "\n";
    out.precision(17);
    out << "[coefficients]\n";
    for (std::size_t r = 0; r < rows_.size(); ++r)
        for (const Term& t : rows_[r].terms) out << r << ' ' << t.var << ' ' << t.coef << '\n';
    out << "[rows]\n";
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        const char* sense = rows_[r].sense == RowSense::Le ? "<=" : rows_[r].sense == RowSense::Ge ? ">=" : "=";
        out << r << ' ' << sense << ' ' << rows_[r].rhs << ' ' << rows_[r].tag << '\n';
    }
    out << "[bounds]\n";
    for (int j = 0; j < var_count(); ++j)
        out << j << ' ' << lower(j) << ' ' << upper(j) << ' ' << name(j) << '\n';
}

}  // namespace qosshare
