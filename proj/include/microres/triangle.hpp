#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "microres/csv.hpp"
#include "microres/error.hpp"

namespace microres {

/// Accident-year x development-year table of incremental values. Cell (i, j) is
/// observed when i + j <= I - 1 (0-based rows and columns).
class RunoffTriangle {
public:
    RunoffTriangle() = default;
    RunoffTriangle(std::size_t accident_years, std::size_t dev_years, int first_year = 0)
        : I_(accident_years), J_(dev_years), first_year_(first_year),
          cells_(accident_years * dev_years, 0.0) {}

    std::size_t accident_years() const noexcept { return I_; }
    std::size_t dev_years() const noexcept { return J_; }
    int first_year() const noexcept { return first_year_; }

    bool observed(std::size_t i, std::size_t j) const noexcept { return i + j + 1 <= I_; }
    /// Last observed development index of row i.
    std::size_t last_observed(std::size_t i) const noexcept {
        return std::min(J_ - 1, I_ - 1 - i);
    }

    double& at(std::size_t i, std::size_t j) { return cells_.at(i * J_ + j); }
    double at(std::size_t i, std::size_t j) const { return cells_.at(i * J_ + j); }

    /// Sum of observed cells of row i.
    double observed_row_total(std::size_t i) const {
        double s = 0;
        for (std::size_t j = 0; j <= last_observed(i); ++j) s += at(i, j);
        return s;
    }

private:
    std::size_t I_ = 0;
    std::size_t J_ = 0;
    int first_year_ = 0;
    std::vector<double> cells_;
};

/// Text form: header `year,0,1,...,J-1`; one row per accident year; unobserved cells blank.
inline void write_triangle(std::ostream& out, const RunoffTriangle& t, char delim = ',') {
    csv::Writer w(out, delim);
    std::vector<std::string> header{"year"};
    for (std::size_t j = 0; j < t.dev_years(); ++j) header.push_back(std::to_string(j));
    w.row(header);
    for (std::size_t i = 0; i < t.accident_years(); ++i) {
        std::vector<std::string> row{std::to_string(t.first_year() + static_cast<int>(i))};
        for (std::size_t j = 0; j < t.dev_years(); ++j) {
            if (!t.observed(i, j)) {
                row.emplace_back();
                continue;
            }
            const double v = t.at(i, j);
            char buf[64];
            if (v == static_cast<double>(static_cast<long long>(v)))
                std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
            else
                std::snprintf(buf, sizeof buf, "%.17g", v);
            row.emplace_back(buf);
        }
        w.row(row);
    }
}

inline RunoffTriangle read_triangle(std::istream& in, char delim = ',') {
    const auto table = csv::Table::read(in, delim);
    if (table.header().size() < 2) throw ParseError(1, "triangle needs a year column and at least one development column");
    const std::size_t J = table.header().size() - 1;
    const std::size_t I = table.size();
    if (I == 0) throw ParseError(1, "triangle has no rows");
    int first_year = 0;
    try {
        first_year = std::stoi(table.row(0)[0]);
    } catch (const std::exception&) {
        throw ParseError(table.line(0), "invalid accident year '" + table.row(0)[0] + "'");
    }
    RunoffTriangle t(I, J, first_year);
    for (std::size_t i = 0; i < I; ++i) {
        for (std::size_t j = 0; j < J; ++j) {
            const std::string& f = table.row(i)[j + 1];
            if (!t.observed(i, j)) {
                if (!f.empty()) throw ParseError(table.line(i), "value in unobserved cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
                continue;
            }
            if (f.empty()) throw ParseError(table.line(i), "missing observed cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
            try {
                std::size_t pos = 0;
                t.at(i, j) = std::stod(f, &pos);
                if (pos != f.size()) throw std::invalid_argument(f);
            } catch (const std::exception&) {
                throw ParseError(table.line(i), "invalid cell value '" + f + "'");
            }
        }
    }
    return t;
}

}  // namespace microres
