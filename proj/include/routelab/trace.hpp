#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace routelab {

/**
 * Checkpoint log of a single learning run. One row per checkpoint: the step
 * counter plus one value per named column. Written as CSV with a header row,
 * '.' decimal separator and 6 significant digits.
 */
struct ConvergenceTrace {
    std::vector<std::string> columns;  // names of the value columns (step excluded)
    std::vector<long> steps;
    std::vector<std::vector<double>> rows;

    void add(long step, std::vector<double> values) {
        steps.push_back(step);
        rows.push_back(std::move(values));
    }

    void write_csv(std::ostream& os) const {
        os << "step";
        for (const auto& c : columns) os << ',' << c;
        os << '\n';
        char buf[64];
        for (size_t i = 0; i < rows.size(); ++i) {
            os << steps[i];
            for (double v : rows[i]) {
                std::snprintf(buf, sizeof(buf), "%.6g", v);
                os << ',' << buf;
            }
            os << '\n';
        }
    }
};

}  // namespace routelab
