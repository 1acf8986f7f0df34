#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "routelab/mdp.hpp"

namespace routelab {

/**
 * Euclidean projection onto the probability simplex
 * { y : y_i >= 0, sum_i y_i = 1 }, via the sort-and-threshold algorithm.
 * Idempotent; points already on the simplex are returned unchanged.
 */
inline Vec project_simplex(const Vec& x) {
    if (x.empty()) throw std::invalid_argument("project_simplex: empty vector");
    for (double xi : x)
        if (!std::isfinite(xi)) throw std::invalid_argument("project_simplex: non-finite entry");

    Vec u = x;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double prefix = 0.0;
    double shift = 0.0;
    int support = 0;
    for (int j = 0; j < static_cast<int>(u.size()); ++j) {
        prefix += u[static_cast<size_t>(j)];
        double candidate = (1.0 - prefix) / (j + 1);
        if (u[static_cast<size_t>(j)] + candidate > 0.0) {
            shift = candidate;
            support = j + 1;
        }
    }
    (void)support;
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = std::max(x[i] + shift, 0.0);
    return out;
}

/**
 * Additive perturbation with renormalization, applied per state:
 *   out(s,a) = (pi(s,a) + eta) / sum_b (pi(s,b) + eta).
 * Every output entry is strictly positive; uniform rows are fixed points.
 */
inline TabularPolicy perturb_policy(const TabularPolicy& pi, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("perturb_policy: eta must be positive");
    std::vector<Vec> rows(static_cast<size_t>(pi.num_states()));
    for (int s = 0; s < pi.num_states(); ++s) {
        const Vec& row = pi.probs(s);
        double total = 0.0;
        for (double p : row) total += p + eta;
        Vec& out = rows[static_cast<size_t>(s)];
        out.resize(row.size());
        for (size_t a = 0; a < row.size(); ++a) out[a] = (row[a] + eta) / total;
    }
    return TabularPolicy(std::move(rows));
}

}  // namespace routelab
