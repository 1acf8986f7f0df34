#pragma once

#include <random>
#include <vector>

#include "routelab/mdp.hpp"

namespace testutil {

using routelab::ActionSpec;
using routelab::TabularMdp;
using routelab::TabularPolicy;
using routelab::Transition;
using routelab::Vec;

/// Random dense MDP with 2..max_states states and 1..4 actions per state.
/// With probability ~0.3 the last state is terminal.
inline TabularMdp random_mdp(std::mt19937_64& rng, int max_states = 10) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int n = 2 + static_cast<int>(rng() % static_cast<uint64_t>(max_states - 1));
    double discount = 0.2 + 0.75 * unit(rng);
    bool with_terminal = unit(rng) < 0.3;
    std::vector<std::vector<ActionSpec>> actions(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) {
        int num_actions = 1 + static_cast<int>(rng() % 4);
        for (int a = 0; a < num_actions; ++a) {
            ActionSpec spec;
            spec.reward = -10.0 + 20.0 * unit(rng);
            Vec weights(static_cast<size_t>(n));
            double total = 0.0;
            for (int t = 0; t < n; ++t) {
                weights[static_cast<size_t>(t)] = unit(rng) < 0.5 ? 0.0 : unit(rng);
                total += weights[static_cast<size_t>(t)];
            }
            if (total == 0.0) {
                weights[rng() % static_cast<uint64_t>(n)] = 1.0;
                total = 1.0;
            }
            for (int t = 0; t < n; ++t)
                if (weights[static_cast<size_t>(t)] > 0.0)
                    spec.transitions.push_back(Transition{t, weights[static_cast<size_t>(t)] / total});
            actions[static_cast<size_t>(s)].push_back(std::move(spec));
        }
    }
    std::vector<int> terminals;
    if (with_terminal) terminals.push_back(n - 1);
    return TabularMdp(n, discount, std::move(actions), std::move(terminals));
}

inline TabularPolicy random_policy(const TabularMdp& mdp, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec> rows(static_cast<size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s) {
        Vec row(static_cast<size_t>(mdp.num_actions(s)));
        double total = 0.0;
        for (double& p : row) {
            p = 0.05 + unit(rng);
            total += p;
        }
        for (double& p : row) p /= total;
        rows[static_cast<size_t>(s)] = std::move(row);
    }
    return TabularPolicy(std::move(rows));
}

/// Random value vector, zero at terminal states.
inline routelab::ValueFunction random_values(const TabularMdp& mdp, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    routelab::ValueFunction v(static_cast<size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s)
        v[static_cast<size_t>(s)] = mdp.is_terminal(s) ? 0.0 : -20.0 + 40.0 * unit(rng);
    return v;
}

/// Deterministic policy from a per-state action index list.
inline TabularPolicy deterministic_policy(const TabularMdp& mdp, const std::vector<int>& choice) {
    std::vector<Vec> rows(static_cast<size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s) {
        rows[static_cast<size_t>(s)].assign(static_cast<size_t>(mdp.num_actions(s)), 0.0);
        rows[static_cast<size_t>(s)][static_cast<size_t>(choice[static_cast<size_t>(s)])] = 1.0;
    }
    return TabularPolicy(std::move(rows));
}

}  // namespace testutil
