#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "routelab/features.hpp"
#include "routelab/mdp.hpp"

namespace routelab {

/// An MDP bundled with its start distribution over states.
struct Env {
    TabularMdp mdp;
    Vec start;  // probability per state; zero on terminals
    std::string name;
};

/**
 * Sequential sampling interface over an Env. Transitions are drawn from the
 * kernel; reaching a terminal reports it and restarts the current state from
 * the start distribution. Single-owner; clone by constructing a new sampler
 * with a fresh seed.
 */
class EnvSampler {
public:
    EnvSampler(const Env& env, uint64_t seed)
        : env_(&env), rng_(seed), unit_(0.0, 1.0) {
        current_ = draw_start();
    }

    int current() const { return current_; }

    struct StepResult {
        int next_state;
        double reward;
        bool terminated;
    };

    /// Take action a from the current state; restarts after terminal states.
    StepResult step(int a) {
        int s = current_;
        const ActionSpec& act = env_->mdp.action(s, a);
        int next = draw_from(act.transitions);
        bool term = env_->mdp.is_terminal(next);
        current_ = term ? draw_start() : next;
        return StepResult{next, act.reward, term};
    }

    void reset() { current_ = draw_start(); }

    std::mt19937_64& rng() { return rng_; }

private:
    int draw_start() {
        double u = unit_(rng_);
        double acc = 0.0;
        int last = 0;
        for (int s = 0; s < static_cast<int>(env_->start.size()); ++s) {
            if (env_->start[static_cast<size_t>(s)] <= 0.0) continue;
            acc += env_->start[static_cast<size_t>(s)];
            last = s;
            if (u < acc) return s;
        }
        return last;
    }

    int draw_from(const std::vector<Transition>& transitions) {
        if (transitions.size() == 1) return transitions.front().next_state;
        double u = unit_(rng_);
        double acc = 0.0;
        int last = transitions.front().next_state;
        for (const auto& tr : transitions) {
            acc += tr.prob;
            last = tr.next_state;
            if (u < acc) return tr.next_state;
        }
        return last;
    }

    const Env* env_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> unit_;
    int current_;
};

namespace detail {

struct GraphSpec {
    // adjacency[node] = list of (neighbor, weight)
    std::map<int, std::vector<std::pair<int, double>>> adjacency;
    int destination = -1;
    int start_node = -1;  // -1 means uniform over non-terminal states
};

/**
 * Builds a shortest-path routing MDP from an undirected weighted graph.
 * Node ids are remapped to dense 0-based states in ascending id order.
 * Action k in a state moves deterministically to the k-th neighbor in
 * descending node-id order with reward equal to minus the edge weight.
 * The destination is the unique terminal state.
 */
inline Env build_graph_env(const GraphSpec& spec, double discount, const std::string& name) {
    if (spec.adjacency.empty()) throw std::invalid_argument(name + ": empty graph");
    if (spec.adjacency.find(spec.destination) == spec.adjacency.end())
        throw std::invalid_argument(name + ": destination is not a graph node");

    std::map<int, int> id_of;  // original -> dense state id (ascending order)
    for (const auto& [node, nbrs] : spec.adjacency) {
        (void)nbrs;
        int next_id = static_cast<int>(id_of.size());
        id_of[node] = next_id;
    }
    int n = static_cast<int>(id_of.size());

    std::vector<std::vector<ActionSpec>> actions(static_cast<size_t>(n));
    for (const auto& [node, nbrs] : spec.adjacency) {
        auto sorted = nbrs;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& x, const auto& y) { return x.first > y.first; });
        auto& acts = actions[static_cast<size_t>(id_of[node])];
        for (const auto& [nbr, w] : sorted)
            acts.push_back(ActionSpec{-w, {Transition{id_of.at(nbr), 1.0}}});
    }

    int dest = id_of.at(spec.destination);
    TabularMdp mdp(n, discount, std::move(actions), {dest});

    Vec start(static_cast<size_t>(n), 0.0);
    if (spec.start_node >= 0) {
        auto it = id_of.find(spec.start_node);
        if (it == id_of.end()) throw std::invalid_argument(name + ": start is not a graph node");
        start[static_cast<size_t>(it->second)] = 1.0;
    } else {
        int nonterminal = n - 1;
        for (int s = 0; s < n; ++s)
            if (!mdp.is_terminal(s)) start[static_cast<size_t>(s)] = 1.0 / nonterminal;
    }
    return Env{std::move(mdp), std::move(start), name};
}

inline constexpr int kGridRows = 5;
inline constexpr int kGridCols = 9;

/**
 * Compass moves available from a grid state, enumerated clockwise starting
 * at East with off-grid directions skipped. Rewards: E/W -5, diagonals -10,
 * N/S -15. Returns (next_state, reward) per surviving direction, in order.
 */
inline std::vector<std::pair<int, double>> grid_moves(int s) {
    static constexpr int drow[8] = {0, 1, 1, 1, 0, -1, -1, -1};  // E SE S SW W NW N NE
    static constexpr int dcol[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static constexpr double reward[8] = {-5, -10, -15, -10, -5, -10, -15, -10};
    int row = s / kGridCols;
    int col = s % kGridCols;
    std::vector<std::pair<int, double>> moves;
    for (int d = 0; d < 8; ++d) {
        int r2 = row + drow[d];
        int c2 = col + dcol[d];
        if (r2 < 0 || r2 >= kGridRows || c2 < 0 || c2 >= kGridCols) continue;
        moves.emplace_back(r2 * kGridCols + c2, reward[d]);
    }
    return moves;
}

}  // namespace detail

/**
 * Six-node weighted routing graph. States 0..5 are the graph nodes 1..6
 * shifted to 0-based ids; node 6 (state 5) is the terminal destination and
 * every episode starts from node 1 (state 0).
 */
inline Env six_node_env(double discount = 0.8) {
    detail::GraphSpec spec;
    const int edges[][3] = {{1, 5, 18}, {5, 6, 8}, {6, 4, 6}, {4, 3, 11}, {3, 1, 9},
                            {3, 5, 2},  {1, 2, 7}, {3, 2, 10}, {4, 2, 19}};
    for (const auto& e : edges) {
        spec.adjacency[e[0]].emplace_back(e[1], e[2]);
        spec.adjacency[e[1]].emplace_back(e[0], e[2]);
    }
    spec.destination = 6;
    spec.start_node = 1;
    return detail::build_graph_env(spec, discount, "six_node");
}

/**
 * 5x9 grid routing environment, states 0..44 with id = 9*row + col and
 * row 0 at the top. State 44 (bottom-right) is the terminal destination;
 * the start distribution is uniform over the 44 other states.
 */
inline Env grid44_env(double discount) {
    const int n = detail::kGridRows * detail::kGridCols;
    std::vector<std::vector<ActionSpec>> actions(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s)
        for (const auto& [next, r] : detail::grid_moves(s))
            actions[static_cast<size_t>(s)].push_back(ActionSpec{r, {Transition{next, 1.0}}});
    TabularMdp mdp(n, discount, std::move(actions), {n - 1});
    Vec start(static_cast<size_t>(n), 1.0 / (n - 1));
    start.back() = 0.0;
    return Env{std::move(mdp), std::move(start), "grid44"};
}

/**
 * Linear features for the grid environment. With (row, col) coordinates,
 * the state features are (4-row, 8-col, 4+row-col, 1). The state-action
 * features use the coordinates of the successor reached by the action,
 * (4-row', 8-col', 4+row'-col', reward, 1), so that actions are
 * distinguishable by where they lead.
 */
inline FeatureMap grid44_features() {
    const int n = detail::kGridRows * detail::kGridCols;
    auto state_table = std::make_shared<std::vector<Vec>>();
    auto action_table = std::make_shared<std::vector<std::vector<Vec>>>();
    for (int s = 0; s < n; ++s) {
        double row = s / detail::kGridCols;
        double col = s % detail::kGridCols;
        state_table->push_back(Vec{4.0 - row, 8.0 - col, 4.0 + row - col, 1.0});
        std::vector<Vec> per_action;
        for (const auto& [next, reward] : detail::grid_moves(s)) {
            double nrow = next / detail::kGridCols;
            double ncol = next % detail::kGridCols;
            per_action.push_back(Vec{4.0 - nrow, 8.0 - ncol, 4.0 + nrow - ncol, reward, 1.0});
        }
        action_table->push_back(std::move(per_action));
    }
    FeatureMap fm;
    fm.state_dim = 4;
    fm.action_dim = 5;
    fm.state_features = [state_table](int s) { return state_table->at(static_cast<size_t>(s)); };
    fm.state_action_features = [action_table](int s, int a) {
        const auto& per_action = action_table->at(static_cast<size_t>(s));
        if (a < 0 || a >= static_cast<int>(per_action.size()))
            throw std::invalid_argument("grid44_features: action out of range");
        return per_action[static_cast<size_t>(a)];
    };
    return fm;
}

/**
 * Loads a custom routing graph from an edge-list text file. Lines:
 *   destination=<id>
 *   start=<id|uniform>
 *   u v weight        (one undirected edge per line)
 * Blank lines and lines starting with '#' are ignored. Node ids may be any
 * nonnegative integers; they are remapped to dense 0-based states in
 * ascending id order.
 */
inline Env load_graph_env(const std::string& path, double discount) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_graph_env: cannot open " + path);
    detail::GraphSpec spec;
    spec.start_node = -1;
    bool have_destination = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::string body = line.substr(first);
        if (body.rfind("destination=", 0) == 0) {
            spec.destination = std::stoi(body.substr(12));
            have_destination = true;
            continue;
        }
        if (body.rfind("start=", 0) == 0) {
            std::string v = body.substr(6);
            spec.start_node = (v == "uniform") ? -1 : std::stoi(v);
            continue;
        }
        std::istringstream ss(body);
        int u, v;
        double w;
        if (!(ss >> u >> v >> w) || !(w > 0.0))
            throw std::runtime_error("load_graph_env: bad edge line " + std::to_string(lineno) +
                                     " in " + path);
        spec.adjacency[u].emplace_back(v, w);
        spec.adjacency[v].emplace_back(u, w);
    }
    if (!have_destination)
        throw std::runtime_error("load_graph_env: missing destination= line in " + path);
    return detail::build_graph_env(spec, discount, "custom");
}

}  // namespace routelab
