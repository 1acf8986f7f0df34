#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace routelab {

using Vec = std::vector<double>;

/// Per-state value estimates v(s). Entries for terminal states are 0.
using ValueFunction = Vec;

/// Per state-action values q[s][a], defined exactly on the available actions.
using QTable = std::vector<Vec>;

struct Transition {
    int next_state;
    double prob;
};

/// One available action in a state: its reward and successor distribution.
struct ActionSpec {
    double reward;
    std::vector<Transition> transitions;
};

/**
 * Finite discounted MDP with per-state action lists.
 *
 * Immutable after construction. Terminal states are canonicalized to a
 * single zero-reward self-loop so every formula applies uniformly and
 * their value is pinned to 0 by the Bellman equations themselves.
 */
class TabularMdp {
public:
    TabularMdp(int num_states, double discount,
               std::vector<std::vector<ActionSpec>> actions,
               std::vector<int> terminal_states)
        : num_states_(num_states),
          discount_(discount),
          actions_(std::move(actions)),
          terminal_(static_cast<size_t>(num_states), false) {
        if (num_states_ <= 0)
            throw std::invalid_argument("TabularMdp: num_states must be positive");
        if (!(discount_ > 0.0 && discount_ < 1.0))
            throw std::invalid_argument("TabularMdp: discount must lie in (0,1)");
        if (actions_.size() != static_cast<size_t>(num_states_))
            throw std::invalid_argument("TabularMdp: one action list required per state");
        for (int t : terminal_states) {
            check_state(t);
            terminal_[static_cast<size_t>(t)] = true;
            actions_[static_cast<size_t>(t)] = {ActionSpec{0.0, {Transition{t, 1.0}}}};
        }
        for (int s = 0; s < num_states_; ++s) {
            const auto& acts = actions_[static_cast<size_t>(s)];
            if (acts.empty())
                throw std::invalid_argument("TabularMdp: state " + std::to_string(s) +
                                            " has no actions");
            for (const auto& act : acts) {
                double total = 0.0;
                for (const auto& tr : act.transitions) {
                    if (tr.next_state < 0 || tr.next_state >= num_states_)
                        throw std::invalid_argument("TabularMdp: transition target out of range");
                    if (tr.prob < 0.0)
                        throw std::invalid_argument("TabularMdp: negative transition probability");
                    total += tr.prob;
                }
                if (std::abs(total - 1.0) > 1e-12)
                    throw std::invalid_argument(
                        "TabularMdp: transition probabilities of state " + std::to_string(s) +
                        " must sum to 1");
                if (!std::isfinite(act.reward))
                    throw std::invalid_argument("TabularMdp: non-finite reward");
            }
        }
    }

    int num_states() const { return num_states_; }
    double discount() const { return discount_; }

    int num_actions(int s) const {
        check_state(s);
        return static_cast<int>(actions_[static_cast<size_t>(s)].size());
    }

    const ActionSpec& action(int s, int a) const {
        check_state(s);
        const auto& acts = actions_[static_cast<size_t>(s)];
        if (a < 0 || a >= static_cast<int>(acts.size()))
            throw std::invalid_argument("TabularMdp: action " + std::to_string(a) +
                                        " not available in state " + std::to_string(s));
        return acts[static_cast<size_t>(a)];
    }

    double reward(int s, int a) const { return action(s, a).reward; }

    bool is_terminal(int s) const {
        check_state(s);
        return terminal_[static_cast<size_t>(s)];
    }

    std::vector<int> terminal_states() const {
        std::vector<int> out;
        for (int s = 0; s < num_states_; ++s)
            if (terminal_[static_cast<size_t>(s)]) out.push_back(s);
        return out;
    }

private:
    void check_state(int s) const {
        if (s < 0 || s >= num_states_)
            throw std::invalid_argument("TabularMdp: state " + std::to_string(s) +
                                        " out of range");
    }

    int num_states_;
    double discount_;
    std::vector<std::vector<ActionSpec>> actions_;
    std::vector<bool> terminal_;
};

/**
 * Randomized stationary policy: one probability vector over the available
 * actions of each state.
 */
class TabularPolicy {
public:
    explicit TabularPolicy(std::vector<Vec> probs) : probs_(std::move(probs)) {}

    static TabularPolicy uniform(const TabularMdp& mdp) {
        std::vector<Vec> rows(static_cast<size_t>(mdp.num_states()));
        for (int s = 0; s < mdp.num_states(); ++s) {
            int k = mdp.num_actions(s);
            rows[static_cast<size_t>(s)].assign(static_cast<size_t>(k), 1.0 / k);
        }
        return TabularPolicy(std::move(rows));
    }

    int num_states() const { return static_cast<int>(probs_.size()); }

    const Vec& probs(int s) const { return probs_.at(static_cast<size_t>(s)); }
    Vec& probs(int s) { return probs_.at(static_cast<size_t>(s)); }

    /// Index of the most probable action; ties broken by lowest index.
    int argmax(int s) const {
        const Vec& row = probs(s);
        return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }

    void validate(const TabularMdp& mdp, double tol = 1e-10) const {
        if (num_states() != mdp.num_states())
            throw std::invalid_argument("TabularPolicy: state count mismatch");
        for (int s = 0; s < num_states(); ++s) {
            const Vec& row = probs(s);
            if (static_cast<int>(row.size()) != mdp.num_actions(s))
                throw std::invalid_argument("TabularPolicy: action count mismatch in state " +
                                            std::to_string(s));
            double sum = 0.0;
            for (double p : row) {
                if (p < -tol)
                    throw std::invalid_argument("TabularPolicy: negative probability in state " +
                                                std::to_string(s));
                sum += p;
            }
            if (std::abs(sum - 1.0) > tol)
                throw std::invalid_argument("TabularPolicy: probabilities of state " +
                                            std::to_string(s) + " do not sum to 1");
        }
    }

private:
    std::vector<Vec> probs_;
};

/** One-step lookahead value r(s,a) + beta * sum_{s'} p(s'|s,a) v(s'). */
inline double bellman_q(const TabularMdp& mdp, const ValueFunction& v, int s, int a) {
    const ActionSpec& act = mdp.action(s, a);
    if (v.size() != static_cast<size_t>(mdp.num_states()))
        throw std::invalid_argument("bellman_q: value function has wrong dimension");
    double cont = 0.0;
    for (const auto& tr : act.transitions) cont += tr.prob * v[static_cast<size_t>(tr.next_state)];
    return act.reward + mdp.discount() * cont;
}

/** Bellman gap bellman_q(s,a) - v(s); positive gap marks an improving action. */
inline double bellman_gap(const TabularMdp& mdp, const ValueFunction& v, int s, int a) {
    return bellman_q(mdp, v, s, a) - v[static_cast<size_t>(s)];
}

/**
 * Total Bellman residual objective
 *   sum_s [ v(s) - sum_a pi(s,a) q(s,a) ],
 * equivalently -sum_s sum_a pi(s,a) * gap(s,a). Zero exactly when v is the
 * value of pi.
 */
inline double bellman_objective(const TabularMdp& mdp, const ValueFunction& v,
                                const TabularPolicy& pi) {
    double total = 0.0;
    for (int s = 0; s < mdp.num_states(); ++s) {
        const Vec& row = pi.probs(s);
        for (int a = 0; a < static_cast<int>(row.size()); ++a)
            total -= row[static_cast<size_t>(a)] * bellman_gap(mdp, v, s, a);
    }
    return total;
}

/**
 * True iff pi is a valid distribution per state (within tol) and every
 * gap satisfies gap(s,a) <= tol for the given v.
 */
inline bool is_feasible(const TabularMdp& mdp, const ValueFunction& v, const TabularPolicy& pi,
                        double tol) {
    for (int s = 0; s < mdp.num_states(); ++s) {
        const Vec& row = pi.probs(s);
        if (static_cast<int>(row.size()) != mdp.num_actions(s)) return false;
        double sum = 0.0;
        for (double p : row) {
            if (p < -tol) return false;
            sum += p;
        }
        if (std::abs(sum - 1.0) > tol) return false;
        for (int a = 0; a < mdp.num_actions(s); ++a)
            if (bellman_gap(mdp, v, s, a) > tol) return false;
    }
    return true;
}

/**
 * Exact policy evaluation: solves (I - beta P_pi) v = R_pi by dense LU.
 * The matrix is nonsingular for any discount < 1.
 */
inline ValueFunction policy_evaluate_exact(const TabularMdp& mdp, const TabularPolicy& pi) {
    pi.validate(mdp);
    const int n = mdp.num_states();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < n; ++s) {
        const Vec& row = pi.probs(s);
        for (int act = 0; act < static_cast<int>(row.size()); ++act) {
            double p_act = row[static_cast<size_t>(act)];
            if (p_act == 0.0) continue;
            const ActionSpec& spec = mdp.action(s, act);
            r(s) += p_act * spec.reward;
            for (const auto& tr : spec.transitions)
                a(s, tr.next_state) -= mdp.discount() * p_act * tr.prob;
        }
    }
    Eigen::VectorXd v = a.partialPivLu().solve(r);
    ValueFunction out(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) out[static_cast<size_t>(s)] = v(s);
    return out;
}

/** Exact gap table of a policy: gap(s,a) computed from policy_evaluate_exact. */
inline QTable exact_gap_table(const TabularMdp& mdp, const TabularPolicy& pi) {
    ValueFunction v = policy_evaluate_exact(mdp, pi);
    QTable g(static_cast<size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s) {
        g[static_cast<size_t>(s)].resize(static_cast<size_t>(mdp.num_actions(s)));
        for (int a = 0; a < mdp.num_actions(s); ++a)
            g[static_cast<size_t>(s)][static_cast<size_t>(a)] = bellman_gap(mdp, v, s, a);
    }
    return g;
}

/**
 * Stationarity + feasibility certificate. Evaluates pi exactly and checks
 *   |sqrt(pi(s,a)) * gap(s,a)| <= tol  and  gap(s,a) <= tol  for all (s,a).
 * A policy passing both is a stable equilibrium and globally optimal.
 */
inline bool is_stationary_feasible(const TabularMdp& mdp, const TabularPolicy& pi, double tol) {
    QTable g = exact_gap_table(mdp, pi);
    for (int s = 0; s < mdp.num_states(); ++s) {
        for (int a = 0; a < mdp.num_actions(s); ++a) {
            double gap = g[static_cast<size_t>(s)][static_cast<size_t>(a)];
            if (gap > tol) return false;
            double p = std::max(0.0, pi.probs(s)[static_cast<size_t>(a)]);
            if (std::abs(std::sqrt(p) * gap) > tol) return false;
        }
    }
    return true;
}

struct Solution {
    ValueFunction v;
    QTable q;
};

/**
 * Value iteration to a sup-norm Bellman residual of at most tol.
 * Returns the value function and the induced q-table; the greedy argmax of
 * the q-table is an optimal deterministic policy.
 */
inline Solution value_iteration(const TabularMdp& mdp, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    const int n = mdp.num_states();
    const double beta = mdp.discount();
    ValueFunction v(static_cast<size_t>(n), 0.0);
    // Stop when the sweep delta guarantees ||Tv - v|| <= tol for the result.
    const double delta_target = tol * (1.0 - beta) / beta;
    for (;;) {
        double delta = 0.0;
        ValueFunction next(static_cast<size_t>(n));
        for (int s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < mdp.num_actions(s); ++a)
                best = std::max(best, bellman_q(mdp, v, s, a));
            next[static_cast<size_t>(s)] = best;
            delta = std::max(delta, std::abs(best - v[static_cast<size_t>(s)]));
        }
        v = std::move(next);
        if (delta <= delta_target) break;
    }
    QTable q(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) {
        q[static_cast<size_t>(s)].resize(static_cast<size_t>(mdp.num_actions(s)));
        for (int a = 0; a < mdp.num_actions(s); ++a)
            q[static_cast<size_t>(s)][static_cast<size_t>(a)] = bellman_q(mdp, v, s, a);
    }
    return Solution{std::move(v), std::move(q)};
}

/** Deterministic policy putting mass 1 on argmax_a q(s,a); ties -> lowest index. */
inline TabularPolicy greedy_policy(const QTable& q) {
    std::vector<Vec> rows(q.size());
    for (size_t s = 0; s < q.size(); ++s) {
        if (q[s].empty()) throw std::invalid_argument("greedy_policy: empty action row");
        size_t best = static_cast<size_t>(std::max_element(q[s].begin(), q[s].end()) -
                                          q[s].begin());
        rows[s].assign(q[s].size(), 0.0);
        rows[s][best] = 1.0;
    }
    return TabularPolicy(std::move(rows));
}

}  // namespace routelab
