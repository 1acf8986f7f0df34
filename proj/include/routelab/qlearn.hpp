#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "routelab/acopt.hpp"
#include "routelab/envs.hpp"
#include "routelab/mdp.hpp"
#include "routelab/schedule.hpp"
#include "routelab/trace.hpp"

namespace routelab {

struct QLearnConfig {
    StepSchedule schedule;  // only the c-sequence is used
    double epsilon = 0.1;   // exploration rate of the behavior policy
    long max_steps = 100000;
    uint64_t seed = 1;
    long trace_interval = 0;

    void validate() const {
        schedule.validate();
        if (epsilon < 0.0 || epsilon > 1.0)
            throw std::invalid_argument("QLearnConfig: epsilon must lie in [0,1]");
        if (max_steps < 1) throw std::invalid_argument("QLearnConfig: max_steps must be >= 1");
    }
};

inline QTable zero_qtable(const TabularMdp& mdp) {
    QTable q(static_cast<size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s)
        q[static_cast<size_t>(s)].assign(static_cast<size_t>(mdp.num_actions(s)), 0.0);
    return q;
}

namespace detail {

inline void qlearn_apply(const TabularMdp& mdp, QTable& q, const Sample& sample, double c) {
    mdp.action(sample.s, sample.a);  // bounds check
    double target = sample.r;
    if (!mdp.is_terminal(sample.s_next)) {
        const Vec& next_row = q.at(static_cast<size_t>(sample.s_next));
        target += mdp.discount() * *std::max_element(next_row.begin(), next_row.end());
    }
    double& entry = q[static_cast<size_t>(sample.s)][static_cast<size_t>(sample.a)];
    entry += c * (target - entry);
}

}  // namespace detail

/**
 * Single Q-learning update
 *   q(s,a) += c * (r + beta * max_b q(s_next, b) - q(s,a)),
 * where a terminal successor contributes no continuation value.
 */
inline QTable qlearn_update(const TabularMdp& mdp, QTable q, const Sample& sample, double c) {
    detail::qlearn_apply(mdp, q, sample, c);
    return q;
}

struct QLearnResult {
    QTable q;
    ConvergenceTrace trace;
};

/**
 * Epsilon-greedy Q-learning run. Each state-action pair keeps its own visit
 * count and its update uses c(visits), so rarely explored pairs still see a
 * divergent step-size sum. The trace records the sup-norm distance to the
 * value-iteration q-table and the greedy agreement with the oracle policy.
 */
inline QLearnResult run_qlearn(const Env& env, const QLearnConfig& config) {
    config.validate();
    const TabularMdp& mdp = env.mdp;
    QLearnResult result;
    result.trace.columns = {"q_sup_dist", "policy_agreement_with_oracle"};

    QTable q = zero_qtable(mdp);
    std::vector<std::vector<long>> visits(q.size());
    for (size_t s = 0; s < q.size(); ++s) visits[s].assign(q[s].size(), 0);

    EnvSampler sampler(env, config.seed);
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Solution oracle = value_iteration(mdp, 1e-10);
    TabularPolicy oracle_greedy = greedy_policy(oracle.q);
    long interval = config.trace_interval > 0 ? config.trace_interval
                                              : std::max<long>(1, config.max_steps / 100);

    auto sup_dist = [&]() {
        double d = 0.0;
        for (int s = 0; s < mdp.num_states(); ++s)
            for (int a = 0; a < mdp.num_actions(s); ++a)
                d = std::max(d, std::abs(q[static_cast<size_t>(s)][static_cast<size_t>(a)] -
                                         oracle.q[static_cast<size_t>(s)][static_cast<size_t>(a)]));
        return d;
    };

    for (long n = 0; n < config.max_steps; ++n) {
        int s = sampler.current();
        const Vec& row = q[static_cast<size_t>(s)];
        int a;
        if (unit(rng) < config.epsilon) {
            a = static_cast<int>(rng() % row.size());
        } else {
            a = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        }
        EnvSampler::StepResult step = sampler.step(a);
        long& count = visits[static_cast<size_t>(s)][static_cast<size_t>(a)];
        double c = config.schedule.critic_step(count);
        ++count;
        detail::qlearn_apply(mdp, q, Sample{s, a, step.reward, step.next_state}, c);
        long done = n + 1;
        if (done % interval == 0 || done == config.max_steps)
            result.trace.add(done, {sup_dist(), policy_agreement(greedy_policy(q), oracle_greedy, mdp)});
    }

    result.q = std::move(q);
    return result;
}

}  // namespace routelab
