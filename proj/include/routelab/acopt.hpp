#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include "routelab/envs.hpp"
#include "routelab/mdp.hpp"
#include "routelab/schedule.hpp"
#include "routelab/simplex.hpp"
#include "routelab/trace.hpp"

namespace routelab {

/// One observed transition: action a taken in state s yielded reward r and
/// successor s_next.
struct Sample {
    int s;
    int a;
    double r;
    int s_next;
};

/// Draws an index from a probability vector using one uniform variate.
inline int sample_action(const Vec& probs, std::mt19937_64& rng) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    int last = 0;
    for (int a = 0; a < static_cast<int>(probs.size()); ++a) {
        if (probs[static_cast<size_t>(a)] <= 0.0) continue;
        acc += probs[static_cast<size_t>(a)];
        last = a;
        if (u < acc) return a;
    }
    return last;
}

/**
 * Fraction of non-terminal states on which the argmax actions of two
 * policies coincide (ties broken by lowest index).
 */
inline double policy_agreement(const TabularPolicy& pi_a, const TabularPolicy& pi_b,
                               const std::vector<bool>& terminal) {
    if (pi_a.num_states() != pi_b.num_states() ||
        terminal.size() != static_cast<size_t>(pi_a.num_states()))
        throw std::invalid_argument("policy_agreement: state space mismatch");
    int total = 0;
    int same = 0;
    for (int s = 0; s < pi_a.num_states(); ++s) {
        if (pi_a.probs(s).size() != pi_b.probs(s).size())
            throw std::invalid_argument("policy_agreement: action space mismatch in state " +
                                        std::to_string(s));
        if (terminal[static_cast<size_t>(s)]) continue;
        ++total;
        if (pi_a.argmax(s) == pi_b.argmax(s)) ++same;
    }
    return total == 0 ? 1.0 : static_cast<double>(same) / total;
}

inline double policy_agreement(const TabularPolicy& pi_a, const TabularPolicy& pi_b,
                               const TabularMdp& mdp) {
    std::vector<bool> terminal(static_cast<size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s) terminal[static_cast<size_t>(s)] = mdp.is_terminal(s);
    return policy_agreement(pi_a, pi_b, terminal);
}

/**
 * Configuration of the two-timescale actor-critic. The actor moves each
 * sampled coordinate along pi^alpha_prime * gap and projects the row back
 * onto the simplex; every tau steps the whole policy is perturbed with
 * magnitude eta to keep it away from unstable equilibria.
 */
struct AcOptConfig {
    StepSchedule schedule;
    double alpha_prime = 0.5;  // actor exponent, >= 0.5
    long tau = 10;             // perturbation period
    double eta = 0.1;          // perturbation magnitude
    long max_steps = 100000;
    uint64_t seed = 1;
    double stationarity_tol = 1e-6;
    long trace_interval = 0;  // 0 picks max_steps/100

    void validate() const {
        schedule.validate();
        if (!(alpha_prime >= 0.5))
            throw std::invalid_argument("AcOptConfig: alpha_prime must be >= 0.5");
        if (tau < 1) throw std::invalid_argument("AcOptConfig: tau must be >= 1");
        if (!(eta > 0.0)) throw std::invalid_argument("AcOptConfig: eta must be positive");
        if (max_steps < 1) throw std::invalid_argument("AcOptConfig: max_steps must be >= 1");
    }
};

struct AcOptState {
    ValueFunction v;
    TabularPolicy pi{std::vector<Vec>{}};
    long n = 0;
    int current_state = 0;
};

namespace detail {

/// In-place single step of the coupled critic/actor recursion.
inline void acopt_apply(const TabularMdp& mdp, ValueFunction& v, TabularPolicy& pi, long n,
                        const Sample& sample, const AcOptConfig& config) {
    mdp.action(sample.s, sample.a);  // bounds check
    if (sample.s_next < 0 || sample.s_next >= mdp.num_states())
        throw std::invalid_argument("acopt_apply: successor state out of range");
    auto [c, b] = step_sizes(config.schedule, n);
    double q = sample.r + mdp.discount() * v[static_cast<size_t>(sample.s_next)];
    double gap = q - v[static_cast<size_t>(sample.s)];
    if (!mdp.is_terminal(sample.s)) v[static_cast<size_t>(sample.s)] += c * gap;
    Vec row = pi.probs(sample.s);
    double p = std::max(0.0, row[static_cast<size_t>(sample.a)]);
    row[static_cast<size_t>(sample.a)] += b * std::pow(p, config.alpha_prime) * gap;
    pi.probs(sample.s) = project_simplex(row);
}

}  // namespace detail

/**
 * One step of the recursion: TD critic update of the visited state on the
 * fast step size, actor move of the sampled action on the slow step size
 * followed by simplex projection, step counter incremented. Other states
 * are untouched and terminal values stay 0.
 */
inline AcOptState acopt_update(const TabularMdp& mdp, AcOptState state, const Sample& sample,
                               const AcOptConfig& config) {
    detail::acopt_apply(mdp, state.v, state.pi, state.n, sample, config);
    state.n += 1;
    state.current_state = sample.s_next;
    return state;
}

/**
 * Single-coordinate descent probe: returns the objective before and after
 * the unprojected update pi(s,a) += delta * pi(s,a)^alpha_prime * gap(s,a)
 * with v held fixed. Because the objective is linear in pi, the identity
 *   j_after = j_before - delta * pi(s,a)^alpha_prime * gap(s,a)^2
 * holds exactly.
 */
inline std::pair<double, double> descent_check(const TabularMdp& mdp, const ValueFunction& v,
                                               const TabularPolicy& pi, int s, int a, double delta,
                                               double alpha_prime) {
    double p = pi.probs(s)[static_cast<size_t>(a)];
    double gap = bellman_gap(mdp, v, s, a);
    double increment = delta * std::pow(p, alpha_prime) * gap;
    if (p + increment < 0.0 || p + increment > 1.0)
        throw std::invalid_argument("descent_check: delta moves pi(s,a) outside [0,1]");
    double j_before = bellman_objective(mdp, v, pi);
    TabularPolicy moved = pi;
    moved.probs(s)[static_cast<size_t>(a)] += increment;
    double j_after = 0.0;
    for (int state = 0; state < mdp.num_states(); ++state) {
        const Vec& row = moved.probs(state);
        for (int act = 0; act < static_cast<int>(row.size()); ++act)
            j_after -= row[static_cast<size_t>(act)] * bellman_gap(mdp, v, state, act);
    }
    return {j_before, j_after};
}

struct AcOptResult {
    AcOptState state;
    bool stationary = false;  // stationarity certificate at the final policy
    ConvergenceTrace trace;
};

/**
 * Full actor-critic run: max_steps samples drawn from the policy, episodes
 * restarting from the env start distribution, the policy perturbed every
 * tau steps. The trace records the Bellman objective, the largest exact
 * stationarity violation and the argmax agreement with the value-iteration
 * oracle at every checkpoint.
 *
 * The recursion is asynchronous: each state keeps its own visit count, and
 * its critic/actor updates use c resp. b of that local count, so states off
 * the frequent paths still satisfy the divergent-step-sum condition. The
 * perturbation runs on the same local clocks: a state is perturbed on every
 * tau-th visit with magnitude eta * (1 + visits)^(-gamma_b). The initial
 * magnitude eta pushes early iterates off unstable equilibria; the decay on
 * the actor timescale lets the policy concentrate late in the run.
 */
inline AcOptResult run_acopt(const Env& env, const AcOptConfig& config) {
    config.validate();
    const TabularMdp& mdp = env.mdp;
    AcOptResult result;
    result.trace.columns = {"J", "max_sqrtpi_g", "policy_agreement_with_oracle"};

    ValueFunction v(static_cast<size_t>(mdp.num_states()), 0.0);
    TabularPolicy pi = TabularPolicy::uniform(mdp);
    std::vector<long> visits(static_cast<size_t>(mdp.num_states()), 0);
    EnvSampler sampler(env, config.seed);
    std::mt19937_64 action_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    TabularPolicy oracle_greedy = greedy_policy(value_iteration(mdp, 1e-10).q);
    long interval = config.trace_interval > 0 ? config.trace_interval
                                              : std::max<long>(1, config.max_steps / 100);

    for (long n = 0; n < config.max_steps; ++n) {
        int s = sampler.current();
        int a = sample_action(pi.probs(s), action_rng);
        EnvSampler::StepResult step = sampler.step(a);

        long local = visits[static_cast<size_t>(s)]++;
        double c = config.schedule.critic_step(local);
        double b = config.schedule.actor_step(local);
        double q = step.reward + mdp.discount() * v[static_cast<size_t>(step.next_state)];
        double gap = q - v[static_cast<size_t>(s)];
        v[static_cast<size_t>(s)] += c * gap;
        Vec row = pi.probs(s);
        double p = std::max(0.0, row[static_cast<size_t>(a)]);
        row[static_cast<size_t>(a)] += b * std::pow(p, config.alpha_prime) * gap;
        pi.probs(s) = project_simplex(row);

        if ((local + 1) % config.tau == 0) {
            double eta = config.eta *
                         std::pow(2.0 + static_cast<double>(local), -config.schedule.gamma_b);
            Vec& probs = pi.probs(s);
            double total = 0.0;
            for (double x : probs) total += x + eta;
            for (double& x : probs) x = (x + eta) / total;
        }

        long done = n + 1;
        if (done % interval == 0 || done == config.max_steps) {
            QTable gap_table = exact_gap_table(mdp, pi);
            double max_violation = 0.0;
            for (int state = 0; state < mdp.num_states(); ++state)
                for (int act = 0; act < mdp.num_actions(state); ++act) {
                    double prob = std::max(0.0, pi.probs(state)[static_cast<size_t>(act)]);
                    max_violation = std::max(
                        max_violation,
                        std::abs(std::sqrt(prob) *
                                 gap_table[static_cast<size_t>(state)][static_cast<size_t>(act)]));
                }
            result.trace.add(done, {bellman_objective(mdp, v, pi), max_violation,
                                    policy_agreement(pi, oracle_greedy, mdp)});
        }
    }

    result.stationary = is_stationary_feasible(mdp, pi, config.stationarity_tol);
    result.state = AcOptState{std::move(v), std::move(pi), config.max_steps, sampler.current()};
    return result;
}

}  // namespace routelab
