#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "routelab/acopt.hpp"
#include "routelab/envs.hpp"
#include "routelab/features.hpp"
#include "routelab/mdp.hpp"
#include "routelab/schedule.hpp"
#include "routelab/trace.hpp"

namespace routelab {

/// Linear value-function parameters: v_hat(s) = dot(state_features(s), w).
struct LinearCritic {
    Vec w;
};

/// Boltzmann policy parameters, kept inside the box [-box_bound, box_bound]^d.
struct BoltzmannActor {
    Vec theta;
    double box_bound = 10.0;
};

namespace detail {

inline double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: dimension mismatch");
    double out = 0.0;
    for (size_t i = 0; i < x.size(); ++i) out += x[i] * y[i];
    return out;
}

}  // namespace detail

/**
 * Action distribution exp(theta . phi(s,a)) / sum_b exp(theta . phi(s,b))
 * over the available actions of s, computed with max-subtraction. All
 * probabilities are strictly positive.
 */
inline Vec boltzmann_policy(const BoltzmannActor& actor, const FeatureMap& features,
                            const TabularMdp& mdp, int s) {
    int k = mdp.num_actions(s);
    Vec scores(static_cast<size_t>(k));
    for (int a = 0; a < k; ++a)
        scores[static_cast<size_t>(a)] = detail::dot(actor.theta, features.state_action_features(s, a));
    double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double& sc : scores) {
        sc = std::exp(sc - top);
        total += sc;
    }
    for (double& sc : scores) sc /= total;
    return scores;
}

/// Full policy table of a Boltzmann actor.
inline TabularPolicy boltzmann_policy_table(const BoltzmannActor& actor, const FeatureMap& features,
                                            const TabularMdp& mdp) {
    std::vector<Vec> rows(static_cast<size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s) rows[static_cast<size_t>(s)] =
        boltzmann_policy(actor, features, mdp, s);
    return TabularPolicy(std::move(rows));
}

/**
 * Compatible features of a Boltzmann policy: the score gradient
 *   psi(s,a) = phi(s,a) - sum_b pi(s,b) phi(s,b),
 * which is the gradient of log pi(s,a) in theta and has zero mean under pi.
 */
inline Vec compatible_features(const BoltzmannActor& actor, const FeatureMap& features,
                               const TabularMdp& mdp, int s, int a) {
    Vec pi = boltzmann_policy(actor, features, mdp, s);
    Vec psi = features.state_action_features(s, a);
    if (static_cast<int>(psi.size()) != features.action_dim)
        throw std::invalid_argument("compatible_features: feature dimension mismatch");
    for (int b = 0; b < static_cast<int>(pi.size()); ++b) {
        Vec phi_b = features.state_action_features(s, b);
        for (size_t i = 0; i < psi.size(); ++i) psi[i] -= pi[static_cast<size_t>(b)] * phi_b[i];
    }
    return psi;
}

namespace detail {

/// In-place coupled TD(0) critic / Boltzmann actor step.
inline void fa_apply(LinearCritic& critic, BoltzmannActor& actor, const FeatureMap& features,
                     const TabularMdp& mdp, const Sample& sample, long n,
                     const StepSchedule& schedule) {
    if (static_cast<int>(critic.w.size()) != features.state_dim ||
        static_cast<int>(actor.theta.size()) != features.action_dim)
        throw std::invalid_argument("fa_apply: parameter dimension mismatch");
    Vec f_s = features.state_features(sample.s);
    if (static_cast<int>(f_s.size()) != features.state_dim)
        throw std::invalid_argument("fa_apply: state feature dimension mismatch");
    double next_value = 0.0;  // terminal successors carry zero features
    if (!mdp.is_terminal(sample.s_next))
        next_value = dot(features.state_features(sample.s_next), critic.w);
    double gap = sample.r + mdp.discount() * next_value - dot(f_s, critic.w);

    Vec pi = boltzmann_policy(actor, features, mdp, sample.s);
    Vec psi = features.state_action_features(sample.s, sample.a);
    for (int b_act = 0; b_act < static_cast<int>(pi.size()); ++b_act) {
        Vec phi_b = features.state_action_features(sample.s, b_act);
        for (size_t i = 0; i < psi.size(); ++i)
            psi[i] -= pi[static_cast<size_t>(b_act)] * phi_b[i];
    }

    auto [c, b] = step_sizes(schedule, n);
    for (size_t i = 0; i < critic.w.size(); ++i) critic.w[i] += c * gap * f_s[i];
    double scale = b * std::pow(pi[static_cast<size_t>(sample.a)], 1.5) * gap;
    for (size_t i = 0; i < actor.theta.size(); ++i) {
        actor.theta[i] += scale * psi[i];
        actor.theta[i] = std::clamp(actor.theta[i], -actor.box_bound, actor.box_bound);
    }
}

}  // namespace detail

/**
 * One coupled update: TD error against the linear value estimate (terminal
 * successors contribute the reward alone), critic moved along the state
 * features on the fast step size, actor moved along
 * pi(s,a)^{3/2} * psi(s,a) * gap on the slow step size and clamped to its box.
 */
inline std::pair<LinearCritic, BoltzmannActor> fa_update(LinearCritic critic, BoltzmannActor actor,
                                                         const FeatureMap& features,
                                                         const TabularMdp& mdp, const Sample& sample,
                                                         long n, const StepSchedule& schedule) {
    detail::fa_apply(critic, actor, features, mdp, sample, n, schedule);
    return {std::move(critic), std::move(actor)};
}

/**
 * Stationary distribution of the restarted chain under a policy: terminal
 * states hand over to the start distribution, all other rows follow the
 * policy-averaged kernel. Solved as a least-squares system stacked with the
 * normalization row.
 */
inline Vec stationary_distribution(const TabularMdp& mdp, const Vec& start,
                                   const TabularPolicy& pi) {
    const int n = mdp.num_states();
    if (start.size() != static_cast<size_t>(n))
        throw std::invalid_argument("stationary_distribution: start distribution dimension");
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        if (mdp.is_terminal(s)) {
            for (int t = 0; t < n; ++t) p(s, t) = start[static_cast<size_t>(t)];
            continue;
        }
        const Vec& row = pi.probs(s);
        for (int a = 0; a < static_cast<int>(row.size()); ++a)
            for (const auto& tr : mdp.action(s, a).transitions)
                p(s, tr.next_state) += row[static_cast<size_t>(a)] * tr.prob;
    }
    Eigen::MatrixXd system(n + 1, n);
    system.topRows(n) = p.transpose() - Eigen::MatrixXd::Identity(n, n);
    system.bottomRows(1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::VectorXd d = system.completeOrthogonalDecomposition().solve(rhs);
    Vec out(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) out[static_cast<size_t>(s)] = std::max(0.0, d(s));
    return out;
}

/**
 * TD(0) fixed point of the linear critic under a frozen Boltzmann policy:
 * the minimum-norm solution of A w = b with
 *   A = Phi^T D (I - beta P) Phi,   b = Phi^T D r_bar,
 * where D is the stationary distribution of the restarted chain, r_bar the
 * policy-averaged rewards and terminal rows of Phi are zeroed to match the
 * episodic TD convention. Throws if the assembled system is inconsistent;
 * the message reports the numerical rank.
 */
inline Vec td_fixed_point_oracle(const TabularMdp& mdp, const Vec& start,
                                 const BoltzmannActor& actor, const FeatureMap& features) {
    const int n = mdp.num_states();
    const int d1 = features.state_dim;
    TabularPolicy pi = boltzmann_policy_table(actor, features, mdp);
    Vec d = stationary_distribution(mdp, start, pi);

    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, d1);
    for (int s = 0; s < n; ++s) {
        if (mdp.is_terminal(s)) continue;
        Vec f = features.state_features(s);
        for (int i = 0; i < d1; ++i) phi(s, i) = f[static_cast<size_t>(i)];
    }
    Eigen::VectorXd r_bar = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd p_phi = Eigen::MatrixXd::Zero(n, d1);  // row s: E[phi(s') | s, pi]
    for (int s = 0; s < n; ++s) {
        const Vec& row = pi.probs(s);
        for (int a = 0; a < static_cast<int>(row.size()); ++a) {
            const ActionSpec& act = mdp.action(s, a);
            r_bar(s) += row[static_cast<size_t>(a)] * act.reward;
            for (const auto& tr : act.transitions)
                p_phi.row(s) += row[static_cast<size_t>(a)] * tr.prob * phi.row(tr.next_state);
        }
    }
    Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(d.data(), n);
    Eigen::MatrixXd weighted_phi = weights.asDiagonal() * phi;
    Eigen::MatrixXd a_mat = weighted_phi.transpose() * (phi - mdp.discount() * p_phi);
    Eigen::VectorXd b_vec = weighted_phi.transpose() * r_bar;

    auto cod = a_mat.completeOrthogonalDecomposition();
    Eigen::VectorXd w = cod.solve(b_vec);
    double residual = (a_mat * w - b_vec).cwiseAbs().maxCoeff();
    if (residual > 1e-9)
        throw std::runtime_error("td_fixed_point_oracle: inconsistent system, residual " +
                                 std::to_string(residual) + ", rank " + std::to_string(cod.rank()) +
                                 " of " + std::to_string(d1));
    Vec out(static_cast<size_t>(d1));
    for (int i = 0; i < d1; ++i) out[static_cast<size_t>(i)] = w(i);
    return out;
}

struct FaConfig {
    StepSchedule schedule;
    double box_bound = 10.0;
    long max_steps = 100000;
    uint64_t seed = 1;
    long trace_interval = 0;

    void validate() const {
        schedule.validate();
        if (!(box_bound > 0.0)) throw std::invalid_argument("FaConfig: box_bound must be positive");
        if (max_steps < 1) throw std::invalid_argument("FaConfig: max_steps must be >= 1");
    }
};

struct FaResult {
    LinearCritic critic;
    BoltzmannActor actor;
    ConvergenceTrace trace;
};

/**
 * Coupled linear-critic / Boltzmann-actor run. The trace records the
 * sup-norm distance of the critic to its frozen-policy fixed point and the
 * argmax agreement of the current policy with the value-iteration oracle.
 */
inline FaResult run_acopt_fa(const Env& env, const FeatureMap& features, const FaConfig& config) {
    config.validate();
    const TabularMdp& mdp = env.mdp;
    FaResult result;
    result.trace.columns = {"critic_oracle_dist", "optimal_action_rate"};
    result.critic.w.assign(static_cast<size_t>(features.state_dim), 0.0);
    result.actor.theta.assign(static_cast<size_t>(features.action_dim), 0.0);
    result.actor.box_bound = config.box_bound;

    EnvSampler sampler(env, config.seed);
    std::mt19937_64 action_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    TabularPolicy oracle_greedy = greedy_policy(value_iteration(mdp, 1e-10).q);
    long interval = config.trace_interval > 0 ? config.trace_interval
                                              : std::max<long>(1, config.max_steps / 100);

    for (long n = 0; n < config.max_steps; ++n) {
        int s = sampler.current();
        Vec pi = boltzmann_policy(result.actor, features, mdp, s);
        int a = sample_action(pi, action_rng);
        EnvSampler::StepResult step = sampler.step(a);
        detail::fa_apply(result.critic, result.actor, features, mdp,
                         Sample{s, a, step.reward, step.next_state}, n, config.schedule);
        long done = n + 1;
        if (done % interval == 0 || done == config.max_steps) {
            Vec w_star = td_fixed_point_oracle(mdp, env.start, result.actor, features);
            double dist = 0.0;
            for (size_t i = 0; i < w_star.size(); ++i)
                dist = std::max(dist, std::abs(w_star[i] - result.critic.w[i]));
            double rate = policy_agreement(boltzmann_policy_table(result.actor, features, mdp),
                                           oracle_greedy, mdp);
            result.trace.add(done, {dist, rate});
        }
    }
    return result;
}

}  // namespace routelab
