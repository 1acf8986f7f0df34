#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "routelab/acopt.hpp"
#include "routelab/envs.hpp"
#include "routelab/fa.hpp"
#include "routelab/mdp.hpp"
#include "routelab/qlearn.hpp"
#include "routelab/trace.hpp"

namespace routelab {

/// Configuration problem tied to a field path, reported before any run starts.
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string field_path, const std::string& message)
        : std::runtime_error(field_path + ": " + message), field(std::move(field_path)) {}
};

/**
 * A complete experiment: environment, algorithm, seeding and run count.
 * Runs use seeds base_seed .. base_seed + num_runs - 1 and their results
 * are averaged in seed order, so output is deterministic.
 */
struct ExperimentConfig {
    std::string env = "six_node";  // six_node | grid44 | custom
    std::string custom_path;       // edge-list file, env == custom only
    std::string algorithm = "acopt";  // acopt | qlearn | acopt_fa
    std::optional<double> discount;   // env default when absent
    int num_runs = 50;
    uint64_t base_seed = 1;
    std::string output_dir;  // empty: $ROUTELAB_OUT or "."

    AcOptConfig acopt;
    QLearnConfig qlearn;
    FaConfig fa;

    double resolved_discount() const {
        if (discount) return *discount;
        if (env == "six_node") return 0.8;
        if (env == "grid44") return 0.9;
        throw ConfigError("discount", "required for custom environments");
    }
};

namespace detail {

inline double get_number(const nlohmann::json& doc, const std::string& path, const char* key,
                         double fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc.at(key).is_number()) throw ConfigError(path + "." + key, "expected a number");
    return doc.at(key).get<double>();
}

inline long get_integer(const nlohmann::json& doc, const std::string& path, const char* key,
                        long fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc.at(key).is_number_integer()) throw ConfigError(path + "." + key, "expected an integer");
    return doc.at(key).get<long>();
}

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& doc) {
    ExperimentConfig cfg;
    if (!doc.contains("env") || !doc.at("env").is_string())
        throw ConfigError("env", "required string: six_node, grid44 or custom");
    cfg.env = doc.at("env").get<std::string>();
    if (cfg.env != "six_node" && cfg.env != "grid44" && cfg.env != "custom")
        throw ConfigError("env", "unknown environment '" + cfg.env + "'");
    if (cfg.env == "custom") {
        if (!doc.contains("custom_path") || !doc.at("custom_path").is_string())
            throw ConfigError("custom_path", "required for env=custom");
        cfg.custom_path = doc.at("custom_path").get<std::string>();
        if (!std::filesystem::exists(cfg.custom_path))
            throw ConfigError("custom_path", "file does not exist: " + cfg.custom_path);
    }
    if (!doc.contains("algorithm") || !doc.at("algorithm").is_string())
        throw ConfigError("algorithm", "required string: acopt, qlearn or acopt_fa");
    cfg.algorithm = doc.at("algorithm").get<std::string>();
    if (cfg.algorithm != "acopt" && cfg.algorithm != "qlearn" && cfg.algorithm != "acopt_fa")
        throw ConfigError("algorithm", "unknown algorithm '" + cfg.algorithm + "'");
    if (cfg.algorithm == "acopt_fa" && cfg.env != "grid44")
        throw ConfigError("algorithm", "acopt_fa has feature maps for env=grid44 only");

    if (doc.contains("discount")) {
        double beta = detail::get_number(doc, "", "discount", 0.0);
        if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("discount", "must lie in (0,1)");
        cfg.discount = beta;
    }
    long runs = detail::get_integer(doc, "", "num_runs", cfg.num_runs);
    if (runs < 1) throw ConfigError("num_runs", "must be >= 1");
    cfg.num_runs = static_cast<int>(runs);
    cfg.base_seed = static_cast<uint64_t>(detail::get_integer(doc, "", "base_seed",
                                                              static_cast<long>(cfg.base_seed)));
    if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();

    if (cfg.algorithm == "acopt") {
        const auto block = doc.contains("acopt") ? doc.at("acopt") : nlohmann::json::object();
        AcOptConfig& a = cfg.acopt;
        a.schedule.c0 = detail::get_number(block, "acopt", "c0", a.schedule.c0);
        a.schedule.b0 = detail::get_number(block, "acopt", "b0", a.schedule.b0);
        a.schedule.gamma_c = detail::get_number(block, "acopt", "gamma_c", a.schedule.gamma_c);
        a.schedule.gamma_b = detail::get_number(block, "acopt", "gamma_b", a.schedule.gamma_b);
        a.alpha_prime = detail::get_number(block, "acopt", "alpha_prime", a.alpha_prime);
        a.tau = detail::get_integer(block, "acopt", "tau", a.tau);
        a.eta = detail::get_number(block, "acopt", "eta", a.eta);
        a.max_steps = detail::get_integer(block, "acopt", "max_steps", a.max_steps);
        a.stationarity_tol = detail::get_number(block, "acopt", "stationarity_tol", a.stationarity_tol);
        a.trace_interval = detail::get_integer(block, "acopt", "trace_interval", a.trace_interval);
        try {
            a.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("acopt", e.what());
        }
    } else if (cfg.algorithm == "qlearn") {
        const auto block = doc.contains("qlearn") ? doc.at("qlearn") : nlohmann::json::object();
        QLearnConfig& q = cfg.qlearn;
        q.schedule.c0 = detail::get_number(block, "qlearn", "c0", q.schedule.c0);
        q.schedule.gamma_c = detail::get_number(block, "qlearn", "gamma_c", q.schedule.gamma_c);
        q.epsilon = detail::get_number(block, "qlearn", "epsilon", q.epsilon);
        q.max_steps = detail::get_integer(block, "qlearn", "max_steps", q.max_steps);
        q.trace_interval = detail::get_integer(block, "qlearn", "trace_interval", q.trace_interval);
        try {
            q.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("qlearn", e.what());
        }
    } else {
        const auto block = doc.contains("acopt_fa") ? doc.at("acopt_fa") : nlohmann::json::object();
        FaConfig& f = cfg.fa;
        f.schedule.c0 = detail::get_number(block, "acopt_fa", "c0", f.schedule.c0);
        f.schedule.b0 = detail::get_number(block, "acopt_fa", "b0", f.schedule.b0);
        f.schedule.gamma_c = detail::get_number(block, "acopt_fa", "gamma_c", f.schedule.gamma_c);
        f.schedule.gamma_b = detail::get_number(block, "acopt_fa", "gamma_b", f.schedule.gamma_b);
        f.box_bound = detail::get_number(block, "acopt_fa", "box_bound", f.box_bound);
        f.max_steps = detail::get_integer(block, "acopt_fa", "max_steps", f.max_steps);
        f.trace_interval = detail::get_integer(block, "acopt_fa", "trace_interval", f.trace_interval);
        try {
            f.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("acopt_fa", e.what());
        }
    }
    return cfg;
}

inline nlohmann::json emit_config(const ExperimentConfig& cfg) {
    nlohmann::json doc;
    doc["env"] = cfg.env;
    if (cfg.env == "custom") doc["custom_path"] = cfg.custom_path;
    doc["algorithm"] = cfg.algorithm;
    if (cfg.discount) doc["discount"] = *cfg.discount;
    doc["num_runs"] = cfg.num_runs;
    doc["base_seed"] = cfg.base_seed;
    if (!cfg.output_dir.empty()) doc["output_dir"] = cfg.output_dir;
    if (cfg.algorithm == "acopt") {
        doc["acopt"] = {{"c0", cfg.acopt.schedule.c0},
                        {"b0", cfg.acopt.schedule.b0},
                        {"gamma_c", cfg.acopt.schedule.gamma_c},
                        {"gamma_b", cfg.acopt.schedule.gamma_b},
                        {"alpha_prime", cfg.acopt.alpha_prime},
                        {"tau", cfg.acopt.tau},
                        {"eta", cfg.acopt.eta},
                        {"max_steps", cfg.acopt.max_steps},
                        {"stationarity_tol", cfg.acopt.stationarity_tol},
                        {"trace_interval", cfg.acopt.trace_interval}};
    } else if (cfg.algorithm == "qlearn") {
        doc["qlearn"] = {{"c0", cfg.qlearn.schedule.c0},
                         {"gamma_c", cfg.qlearn.schedule.gamma_c},
                         {"epsilon", cfg.qlearn.epsilon},
                         {"max_steps", cfg.qlearn.max_steps},
                         {"trace_interval", cfg.qlearn.trace_interval}};
    } else {
        doc["acopt_fa"] = {{"c0", cfg.fa.schedule.c0},
                           {"b0", cfg.fa.schedule.b0},
                           {"gamma_c", cfg.fa.schedule.gamma_c},
                           {"gamma_b", cfg.fa.schedule.gamma_b},
                           {"box_bound", cfg.fa.box_bound},
                           {"max_steps", cfg.fa.max_steps},
                           {"trace_interval", cfg.fa.trace_interval}};
    }
    return doc;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<config>", "cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("<config>", std::string("parse error: ") + e.what());
    }
    return parse_config(doc);
}

inline Env build_env(const ExperimentConfig& cfg) {
    double beta = cfg.resolved_discount();
    if (cfg.env == "six_node") return six_node_env(beta);
    if (cfg.env == "grid44") return grid44_env(beta);
    return load_graph_env(cfg.custom_path, beta);
}

/**
 * Aggregated result of a seeded experiment: averaged value estimates and
 * policy table, the value-iteration oracle (always computed independently
 * of the learners), argmax agreement and the per-run traces.
 */
struct ExperimentReport {
    std::string env_name;
    std::string algorithm;
    std::vector<bool> terminal;

    Vec v_avg;
    ValueFunction v_oracle;
    QTable q_oracle;
    TabularPolicy pi_avg{std::vector<Vec>{}};
    TabularPolicy oracle_greedy{std::vector<Vec>{}};
    QTable q_avg;                 // qlearn only
    Vec critic_avg, actor_avg;    // acopt_fa only

    double agreement = 0.0;       // argmax agreement of pi_avg with the oracle
    double j_final = 0.0;         // Bellman objective at (v_avg, pi_avg)
    double avg_mpa_probability = 0.0;  // mean over non-terminal states
    std::vector<uint64_t> seeds;
    std::vector<ConvergenceTrace> traces;
    double runtime_seconds = 0.0;
};

/**
 * Executes num_runs seeded runs of the configured algorithm, averages value
 * estimates and policy tables across runs (probability vectors averaged and
 * renormalized) and compares against the value-iteration oracle. Fully
 * deterministic for a fixed config and base seed.
 */
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    Env env = build_env(cfg);
    const TabularMdp& mdp = env.mdp;
    const int n = mdp.num_states();

    ExperimentReport report;
    report.env_name = env.name;
    report.algorithm = cfg.algorithm;
    report.terminal.resize(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) report.terminal[static_cast<size_t>(s)] = mdp.is_terminal(s);

    Solution oracle = value_iteration(mdp, 1e-10);
    report.v_oracle = oracle.v;
    report.q_oracle = oracle.q;
    report.oracle_greedy = greedy_policy(oracle.q);

    Vec v_sum(static_cast<size_t>(n), 0.0);
    std::vector<Vec> pi_sum(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) pi_sum[static_cast<size_t>(s)].assign(
        static_cast<size_t>(mdp.num_actions(s)), 0.0);
    QTable q_sum;
    Vec critic_sum, actor_sum;
    FeatureMap features;
    if (cfg.algorithm == "acopt_fa") {
        features = grid44_features();
        critic_sum.assign(static_cast<size_t>(features.state_dim), 0.0);
        actor_sum.assign(static_cast<size_t>(features.action_dim), 0.0);
    }
    if (cfg.algorithm == "qlearn") q_sum = zero_qtable(mdp);

    for (int run = 0; run < cfg.num_runs; ++run) {
        uint64_t seed = cfg.base_seed + static_cast<uint64_t>(run);
        report.seeds.push_back(seed);
        Vec v_run;
        TabularPolicy pi_run{std::vector<Vec>{}};
        if (cfg.algorithm == "acopt") {
            AcOptConfig run_cfg = cfg.acopt;
            run_cfg.seed = seed;
            AcOptResult res = run_acopt(env, run_cfg);
            v_run = res.state.v;
            pi_run = res.state.pi;
            report.traces.push_back(std::move(res.trace));
        } else if (cfg.algorithm == "qlearn") {
            QLearnConfig run_cfg = cfg.qlearn;
            run_cfg.seed = seed;
            QLearnResult res = run_qlearn(env, run_cfg);
            v_run.assign(static_cast<size_t>(n), 0.0);
            for (int s = 0; s < n; ++s)
                if (!mdp.is_terminal(s))
                    v_run[static_cast<size_t>(s)] =
                        *std::max_element(res.q[static_cast<size_t>(s)].begin(),
                                          res.q[static_cast<size_t>(s)].end());
            pi_run = greedy_policy(res.q);
            for (int s = 0; s < n; ++s)
                for (int a = 0; a < mdp.num_actions(s); ++a)
                    q_sum[static_cast<size_t>(s)][static_cast<size_t>(a)] +=
                        res.q[static_cast<size_t>(s)][static_cast<size_t>(a)];
            report.traces.push_back(std::move(res.trace));
        } else {
            FaConfig run_cfg = cfg.fa;
            run_cfg.seed = seed;
            FaResult res = run_acopt_fa(env, features, run_cfg);
            v_run.assign(static_cast<size_t>(n), 0.0);
            for (int s = 0; s < n; ++s)
                if (!mdp.is_terminal(s))
                    v_run[static_cast<size_t>(s)] =
                        detail::dot(features.state_features(s), res.critic.w);
            pi_run = boltzmann_policy_table(res.actor, features, mdp);
            for (size_t i = 0; i < critic_sum.size(); ++i) critic_sum[i] += res.critic.w[i];
            for (size_t i = 0; i < actor_sum.size(); ++i) actor_sum[i] += res.actor.theta[i];
            report.traces.push_back(std::move(res.trace));
        }
        for (int s = 0; s < n; ++s) {
            v_sum[static_cast<size_t>(s)] += v_run[static_cast<size_t>(s)];
            const Vec& row = pi_run.probs(s);
            for (size_t a = 0; a < row.size(); ++a) pi_sum[static_cast<size_t>(s)][a] += row[a];
        }
    }

    report.v_avg.resize(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) report.v_avg[static_cast<size_t>(s)] =
        v_sum[static_cast<size_t>(s)] / cfg.num_runs;
    std::vector<Vec> pi_rows(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) {
        Vec row = pi_sum[static_cast<size_t>(s)];
        double total = 0.0;
        for (double p : row) total += p;
        for (double& p : row) p /= total;
        pi_rows[static_cast<size_t>(s)] = std::move(row);
    }
    report.pi_avg = TabularPolicy(std::move(pi_rows));
    if (cfg.algorithm == "qlearn") {
        report.q_avg = std::move(q_sum);
        for (auto& row : report.q_avg)
            for (double& x : row) x /= cfg.num_runs;
    }
    if (cfg.algorithm == "acopt_fa") {
        report.critic_avg = std::move(critic_sum);
        report.actor_avg = std::move(actor_sum);
        for (double& x : report.critic_avg) x /= cfg.num_runs;
        for (double& x : report.actor_avg) x /= cfg.num_runs;
    }

    report.agreement = policy_agreement(report.pi_avg, report.oracle_greedy, mdp);
    report.j_final = bellman_objective(mdp, report.v_avg, report.pi_avg);
    int nonterminal = 0;
    double prob_sum = 0.0;
    for (int s = 0; s < n; ++s) {
        if (mdp.is_terminal(s)) continue;
        ++nonterminal;
        prob_sum += report.pi_avg.probs(s)[static_cast<size_t>(report.pi_avg.argmax(s))];
    }
    report.avg_mpa_probability = nonterminal ? prob_sum / nonterminal : 0.0;
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

/// Default output directory: $ROUTELAB_OUT when set, else the working directory.
inline std::string default_output_dir() {
    const char* env_dir = std::getenv("ROUTELAB_OUT");
    return env_dir && *env_dir ? env_dir : ".";
}

/**
 * Writes the report files into dir: values.csv (state, v_avg, v_oracle),
 * policy.csv (state, mpa, probability, oracle_action, agrees; non-terminal
 * states only), qtable.csv / params.csv when applicable, trace_<seed>.csv
 * per run and summary.txt.
 */
inline void emit_report(const ExperimentReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("emit_report: cannot create " + dir + ": " + ec.message());
    auto open = [&](const std::string& file) {
        std::ofstream out(dir + "/" + file);
        if (!out) throw std::runtime_error("emit_report: cannot write " + dir + "/" + file);
        return out;
    };
    const int n = static_cast<int>(report.v_avg.size());

    {
        auto out = open("values.csv");
        out << "state,v_avg,v_oracle\n";
        for (int s = 0; s < n; ++s)
            out << s << ',' << detail::format_number(report.v_avg[static_cast<size_t>(s)]) << ','
                << detail::format_number(report.v_oracle[static_cast<size_t>(s)]) << '\n';
    }
    {
        auto out = open("policy.csv");
        out << "state,mpa,probability,oracle_action,agrees\n";
        for (int s = 0; s < n; ++s) {
            if (report.terminal[static_cast<size_t>(s)]) continue;
            int mpa = report.pi_avg.argmax(s);
            int oracle_action = report.oracle_greedy.argmax(s);
            out << s << ',' << mpa << ','
                << detail::format_number(report.pi_avg.probs(s)[static_cast<size_t>(mpa)]) << ','
                << oracle_action << ',' << (mpa == oracle_action ? 1 : 0) << '\n';
        }
    }
    if (!report.q_avg.empty()) {
        auto out = open("qtable.csv");
        out << "state,action,q_value,is_argmax\n";
        for (int s = 0; s < n; ++s) {
            const Vec& row = report.q_avg[static_cast<size_t>(s)];
            size_t best = static_cast<size_t>(std::max_element(row.begin(), row.end()) - row.begin());
            for (size_t a = 0; a < row.size(); ++a)
                out << s << ',' << a << ',' << detail::format_number(row[a]) << ','
                    << (a == best ? 1 : 0) << '\n';
        }
    }
    if (!report.critic_avg.empty()) {
        auto out = open("params.csv");
        out << "vector,index,value\n";
        for (size_t i = 0; i < report.critic_avg.size(); ++i)
            out << "critic," << i << ',' << detail::format_number(report.critic_avg[i]) << '\n';
        for (size_t i = 0; i < report.actor_avg.size(); ++i)
            out << "actor," << i << ',' << detail::format_number(report.actor_avg[i]) << '\n';
    }
    for (size_t r = 0; r < report.traces.size(); ++r) {
        auto out = open("trace_" + std::to_string(report.seeds[r]) + ".csv");
        report.traces[r].write_csv(out);
    }
    {
        auto out = open("summary.txt");
        out << "env: " << report.env_name << '\n';
        out << "algorithm: " << report.algorithm << '\n';
        out << "runs: " << report.seeds.size() << '\n';
        out << "policy agreement with oracle: " << detail::format_number(report.agreement) << '\n';
        out << "average MPA probability: " << detail::format_number(report.avg_mpa_probability)
            << '\n';
        out << "J at end: " << detail::format_number(report.j_final) << '\n';
        out << "runtime seconds: " << detail::format_number(report.runtime_seconds) << '\n';
    }
}

/**
 * Compares the policy tables of two emitted reports. Returns the fraction of
 * shared states whose most probable actions coincide and writes a short
 * per-state diff of the disagreements.
 */
inline double compare_reports(const std::string& dir_a, const std::string& dir_b,
                              std::ostream& os) {
    auto read_policy = [](const std::string& dir) {
        std::ifstream in(dir + "/policy.csv");
        if (!in) throw std::runtime_error("compare_reports: cannot open " + dir + "/policy.csv");
        std::vector<std::pair<int, int>> rows;  // (state, mpa)
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string cell;
            std::getline(ss, cell, ',');
            int state = std::stoi(cell);
            std::getline(ss, cell, ',');
            rows.emplace_back(state, std::stoi(cell));
        }
        return rows;
    };
    auto a = read_policy(dir_a);
    auto b = read_policy(dir_b);
    size_t shared = std::min(a.size(), b.size());
    if (shared == 0) throw std::runtime_error("compare_reports: no comparable states");
    int same = 0;
    for (size_t i = 0; i < shared; ++i) {
        if (a[i].second == b[i].second) {
            ++same;
        } else {
            os << "state " << a[i].first << ": " << a[i].second << " vs " << b[i].second << '\n';
        }
    }
    double agreement = static_cast<double>(same) / static_cast<double>(shared);
    os << "agreement: " << detail::format_number(agreement) << " over " << shared << " states\n";
    return agreement;
}

}  // namespace routelab
