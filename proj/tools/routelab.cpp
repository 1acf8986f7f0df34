// routelab: experiment runner for the routing MDP algorithms.
//
// Subcommands:
//   run <config>            execute a seeded multi-run experiment, write reports
//   oracle <env>            print exact values and q-table from value iteration
//   compare <dirA> <dirB>   compare the policy tables of two emitted reports

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "routelab/harness.hpp"
#include "routelab/serialization.hpp"

namespace {

int cmd_run(const std::string& config_path, long seed_override, long runs_override,
            const std::string& out_override) {
    routelab::ExperimentConfig cfg = routelab::load_config(config_path);
    if (seed_override >= 0) cfg.base_seed = static_cast<uint64_t>(seed_override);
    if (runs_override > 0) cfg.num_runs = static_cast<int>(runs_override);
    if (!out_override.empty()) cfg.output_dir = out_override;
    std::string dir = cfg.output_dir.empty() ? routelab::default_output_dir() : cfg.output_dir;

    routelab::ExperimentReport report = routelab::run_experiment(cfg);
    routelab::emit_report(report, dir);

    std::printf("env: %s  algorithm: %s  runs: %zu\n", report.env_name.c_str(),
                report.algorithm.c_str(), report.seeds.size());
    std::printf("policy agreement with oracle: %.4f\n", report.agreement);
    std::printf("average MPA probability: %.4f\n", report.avg_mpa_probability);
    std::printf("report written to %s\n", dir.c_str());
    return 0;
}

int cmd_oracle(const std::string& env_name, double discount, const std::string& custom_path,
               const std::string& out_dir) {
    routelab::Env env = [&]() {
        if (env_name == "six_node") return routelab::six_node_env(discount > 0 ? discount : 0.8);
        if (env_name == "grid44") return routelab::grid44_env(discount > 0 ? discount : 0.9);
        if (env_name == "custom") {
            if (custom_path.empty())
                throw routelab::ConfigError("custom_path", "--graph required for env=custom");
            if (!(discount > 0))
                throw routelab::ConfigError("discount", "--discount required for env=custom");
            return routelab::load_graph_env(custom_path, discount);
        }
        throw routelab::ConfigError("env", "unknown environment '" + env_name + "'");
    }();

    routelab::Solution sol = routelab::value_iteration(env.mdp, 1e-10);
    routelab::TabularPolicy greedy = routelab::greedy_policy(sol.q);
    std::printf("state  v*        greedy  q*(s,a)...\n");
    for (int s = 0; s < env.mdp.num_states(); ++s) {
        std::printf("%5d  %-9.6g %6d ", s, sol.v[static_cast<size_t>(s)], greedy.argmax(s));
        for (double q : sol.q[static_cast<size_t>(s)]) std::printf(" %.6g", q);
        std::printf("\n");
    }
    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        std::ofstream values(out_dir + "/oracle_values.csv");
        values << "state,v_oracle,greedy_action\n";
        for (int s = 0; s < env.mdp.num_states(); ++s)
            values << s << ',' << routelab::detail::format_number(sol.v[static_cast<size_t>(s)])
                   << ',' << greedy.argmax(s) << '\n';
        std::ofstream qtable(out_dir + "/oracle_qtable.csv");
        qtable << "state,action,q_value,is_argmax\n";
        for (int s = 0; s < env.mdp.num_states(); ++s)
            for (int a = 0; a < env.mdp.num_actions(s); ++a)
                qtable << s << ',' << a << ','
                       << routelab::detail::format_number(
                              sol.q[static_cast<size_t>(s)][static_cast<size_t>(a)])
                       << ',' << (greedy.argmax(s) == a ? 1 : 0) << '\n';
        std::printf("oracle tables written to %s\n", out_dir.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"routelab: actor-critic and Q-learning experiments on routing MDPs"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    long seed_override = -1, runs_override = -1;
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--seed", seed_override, "override the base seed");
    run->add_option("--runs", runs_override, "override the number of runs");
    run->add_option("--out", out_dir, "override the output directory");

    std::string env_name, graph_path, oracle_out;
    double discount = 0.0;
    auto* oracle = app.add_subcommand("oracle", "print exact solver results for an environment");
    oracle->add_option("env", env_name, "six_node, grid44 or custom")->required();
    oracle->add_option("--discount", discount, "discount factor override");
    oracle->add_option("--graph", graph_path, "edge-list file for env=custom");
    oracle->add_option("--out", oracle_out, "also write oracle CSV tables here");

    std::string dir_a, dir_b;
    auto* compare = app.add_subcommand("compare", "compare two emitted reports");
    compare->add_option("reportA", dir_a, "first report directory")->required();
    compare->add_option("reportB", dir_b, "second report directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seed_override, runs_override, out_dir);
        if (oracle->parsed()) return cmd_oracle(env_name, discount, graph_path, oracle_out);
        routelab::compare_reports(dir_a, dir_b, std::cout);
        return 0;
    } catch (const routelab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
