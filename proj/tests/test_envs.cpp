#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "grid_reference.hpp"
#include "helpers.hpp"
#include "routelab/envs.hpp"
#include "routelab/serialization.hpp"

using namespace routelab;
using Catch::Approx;

TEST_CASE("six node graph structure", "[envs]") {
    Env env = six_node_env();
    REQUIRE(env.mdp.num_states() == 6);
    CHECK(env.mdp.discount() == 0.8);

    // node 1: neighbors in descending id order are 5, 3, 2
    REQUIRE(env.mdp.num_actions(0) == 3);
    CHECK(env.mdp.action(0, 0).transitions[0].next_state == 4);
    CHECK(env.mdp.action(0, 1).transitions[0].next_state == 2);
    CHECK(env.mdp.action(0, 2).transitions[0].next_state == 1);
    CHECK(env.mdp.reward(0, 0) == -18.0);
    CHECK(env.mdp.reward(0, 1) == -9.0);
    CHECK(env.mdp.reward(0, 2) == -7.0);

    CHECK(env.mdp.num_actions(2) == 4);  // node 3 has four neighbors

    // destination: single zero self-loop
    CHECK(env.mdp.is_terminal(5));
    REQUIRE(env.mdp.num_actions(5) == 1);
    CHECK(env.mdp.reward(5, 0) == 0.0);

    // every run starts from node 1
    CHECK(env.start[0] == 1.0);
    for (int s = 1; s < 6; ++s) CHECK(env.start[static_cast<size_t>(s)] == 0.0);
}

TEST_CASE("grid structure follows the compass convention", "[envs]") {
    Env env = grid44_env(0.9);
    REQUIRE(env.mdp.num_states() == 45);
    CHECK(env.mdp.is_terminal(44));

    // top-left corner: East, South-East, South
    REQUIRE(env.mdp.num_actions(0) == 3);
    CHECK(env.mdp.action(0, 0).transitions[0].next_state == 1);
    CHECK(env.mdp.action(0, 1).transitions[0].next_state == 10);
    CHECK(env.mdp.action(0, 2).transitions[0].next_state == 9);
    CHECK(env.mdp.reward(0, 0) == -5.0);
    CHECK(env.mdp.reward(0, 1) == -10.0);
    CHECK(env.mdp.reward(0, 2) == -15.0);

    // state 43 (bottom row): E, W, NW, N, NE
    REQUIRE(env.mdp.num_actions(43) == 5);
    const int targets[5] = {44, 42, 33, 34, 35};
    const double rewards[5] = {-5.0, -5.0, -10.0, -15.0, -10.0};
    for (int a = 0; a < 5; ++a) {
        CHECK(env.mdp.action(43, a).transitions[0].next_state == targets[a]);
        CHECK(env.mdp.reward(43, a) == rewards[a]);
    }

    CHECK(env.mdp.num_actions(12) == 8);  // interior node

    // action count equals the compass degree everywhere
    for (int s = 0; s < 44; ++s) {
        int row = s / 9, col = s % 9;
        bool row_edge = (row == 0 || row == 4);
        bool col_edge = (col == 0 || col == 8);
        int expected = row_edge && col_edge ? 3 : (row_edge || col_edge ? 5 : 8);
        CHECK(env.mdp.num_actions(s) == expected);
    }

    // deterministic kernel: each transition row is a single certain move
    for (int s = 0; s < 45; ++s)
        for (int a = 0; a < env.mdp.num_actions(s); ++a) {
            REQUIRE(env.mdp.action(s, a).transitions.size() == 1);
            CHECK(env.mdp.action(s, a).transitions[0].prob == 1.0);
        }

    // uniform start over the 44 non-terminal states
    CHECK(env.start[44] == 0.0);
    for (int s = 0; s < 44; ++s) CHECK(env.start[static_cast<size_t>(s)] == Approx(1.0 / 44.0));
}

TEST_CASE("oracle cross-validation on both environments", "[envs]") {
    SECTION("six node optimal values") {
        Env env = six_node_env();
        Solution sol = value_iteration(env.mdp, 1e-10);
        const auto& expected = testutil::six_node_v_star();
        for (int s = 0; s < 6; ++s)
            CHECK(sol.v[static_cast<size_t>(s)] ==
                  Approx(expected[static_cast<size_t>(s)]).margin(0.01));
    }

    SECTION("grid spot q-values and reference actions") {
        Env env = grid44_env(0.9);
        Solution sol = value_iteration(env.mdp, 1e-10);
        for (const auto& spot : testutil::grid_q_spots())
            CHECK(sol.q[static_cast<size_t>(spot.state)][static_cast<size_t>(spot.action)] ==
                  Approx(spot.value).margin(0.01));
        CHECK(sol.v[33] == Approx(-14.0).margin(0.01));

        // every reference action attains the per-state maximum
        const auto& reference = testutil::grid_reference_actions();
        for (int s = 0; s < 44; ++s) {
            double best = *std::max_element(sol.q[static_cast<size_t>(s)].begin(),
                                            sol.q[static_cast<size_t>(s)].end());
            CHECK(sol.q[static_cast<size_t>(s)][static_cast<size_t>(reference[static_cast<size_t>(s)])] ==
                  Approx(best).margin(0.01));
        }
    }
}

TEST_CASE("environment sampling", "[envs]") {
    SECTION("terminal step reports and restarts") {
        Env env = six_node_env();
        EnvSampler sampler(env, 42);
        CHECK(sampler.current() == 0);  // start = node 1

        // walk 1 -> 5 (action 0), then 5 -> 6 (action 0)
        auto step1 = sampler.step(0);
        CHECK(step1.next_state == 4);
        CHECK(step1.reward == -18.0);
        CHECK_FALSE(step1.terminated);

        auto step2 = sampler.step(0);
        CHECK(step2.next_state == 5);
        CHECK(step2.reward == -8.0);
        CHECK(step2.terminated);
        CHECK(sampler.current() == 0);  // restarted at node 1
    }

    SECTION("grid terminal move") {
        Env env = grid44_env(0.9);
        EnvSampler sampler(env, 7);
        while (sampler.current() != 43) sampler.reset();
        auto step = sampler.step(0);
        CHECK(step.next_state == 44);
        CHECK(step.reward == -5.0);
        CHECK(step.terminated);
        CHECK(sampler.current() != 44);
    }

    SECTION("same seed gives identical trajectories") {
        Env env = grid44_env(0.9);
        EnvSampler a(env, 123), b(env, 123);
        std::mt19937_64 actions(99);
        for (int i = 0; i < 1000; ++i) {
            CHECK(a.current() == b.current());
            int act = static_cast<int>(actions() %
                                       static_cast<uint64_t>(env.mdp.num_actions(a.current())));
            auto ra = a.step(act);
            auto rb = b.step(act);
            CHECK(ra.next_state == rb.next_state);
            CHECK(ra.reward == rb.reward);
            CHECK(ra.terminated == rb.terminated);
        }
    }

    SECTION("unavailable actions are rejected") {
        Env env = six_node_env();
        EnvSampler sampler(env, 1);
        CHECK_THROWS_AS(sampler.step(5), std::invalid_argument);
    }
}

TEST_CASE("mdp json round trip", "[envs]") {
    SECTION("bundled environments") {
        for (const Env& env : {six_node_env(), grid44_env(0.9)}) {
            nlohmann::json doc = mdp_to_json(env.mdp);
            TabularMdp loaded = mdp_from_json(doc);
            CHECK(mdp_to_json(loaded) == doc);
        }
    }

    SECTION("random MDPs through a file") {
        namespace fs = std::filesystem;
        std::mt19937_64 rng(67);
        fs::path path = fs::temp_directory_path() / "routelab_roundtrip.json";
        for (int i = 0; i < 20; ++i) {
            TabularMdp mdp = testutil::random_mdp(rng);
            save_mdp(path.string(), mdp);
            TabularMdp loaded = load_mdp(path.string());
            CHECK(mdp_to_json(loaded) == mdp_to_json(mdp));
        }
        fs::remove(path);
    }
}

TEST_CASE("custom edge-list graphs load and match the bundled builder", "[envs]") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "routelab_sixnode.edges";
    {
        std::ofstream out(path);
        out << "# six node routing graph\n";
        out << "destination=6\n";
        out << "start=1\n";
        out << "1 5 18\n5 6 8\n6 4 6\n4 3 11\n3 1 9\n3 5 2\n1 2 7\n3 2 10\n4 2 19\n";
    }
    Env loaded = load_graph_env(path.string(), 0.8);
    Env builtin = six_node_env();
    CHECK(mdp_to_json(loaded.mdp) == mdp_to_json(builtin.mdp));
    CHECK(loaded.start == builtin.start);
    fs::remove(path);

    SECTION("uniform start and remapped ids") {
        fs::path sparse = fs::temp_directory_path() / "routelab_sparse.edges";
        {
            std::ofstream out(sparse);
            out << "destination=30\nstart=uniform\n10 20 1\n20 30 2\n";
        }
        Env env = load_graph_env(sparse.string(), 0.9);
        REQUIRE(env.mdp.num_states() == 3);
        CHECK(env.mdp.is_terminal(2));  // id 30 is the highest, remaps to 2
        CHECK(env.start[0] == Approx(0.5));
        CHECK(env.start[1] == Approx(0.5));
        CHECK(env.start[2] == 0.0);
        fs::remove(sparse);
    }

    SECTION("malformed files are rejected") {
        fs::path bad = fs::temp_directory_path() / "routelab_bad.edges";
        {
            std::ofstream out(bad);
            out << "1 2 5\n";  // no destination line
        }
        CHECK_THROWS_AS(load_graph_env(bad.string(), 0.9), std::runtime_error);
        {
            std::ofstream out(bad);
            out << "destination=2\n1 2 -3\n";
        }
        CHECK_THROWS_AS(load_graph_env(bad.string(), 0.9), std::runtime_error);
        fs::remove(bad);
        CHECK_THROWS_AS(load_graph_env("/nonexistent/file.edges", 0.9), std::runtime_error);
    }
}
