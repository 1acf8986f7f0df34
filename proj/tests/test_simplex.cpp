#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "routelab/simplex.hpp"

using namespace routelab;
using Catch::Approx;

namespace {

double norm2(const Vec& x, const Vec& y) {
    double out = 0.0;
    for (size_t i = 0; i < x.size(); ++i) out += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(out);
}

Vec random_simplex_point(size_t dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec y(dim);
    double total = 0.0;
    for (double& v : y) {
        v = -std::log(unit(rng) + 1e-12);
        total += v;
    }
    for (double& v : y) v /= total;
    return y;
}

}  // namespace

TEST_CASE("simplex projection hand cases", "[simplex]") {
    Vec inside = project_simplex({0.2, 0.3, 0.5});
    CHECK(inside[0] == Approx(0.2));
    CHECK(inside[1] == Approx(0.3));
    CHECK(inside[2] == Approx(0.5));

    Vec symmetric = project_simplex({0.6, 0.6});
    CHECK(symmetric[0] == Approx(0.5));
    CHECK(symmetric[1] == Approx(0.5));

    Vec clipped = project_simplex({1.5, -0.3});
    CHECK(clipped[0] == Approx(1.0));
    CHECK(clipped[1] == Approx(0.0));

    Vec single = project_simplex({-4.2});
    CHECK(single[0] == Approx(1.0));

    CHECK_THROWS_AS(project_simplex({}), std::invalid_argument);
}

TEST_CASE("simplex projection is idempotent and lands on the simplex", "[simplex]") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        size_t dim = 1 + rng() % 16;
        Vec x(dim);
        for (double& v : x) v = coord(rng);
        Vec p = project_simplex(x);

        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == Approx(1.0).margin(1e-10));

        Vec pp = project_simplex(p);
        for (size_t k = 0; k < dim; ++k) CHECK(pp[k] == Approx(p[k]).margin(1e-12));
    }
}

TEST_CASE("simplex projection is the nearest point", "[simplex]") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        size_t dim = 1 + rng() % 16;
        Vec x(dim);
        for (double& v : x) v = coord(rng);
        Vec p = project_simplex(x);
        double dist = norm2(p, x);
        for (int j = 0; j < 100; ++j) {
            Vec y = random_simplex_point(dim, rng);
            CHECK(dist <= norm2(y, x) + 1e-9);
        }
    }
}

TEST_CASE("policy perturbation hand cases", "[simplex]") {
    TabularPolicy pi(std::vector<Vec>{{1.0, 0.0, 0.0}});
    TabularPolicy hat = perturb_policy(pi, 0.1);
    CHECK(hat.probs(0)[0] == Approx(1.1 / 1.3));
    CHECK(hat.probs(0)[1] == Approx(0.1 / 1.3));
    CHECK(hat.probs(0)[2] == Approx(0.1 / 1.3));

    // uniform rows are fixed points for any magnitude
    TabularPolicy uniform(std::vector<Vec>{{0.25, 0.25, 0.25, 0.25}, {0.5, 0.5}});
    TabularPolicy same = perturb_policy(uniform, 0.37);
    for (int s = 0; s < 2; ++s)
        for (size_t a = 0; a < uniform.probs(s).size(); ++a)
            CHECK(same.probs(s)[a] == Approx(uniform.probs(s)[a]).margin(1e-12));

    TabularPolicy two(std::vector<Vec>{{0.5, 0.5}});
    TabularPolicy still = perturb_policy(two, 0.5);
    CHECK(still.probs(0)[0] == Approx(0.5));
    CHECK(still.probs(0)[1] == Approx(0.5));

    CHECK_THROWS_AS(perturb_policy(two, 0.0), std::invalid_argument);
}

TEST_CASE("policy perturbation keeps rows strictly positive", "[simplex]") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 200; ++i) {
        TabularMdp mdp = testutil::random_mdp(rng, 6);
        TabularPolicy pi = testutil::random_policy(mdp, rng);
        double eta = 0.01 + 0.2 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        TabularPolicy hat = perturb_policy(pi, eta);
        for (int s = 0; s < mdp.num_states(); ++s) {
            double k = static_cast<double>(mdp.num_actions(s));
            double floor = eta / (1.0 + k * eta);
            double sum = 0.0;
            for (double p : hat.probs(s)) {
                CHECK(p >= floor - 1e-12);
                sum += p;
            }
            CHECK(sum == Approx(1.0).margin(1e-12));
        }
    }
}
