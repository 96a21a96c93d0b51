#include <doctest.h>

#include <numeric>

#include "costeval/core.hpp"
#include "costeval/sampling_design.hpp"
#include "oracles.hpp"

using namespace costeval;

TEST_CASE("optimal input distribution") {
    SUBCASE("constant nu returns P") {
        const std::vector<double> p{0.2, 0.3, 0.5}, nu{2.0, 2.0, 2.0};
        const auto d = optimal_input_distribution(p, nu);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(d.q_star[i] == doctest::Approx(p[i]));
    }
    SUBCASE("two-point example") {
        const std::vector<double> p{0.5, 0.5}, nu{1.0, 4.0};
        const auto d = optimal_input_distribution(p, nu);
        CHECK(d.q_star[0] == doctest::Approx(1.0 / 3.0));
        CHECK(d.q_star[1] == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("zero nu keeps positive mass where P does") {
        const std::vector<double> p{0.5, 0.5}, nu{0.0, 4.0};
        const auto d = optimal_input_distribution(p, nu);
        CHECK(d.q_star[0] > 0.0);
        CHECK(d.q_star[1] == doctest::Approx(1.0));
    }
    SUBCASE("errors") {
        CHECK_THROWS(optimal_input_distribution(std::vector<double>{0.5, 0.5}, std::vector<double>{0.0, 0.0}));
        CHECK_THROWS(optimal_input_distribution(std::vector<double>{0.5, 0.6}, std::vector<double>{1.0, 1.0}));
        CHECK_THROWS(optimal_input_distribution(std::vector<double>{1.0}, std::vector<double>{-1.0}));
        CHECK_THROWS(optimal_input_distribution(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0}));
    }
}

TEST_CASE("nu of x") {
    CHECK(nu_of_x(1.0, 0.7, 3.0) == 0.7);
    CHECK(nu_of_x(0.25, 1.0, 0.2) == doctest::Approx(1.6));
    CHECK_THROWS(nu_of_x(0.0, 1.0, 0.2));
    CHECK_THROWS(nu_of_x(1.2, 1.0, 0.2));
    Rng rng(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) CHECK(nu_of_x(1e-6 + unit(rng) * (1 - 1e-6), unit(rng), unit(rng)) >= 0.0);
}

TEST_CASE("Q* beats P and every simplex grid point") {
    Rng rng(17);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> p(5), nu(5);
        for (auto& v : p) v = unit(rng);
        const double s = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& v : p) v /= s;
        for (auto& v : nu) v = 4.0 * unit(rng);
        const auto d = optimal_input_distribution(p, nu);
        CHECK(std::accumulate(d.q_star.begin(), d.q_star.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        const double at_q = reweighted_increment_variance(p, nu, d.q_star, 0.3);
        CHECK(at_q <= reweighted_increment_variance(p, nu, p, 0.3) + 1e-12);
        const double grid = oracle::simplex_grid_min(p, nu, 30) - 0.09;
        CHECK(at_q <= grid + 1e-12);
    }
}
