#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "tailbench/rng.hpp"
#include "tailbench/tails.hpp"

using namespace tailbench;

namespace {

Eigen::VectorXd random_spectrum(Rng& rng, int d, double lo = 0.1, double hi = 10.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd l(d);
    for (int i = 0; i < d; ++i) l[i] = u(rng);
    std::sort(l.data(), l.data() + d, std::greater<>());
    return l;
}

}  // namespace

TEST_CASE("eta_upper reproduces the tabulated values") {
    CHECK(eta_upper(2000, 1, 0.0, 0.015, 319.83) == doctest::Approx(3.61).epsilon(0.0015));
    CHECK(eta_upper(1797, 1, 0.0, 0.100, 137.07) == doctest::Approx(2.91).epsilon(0.0018));
    CHECK(eta_upper(1797, 1, 0.0, 0.200, 93.49) == doctest::Approx(3.06).epsilon(0.0017));
}

TEST_CASE("eta_upper grows without bound in delta") {
    double prev = eta_upper(100, 1, 0.0, 0.1, 5.0);
    for (double delta : {0.1, 1.0, 10.0, 100.0}) {
        const double cur = eta_upper(100, 1, delta, 0.1, 5.0);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("eta_upper domain errors") {
    CHECK_THROWS_AS(eta_upper(100, 1, 0.0, 0.0, 5.0), std::domain_error);
    CHECK_THROWS_AS(eta_upper(100, 1, 0.0, 0.1, 0.0), std::domain_error);
}

TEST_CASE("eta_lower hand-evaluated spectrum") {
    Eigen::VectorXd l(2);
    l << 2.0, 1.0;
    // 1 + 2*4*4/(0.5*16) - 1/4
    CHECK(eta_lower(4, 1, 0.0, 0.5, l) == doctest::Approx(4.75).epsilon(1e-12));
}

TEST_CASE("eta_lower equals eta_upper for a single coordinate") {
    Eigen::VectorXd l(1);
    l << 3.7;
    CHECK(eta_lower(50, 2, 0.1, 0.05, l) ==
          doctest::Approx(eta_upper(50, 2, 0.1, 0.05, 3.7)).epsilon(1e-14));
}

TEST_CASE("gamma_bar hand-evaluated and linear in B") {
    Eigen::VectorXd l(2);
    l << 2.0, 1.0;
    CHECK(gamma_bar(4, 1, 0.0, l) == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(gamma_bar(4, 3, 0.0, l) == doctest::Approx(3 * 1.6).epsilon(1e-12));
}

TEST_CASE("gap identity on random spectra") {
    Rng rng = make_rng(7);
    std::uniform_int_distribution<int> ud(1, 25);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const int d = ud(rng);
        Eigen::VectorXd l = random_spectrum(rng, d, 1.0, 10.0);
        const double n = 10 + 500 * u(rng), B = ud(rng), delta = 0.2 * u(rng);
        // pick gamma so the bounds land in the tail-index range the formulas
        // are meant for; the identity is exact there at double precision
        const double eta_target = 1.5 + 50.0 * u(rng);
        const double gamma =
            2.0 * n * B * (l[0] * l[0] + n * delta) / ((eta_target - 1.0) * std::pow(l[0], 4.0));
        double corr = 0.0;
        for (int i = 1; i < d; ++i) corr += l[i] * l[i];
        corr /= l[0] * l[0];
        const double gap = eta_upper(n, B, delta, gamma, l[0]) - eta_lower(n, B, delta, gamma, l);
        CHECK(std::abs(gap - corr) <= 1e-12);
    }
}

TEST_CASE("bound monotonicity in the optimization parameters") {
    Rng rng = make_rng(11);
    Eigen::VectorXd l = random_spectrum(rng, 8, 0.5, 6.0);
    const double n = 200, B = 2, delta = 0.05, gamma = 0.02;

    SUBCASE("increasing delta raises both bounds") {
        CHECK(eta_upper(n, B, delta + 0.01, gamma, l[0]) > eta_upper(n, B, delta, gamma, l[0]));
        CHECK(eta_lower(n, B, delta + 0.01, gamma, l) > eta_lower(n, B, delta, gamma, l));
    }
    SUBCASE("increasing B raises both bounds") {
        CHECK(eta_upper(n, B + 1, delta, gamma, l[0]) > eta_upper(n, B, delta, gamma, l[0]));
        CHECK(eta_lower(n, B + 1, delta, gamma, l) > eta_lower(n, B, delta, gamma, l));
    }
    SUBCASE("increasing gamma lowers both bounds") {
        CHECK(eta_upper(n, B, delta, gamma * 2, l[0]) < eta_upper(n, B, delta, gamma, l[0]));
        CHECK(eta_lower(n, B, delta, gamma * 2, l) < eta_lower(n, B, delta, gamma, l));
    }
    SUBCASE("increasing lambda1 lowers eta_upper and eta_lower with the rest fixed") {
        CHECK(eta_upper(n, B, delta, gamma, l[0] * 1.5) < eta_upper(n, B, delta, gamma, l[0]));
        Eigen::VectorXd l2 = l;
        l2[0] *= 1.5;
        CHECK(eta_lower(n, B, delta, gamma, l2) < eta_lower(n, B, delta, gamma, l));
    }
}

TEST_CASE("wishart expected top eigenvalue") {
    CHECK(wishart_expected_lambda1sq(2, 1, 1.0) == doctest::Approx(4.0).epsilon(1e-14));
    const double v = wishart_expected_lambda1sq(2000, 200, 1.0);
    const double expect = std::pow(std::sqrt(1999.0) + std::sqrt(200.0), 2.0);
    CHECK(v == doctest::Approx(expect).epsilon(1e-10));
    CHECK_THROWS_AS(wishart_expected_lambda1sq(10, 10, 1.0), std::domain_error);
}

TEST_CASE("wishart monte carlo magnitude") {
    Rng rng = make_rng(3);
    const int n = 200, d = 20, draws = 30;
    double acc = 0.0;
    for (int k = 0; k < draws; ++k) {
        Eigen::MatrixXd G = gaussian_matrix(n, d, rng);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(G);
        acc += std::pow(svd.singularValues()[0], 2.0);
    }
    const double formula = wishart_expected_lambda1sq(n, d, 1.0);
    CHECK(std::abs(acc / draws - formula) / formula < 0.05);
}

TEST_CASE("substituting the wishart mean into eta_upper decreases in d and sigma2") {
    const double n = 2000, B = 1, delta = 0.0, gamma = 0.02;
    double prev = std::numeric_limits<double>::infinity();
    for (double d : {50.0, 100.0, 200.0, 400.0}) {
        const double l1 = std::sqrt(wishart_expected_lambda1sq(n, d, 1.0));
        const double eu = eta_upper(n, B, delta, gamma, l1);
        CHECK(eu < prev);
        prev = eu;
    }
    prev = std::numeric_limits<double>::infinity();
    for (double s2 : {0.5, 1.0, 2.0, 4.0}) {
        const double l1 = std::sqrt(wishart_expected_lambda1sq(n, 100, s2));
        const double eu = eta_upper(n, B, delta, gamma, l1);
        CHECK(eu < prev);
        prev = eu;
    }
}

TEST_CASE("drift condition margin") {
    Rng rng = make_rng(23);
    Eigen::VectorXd l = random_spectrum(rng, 6, 0.5, 8.0);
    const double n = 300, B = 2, delta = 0.03;
    const double gbar = gamma_bar(n, B, delta, l);
    const double gamma = 0.4 * gbar;

    auto rep2 = drift_condition_margin(l, n, B, delta, gamma, 2.0);
    // vartheta coincides with the lower bound: the i = 1 term of the full
    // spectral sum cancels the extra unit
    CHECK(rep2.vartheta == doctest::Approx(eta_lower(n, B, delta, gamma, l)).epsilon(1e-12));
    CHECK(rep2.satisfied);
    CHECK(rep2.inf_q > 0.0);

    SUBCASE("q vanishes exactly at vartheta") {
        auto repv = drift_condition_margin(l, n, B, delta, gamma, rep2.vartheta);
        CHECK(std::abs(repv.q_at_lambda1sq) <= 1e-9);
    }
    SUBCASE("rho above vartheta violates the condition") {
        auto repv = drift_condition_margin(l, n, B, delta, gamma, rep2.vartheta + 0.01);
        CHECK(repv.q_at_lambda1sq < 0.0);
        CHECK_FALSE(repv.satisfied);
    }
    SUBCASE("q is strictly decreasing in rho") {
        auto lo = drift_condition_margin(l, n, B, delta, gamma, 2.0);
        auto hi = drift_condition_margin(l, n, B, delta, gamma, 3.0);
        CHECK(hi.q_at_lambda1sq < lo.q_at_lambda1sq);
    }
}

TEST_CASE("drift condition across a rho grid whenever gamma < gamma_bar") {
    Rng rng = make_rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> ud(2, 10);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd l = random_spectrum(rng, ud(rng), 0.5, 12.0);
        const double n = 20 + std::floor(500 * u(rng));
        const double B = 1 + std::floor(3 * u(rng));
        const double delta = u(rng) < 0.5 ? 0.0 : 0.05 * u(rng);
        const double gamma = (0.1 + 0.8 * u(rng)) * gamma_bar(n, B, delta, l);
        const double vt = drift_condition_margin(l, n, B, delta, gamma, 2.0).vartheta;
        REQUIRE(vt > 2.0);
        for (double rho = 2.0; rho <= vt - 0.05; rho += std::max(0.05, (vt - 2.05) / 7.0))
            CHECK(drift_condition_margin(l, n, B, delta, gamma, rho).satisfied);
        CHECK_FALSE(drift_condition_margin(l, n, B, delta, gamma, vt + 0.01).satisfied);
    }
}

TEST_CASE("bounds report json carries the expected fields") {
    Eigen::VectorXd l(2);
    l << 2.0, 1.0;
    const std::string j = bounds_report_json(4, 2, 1, 0.5, 0.0, l);
    for (const char* key : {"\"n\"", "\"d\"", "\"B\"", "\"gamma\"", "\"delta\"", "\"lambda1\"",
                            "\"trace_AtA\"", "\"eta_lower\"", "\"eta_upper\"", "\"gamma_bar\"",
                            "\"valid_lower\""})
        CHECK(j.find(key) != std::string::npos);
}
