#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <catch_amalgamated.hpp>

#include "icic/special_math.hpp"
#include "oracles.hpp"

using namespace icic;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("E1 reference values", "[special_math][e1]") {
    CHECK_THAT(math::exponential_integral_e1(1.0), WithinAbs(0.2193839, 5e-8));
    CHECK_THAT(math::exponential_integral_e1(2.0), WithinAbs(0.0489005, 5e-8));
}

TEST_CASE("E1 series and continued fraction agree at the switchover", "[special_math][e1]") {
    const double series = math::detail::e1_series(1.0);
    const double cf = std::exp(-1.0) * math::detail::upper_gamma_cf_scaled(0.0, 1.0);
    CHECK_THAT(series, WithinAbs(cf, 1e-12));
}

TEST_CASE("E1 matches the standard library exponential integral", "[special_math][e1]") {
    // E1(x) = -Ei(-x)
    for (double x = 1e-6; x <= 700.0; x *= 1.37) {
        INFO("x = " << x);
        CHECK_THAT(math::exponential_integral_e1(x), WithinAbs(-std::expint(-x), 1e-12));
    }
    CHECK(math::exponential_integral_e1(800.0) == 0.0);
}

TEST_CASE("E1 envelope", "[special_math][e1]") {
    for (double x = 0.01; x < 600.0; x *= 1.5) {
        const double e1 = math::exponential_integral_e1(x);
        const double s = math::scaled_exponential_integral_e1(x);
        INFO("x = " << x);
        CHECK(s > 1.0 / (x + 1.0));
        CHECK(s < 1.0 / x);
        if (x < 700.0) {
            CHECK(e1 > std::exp(-x) / (x + 1.0));
            CHECK(e1 < std::exp(-x) / x);
        }
    }
}

TEST_CASE("E1 rejects non-positive arguments", "[special_math][e1]") {
    CHECK_THROWS_AS(math::exponential_integral_e1(0.0), DomainError);
    CHECK_THROWS_AS(math::exponential_integral_e1(-1.0), DomainError);
}

TEST_CASE("Gamma(-k, x) reference values", "[special_math][gamma]") {
    CHECK_THAT(math::upper_incomplete_gamma_nonpos(0, 2.0), WithinAbs(0.0489005, 5e-8));
    CHECK_THAT(math::upper_incomplete_gamma_nonpos(0, 2.0), WithinRel(-std::expint(-2.0), 1e-13));
    CHECK_THAT(math::upper_incomplete_gamma_nonpos(1, 1.0), WithinAbs(0.1484955, 5e-8));
    CHECK_THAT(math::upper_incomplete_gamma_nonpos(1, 1.0), WithinRel(oracle::gamma_neg_direct(1, 1.0), 1e-9));
}

TEST_CASE("Gamma(-k, x) against direct integration", "[special_math][gamma]") {
    for (int k = 0; k <= 8; ++k) {
        for (double x : {0.01, 0.04, 0.1, 0.5, 0.99, 1.0, 2.0, 7.5, 20.0, 50.0}) {
            INFO("k = " << k << ", x = " << x);
            CHECK_THAT(math::upper_incomplete_gamma_nonpos(k, x), WithinRel(oracle::gamma_neg_direct(k, x), 1e-8));
        }
    }
}

TEST_CASE("Gamma(-k, x) recurrence consistency", "[special_math][gamma][property]") {
    for (int k = 0; k <= 8; ++k) {
        for (double x = 0.1; x <= 50.0; x *= 1.3) {
            const double direct = math::upper_incomplete_gamma_nonpos(k, x);
            const double via_next = std::pow(x, -k - 1) * std::exp(-x) -
                                    (k + 1) * math::upper_incomplete_gamma_nonpos(k + 1, x);
            INFO("k = " << k << ", x = " << x);
            CHECK_THAT(via_next, WithinRel(direct, 1e-9));
        }
    }
}

TEST_CASE("Gamma(-k, x) positive and decreasing in k", "[special_math][gamma][property]") {
    for (double x = 1.0; x <= 60.0; x *= 1.25) {
        double prev = math::upper_incomplete_gamma_nonpos(0, x);
        CHECK(prev > 0.0);
        for (int k = 1; k <= 10; ++k) {
            const double g = math::upper_incomplete_gamma_nonpos(k, x);
            CHECK(g > 0.0);
            CHECK(g < prev);
            prev = g;
        }
    }
    CHECK_THROWS_AS(math::upper_incomplete_gamma_nonpos(1, 0.0), DomainError);
}

TEST_CASE("digamma at integers", "[special_math][digamma]") {
    CHECK_THAT(math::digamma_int(1), WithinAbs(-0.5772157, 1e-7));
    CHECK_THAT(math::digamma_int(3), WithinAbs(0.922784, 1e-6));
    CHECK_THAT(math::digamma_int(7), WithinAbs(1.872784, 1e-6));
    CHECK_THROWS_AS(math::digamma_int(0), DomainError);
}

TEST_CASE("Beta function", "[special_math][beta]") {
    CHECK_THAT(math::beta_function(1.0, 4.0 / 3.0), WithinRel(0.75, 1e-13));
    CHECK_THAT(math::beta_function(2.0, 2.0), WithinRel(1.0 / 6.0, 1e-13));
    const double z = std::exp2(20);
    const double y = 4.0 / 3.0;
    const double big = math::beta_function(z, y);
    CHECK(std::isfinite(big));
    CHECK(big > 0.0);
    CHECK(big < std::exp2(-20));
    // Asymptotic series Gamma(y) z^-y (1 - y(y-1)/(2z)); next term is O(z^-2).
    CHECK_THAT(big, WithinRel(std::tgamma(y) * std::pow(z, -y) * (1.0 - y * (y - 1.0) / (2.0 * z)), 1e-10));
    CHECK_THROWS_AS(math::beta_function(0.0, 1.0), DomainError);
}

TEST_CASE("log-Beta is accurate across the large-argument switch", "[special_math][beta]") {
    const double y = 4.0 / 3.0;
    for (double z : {9000.0, 9999.0, 10001.0, 3e4, 1e6, 1e12, 1e30}) {
        // Bernoulli-polynomial expansion of lgamma(z) - lgamma(z+y), truncated at O(z^-3).
        const double w = y * (y - 1.0);
        const double expected =
            std::lgamma(y) - y * std::log(z) - w / (2.0 * z) + w * (2.0 * y - 1.0) / (12.0 * z * z);
        INFO("z = " << z);
        CHECK_THAT(math::log_beta(z, y), WithinAbs(expected, 1e-11));
    }
}

TEST_CASE("Beta symmetry", "[special_math][beta][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 8.0);
    for (int t = 0; t < 200; ++t) {
        const double x = std::pow(10.0, u(rng));
        const double y = std::pow(10.0, u(rng) / 2.0);
        CHECK(math::log_beta(x, y) == math::log_beta(y, x));
    }
}

TEST_CASE("I1 closed-form identities", "[special_math][i1]") {
    const double eE1 = std::exp(1.0) * -std::expint(-1.0);
    CHECK_THAT(math::integral_i1(1.0, 1.0, 0, 0), WithinRel(eE1, 1e-9));
    CHECK_THAT(math::integral_i1(1.0, 1.0, 0, 1), WithinRel(1.0 - eE1, 1e-9));
    CHECK_THAT(math::integral_i1(1.0, 1.0, 0, 0), WithinAbs(0.596347, 1e-6));
    CHECK_THAT(math::integral_i1(1.0, 1.0, 0, 1), WithinAbs(0.403653, 1e-6));
}

TEST_CASE("I1 large-a expansion", "[special_math][i1]") {
    // Watson's lemma: m!/(a^(m+1) b^n) * (1 - (m+1)(n/b + 1)/a) + O(a^-2).
    const double a = 1e3;
    const math::QuadratureSpec tight{1e-300, 1e-12, 5000};
    for (int m = 0; m <= 3; ++m) {
        for (int n = 0; n <= 2; ++n) {
            for (double b : {0.5, 2.0}) {
                const double lead = std::tgamma(m + 1.0) / (std::pow(a, m + 1) * std::pow(b, n));
                const double two_term = lead * (1.0 - (m + 1.0) * (n / b + 1.0) / a);
                INFO("m = " << m << ", n = " << n << ", b = " << b);
                CHECK_THAT(math::integral_i1(a, b, m, n, tight), WithinRel(two_term, 2e-3));
            }
        }
    }
}

TEST_CASE("I1 against an independent quadrature", "[special_math][i1]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    math::QuadratureSpec tight;
    tight.abs_tol = 1e-300;
    tight.rel_tol = 1e-12;
    for (int t = 0; t < 40; ++t) {
        const double a = std::pow(10.0, -2.0 + 3.0 * u(rng));
        const double b = std::pow(10.0, -2.0 + 4.0 * u(rng));
        const int m = static_cast<int>(u(rng) * 5);
        const int n = static_cast<int>(u(rng) * 4);
        INFO("a = " << a << ", b = " << b << ", m = " << m << ", n = " << n);
        CHECK_THAT(math::integral_i1(a, b, m, n, tight), WithinRel(oracle::i1_direct(a, b, m, n), 1e-7));
    }
}

TEST_CASE("I1 coincident poles use the merged form", "[special_math][i1]") {
    const double merged = math::integral_i1(0.7, 1.0, 2, 2);
    const double near = math::integral_i1(0.7, 1.0 + 5e-10, 2, 2);
    const double apart = math::integral_i1(0.7, 1.0 + 1e-6, 2, 2);
    CHECK(merged == near);
    CHECK_THAT(apart, WithinRel(merged, 1e-5));
}

TEST_CASE("I1 monotonicity", "[special_math][i1][property]") {
    // Decreasing in a and b hold everywhere. Decreasing in n needs x + b >= 1
    // on the support (b >= 1); increasing in m holds once m >= 1 with most of
    // the e^(-ax) mass beyond x = 1 (small a).
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 60; ++t) {
        const double a = 0.01 + 0.29 * u(rng);
        const double b = 1.0 + 4.0 * u(rng);
        const int m = 1 + static_cast<int>(u(rng) * 4);
        const int n = static_cast<int>(u(rng) * 4);
        const double base = math::integral_i1(a, b, m, n);
        INFO("a = " << a << ", b = " << b << ", m = " << m << ", n = " << n);
        CHECK(math::integral_i1(a * 1.1, b, m, n) < base);
        if (n > 0) CHECK(math::integral_i1(a, b * 1.1, m, n) < base);
        CHECK(math::integral_i1(a, b, m, n + 1) < base);
        CHECK(math::integral_i1(a, b, m + 1, n) > base);
    }
}

TEST_CASE("I1 domain and budget errors", "[special_math][i1]") {
    CHECK_THROWS_AS(math::integral_i1(0.0, 1.0, 0, 0), DomainError);
    CHECK_THROWS_AS(math::integral_i1(1.0, -1.0, 0, 0), DomainError);
    math::QuadratureSpec bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(math::integral_i1(1.0, 1.0, 0, 0, bad), DomainError);
    math::QuadratureSpec starved;
    starved.abs_tol = 1e-300;
    starved.rel_tol = 1e-15;
    starved.max_subdivisions = 1;
    CHECK_THROWS_AS(math::integral_i1(1e-3, 1e-3, 4, 3, starved), NonConvergenceError);
}

TEST_CASE("Gamma sampling: exponential mean", "[special_math][sampling]") {
    std::mt19937_64 rng(101);
    double sum = 0.0;
    const int n = 1000000;
    for (int k = 0; k < n; ++k) sum += math::sample_gamma_unit(1, rng);
    CHECK_THAT(sum / n, WithinAbs(1.0, 0.004));
}

TEST_CASE("Gamma sampling: mean log equals digamma", "[special_math][sampling]") {
    std::mt19937_64 rng(102);
    double sum = 0.0;
    const int n = 1000000;
    for (int k = 0; k < n; ++k) sum += std::log(math::sample_gamma_unit(4, rng));
    CHECK_THAT(sum / n, WithinAbs(math::digamma_int(4), 0.01));
    CHECK_THAT(math::digamma_int(4), WithinAbs(1.256118, 1e-6));
}

TEST_CASE("Gamma sampling: additivity", "[special_math][sampling]") {
    std::mt19937_64 rng(103);
    const int n = 100000;
    std::vector<double> direct(n);
    std::vector<double> summed(n);
    for (int k = 0; k < n; ++k) direct[k] = math::sample_gamma_unit(3, rng);
    for (int k = 0; k < n; ++k) {
        summed[k] = math::sample_gamma_unit(1, rng) + math::sample_gamma_unit(1, rng) + math::sample_gamma_unit(1, rng);
    }
    const double D = oracle::ks_statistic(direct, summed);
    // Two-sample KS critical value at p = 0.01.
    CHECK(D < 1.628 * std::sqrt(2.0 / n));
}

TEST_CASE("Gamma sampling moments", "[special_math][sampling][property]") {
    std::mt19937_64 rng(104);
    const int n = 1000000;
    for (int shape : {1, 3, 4, 8}) {
        double mean = 0.0;
        double m2 = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double x = math::sample_gamma_unit(shape, rng);
            const double d = x - mean;
            mean += d / k;
            m2 += d * (x - mean);
        }
        const double var = m2 / (n - 1);
        const double se_mean = std::sqrt(shape / static_cast<double>(n));
        // Var of the sample variance: (mu4 - sigma^4)/n with mu4 = 3k^2 + 6k.
        const double se_var = std::sqrt((2.0 * shape * shape + 6.0 * shape) / n);
        INFO("shape = " << shape);
        CHECK(std::abs(mean - shape) < 5.0 * se_mean);
        CHECK(std::abs(var - shape) < 5.0 * se_var);
    }
    CHECK_THROWS_AS(math::sample_gamma_unit(0, rng), DomainError);
}
