#pragma once

// Special functions and sampling primitives behind the ergodic-rate kernels:
// E1, Gamma(-k, x), integer digamma, the Beta function, the I1 integral and
// unit-scale Gamma sampling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "icic/detail/quadrature.hpp"
#include "icic/errors.hpp"

namespace icic::math {

inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;

/// Evaluation policy for adaptive quadrature. Convergence is declared when the
/// error estimate is below max(abs_tol, rel_tol * |result|).
struct QuadratureSpec {
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    int max_subdivisions = 2000;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
            throw DomainError("QuadratureSpec: tolerances must be strictly positive");
        }
        if (max_subdivisions < 1) {
            throw DomainError("QuadratureSpec: max_subdivisions must be >= 1");
        }
    }
};

namespace detail {

// E1(x) for x < 1 via the convergent power series.
inline double e1_series(double x) {
    double sum = 0.0;
    double term = 1.0;  // (-x)^k / k!
    for (int k = 1; k < 200; ++k) {
        term *= -x / k;
        const double contrib = term / k;
        sum += contrib;
        if (std::abs(contrib) < 1e-17 * std::abs(sum)) break;
    }
    return -euler_gamma - std::log(x) - sum;
}

// Legendre continued fraction for Gamma(a, x), modified Lentz evaluation.
// Returns Gamma(a, x) * e^x * x^(-a), valid for every real a when x > 0.
inline double upper_gamma_cf_scaled(double a, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw NonConvergenceError("incomplete gamma continued fraction did not converge (a=" +
                              std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

}  // namespace detail

/// e^x E1(x). Finite for every x > 0, unlike E1 itself which underflows.
inline double scaled_exponential_integral_e1(double x) {
    if (!(x > 0.0)) throw DomainError("E1: argument must be positive");
    if (x < 1.0) return std::exp(x) * detail::e1_series(x);
    return detail::upper_gamma_cf_scaled(0.0, x);
}

/// E1(x) = integral from x to infinity of e^(-t)/t dt.
/// Series below x = 1, continued fraction above; 0 once e^(-x) underflows.
inline double exponential_integral_e1(double x) {
    if (!(x > 0.0)) throw DomainError("E1: argument must be positive");
    if (x < 1.0) return detail::e1_series(x);
    if (x > 745.0) return 0.0;
    return std::exp(-x) * detail::upper_gamma_cf_scaled(0.0, x);
}

/// e^x Gamma(-k, x).
///
/// Below x = 1 this runs the downward recurrence
///   Gamma(a-1, x) = (Gamma(a, x) - x^(a-1) e^(-x)) / (a-1)
/// seeded at Gamma(0, x) = E1(x); there each step subtracts a term that is
/// small relative to x^(a-1) e^(-x), so no accuracy is lost. For x >= 1 the
/// recurrence cancels (each step amplifies relative error by roughly x/k), so
/// the continued fraction is evaluated directly at a = -k.
inline double scaled_upper_incomplete_gamma_nonpos(int k, double x) {
    if (k < 0) throw DomainError("Gamma(-k, x): k must be non-negative");
    if (!(x > 0.0)) throw DomainError("Gamma(-k, x): x must be positive");
    if (x >= 1.0) return std::pow(x, -k) * detail::upper_gamma_cf_scaled(-k, x);
    double g = std::exp(x) * detail::e1_series(x);
    for (int j = 0; j < k; ++j) {
        g = (std::pow(x, -(j + 1)) - g) / (j + 1);
    }
    return g;
}

/// Gamma(-k, x) = integral from x to infinity of t^(-k-1) e^(-t) dt.
inline double upper_incomplete_gamma_nonpos(int k, double x) {
    const double scaled = scaled_upper_incomplete_gamma_nonpos(k, x);
    return scaled * std::exp(-x);
}

/// psi(n) for positive integers via psi(1) + H_(n-1).
inline double digamma_int(int n) {
    if (n < 1) throw DomainError("digamma_int: n must be >= 1");
    double h = 0.0;
    for (int l = n - 1; l >= 1; --l) h += 1.0 / l;
    return -euler_gamma + h;
}

namespace detail {

// lgamma(z) - lgamma(z + y) for z >= 1e4 from the Stirling series, written
// without the large cancelling terms; truncation error is O(y / z^3).
inline double lgamma_ratio_large(double z, double y) {
    const double w = z + y;
    return -(w - 0.5) * std::log1p(y / z) - y * std::log(z) + y + (1.0 / z - 1.0 / w) / 12.0 -
           (1.0 / (z * z * z) - 1.0 / (w * w * w)) / 360.0;
}

}  // namespace detail

/// log of the Beta function. When one argument is large, lgamma differences
/// would cancel catastrophically (x = 2^B with B near 100), so that case uses
/// the Stirling difference directly. Symmetric by construction.
inline double log_beta(double x, double y) {
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("beta: arguments must be positive");
    const double big = std::max(x, y);
    const double small = std::min(x, y);
    if (big >= 1e3) return std::lgamma(small) + detail::lgamma_ratio_large(big, small);
    return std::lgamma(small) + std::lgamma(big) - std::lgamma(small + big);
}

/// Gamma(x)Gamma(y)/Gamma(x+y), through log-gamma so x = 2^B stays finite.
inline double beta_function(double x, double y) { return std::exp(log_beta(x, y)); }

/// I1(a, b, m, n) = integral over [0, inf) of x^m e^(-ax) / ((x+b)^n (x+1)) dx.
///
/// Adaptive Gauss-Kronrod over geometric panels [0, h), [h, 2h), ... with
/// h = min(b, 1)/4, extended until the analytic tail bound beyond the last
/// breakpoint X (valid for X >= 2m/a)
///   tail <= X^m e^(-aX) / ((X+b)^n (X+1)) * 2/a
/// drops below a tenth of the requested tolerance.
inline double integral_i1(double a, double b, int m, int n, const QuadratureSpec& spec = {}) {
    spec.validate();
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("I1: a and b must be positive");
    if (m < 0 || n < 0) throw DomainError("I1: m and n must be non-negative");

    // Coincident poles: integrand becomes x^m e^(-ax) / (x+1)^(n+1).
    const double pole = std::abs(b - 1.0) < 1e-9 ? 1.0 : b;

    auto log_integrand = [=](double x) {
        double v = -a * x - n * std::log(x + pole) - std::log1p(x);
        if (m > 0) v += m * std::log(x);
        return v;
    };
    auto integrand = [&](double x) { return std::exp(log_integrand(x)); };

    const double h0 = 0.25 * std::min(pole, 1.0);
    const double tail_start = 2.0 * m / a;
    std::vector<double> breakpoints{0.0, h0};
    double lower_bound = detail::gauss_kronrod21(integrand, 0.0, h0).value;
    for (;;) {
        const double x_end = breakpoints.back();
        if (x_end >= tail_start) {
            const double log_tail = log_integrand(x_end) + std::log(2.0 / a);
            const double target = 0.1 * std::max(spec.abs_tol, spec.rel_tol * lower_bound);
            if (log_tail < std::log(target)) break;
        }
        if (breakpoints.size() > 4000) {
            throw NonConvergenceError("I1: could not bound the integrand tail");
        }
        const double next = 2.0 * x_end;
        lower_bound += detail::gauss_kronrod21(integrand, x_end, next).value;
        breakpoints.push_back(next);
    }
    return detail::adaptive_integrate(integrand, breakpoints, spec.abs_tol, spec.rel_tol,
                                      spec.max_subdivisions);
}

/// One draw from Gamma(shape, 1): mean and variance both equal `shape`.
/// This is the complex-Gaussian chi-square convention: chi^2 with 2M degrees
/// of freedom is realised as Gamma(M, 1).
template <class Urbg>
double sample_gamma_unit(int shape, Urbg& rng) {
    if (shape < 1) throw DomainError("sample_gamma_unit: shape must be >= 1");
    std::gamma_distribution<double> dist(static_cast<double>(shape), 1.0);
    return dist(rng);
}

}  // namespace icic::math
