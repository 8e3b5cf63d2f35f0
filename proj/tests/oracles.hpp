#pragma once

// Reference computations for the unit tests. They share no code with the
// library: integrals use composite Simpson rules on a change of variable, and
// rates are sample means over directly drawn Gamma/exponential variates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

template <class F>
double simpson(const F& f, double lo, double hi, int n) {
    if (n % 2) ++n;
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

// Gamma(-k, x) with t = x e^s: x^-k integral over s >= 0 of e^(-ks - x e^s).
inline double gamma_neg_direct(int k, double x) {
    const double s_max = std::log((x + 60.0 + 10.0 * k) / x);
    auto f = [&](double s) { return std::exp(-k * s - x * std::exp(s)); };
    return std::pow(x, -k) * simpson(f, 0.0, s_max, 400000);
}

// I1(a, b, m, n) with x = e^u over u in [-40, u_max]; the x^m e^(-ax) factor
// is bounded by the exp(-a e^u) cutoff.
inline double i1_direct(double a, double b, int m, int n) {
    auto f = [&](double u) {
        const double x = std::exp(u);
        return std::exp((m + 1) * u - a * x - n * std::log(x + b) - std::log1p(x));
    };
    const double u_max = std::log((50.0 + 2.0 * m * std::log1p(m + 1.0 / a) + m) / a + 1.0) + 1.0;
    return simpson(f, -40.0, u_max, 800000);
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// E[log2(1 + alpha Z / (1 + beta1 Y1 + beta2 Y2))], Z ~ Gamma(M, 1) built as
// a sum of M unit exponentials, Y1, Y2 unit exponentials.
inline McEstimate rate_mc(double alpha, double beta1, double beta2, int M, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> ex(1.0);
    double mean = 0.0;
    double m2 = 0.0;
    for (int k = 1; k <= n; ++k) {
        double z = 0.0;
        for (int j = 0; j < M; ++j) z += ex(rng);
        const double y = beta1 * ex(rng) + beta2 * ex(rng);
        const double r = std::log2(1.0 + alpha * z / (1.0 + y));
        const double d = r - mean;
        mean += d / k;
        m2 += d * (r - mean);
    }
    return {mean, std::sqrt(m2 / (n - 1) / n)};
}

}  // namespace oracle
