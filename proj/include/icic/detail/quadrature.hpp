#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "icic/errors.hpp"

namespace icic::math::detail {

struct GkEstimate {
    double value = 0.0;
    double error = 0.0;
    double abs_value = 0.0;  // integral of |f|, feeds the roundoff floor
};

// 21-point Gauss-Kronrod rule on [lo, hi] with the QUADPACK error heuristic.
template <class F>
GkEstimate gauss_kronrod21(const F& f, double lo, double hi) {
    static constexpr double xgk[11] = {
        0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
        0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
        0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
        0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
        0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
        0.000000000000000000000000000000000};
    static constexpr double wgk[11] = {
        0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
        0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
        0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
        0.123491976262065851077208292095532, 0.134709217311473325928054001771707,
        0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
        0.149445554002916905664936468389821};
    static constexpr double wg[5] = {
        0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
        0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
        0.295524224714752870173892994651338};

    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(center);
    double res_gauss = 0.0;
    double res_kronrod = wgk[10] * fc;
    double res_abs = std::abs(res_kronrod);
    double fv1[10];
    double fv2[10];

    for (int j = 0; j < 5; ++j) {
        const int k = 2 * j + 1;
        const double dx = half * xgk[k];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        fv1[k] = f1;
        fv2[k] = f2;
        res_gauss += wg[j] * (f1 + f2);
        res_kronrod += wgk[k] * (f1 + f2);
        res_abs += wgk[k] * (std::abs(f1) + std::abs(f2));
    }
    for (int j = 0; j < 5; ++j) {
        const int k = 2 * j;
        const double dx = half * xgk[k];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        fv1[k] = f1;
        fv2[k] = f2;
        res_kronrod += wgk[k] * (f1 + f2);
        res_abs += wgk[k] * (std::abs(f1) + std::abs(f2));
    }

    const double mean = 0.5 * res_kronrod;
    double res_asc = wgk[10] * std::abs(fc - mean);
    for (int j = 0; j < 10; ++j) {
        res_asc += wgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
    }

    const double scale = std::abs(half);
    GkEstimate out;
    out.value = res_kronrod * half;
    out.abs_value = res_abs * scale;
    res_asc *= scale;
    double err = std::abs((res_kronrod - res_gauss) * half);
    if (res_asc != 0.0 && err != 0.0) {
        err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (out.abs_value > std::numeric_limits<double>::min() / (50.0 * eps)) {
        err = std::max(50.0 * eps * out.abs_value, err);
    }
    out.error = err;
    return out;
}

struct Panel {
    double lo;
    double hi;
    GkEstimate estimate;
};

struct PanelWorse {
    bool operator()(const Panel& a, const Panel& b) const {
        return a.estimate.error < b.estimate.error;
    }
};

// Globally adaptive integration over consecutive panels delimited by
// `breakpoints` (sorted, at least two entries). Bisects the panel with the
// largest error estimate until the summed error is below
// max(abs_tol, rel_tol * |result|).
template <class F>
double adaptive_integrate(const F& f, const std::vector<double>& breakpoints, double abs_tol,
                          double rel_tol, int max_subdivisions) {
    std::priority_queue<Panel, std::vector<Panel>, PanelWorse> queue;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        Panel p{breakpoints[i], breakpoints[i + 1], gauss_kronrod21(f, breakpoints[i], breakpoints[i + 1])};
        total += p.estimate.value;
        total_err += p.estimate.error;
        queue.push(p);
    }

    int subdivisions = 0;
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (subdivisions >= max_subdivisions) {
            throw NonConvergenceError("adaptive quadrature: subdivision budget of " +
                                      std::to_string(max_subdivisions) +
                                      " exhausted (error estimate " + std::to_string(total_err) + ")");
        }
        Panel worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi)) {
            throw NonConvergenceError("adaptive quadrature: interval cannot be bisected further");
        }
        Panel left{worst.lo, mid, gauss_kronrod21(f, worst.lo, mid)};
        Panel right{mid, worst.hi, gauss_kronrod21(f, mid, worst.hi)};
        total += left.estimate.value + right.estimate.value - worst.estimate.value;
        total_err += left.estimate.error + right.estimate.error - worst.estimate.error;
        queue.push(left);
        queue.push(right);
        ++subdivisions;
    }

    // Re-sum in a fixed order so the result does not carry incremental drift.
    std::vector<Panel> panels;
    panels.reserve(queue.size());
    while (!queue.empty()) {
        panels.push_back(queue.top());
        queue.pop();
    }
    std::sort(panels.begin(), panels.end(), [](const Panel& a, const Panel& b) { return a.lo < b.lo; });
    double sum = 0.0;
    for (const auto& p : panels) sum += p.estimate.value;
    return sum;
}

}  // namespace icic::math::detail
