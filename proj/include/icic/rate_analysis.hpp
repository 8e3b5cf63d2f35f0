#pragma once

// Closed-form ergodic throughput of the two-cell ICIC downlink.
//
// Every rate below is E[log2(1 + alpha Z / (1 + Y))] with Z ~ Gamma(M, 1)
// (signal) and Y a weighted sum of unit exponentials (interference). The
// kernels rate_r1/r2/r3 cover zero, one and two interference terms; the
// throughput_* functions map a scenario and strategy pair onto kernel
// arguments for each CSI model.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "icic/errors.hpp"
#include "icic/special_math.hpp"
#include "icic/system_model.hpp"

namespace icic::rates {

using model::CsiMode;
using model::LinkQuality;
using model::Scenario;

enum class Strategy { BF, IC };

struct StrategyPair {
    Strategy s1 = Strategy::BF;
    Strategy s2 = Strategy::BF;

    Strategy of(int user) const { return user == 0 ? s1 : s2; }
    friend bool operator==(const StrategyPair&, const StrategyPair&) = default;
};

/// All four pairs in tie-break preference order.
inline constexpr std::array<StrategyPair, 4> kAllPairs{
    StrategyPair{Strategy::BF, Strategy::BF}, StrategyPair{Strategy::BF, Strategy::IC},
    StrategyPair{Strategy::IC, Strategy::BF}, StrategyPair{Strategy::IC, Strategy::IC}};

inline std::string to_string(Strategy s) { return s == Strategy::BF ? "BF" : "IC"; }
inline std::string to_string(StrategyPair p) { return to_string(p.s1) + "-" + to_string(p.s2); }

inline StrategyPair strategy_pair_from_string(const std::string& s) {
    for (const auto& p : kAllPairs) {
        if (to_string(p) == s) return p;
    }
    throw ConfigError("unknown strategy pair '" + s + "'");
}

enum class Provenance { closed_form, high_snr_approx, monte_carlo };

inline std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::closed_form: return "closed_form";
        case Provenance::high_snr_approx: return "high_snr_approx";
        case Provenance::monte_carlo: return "monte_carlo";
    }
    return "?";
}

struct RateEstimate {
    double value = 0.0;      // bps/Hz
    double std_error = 0.0;  // 0 for analytic values
    Provenance provenance = Provenance::closed_form;
};

/// Quadrature policy used inside the rate kernels. All summands of the
/// kernels are positive, so relative accuracy per I1 call carries over to the
/// sum; the absolute floor is effectively disabled.
inline math::QuadratureSpec kernel_quadrature() {
    math::QuadratureSpec spec;
    spec.abs_tol = 1e-300;
    spec.rel_tol = 1e-12;
    spec.max_subdivisions = 5000;
    return spec;
}

namespace detail {

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

// beta * R2(alpha, beta, M) / log2(e), the quantity whose divided difference
// in beta gives R3.
inline double weighted_r2_sum(double alpha, double beta, int M, const math::QuadratureSpec& spec) {
    const double a = 1.0 / alpha;
    const double b = alpha / beta;
    double sum = 0.0;
    for (int i = 0; i < M; ++i) {
        for (int l = 0; l <= i; ++l) {
            sum += std::pow(alpha, l + 1 - i) / factorial(i - l) * math::integral_i1(a, b, i, l + 1, spec);
        }
    }
    return sum;
}

inline void check_kernel_args(double alpha, int M, const char* who) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError(std::string(who) + ": alpha must be positive");
    if (M < 1) throw DomainError(std::string(who) + ": M must be >= 1");
}

}  // namespace detail

/// E[log2(1 + alpha Z)], Z ~ Gamma(M, 1):
///   log2(e) e^(1/alpha) sum_{k<M} Gamma(-k, 1/alpha) / alpha^k.
inline double rate_r1(double alpha, int M) {
    detail::check_kernel_args(alpha, M, "rate_r1");
    const double x = 1.0 / alpha;
    double sum = 0.0;
    for (int k = 0; k < M; ++k) {
        sum += math::scaled_upper_incomplete_gamma_nonpos(k, x) * std::pow(alpha, -k);
    }
    return std::numbers::log2e * sum;
}

/// E[log2(1 + alpha Z / (1 + Y))], Z ~ Gamma(M, 1), Y ~ beta Exp(1).
inline double rate_r2(double alpha, double beta, int M, const math::QuadratureSpec& spec = kernel_quadrature()) {
    detail::check_kernel_args(alpha, M, "rate_r2");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("rate_r2: beta must be positive");
    return std::numbers::log2e * detail::weighted_r2_sum(alpha, beta, M, spec) / beta;
}

/// E[log2(1 + alpha Z / (1 + beta1 Y1 + beta2 Y2))] with independent unit
/// exponentials Y1, Y2. Near beta1 = beta2 (relative gap below 1e-6) the
/// divided difference is replaced by its limit, the derivative
///   d/dbeta [beta R2(beta)] = log2(e) sum c_il (l+1) alpha/beta^2 I1(1/alpha, alpha/beta, i, l+2),
/// which is the Y ~ beta Gamma(2, 1) case.
inline double rate_r3(double alpha, double beta1, double beta2, int M,
                      const math::QuadratureSpec& spec = kernel_quadrature()) {
    detail::check_kernel_args(alpha, M, "rate_r3");
    if (!(beta1 > 0.0) || !(beta2 > 0.0) || !std::isfinite(beta1) || !std::isfinite(beta2)) {
        throw DomainError("rate_r3: beta1 and beta2 must be positive");
    }
    const double gap = beta1 - beta2;
    if (std::abs(gap) < 1e-6 * std::max(beta1, beta2)) {
        const double beta = 0.5 * (beta1 + beta2);
        const double a = 1.0 / alpha;
        const double b = alpha / beta;
        double sum = 0.0;
        for (int i = 0; i < M; ++i) {
            for (int l = 0; l <= i; ++l) {
                sum += std::pow(alpha, l + 1 - i) / detail::factorial(i - l) * (l + 1) * alpha / (beta * beta) *
                       math::integral_i1(a, b, i, l + 2, spec);
            }
        }
        return std::numbers::log2e * sum;
    }
    const double s1 = detail::weighted_r2_sum(alpha, beta1, M, spec);
    const double s2 = detail::weighted_r2_sum(alpha, beta2, M, spec);
    return std::numbers::log2e * (s1 - s2) / gap;
}

/// Kernel dispatch with degenerate scales: zero signal gives rate 0, zero
/// interference terms drop out.
inline double rate_kernel(double alpha, double beta1, double beta2, int M) {
    if (!(alpha > 0.0)) return 0.0;
    const bool has1 = beta1 > 0.0;
    const bool has2 = beta2 > 0.0;
    if (has1 && has2) return rate_r3(alpha, beta1, beta2, M);
    if (has1) return rate_r2(alpha, beta1, M);
    if (has2) return rate_r2(alpha, beta2, M);
    return rate_r1(alpha, M);
}

namespace detail {

inline int signal_dimension(const Scenario& s, Strategy own) {
    const int N_t = s.frame.N_t;
    if (own == Strategy::IC) {
        if (N_t < 2) throw DomainError("IC precoding needs N_t >= 2");
        return N_t - 1;
    }
    return N_t;
}

inline void check_user(int user) {
    if (user != 0 && user != 1) throw DomainError("user index must be 0 or 1");
}

// Shared by the training and analog-feedback throughputs, which differ only
// in which (accuracy, error) pair they read.
inline RateEstimate single_interferer_rate(const Scenario& s, const LinkQuality::Grid& L, double own_accuracy,
                                           double neighbor_error, StrategyPair pair, int user) {
    const int nb = model::other(user);
    const double P_d = s.power.P_d;
    const double alpha = own_accuracy * P_d * L[user][user];
    const double beta = pair.of(nb) == Strategy::IC ? neighbor_error * P_d * L[user][nb] : P_d * L[user][nb];
    const int M = signal_dimension(s, pair.of(user));
    return {rate_kernel(alpha, beta, 0.0, M), 0.0, Provenance::closed_form};
}

}  // namespace detail

/// Estimated-CSI throughput after MMSE training (perfect CSI when kappa^2 = 1).
inline RateEstimate throughput_training(const Scenario& s, const LinkQuality& q, StrategyPair pair, int user) {
    detail::check_user(user);
    if (s.csi_mode != CsiMode::training && s.csi_mode != CsiMode::perfect) {
        throw DomainError("throughput_training: scenario is not in training mode");
    }
    const int nb = model::other(user);
    return detail::single_interferer_rate(s, q.L, q.kappa2[user][user], q.sigma2[user][nb], pair, user);
}

inline RateEstimate throughput_analog_fb(const Scenario& s, const LinkQuality& q, StrategyPair pair, int user) {
    detail::check_user(user);
    if (s.csi_mode != CsiMode::analog_fb) throw DomainError("throughput_analog_fb: scenario is not in afb mode");
    const int nb = model::other(user);
    return detail::single_interferer_rate(s, q.L, q.kappa2_hat[user][user], q.sigma2_hat[user][nb], pair, user);
}

/// Training plus RVQ feedback. A neighbor playing IC leaves two residual
/// terms: estimation error sigma^2 and quantisation error
/// kappa^2 2^(-B/(N_t-1)).
inline RateEstimate throughput_digital_fb(const Scenario& s, const LinkQuality& q, StrategyPair pair, int user) {
    detail::check_user(user);
    if (s.csi_mode != CsiMode::digital_fb) throw DomainError("throughput_digital_fb: scenario is not in dfb mode");
    const int N_t = s.frame.N_t;
    if (N_t < 2) throw DomainError("throughput_digital_fb: N_t must be >= 2");
    const int nb = model::other(user);
    const double P_d = s.power.P_d;
    const double alpha = q.kappa2[user][user] * q.xi[user][user] * P_d * q.L[user][user];
    const int M = detail::signal_dimension(s, pair.of(user));
    double value = 0.0;
    if (pair.of(nb) == Strategy::IC) {
        const double estimation = q.sigma2[user][nb] * P_d * q.L[user][nb];
        const double quantization =
            q.kappa2[user][nb] * model::quantization_residual(q.bits[user][nb], N_t) * P_d * q.L[user][nb];
        value = rate_kernel(alpha, estimation, quantization, M);
    } else {
        value = rate_kernel(alpha, P_d * q.L[user][nb], 0.0, M);
    }
    return {value, 0.0, Provenance::closed_form};
}

/// Closed-form throughput for whichever CSI model the scenario uses.
inline RateEstimate throughput(const Scenario& s, const LinkQuality& q, StrategyPair pair, int user) {
    switch (s.csi_mode) {
        case CsiMode::perfect:
        case CsiMode::training: return throughput_training(s, q, pair, user);
        case CsiMode::analog_fb: return throughput_analog_fb(s, q, pair, user);
        case CsiMode::digital_fb: return throughput_digital_fb(s, q, pair, user);
    }
    throw DomainError("throughput: unknown CSI mode");
}

/// Both users' closed-form rates for every strategy pair, indexed
/// [pair index in kAllPairs][user].
using PairRates = std::array<std::array<double, 2>, 4>;

inline PairRates all_pair_rates(const Scenario& s, const LinkQuality& q) {
    PairRates r{};
    for (std::size_t p = 0; p < kAllPairs.size(); ++p) {
        for (int u = 0; u < 2; ++u) r[p][u] = throughput(s, q, kAllPairs[p], u).value;
    }
    return r;
}

/// High-SNR ICIC approximation log2(L e^psi(N_t-1) / (sum of inverse SNR
/// terms)), clamped at 0 where the approximation goes negative at low SNR.
inline RateEstimate high_snr_throughput(CsiMode mode, const Scenario& s, const LinkQuality& q, int user) {
    detail::check_user(user);
    const auto& f = s.frame;
    if (f.N_t < 2) throw DomainError("high_snr_throughput: N_t must be >= 2");
    const int nb = model::other(user);
    const double L_own = q.L[user][user];
    const double L_nb = q.L[user][nb];
    const double psi = math::digamma_int(f.N_t - 1);
    const double P_d = s.power.P_d;
    const double training_inv = 1.0 / (f.Tbar_t() * s.power.P_t);

    double numerator = L_own * std::exp(psi);
    double denominator = 1.0 / P_d;
    switch (mode) {
        case CsiMode::perfect: break;
        case CsiMode::training: denominator += training_inv; break;
        case CsiMode::analog_fb:
            denominator += training_inv +
                           1.0 / (static_cast<double>(f.T_fb) / f.N_B * (L_own / L_nb) * s.power.P_fb[user][nb]);
            break;
        case CsiMode::digital_fb:
            numerator *= model::rvq_mean_cos2(s.bits[user][user], f.N_t, true);
            denominator += training_inv + L_nb * model::quantization_residual(s.bits[user][nb], f.N_t);
            break;
    }
    const double value = std::log2(numerator / denominator);
    return {std::isfinite(value) ? std::max(0.0, value) : 0.0, 0.0, Provenance::high_snr_approx};
}

/// High-SNR throughput loss from training with P_d/P_t = nu: R1(nu/Tbar_t, 1).
inline double rate_loss_training(double nu, double Tbar_t) {
    if (!(nu >= 0.0) || !(Tbar_t > 0.0)) throw DomainError("rate_loss_training: need nu >= 0, Tbar_t > 0");
    if (nu == 0.0) return 0.0;
    return rate_r1(nu / Tbar_t, 1);
}

/// Discounts a rate by the share of the block spent on training and feedback.
inline RateEstimate effective_throughput(const RateEstimate& raw, const model::FrameConfig& frame) {
    frame.validate();
    const double factor = frame.data_fraction();
    return {raw.value * factor, raw.std_error * factor, raw.provenance};
}

}  // namespace icic::rates
