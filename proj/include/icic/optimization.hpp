#pragma once

// Resource allocators: pilot/data power split, training length, analog
// feedback power split, digital feedback bit split, and strategy-pair
// selection.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "icic/errors.hpp"
#include "icic/rate_analysis.hpp"
#include "icic/special_math.hpp"
#include "icic/system_model.hpp"

namespace icic::opt {

using model::FrameConfig;
using model::Scenario;
using rates::StrategyPair;

struct TrainingSplit {
    double P_t_star = 0.0;
    double P_d_star = 0.0;
};

/// High-SNR loss term minimised by the pilot/data split.
inline double training_objective(double P_d, double P_t, double Tbar_t) { return 1.0 / P_d + 1.0 / (Tbar_t * P_t); }

/// KKT solution of min 1/P_d + 1/(Tbar_t P_t) s.t. Tbar_t P_t + Tbar_d P_d = (Tbar - Tbar_fb) P_dl.
inline TrainingSplit optimize_training_power(const FrameConfig& frame, double P_dl) {
    frame.validate();
    if (frame.T_t <= 0) throw DomainError("optimize_training_power: needs T_t > 0");
    if (frame.Tbar_d() < 1.0) throw DomainError("optimize_training_power: needs Tbar_d >= 1");
    if (!(P_dl >= 0.0)) throw DomainError("optimize_training_power: P_dl must be non-negative");
    const double budget = (frame.Tbar() - frame.Tbar_fb()) * P_dl;
    const double root = std::sqrt(frame.Tbar_d());
    TrainingSplit s;
    s.P_d_star = budget / (root * (root + 1.0));
    s.P_t_star = budget / (frame.Tbar_t() * (root + 1.0));
    return s;
}

/// Exponent g(sqrt(1 - N_B/Tbar)) of the training-length sufficiency test,
/// g(x) = x/(x + 1/sqrt(Tbar)) + 2 ln(x + 1/sqrt(Tbar)) - psi(N_t - 1).
inline double training_length_log_threshold(const FrameConfig& frame) {
    const double Tbar = frame.Tbar();
    if (!(Tbar > frame.N_B)) throw DomainError("training_length_sufficient: needs Tbar > N_B");
    if (frame.N_t < 2) throw DomainError("training_length_sufficient: needs N_t >= 2");
    const double x = std::sqrt(1.0 - frame.N_B / Tbar);
    const double r = 1.0 / std::sqrt(Tbar);
    return x / (x + r) + 2.0 * std::log(x + r) - math::digamma_int(frame.N_t - 1);
}

/// P_dl L threshold in dB above which the shortest training (Tbar_t = N_B) is optimal.
inline double training_length_threshold_db(const FrameConfig& frame) {
    return 10.0 * training_length_log_threshold(frame) / std::numbers::ln10;
}

inline bool training_length_sufficient(double P_dl_times_L, const FrameConfig& frame) {
    if (!(P_dl_times_L > 0.0)) return false;
    return std::log(P_dl_times_L) > training_length_log_threshold(frame);
}

/// Effective high-SNR rate as a function of the normalised training length
/// t, with the pilot/data split re-optimised for every t:
///   (1 - (t + Tbar_fb)/Tbar) log2[L e^psi(N_t-1) D P_dl / (sqrt(D - t) + 1)^2],
/// D = Tbar - Tbar_fb.
inline double training_length_objective(double t, double L, double P_dl, const FrameConfig& frame) {
    const double D = frame.Tbar() - frame.Tbar_fb();
    const double u = std::sqrt(D - t);
    const double C = L * std::exp(math::digamma_int(frame.N_t - 1)) * D * P_dl;
    return (1.0 - (t + frame.Tbar_fb()) / frame.Tbar()) * (std::log2(C) - 2.0 * std::log2(u + 1.0));
}

namespace detail {

inline double training_length_derivative(double t, double L, double P_dl, const FrameConfig& frame) {
    const double Tbar = frame.Tbar();
    const double D = Tbar - frame.Tbar_fb();
    const double u = std::sqrt(D - t);
    const double C = L * std::exp(math::digamma_int(frame.N_t - 1)) * D * P_dl;
    const double level = std::log2(C) - 2.0 * std::log2(u + 1.0);
    const double share = 1.0 - (t + frame.Tbar_fb()) / Tbar;
    return -level / Tbar + share / ((u + 1.0) * u * std::numbers::ln2);
}

}  // namespace detail

/// Optimal normalised training length for `user` on [N_B, Tbar - Tbar_fb - 1/N_t].
/// Returns N_B straight away when the sufficiency test passes; otherwise
/// bisects the derivative of the concave objective to within search_tol.
inline double optimize_training_length(const Scenario& s, int user, double search_tol) {
    s.validate();
    if (user != 0 && user != 1) throw DomainError("optimize_training_length: user must be 0 or 1");
    if (!(search_tol > 0.0)) throw DomainError("optimize_training_length: search_tol must be positive");
    const auto& f = s.frame;
    const double L = model::pathloss(s.geometry.distance_km(user, user), s.geometry);
    const double P_dl = s.power.P_dl;
    const double lo_end = static_cast<double>(f.N_B);
    if (training_length_sufficient(P_dl * L, f)) return lo_end;
    const double hi_end = f.Tbar() - f.Tbar_fb() - 1.0 / f.N_t;
    if (!(hi_end > lo_end)) return lo_end;

    auto deriv = [&](double t) { return detail::training_length_derivative(t, L, P_dl, f); };
    if (deriv(lo_end) <= 0.0) return lo_end;
    if (deriv(hi_end) >= 0.0) return hi_end;
    double lo = lo_end;
    double hi = hi_end;
    for (int it = 0; it < 200 && hi - lo > search_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        (deriv(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct AfbAllocation {
    double x_star = 0.0;
    double P_fb_own = 0.0;
    double P_fb_other = 0.0;
    double a = 0.0;
    double b = 0.0;
    double rho = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

/// Feedback power objective in x = (T_fb/N_B) P_fb,own L_own:
///   (x/(1+x)) / (1 + b (1+a+rho-x) / ((1+a)(1+rho-x))).
inline double afb_objective(double a, double b, double rho, double x) {
    const double signal = x / (1.0 + x);
    const double leak = b * (1.0 + a + rho - x) / ((1.0 + a) * (1.0 + rho - x));
    return signal / (1.0 + leak);
}

/// Maximises afb_objective over [0, rho] through the stationarity quadratic,
/// checking every admissible root against the edge x = rho. `fb_budget` is
/// the per-user feedback power N_B P_ul shared by the two channels.
inline AfbAllocation optimize_afb_power(double a, double b, double rho, double fb_budget) {
    if (!(a > 0.0) || !(b >= 0.0) || !(rho > 0.0)) throw DomainError("optimize_afb_power: need a, rho > 0, b >= 0");
    if (!(fb_budget >= 0.0)) throw DomainError("optimize_afb_power: negative feedback budget");
    AfbAllocation out;
    out.a = a;
    out.b = b;
    out.rho = rho;
    out.lambda1 = 1.0 + rho;
    out.lambda2 = a * b / (1.0 + a + b);
    const double l1 = out.lambda1;
    const double l2 = out.lambda2;
    const double s = l1 + l2;
    const double A = (1.0 + l1) - s * l2;
    const double B = -2.0 * s * (1.0 + s);
    const double C = l1 * s * (1.0 + s);

    std::vector<double> candidates{rho};
    auto admit = [&](double x) {
        if (std::isfinite(x) && x >= 0.0 && x <= rho) candidates.push_back(x);
    };
    if (std::abs(A) <= 1e-14 * std::max({std::abs(B), std::abs(C), 1.0})) {
        admit(-C / B);
    } else {
        const double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) {
            // Cancellation-free pair of roots.
            const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
            admit(q / A);
            if (q != 0.0) admit(C / q);
        }
    }
    double best = candidates.front();
    double best_val = afb_objective(a, b, rho, best);
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        const double v = afb_objective(a, b, rho, candidates[k]);
        if (v > best_val) {
            best_val = v;
            best = candidates[k];
        }
    }
    out.x_star = best;
    out.P_fb_own = fb_budget * best / rho;
    out.P_fb_other = fb_budget - out.P_fb_own;
    return out;
}

struct DfbAllocation {
    int B_own = 0;
    int B_other = 0;
    double x_star_continuous = 0.0;
    double a0 = 0.0;
    double X0 = 0.0;
};

/// Continuous bit-allocation objective (1 - x)/(a0 + X0/x), x = 2^(-B_own/(N_t-1)).
inline double dfb_objective(double x, double X0, double a0) { return (1.0 - x) / (a0 + X0 / x); }

/// Objective of an integer split with B_own bits on the serving channel.
inline double dfb_split_objective(int B_own, int B_total, int N_t, double a0) {
    const double dim = N_t - 1.0;
    return dfb_objective(std::exp2(-B_own / dim), std::exp2(-B_total / dim), a0);
}

/// a0 = (1 + P_d L sigma^2) / (P_d L kappa^2) for the interfering link.
inline double dfb_a0(double P_d, double L_cross, double sigma2_cross, double kappa2_cross) {
    const double snr = P_d * L_cross;
    if (!(snr * kappa2_cross > 0.0)) return std::numeric_limits<double>::infinity();
    return (1.0 + snr * sigma2_cross) / (snr * kappa2_cross);
}

/// Closed-form relaxed optimum x* = sqrt(X0/a0 + X0^2/a0^2) - X0/a0, then
/// B_own = floor(-(N_t-1) log2 x*) clamped to [0, B_total].
inline DfbAllocation optimize_dfb_bits(int B_total, int N_t, double a0) {
    if (B_total < 0) throw DomainError("optimize_dfb_bits: B_total must be non-negative");
    if (N_t < 2) throw DomainError("optimize_dfb_bits: N_t must be >= 2");
    if (!(a0 > 0.0)) throw DomainError("optimize_dfb_bits: a0 must be positive");
    DfbAllocation out;
    out.a0 = a0;
    out.X0 = std::exp2(-B_total / (N_t - 1.0));
    const double r = out.X0 / a0;
    out.x_star_continuous = std::sqrt(r + r * r) - r;
    if (out.x_star_continuous > 0.0) {
        const double own = std::floor(-(N_t - 1.0) * std::log2(out.x_star_continuous));
        out.B_own = static_cast<int>(std::clamp(own, 0.0, static_cast<double>(B_total)));
    } else {
        out.B_own = B_total;
    }
    out.B_other = B_total - out.B_own;
    return out;
}

inline int pair_index(StrategyPair p) {
    return 2 * static_cast<int>(p.s1 == rates::Strategy::IC) + static_cast<int>(p.s2 == rates::Strategy::IC);
}

/// Argmax of R1 + R2 over the four pairs. Sums within 1e-9 of the running
/// best do not displace it, so ties resolve BF-BF, BF-IC, IC-BF, IC-IC.
inline StrategyPair select_strategy_pair(const rates::PairRates& r) {
    std::size_t best = 0;
    double best_sum = r[0][0] + r[0][1];
    for (std::size_t p = 0; p < r.size(); ++p) {
        const double sum = r[p][0] + r[p][1];
        if (!std::isfinite(sum)) throw DomainError("select_strategy_pair: non-finite sum rate");
        if (sum > best_sum + 1e-9) {
            best_sum = sum;
            best = p;
        }
    }
    return rates::kAllPairs[best];
}

/// Bits available to `user` under the scenario's bit policy.
inline int bit_budget(const Scenario& s, int user) {
    if (s.bit_policy == model::BitPolicy::uplink_capacity) {
        const double L = model::pathloss(s.geometry.distance_km(user, user), s.geometry);
        return static_cast<int>(std::floor(s.frame.T_fb * std::log2(1.0 + s.power.P_ul * L)));
    }
    return static_cast<int>(std::floor(s.frame.T_fb / s.mu + 1e-9));
}

/// Unoptimised digital split: half of the budget on each channel, the odd bit
/// to the serving channel.
inline void apply_even_bit_split(Scenario& s) {
    for (int i = 0; i < model::kCells; ++i) {
        const int B = bit_budget(s, i);
        const int own = B - B / 2;
        s.bits[i][i] = own;
        s.bits[i][model::other(i)] = B - own;
    }
}

inline void apply_training_optimization(Scenario& s) {
    const auto split = optimize_training_power(s.frame, s.power.P_dl);
    s.power.P_t = split.P_t_star;
    s.power.P_d = split.P_d_star;
}

/// Per-user analog feedback power split at the scenario's current P_t, P_d.
inline void apply_afb_optimization(Scenario& s) {
    const auto& f = s.frame;
    for (int i = 0; i < model::kCells; ++i) {
        const int nb = model::other(i);
        const double L_own = model::pathloss(s.geometry.distance_km(i, i), s.geometry);
        const double L_cross = model::pathloss(s.geometry.distance_km(i, nb), s.geometry);
        const double a = f.Tbar_t() * s.power.P_t * L_cross;
        const double b = s.power.P_d * L_cross;
        const double rho = f.T_fb * s.power.P_ul * L_own;
        if (!(rho > 0.0) || !(a > 0.0)) continue;
        const auto alloc = optimize_afb_power(a, b, rho, f.N_B * s.power.P_ul);
        s.power.P_fb[i][i] = alloc.P_fb_own;
        s.power.P_fb[i][nb] = alloc.P_fb_other;
    }
}

/// Per-user digital bit split at the scenario's current P_t, P_d.
inline void apply_dfb_optimization(Scenario& s) {
    const auto& f = s.frame;
    for (int i = 0; i < model::kCells; ++i) {
        const int nb = model::other(i);
        const double L_cross = model::pathloss(s.geometry.distance_km(i, nb), s.geometry);
        const auto t = model::training_quality(f.Tbar_t(), s.power.P_t, L_cross);
        const double a0 = dfb_a0(s.power.P_d, L_cross, t.error, t.accuracy);
        const int B = bit_budget(s, i);
        if (std::isinf(a0)) {
            s.bits[i][i] = B;
            s.bits[i][nb] = 0;
            continue;
        }
        const auto alloc = optimize_dfb_bits(B, f.N_t, a0);
        s.bits[i][i] = alloc.B_own;
        s.bits[i][nb] = alloc.B_other;
    }
}

/// Builds the operating point of one system variant from a base scenario:
/// uniform powers and an even bit split, then the requested optimizers
/// (training first, feedback second, as the feedback allocators depend on
/// the pilot/data powers).
inline Scenario configure_system(Scenario s, bool train_opt, bool fb_opt) {
    s.power = model::PowerConfig::uniform(s.power.P_dl, s.power.P_ul);
    if (s.csi_mode == model::CsiMode::digital_fb) apply_even_bit_split(s);
    if (train_opt && s.csi_mode != model::CsiMode::perfect && s.frame.T_t > 0) apply_training_optimization(s);
    if (fb_opt) {
        if (s.csi_mode == model::CsiMode::analog_fb) apply_afb_optimization(s);
        if (s.csi_mode == model::CsiMode::digital_fb) apply_dfb_optimization(s);
    }
    return s;
}

}  // namespace icic::opt
