#pragma once

// Geometry, pathloss, frame/power budgets and the CSI-quality coefficients of
// the two-cell downlink: MMSE training, analog feedback and RVQ digital
// feedback.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "icic/errors.hpp"
#include "icic/special_math.hpp"

namespace icic::model {

inline constexpr int kCells = 2;

/// Index of the other cell (0 <-> 1).
constexpr int other(int i) { return 1 - i; }

enum class CsiMode { perfect, training, analog_fb, digital_fb };

enum class BitPolicy {
    fixed,            // mu * B_i = T_fb
    uplink_capacity,  // B_i = floor(T_fb log2(1 + P_ul L_ii)), analytic only
};

inline std::string to_string(CsiMode m) {
    switch (m) {
        case CsiMode::perfect: return "perfect";
        case CsiMode::training: return "training";
        case CsiMode::analog_fb: return "afb";
        case CsiMode::digital_fb: return "dfb";
    }
    return "?";
}

inline CsiMode csi_mode_from_string(const std::string& s) {
    if (s == "perfect") return CsiMode::perfect;
    if (s == "training") return CsiMode::training;
    if (s == "afb" || s == "analog_fb" || s == "training+analog_fb") return CsiMode::analog_fb;
    if (s == "dfb" || s == "digital_fb" || s == "training+digital_fb") return CsiMode::digital_fb;
    throw ConfigError("unknown csi mode '" + s + "' (expected perfect|training|afb|dfb)");
}

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Two BSs at (-R, 0) and (+R, 0); user i is served by BS i. Positions are in
/// units of the cell radius R.
struct Geometry {
    std::array<Point, kCells> users{Point{-0.1, 0.0}, Point{0.1, 0.0}};
    double cell_radius_km = 1.0;
    double pathloss_exponent = 3.0;
    double antenna_constant = 1.0;

    static constexpr std::array<Point, kCells> bs_positions{Point{-1.0, 0.0}, Point{1.0, 0.0}};

    /// Distance from user `user` to BS `bs`, in km.
    double distance_km(int user, int bs) const {
        const double dx = users[user].x - bs_positions[bs].x;
        const double dy = users[user].y - bs_positions[bs].y;
        return std::hypot(dx, dy) * cell_radius_km;
    }

    void validate() const {
        if (!(pathloss_exponent > 0.0)) throw ConfigError("Geometry: pathloss exponent must be > 0");
        if (!(antenna_constant > 0.0)) throw ConfigError("Geometry: antenna constant must be > 0");
        if (!(cell_radius_km > 0.0)) throw ConfigError("Geometry: cell radius must be > 0");
        for (int i = 0; i < kCells; ++i) {
            for (int j = 0; j < kCells; ++j) {
                if (!(distance_km(i, j) > 0.0)) {
                    throw ConfigError("Geometry: user " + std::to_string(i + 1) + " coincides with BS " +
                                      std::to_string(j + 1));
                }
            }
            if (distance_km(i, i) > cell_radius_km * (1.0 + 1e-12)) {
                throw ConfigError("Geometry: user " + std::to_string(i + 1) + " lies outside its cell");
            }
        }
    }
};

/// eta * (D0 / d)^alpha with the reference distance D0 equal to the cell radius.
inline double pathloss(double distance_km, const Geometry& geometry) {
    if (!(distance_km > 0.0)) throw DomainError("pathloss: distance must be positive");
    return geometry.antenna_constant *
           std::pow(geometry.cell_radius_km / distance_km, geometry.pathloss_exponent);
}

/// Block structure. Normalised lengths (suffix `bar`) are in units of N_t
/// channel uses.
struct FrameConfig {
    int T = 500;
    int T_t = 8;
    int T_fb = 16;
    int N_t = 4;
    int N_B = 2;

    double Tbar() const { return static_cast<double>(T) / N_t; }
    double Tbar_t() const { return static_cast<double>(T_t) / N_t; }
    double Tbar_fb() const { return static_cast<double>(T_fb) / N_t; }
    double Tbar_d() const { return Tbar() - Tbar_t() - Tbar_fb(); }

    /// Fraction of the block left for data, 1 - (Tbar_t + Tbar_fb)/Tbar.
    double data_fraction() const { return 1.0 - (Tbar_t() + Tbar_fb()) / Tbar(); }

    /// T_t = 0 is accepted for perfect-CSI benchmarks; otherwise training
    /// must be orthogonal across all N_B * N_t antennas.
    void validate() const {
        if (T < 1 || N_t < 1 || N_B < 1) throw ConfigError("FrameConfig: T, N_t, N_B must be positive");
        if (T_t < 0 || T_fb < 0) throw ConfigError("FrameConfig: T_t and T_fb must be non-negative");
        if (T_t != 0 && T_t < N_B * N_t) {
            throw ConfigError("FrameConfig: orthogonal training needs T_t >= N_B*N_t = " +
                              std::to_string(N_B * N_t));
        }
        if (T_fb != 0 && T_fb < N_B * N_B * N_t) {
            throw ConfigError("FrameConfig: orthogonal feedback needs T_fb >= N_B^2*N_t = " +
                              std::to_string(N_B * N_B * N_t));
        }
        if (T_t + T_fb >= T || !(Tbar_d() > 0.0)) {
            throw ConfigError("FrameConfig: training and feedback leave no data symbols");
        }
    }
};

/// Downlink/uplink power budgets. P_fb[i][j] is user i's feedback power for
/// its channel to BS j.
struct PowerConfig {
    double P_dl = 10.0;
    double P_ul = 10.0;
    double P_t = 10.0;
    double P_d = 10.0;
    std::array<std::array<double, kCells>, kCells> P_fb{{{10.0, 10.0}, {10.0, 10.0}}};

    /// Pilots and data at P_dl, feedback power split evenly (P_ul per channel).
    static PowerConfig uniform(double P_dl, double P_ul) {
        PowerConfig p;
        p.P_dl = P_dl;
        p.P_ul = P_ul;
        p.P_t = P_dl;
        p.P_d = P_dl;
        for (auto& row : p.P_fb) row = {P_ul, P_ul};
        return p;
    }

    void validate(const FrameConfig& frame, bool analog_feedback) const {
        auto nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };
        if (!nonneg(P_dl) || !nonneg(P_ul) || !nonneg(P_t) || !nonneg(P_d)) {
            throw ConfigError("PowerConfig: powers must be finite and non-negative");
        }
        const double spent = frame.Tbar_t() * P_t + frame.Tbar_d() * P_d;
        const double budget = (frame.Tbar() - frame.Tbar_fb()) * P_dl;
        if (std::abs(spent - budget) > 1e-9 * std::max(1.0, std::abs(budget))) {
            throw ConfigError("PowerConfig: downlink budget violated (spent " + std::to_string(spent) +
                              ", budget " + std::to_string(budget) + ")");
        }
        if (analog_feedback) {
            for (int i = 0; i < kCells; ++i) {
                if (!nonneg(P_fb[i][0]) || !nonneg(P_fb[i][1])) {
                    throw ConfigError("PowerConfig: feedback powers must be non-negative");
                }
                const double total = P_fb[i][0] + P_fb[i][1];
                const double cap = frame.N_B * P_ul;
                if (std::abs(total - cap) > 1e-9 * std::max(1.0, cap)) {
                    throw ConfigError("PowerConfig: feedback budget of user " + std::to_string(i + 1) +
                                      " violated");
                }
            }
        }
    }
};

struct Scenario {
    Geometry geometry;
    FrameConfig frame;
    PowerConfig power;
    CsiMode csi_mode = CsiMode::training;
    BitPolicy bit_policy = BitPolicy::fixed;
    double mu = 1.0;  // feedback symbols per bit
    /// bits[i][j]: bits user i spends on its channel to BS j (digital mode).
    std::array<std::array<int, kCells>, kCells> bits{{{8, 8}, {8, 8}}};

    int total_bits(int user) const { return bits[user][0] + bits[user][1]; }

    void validate() const {
        geometry.validate();
        frame.validate();
        power.validate(frame, csi_mode == CsiMode::analog_fb);
        const bool trained = csi_mode != CsiMode::perfect;
        const bool feedback = csi_mode == CsiMode::analog_fb || csi_mode == CsiMode::digital_fb;
        if (trained && frame.T_t == 0) throw ConfigError("Scenario: CSI training needs T_t > 0");
        if (feedback && frame.T_fb == 0) throw ConfigError("Scenario: feedback modes need T_fb > 0");
        if (csi_mode == CsiMode::digital_fb) {
            if (frame.N_t < 2) throw ConfigError("Scenario: digital feedback needs N_t >= 2");
            for (int i = 0; i < kCells; ++i) {
                if (bits[i][0] < 0 || bits[i][1] < 0) throw ConfigError("Scenario: negative bit count");
                if (bit_policy == BitPolicy::fixed &&
                    std::abs(mu * total_bits(i) - frame.T_fb) > 1e-9) {
                    throw ConfigError("Scenario: fixed-bit policy needs mu * B_i = T_fb for user " +
                                      std::to_string(i + 1));
                }
            }
        }
    }
};

struct Quality {
    double accuracy = 0.0;  // kappa^2
    double error = 1.0;     // sigma^2
};

/// MMSE training: sigma^2 = 1/(1 + Tbar_t P_t L), kappa^2 = 1 - sigma^2.
inline Quality training_quality(double Tbar_t, double P_t, double L) {
    if (Tbar_t < 0.0 || P_t < 0.0 || L < 0.0) throw DomainError("training_quality: negative argument");
    const double snr = Tbar_t * P_t * L;
    const double sigma2 = 1.0 / (1.0 + snr);
    return {snr / (1.0 + snr), sigma2};
}

/// Training followed by analog feedback of the scaled pilot observation over
/// an AWGN uplink with (T_fb / N_B) P_fb L_uplink receive SNR.
inline Quality analog_fb_quality(double Tbar_t, double P_t, double L_train, int T_fb, int N_B, double P_fb,
                                 double L_uplink) {
    if (Tbar_t < 0.0 || P_t < 0.0 || L_train < 0.0 || T_fb < 0 || N_B < 1 || P_fb < 0.0 || L_uplink < 0.0) {
        throw DomainError("analog_fb_quality: invalid argument");
    }
    const double q = Tbar_t * P_t * L_train;
    const double c = static_cast<double>(T_fb) / N_B * P_fb * L_uplink;
    const double kappa2 = (q * c) / ((1.0 + q) * (1.0 + c));
    return {kappa2, 1.0 - kappa2};
}

/// Mean squared correlation between a direction and its RVQ quantisation.
/// exact: 1 - 2^B beta(2^B, N_t/(N_t-1)); bound: 1 - 2^(-B/(N_t-1)).
inline double rvq_mean_cos2(int B, int N_t, bool exact) {
    if (N_t < 2) throw DomainError("rvq_mean_cos2: N_t must be >= 2");
    if (B < 0) throw DomainError("rvq_mean_cos2: B must be non-negative");
    const double dim = N_t - 1.0;
    if (!exact) return 1.0 - std::exp2(-B / dim);
    const double codebook = std::exp2(B);
    return 1.0 - std::exp(B * std::numbers::ln2 + math::log_beta(codebook, N_t / dim));
}

/// 2^(-B/(N_t-1)): the residual-interference scale left by B quantisation bits.
inline double quantization_residual(int B, int N_t) { return std::exp2(-B / (N_t - 1.0)); }

/// Per-link CSI accuracy, indexed [user][bs].
struct LinkQuality {
    using Grid = std::array<std::array<double, kCells>, kCells>;
    Grid L{};
    Grid kappa2{};
    Grid sigma2{};
    Grid kappa2_hat{};
    Grid sigma2_hat{};
    Grid xi{};
    std::array<std::array<int, kCells>, kCells> bits{};
};

/// Evaluates every per-link coefficient for the scenario's geometry and powers.
/// Feedback coefficients are filled only for the matching CSI mode.
inline LinkQuality compute_link_quality(const Scenario& s) {
    LinkQuality q;
    const auto& f = s.frame;
    for (int i = 0; i < kCells; ++i) {
        for (int j = 0; j < kCells; ++j) {
            q.L[i][j] = pathloss(s.geometry.distance_km(i, j), s.geometry);
        }
    }
    for (int i = 0; i < kCells; ++i) {
        for (int j = 0; j < kCells; ++j) {
            if (s.csi_mode == CsiMode::perfect) {
                q.kappa2[i][j] = 1.0;
                q.sigma2[i][j] = 0.0;
            } else {
                const auto t = training_quality(f.Tbar_t(), s.power.P_t, q.L[i][j]);
                q.kappa2[i][j] = t.accuracy;
                q.sigma2[i][j] = t.error;
            }
            if (s.csi_mode == CsiMode::analog_fb) {
                const auto a = analog_fb_quality(f.Tbar_t(), s.power.P_t, q.L[i][j], f.T_fb, f.N_B,
                                                 s.power.P_fb[i][j], q.L[i][i]);
                q.kappa2_hat[i][j] = a.accuracy;
                q.sigma2_hat[i][j] = a.error;
            } else {
                q.kappa2_hat[i][j] = q.kappa2[i][j];
                q.sigma2_hat[i][j] = q.sigma2[i][j];
            }
            if (s.csi_mode == CsiMode::digital_fb) {
                q.bits[i][j] = s.bits[i][j];
                q.xi[i][j] = rvq_mean_cos2(s.bits[i][j], f.N_t, true);
            } else {
                q.bits[i][j] = 0;
                q.xi[i][j] = 1.0;
            }
        }
    }
    return q;
}

}  // namespace icic::model
