#pragma once

// Experiment runners producing CSV tables: rate sweeps (closed form, high-SNR
// approximation, Monte Carlo), strategy mode maps, optimizer comparisons and
// random-placement percentile studies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "icic/harness/config.hpp"
#include "icic/harness/csv.hpp"
#include "icic/montecarlo.hpp"
#include "icic/optimization.hpp"
#include "icic/rate_analysis.hpp"

namespace icic::harness {

using rates::StrategyPair;

/// Closed-form rates of one operating point under a chosen or the
/// adaptively selected strategy pair.
struct SystemRates {
    StrategyPair pair;
    std::array<double, 2> rate{};
    double data_fraction = 1.0;

    double sum() const { return rate[0] + rate[1]; }
};

inline SystemRates evaluate_adaptive(const model::Scenario& s) {
    const auto q = model::compute_link_quality(s);
    const auto all = rates::all_pair_rates(s, q);
    SystemRates out;
    out.pair = opt::select_strategy_pair(all);
    const auto idx = static_cast<std::size_t>(opt::pair_index(out.pair));
    out.rate = all[idx];
    out.data_fraction = s.frame.data_fraction();
    return out;
}

inline SystemRates evaluate_fixed(const model::Scenario& s, StrategyPair pair) {
    const auto q = model::compute_link_quality(s);
    SystemRates out;
    out.pair = pair;
    for (int u = 0; u < 2; ++u) out.rate[u] = rates::throughput(s, q, pair, u).value;
    out.data_fraction = s.frame.data_fraction();
    return out;
}

/// Linear-interpolation percentile (p in [0, 100]) of unsorted values.
inline double percentile(std::vector<double> v, double p) {
    if (v.empty()) throw DomainError("percentile: empty sample");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline std::vector<double> sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

/// Per-point MC seed: a fixed function of the master seed and a row tag.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) { return mc::seeded_rng(master, tag)(); }

namespace detail {

inline CsvRow base_row(const ExperimentConfig& c, model::CsiMode mode, bool train_opt, bool fb_opt, double snr) {
    CsvRow r;
    r.scenario_id = c.scenario_id;
    r.edge_snr_db = snr;
    r.csi_mode = model::to_string(mode);
    r.train_opt = train_opt;
    r.fb_opt = fb_opt;
    r.seed = c.seed;
    return r;
}

inline std::string user_label(int u) { return std::to_string(u + 1); }

}  // namespace detail

/// For every (edge SNR, x1, x2) point and every strategy pair: closed-form
/// rows per user, one high-SNR ICIC approximation row per user, and Monte
/// Carlo rows when `mc` is on (digital mode only up to 22 bits per channel).
inline CsvTable run_rate_sweep(const ExperimentConfig& c) {
    c.validate();
    CsvTable table;
    std::uint64_t point = 0;
    for (double snr : sorted(c.edge_snr_db)) {
        for (double x1 : sorted(c.x1)) {
            for (double x2 : sorted(c.x2)) {
                const auto s = build_system(c, c.csi_mode, c.train_opt, c.fb_opt, x1, x2, snr);
                const auto q = model::compute_link_quality(s);
                const double factor = s.frame.data_fraction();
                auto row = detail::base_row(c, c.csi_mode, c.train_opt, c.fb_opt, snr);
                row.x1_over_R = x1;
                row.x2_over_R = x2;

                bool simulate = c.mc;
                if (s.csi_mode == model::CsiMode::digital_fb) {
                    for (const auto& b : s.bits) simulate = simulate && b[0] <= mc::kMaxSimulatedBits &&
                                                            b[1] <= mc::kMaxSimulatedBits;
                }
                for (std::size_t p = 0; p < rates::kAllPairs.size(); ++p) {
                    const auto pair = rates::kAllPairs[p];
                    row.strategy_pair = rates::to_string(pair);
                    for (int u = 0; u < 2; ++u) {
                        const auto est = rates::throughput(s, q, pair, u);
                        row.user = detail::user_label(u);
                        row.rate_bps_hz = est.value;
                        row.effective_rate = est.value * factor;
                        row.stderr_bps_hz = 0.0;
                        row.provenance = rates::to_string(est.provenance);
                        row.n_samples = 0;
                        table.rows.push_back(row);
                    }
                    if (simulate) {
                        const auto sim =
                            mc::mc_average(s, pair, c.samples, derive_seed(c.seed, point * 4 + p), c.chunk, c.workers);
                        for (int u = 0; u < 2; ++u) {
                            row.user = detail::user_label(u);
                            row.rate_bps_hz = sim.mean(u);
                            row.effective_rate = sim.mean(u) * factor;
                            const auto se = sim.std_error(u);
                            row.stderr_bps_hz = se ? std::optional<double>(*se) : std::nullopt;
                            row.provenance = rates::to_string(rates::Provenance::monte_carlo);
                            row.n_samples = sim.n_blocks;
                            table.rows.push_back(row);
                        }
                    }
                }
                if (s.frame.N_t >= 2) {
                    row.strategy_pair = rates::to_string(StrategyPair{rates::Strategy::IC, rates::Strategy::IC});
                    for (int u = 0; u < 2; ++u) {
                        const auto est = rates::high_snr_throughput(s.csi_mode, s, q, u);
                        row.user = detail::user_label(u);
                        row.rate_bps_hz = est.value;
                        row.effective_rate = est.value * factor;
                        row.stderr_bps_hz = 0.0;
                        row.provenance = rates::to_string(est.provenance);
                        row.n_samples = 0;
                        table.rows.push_back(row);
                    }
                }
                ++point;
            }
        }
    }
    return table;
}

/// Evenly spaced distances from the cell edge, used symmetrically for both users.
inline std::vector<double> map_offsets(const ExperimentConfig& c) {
    std::vector<double> out;
    for (int k = 0; k < c.map_points; ++k) {
        out.push_back(c.map_points == 1 ? c.map_min
                                        : c.map_min + (c.map_max - c.map_min) * k / (c.map_points - 1.0));
    }
    return out;
}

/// Selected strategy pair at every grid point x1 = -a, x2 = +b, (a, b) drawn
/// from map_offsets; rate columns hold the selected pair's sum rate.
inline CsvTable run_mode_map(const ExperimentConfig& c) {
    c.validate();
    CsvTable table;
    const auto offsets = map_offsets(c);
    for (double snr : sorted(c.edge_snr_db)) {
        for (double a : offsets) {
            for (double b : offsets) {
                const auto s = build_system(c, c.csi_mode, c.train_opt, c.fb_opt, -a, b, snr);
                const auto r = evaluate_adaptive(s);
                auto row = detail::base_row(c, c.csi_mode, c.train_opt, c.fb_opt, snr);
                row.user = "sum";
                row.x1_over_R = -a;
                row.x2_over_R = b;
                row.strategy_pair = rates::to_string(r.pair);
                row.rate_bps_hz = r.sum();
                row.effective_rate = r.sum() * r.data_fraction;
                row.stderr_bps_hz = 0.0;
                row.provenance = rates::to_string(rates::Provenance::closed_form);
                table.rows.push_back(row);
            }
        }
    }
    return table;
}

struct SystemVariant {
    model::CsiMode mode;
    bool train_opt;
    bool fb_opt;
};

/// The six analog/digital variants: no optimization, training only, training + feedback.
inline std::vector<SystemVariant> optimizer_variants() {
    std::vector<SystemVariant> v;
    for (auto mode : {model::CsiMode::analog_fb, model::CsiMode::digital_fb}) {
        v.push_back({mode, false, false});
        v.push_back({mode, true, false});
        v.push_back({mode, true, true});
    }
    return v;
}

/// Adaptive-selection sum rate of each of the six variants per point.
inline CsvTable run_optimizer_comparison(const ExperimentConfig& c) {
    c.validate();
    CsvTable table;
    for (double snr : sorted(c.edge_snr_db)) {
        for (double x1 : sorted(c.x1)) {
            for (double x2 : sorted(c.x2)) {
                for (const auto& v : optimizer_variants()) {
                    const auto s = build_system(c, v.mode, v.train_opt, v.fb_opt, x1, x2, snr);
                    const auto r = evaluate_adaptive(s);
                    auto row = detail::base_row(c, v.mode, v.train_opt, v.fb_opt, snr);
                    row.user = "sum";
                    row.x1_over_R = x1;
                    row.x2_over_R = x2;
                    row.strategy_pair = rates::to_string(r.pair);
                    row.rate_bps_hz = r.sum();
                    row.effective_rate = r.sum() * r.data_fraction;
                    row.stderr_bps_hz = 0.0;
                    row.provenance = rates::to_string(rates::Provenance::closed_form);
                    table.rows.push_back(row);
                }
            }
        }
    }
    return table;
}

/// Placement on the BS-BS line: user 1 uniform on [-(1-guard), 0), user 2
/// uniform on (0, 1-guard].
struct Placement {
    double x1;
    double x2;
};

inline std::vector<Placement> draw_placements(const ExperimentConfig& c) {
    auto rng = mc::seeded_rng(c.seed, 0x706c6163656dULL);
    std::uniform_real_distribution<double> u(-(1.0 - c.placement_guard), 0.0);
    std::vector<Placement> out;
    for (int k = 0; k < c.placements; ++k) {
        const double a = u(rng);
        const double b = u(rng);
        out.push_back({a, -b});
    }
    return out;
}

struct PercentileSystem {
    std::string label;  // strategy_pair column: "adaptive" or a fixed pair
    model::CsiMode mode;
    bool train_opt;
    bool fb_opt;
    std::optional<StrategyPair> fixed_pair;
};

inline std::vector<PercentileSystem> percentile_systems(const ExperimentConfig& c) {
    const StrategyPair bf{rates::Strategy::BF, rates::Strategy::BF};
    std::vector<PercentileSystem> v{{"adaptive", model::CsiMode::perfect, false, false, std::nullopt},
                                    {"BF-BF", model::CsiMode::perfect, false, false, bf}};
    for (auto mode : {model::CsiMode::analog_fb, model::CsiMode::digital_fb}) {
        v.push_back({"adaptive", mode, false, false, std::nullopt});
        if (c.train_opt || c.fb_opt) v.push_back({"adaptive", mode, c.train_opt, c.fb_opt, std::nullopt});
    }
    return v;
}

struct PercentileStats {
    double mean_sum = 0.0;       // raw
    double p5_user = 0.0;        // raw
    double data_fraction = 1.0;  // effective = raw * data_fraction
};

inline PercentileStats placement_statistics(const ExperimentConfig& c, const PercentileSystem& sys, double snr,
                                            const std::vector<Placement>& placements) {
    std::vector<double> sums;
    std::vector<double> users;
    PercentileStats st;
    for (const auto& p : placements) {
        const auto s = build_system(c, sys.mode, sys.train_opt, sys.fb_opt, p.x1, p.x2, snr);
        const auto r = sys.fixed_pair ? evaluate_fixed(s, *sys.fixed_pair) : evaluate_adaptive(s);
        sums.push_back(r.sum());
        users.push_back(r.rate[0]);
        users.push_back(r.rate[1]);
        st.data_fraction = r.data_fraction;
    }
    double total = 0.0;
    for (double x : sums) total += x;
    st.mean_sum = total / static_cast<double>(sums.size());
    st.p5_user = percentile(users, 5.0);
    return st;
}

/// Mean sum throughput ("mean" rows) and 5th-percentile per-user throughput
/// ("p5" rows) over random placements, for perfect-CSI adaptive ICIC,
/// perfect-CSI single-cell BF and the analog/digital feedback systems.
inline CsvTable run_percentile_study(const ExperimentConfig& c) {
    c.validate();
    CsvTable table;
    const auto placements = draw_placements(c);
    for (double snr : sorted(c.edge_snr_db)) {
        for (const auto& sys : percentile_systems(c)) {
            const auto st = placement_statistics(c, sys, snr, placements);
            auto row = detail::base_row(c, sys.mode, sys.train_opt, sys.fb_opt, snr);
            row.strategy_pair = sys.label;
            row.stderr_bps_hz = 0.0;
            row.provenance = rates::to_string(rates::Provenance::closed_form);
            row.n_samples = static_cast<long long>(placements.size());
            row.user = "mean";
            row.rate_bps_hz = st.mean_sum;
            row.effective_rate = st.mean_sum * st.data_fraction;
            table.rows.push_back(row);
            row.user = "p5";
            row.rate_bps_hz = st.p5_user;
            row.effective_rate = st.p5_user * st.data_fraction;
            table.rows.push_back(row);
        }
    }
    return table;
}

}  // namespace icic::harness
