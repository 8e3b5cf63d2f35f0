// Command-line front end for the experiment runners.
//
//   icic rate-sweep        --config configs/training_sweep.cfg --out training_sweep.csv
//   icic mode-map          --config configs/mode_map.cfg
//   icic optimize-compare  --config configs/optimizer_comparison.cfg
//   icic percentile        --config configs/placement_percentile.cfg
//   icic selftest
//
// Exit codes: 0 success, 1 selftest failure or unexpected error,
// 2 configuration error, 3 numerical non-convergence.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icic/icic.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> samples;
    std::vector<double> edge_snr_db;
    std::optional<int> nt;
    std::optional<int> T;
    std::optional<std::string> csi_mode;
    std::optional<int> bits;
    bool no_train_opt = false;
    bool no_fb_opt = false;
    bool mc = false;
    std::optional<int> workers;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "key = value experiment file");
    cmd->add_option("--out", o.out, "CSV output path (stdout when omitted)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--samples", o.samples, "Monte Carlo blocks per point");
    cmd->add_option("--edge-snr-db", o.edge_snr_db, "edge SNR list in dB")->delimiter(',');
    cmd->add_option("--nt", o.nt, "antennas per BS");
    cmd->add_option("--T", o.T, "block length in symbols");
    cmd->add_option("--csi-mode", o.csi_mode, "perfect|training|afb|dfb");
    cmd->add_option("--bits", o.bits, "digital feedback bits per user");
    cmd->add_flag("--no-train-opt", o.no_train_opt, "disable pilot/data power optimization");
    cmd->add_flag("--no-fb-opt", o.no_fb_opt, "disable feedback allocation");
    cmd->add_flag("--mc", o.mc, "add Monte Carlo rows (rate-sweep)");
    cmd->add_option("--workers", o.workers, "Monte Carlo worker threads");
}

icic::harness::ExperimentConfig resolve(const Overrides& o) {
    using namespace icic::harness;
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (!o.out.empty()) c.out = o.out;
    if (o.seed) c.seed = *o.seed;
    if (o.samples) c.samples = *o.samples;
    if (!o.edge_snr_db.empty()) c.edge_snr_db = o.edge_snr_db;
    if (o.nt) c.N_t = *o.nt;
    if (o.T) c.T = *o.T;
    if (o.csi_mode) c.csi_mode = icic::model::csi_mode_from_string(*o.csi_mode);
    if (o.bits) c.bits = *o.bits;
    if (o.no_train_opt) c.train_opt = false;
    if (o.no_fb_opt) c.fb_opt = false;
    if (o.mc) c.mc = true;
    if (o.workers) c.workers = *o.workers;
    c.validate();
    return c;
}

void emit(const icic::harness::CsvTable& table, const icic::harness::ExperimentConfig& c) {
    if (c.out.empty()) {
        table.write(std::cout);
    } else {
        table.save(c.out);
        std::cerr << "wrote " << table.rows.size() << " rows to " << c.out << '\n';
    }
}

bool check(const char* name, double value, double expected, double tol) {
    const bool ok = std::abs(value - expected) <= tol;
    std::printf("[%s] %-44s %.6f (expected %.6f +- %g)\n", ok ? "PASS" : "FAIL", name, value, expected, tol);
    return ok;
}

int selftest() {
    using namespace icic;
    bool ok = true;
    ok &= check("rate_r1(0.5, 1)", rates::rate_r1(0.5, 1), 0.5213, 1e-3);
    ok &= check("digamma(1)", math::digamma_int(1), -0.577215, 1e-6);
    ok &= check("E1(1)", math::exponential_integral_e1(1.0), 0.2193839, 1e-7);
    ok &= check("I1(1, 1, 0, 1)", math::integral_i1(1.0, 1.0, 0, 1), 0.403653, 1e-6);
    model::FrameConfig f;
    f.T = 100;
    f.T_fb = 0;
    ok &= check("training threshold N_t=4 (dB)", opt::training_length_threshold_db(f), 0.87, 0.05);
    f.N_t = 8;
    f.T_t = 16;
    ok &= check("training threshold N_t=8 (dB)", opt::training_length_threshold_db(f), -3.24, 0.05);
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-cell ICIC throughput, optimization and simulation toolkit"};
    app.require_subcommand(1);
    Overrides o;
    using Runner = std::function<icic::harness::CsvTable(const icic::harness::ExperimentConfig&)>;
    std::vector<std::pair<CLI::App*, Runner>> runners;
    auto add = [&](const char* name, const char* help, Runner run) {
        CLI::App* cmd = app.add_subcommand(name, help);
        add_common_options(cmd, o);
        runners.emplace_back(cmd, std::move(run));
    };
    add("rate-sweep", "closed-form, high-SNR and Monte Carlo rates per strategy pair", icic::harness::run_rate_sweep);
    add("mode-map", "selected strategy pair over a grid of user positions", icic::harness::run_mode_map);
    add("optimize-compare", "sum rates of the six analog/digital optimizer variants",
        icic::harness::run_optimizer_comparison);
    add("percentile", "mean and 5th-percentile throughput over random placements",
        icic::harness::run_percentile_study);
    CLI::App* self = app.add_subcommand("selftest", "check golden constants");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (self->parsed()) return selftest();
        for (auto& [cmd, run] : runners) {
            if (cmd->parsed()) {
                const auto cfg = resolve(o);
                emit(run(cfg), cfg);
                return 0;
            }
        }
    } catch (const icic::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const icic::DomainError& e) {
        std::cerr << "invalid parameters: " << e.what() << '\n';
        return 2;
    } catch (const icic::NonConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
