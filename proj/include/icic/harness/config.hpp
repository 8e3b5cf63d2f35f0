#pragma once

// Flat `key = value` experiment configuration. Lines starting with '#' are
// comments; list-valued keys take comma-separated values. Every key is
// listed in README.md.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "icic/errors.hpp"
#include "icic/optimization.hpp"
#include "icic/system_model.hpp"

namespace icic::harness {

using model::BitPolicy;
using model::CsiMode;

struct ExperimentConfig {
    std::string scenario_id = "default";
    std::vector<double> x1{-0.1};  // user 1 x-positions, units of R
    std::vector<double> x2{0.1};   // user 2 x-positions, units of R
    double y1 = 0.0;
    double y2 = 0.0;
    std::vector<double> edge_snr_db{10.0};

    double cell_radius_km = 1.0;
    double pathloss_exponent = 3.0;
    double antenna_constant = 1.0;

    int T = 500;
    int N_t = 4;
    int N_B = 2;
    int T_t = 8;
    int T_fb = 16;
    CsiMode csi_mode = CsiMode::training;
    BitPolicy bit_policy = BitPolicy::fixed;
    double mu = 1.0;
    std::optional<int> bits;  // fixed policy: also sets T_fb = mu * bits

    bool train_opt = false;
    bool fb_opt = false;

    bool mc = false;
    std::int64_t samples = 100000;
    std::uint64_t seed = 1;
    std::int64_t chunk = 1000;
    int workers = 1;

    int map_points = 20;
    double map_min = 0.025;
    double map_max = 0.95;

    int placements = 500;
    double placement_guard = 0.05;

    std::string out;

    bool operator==(const ExperimentConfig&) const = default;

    /// Feedback interval after applying the `bits` override.
    int effective_T_fb() const {
        if (bits && bit_policy == BitPolicy::fixed) return static_cast<int>(std::lround(mu * *bits));
        return T_fb;
    }
    void validate() const;
};

inline std::string to_string(BitPolicy p) { return p == BitPolicy::fixed ? "fixed" : "uplink_capacity"; }

inline BitPolicy bit_policy_from_string(const std::string& s) {
    if (s == "fixed") return BitPolicy::fixed;
    if (s == "uplink_capacity" || s == "uplink-capacity" || s == "varying") return BitPolicy::uplink_capacity;
    throw ConfigError("unknown bit policy '" + s + "' (expected fixed|uplink_capacity)");
}

/// Operating point before any optimizer runs: uniform powers with
/// P_dl = P_ul = edge SNR / eta. Perfect-CSI scenarios carry no training or
/// feedback phase; training-only scenarios carry no feedback phase.
inline model::Scenario build_scenario(const ExperimentConfig& c, CsiMode mode, double x1, double x2,
                                      double edge_snr_db) {
    model::Scenario s;
    s.geometry.users = {model::Point{x1, c.y1}, model::Point{x2, c.y2}};
    s.geometry.cell_radius_km = c.cell_radius_km;
    s.geometry.pathloss_exponent = c.pathloss_exponent;
    s.geometry.antenna_constant = c.antenna_constant;
    s.frame.T = c.T;
    s.frame.N_t = c.N_t;
    s.frame.N_B = c.N_B;
    s.frame.T_t = mode == CsiMode::perfect ? 0 : c.T_t;
    const bool feedback = mode == CsiMode::analog_fb || mode == CsiMode::digital_fb;
    s.frame.T_fb = feedback ? c.effective_T_fb() : 0;
    s.csi_mode = mode;
    s.bit_policy = c.bit_policy;
    s.mu = c.mu;
    const double P = std::pow(10.0, edge_snr_db / 10.0) / c.antenna_constant;
    s.power = model::PowerConfig::uniform(P, P);
    if (mode == CsiMode::digital_fb) opt::apply_even_bit_split(s);
    return s;
}

/// Scenario with the requested optimizers applied, validated.
inline model::Scenario build_system(const ExperimentConfig& c, CsiMode mode, bool train_opt, bool fb_opt, double x1,
                                    double x2, double edge_snr_db) {
    model::Scenario s = opt::configure_system(build_scenario(c, mode, x1, x2, edge_snr_db), train_opt, fb_opt);
    s.validate();
    return s;
}

inline void ExperimentConfig::validate() const {
    if (x1.empty() || x2.empty()) throw ConfigError("config: position lists must be non-empty");
    if (edge_snr_db.empty()) throw ConfigError("config: edge_snr_db list must be non-empty");
    for (double v : edge_snr_db) {
        if (!std::isfinite(v)) throw ConfigError("config: edge_snr_db must be finite");
    }
    if (samples < 1) throw ConfigError("config: samples must be >= 1");
    if (chunk < 1) throw ConfigError("config: chunk must be >= 1");
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    if (map_points < 1) throw ConfigError("config: map_points must be >= 1");
    if (!(map_min > 0.0 && map_min <= map_max && map_max < 1.0)) {
        throw ConfigError("config: need 0 < map_min <= map_max < 1");
    }
    if (placements < 1) throw ConfigError("config: placements must be >= 1");
    if (!(placement_guard >= 0.0 && placement_guard < 1.0)) throw ConfigError("config: placement_guard in [0, 1)");
    if (!(mu > 0.0)) throw ConfigError("config: mu must be > 0");
    if (bits && *bits < 0) throw ConfigError("config: bits must be non-negative");
    for (double a : x1) {
        for (double b : x2) build_scenario(*this, csi_mode, a, b, edge_snr_db.front()).validate();
    }
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + format_double(v[k]);
    return out;
}

class FieldParser {
public:
    FieldParser(int line, std::string key, std::string value)
        : line_(line), key_(std::move(key)), value_(std::move(value)) {}

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("config line " + std::to_string(line_) + ": field '" + key_ + "': " + why);
    }

    double real() const { return real_of(value_); }

    std::vector<double> reals() const {
        std::vector<double> out;
        std::size_t start = 0;
        for (;;) {
            const auto comma = value_.find(',', start);
            const std::string item = trim(value_.substr(start, comma - start));
            if (item.empty()) fail("empty list element");
            out.push_back(real_of(item));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    }

    template <class Int>
    Int integer() const {
        Int v{};
        const auto* first = value_.data();
        const auto* last = first + value_.size();
        const auto r = std::from_chars(first, last, v);
        if (r.ec != std::errc() || r.ptr != last) fail("expected an integer, got '" + value_ + "'");
        return v;
    }

    bool boolean() const {
        if (value_ == "true" || value_ == "1" || value_ == "yes") return true;
        if (value_ == "false" || value_ == "0" || value_ == "no") return false;
        fail("expected true|false, got '" + value_ + "'");
    }

    const std::string& text() const { return value_; }
    int line() const { return line_; }

private:
    double real_of(const std::string& s) const {
        double v = 0.0;
        const auto* first = s.data();
        const auto* last = first + s.size();
        const auto r = std::from_chars(first, last, v);
        if (r.ec != std::errc() || r.ptr != last || !std::isfinite(v)) fail("expected a number, got '" + s + "'");
        return v;
    }

    int line_;
    std::string key_;
    std::string value_;
};

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::map<std::string, int> seen;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const detail::FieldParser f(line_no, key, detail::trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (auto it = seen.find(key); it != seen.end()) {
            f.fail("duplicate key (first set on line " + std::to_string(it->second) + ")");
        }
        seen[key] = line_no;

        try {
            if (key == "scenario_id") {
                if (f.text().empty() || f.text().find(',') != std::string::npos) f.fail("must be non-empty, no commas");
                c.scenario_id = f.text();
            } else if (key == "x1") c.x1 = f.reals();
            else if (key == "x2") c.x2 = f.reals();
            else if (key == "y1") c.y1 = f.real();
            else if (key == "y2") c.y2 = f.real();
            else if (key == "edge_snr_db") c.edge_snr_db = f.text().empty() ? std::vector<double>{} : f.reals();
            else if (key == "cell_radius_km") c.cell_radius_km = f.real();
            else if (key == "pathloss_exponent") c.pathloss_exponent = f.real();
            else if (key == "antenna_constant") c.antenna_constant = f.real();
            else if (key == "T") c.T = f.integer<int>();
            else if (key == "N_t") c.N_t = f.integer<int>();
            else if (key == "N_B") c.N_B = f.integer<int>();
            else if (key == "T_t") c.T_t = f.integer<int>();
            else if (key == "T_fb") c.T_fb = f.integer<int>();
            else if (key == "csi_mode") c.csi_mode = model::csi_mode_from_string(f.text());
            else if (key == "bit_policy") c.bit_policy = bit_policy_from_string(f.text());
            else if (key == "mu") c.mu = f.real();
            else if (key == "bits") c.bits = f.integer<int>();
            else if (key == "train_opt") c.train_opt = f.boolean();
            else if (key == "fb_opt") c.fb_opt = f.boolean();
            else if (key == "mc") c.mc = f.boolean();
            else if (key == "samples") c.samples = f.integer<std::int64_t>();
            else if (key == "seed") c.seed = f.integer<std::uint64_t>();
            else if (key == "chunk") c.chunk = f.integer<std::int64_t>();
            else if (key == "workers") c.workers = f.integer<int>();
            else if (key == "map_points") c.map_points = f.integer<int>();
            else if (key == "map_min") c.map_min = f.real();
            else if (key == "map_max") c.map_max = f.real();
            else if (key == "placements") c.placements = f.integer<int>();
            else if (key == "placement_guard") c.placement_guard = f.real();
            else if (key == "out") c.out = f.text();
            else f.fail("unknown key");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            if (msg.rfind("config line", 0) == 0) throw;
            f.fail(msg);
        }
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

inline std::string serialize_config(const ExperimentConfig& c) {
    using detail::format_double;
    std::ostringstream os;
    os << "scenario_id = " << c.scenario_id << '\n'
       << "x1 = " << detail::join(c.x1) << '\n'
       << "x2 = " << detail::join(c.x2) << '\n'
       << "y1 = " << format_double(c.y1) << '\n'
       << "y2 = " << format_double(c.y2) << '\n'
       << "edge_snr_db = " << detail::join(c.edge_snr_db) << '\n'
       << "cell_radius_km = " << format_double(c.cell_radius_km) << '\n'
       << "pathloss_exponent = " << format_double(c.pathloss_exponent) << '\n'
       << "antenna_constant = " << format_double(c.antenna_constant) << '\n'
       << "T = " << c.T << '\n'
       << "N_t = " << c.N_t << '\n'
       << "N_B = " << c.N_B << '\n'
       << "T_t = " << c.T_t << '\n'
       << "T_fb = " << c.T_fb << '\n'
       << "csi_mode = " << model::to_string(c.csi_mode) << '\n'
       << "bit_policy = " << to_string(c.bit_policy) << '\n'
       << "mu = " << format_double(c.mu) << '\n';
    if (c.bits) os << "bits = " << *c.bits << '\n';
    os << "train_opt = " << (c.train_opt ? "true" : "false") << '\n'
       << "fb_opt = " << (c.fb_opt ? "true" : "false") << '\n'
       << "mc = " << (c.mc ? "true" : "false") << '\n'
       << "samples = " << c.samples << '\n'
       << "seed = " << c.seed << '\n'
       << "chunk = " << c.chunk << '\n'
       << "workers = " << c.workers << '\n'
       << "map_points = " << c.map_points << '\n'
       << "map_min = " << format_double(c.map_min) << '\n'
       << "map_max = " << format_double(c.map_max) << '\n'
       << "placements = " << c.placements << '\n'
       << "placement_guard = " << format_double(c.placement_guard) << '\n';
    if (!c.out.empty()) os << "out = " << c.out << '\n';
    return os.str();
}

}  // namespace icic::harness
