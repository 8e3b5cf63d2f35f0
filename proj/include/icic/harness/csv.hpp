#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "icic/errors.hpp"

namespace icic::harness {

inline constexpr std::array<const char*, 15> kCsvColumns{
    "scenario_id", "user",          "x1_over_R", "x2_over_R",  "edge_snr_db", "csi_mode",  "train_opt", "fb_opt",
    "strategy_pair", "rate_bps_hz", "effective_rate", "stderr", "provenance",  "n_samples", "seed"};

/// One output row. Optional numeric fields print as empty cells when absent
/// (positions for placement statistics, stderr for single-sample estimates).
struct CsvRow {
    std::string scenario_id;
    std::string user;
    std::optional<double> x1_over_R;
    std::optional<double> x2_over_R;
    double edge_snr_db = 0.0;
    std::string csi_mode;
    bool train_opt = false;
    bool fb_opt = false;
    std::string strategy_pair;
    double rate_bps_hz = 0.0;
    double effective_rate = 0.0;
    std::optional<double> stderr_bps_hz;
    std::string provenance;
    long long n_samples = 0;
    unsigned long long seed = 0;
};

inline std::string format_number(double v) {
    if (!std::isfinite(v)) throw DomainError("CSV: non-finite numeric field");
    if (v == 0.0) return "0";  // folds -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

struct CsvTable {
    std::vector<CsvRow> rows;

    void write(std::ostream& os) const {
        for (std::size_t c = 0; c < kCsvColumns.size(); ++c) os << (c ? "," : "") << kCsvColumns[c];
        os << '\n';
        for (const auto& r : rows) {
            os << r.scenario_id << ',' << r.user << ',' << format_optional(r.x1_over_R) << ','
               << format_optional(r.x2_over_R) << ',' << format_number(r.edge_snr_db) << ',' << r.csi_mode << ','
               << (r.train_opt ? 1 : 0) << ',' << (r.fb_opt ? 1 : 0) << ',' << r.strategy_pair << ','
               << format_number(r.rate_bps_hz) << ',' << format_number(r.effective_rate) << ','
               << format_optional(r.stderr_bps_hz) << ',' << r.provenance << ',' << r.n_samples << ',' << r.seed
               << '\n';
        }
    }

    std::string str() const {
        std::ostringstream os;
        write(os);
        return os.str();
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot open output file '" + path + "'");
        write(f);
        if (!f) throw ConfigError("failed writing output file '" + path + "'");
    }
};

/// Splits a CSV produced by CsvTable::write back into cells (no quoting is
/// ever emitted, so a plain split suffices).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        out.push_back(std::move(cells));
    }
    return out;
}

}  // namespace icic::harness
