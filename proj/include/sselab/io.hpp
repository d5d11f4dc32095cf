#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sselab/ensemble.hpp"
#include "sselab/errors.hpp"

namespace sselab {

inline constexpr std::string_view kVersion = "0.1.0";

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Round-trip decimal (17 significant digits).
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct RunHeader {
    std::uint64_t master_seed = 0;
    std::string config_text;

    std::string line() const {
        return "# sse_lab " + std::string(kVersion) + " master_seed=" + std::to_string(master_seed) +
               " config_hash=" + hex64(fnv1a64(config_text));
    }
};

/// Long-format CSV: t,observable,mean,std_error,n. Undefined errors are empty.
inline void write_estimates_csv(std::ostream& out, const EstimateTable& table, const RunHeader& header) {
    out << header.line() << '\n' << "t,observable,mean,std_error,n\n";
    for (std::size_t k = 0; k < table.times.size(); ++k)
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const auto& e = table.values[k][c];
            out << format_double(table.times[k]) << ',' << table.columns[c] << ',' << format_double(e.mean) << ','
                << (e.std_error ? format_double(*e.std_error) : std::string()) << ',' << e.n << '\n';
        }
}

/// Wide CSV with one row per time: t,<name>... for plain curves.
inline void write_curves_csv(std::ostream& out, const std::vector<double>& times, const std::vector<std::string>& names,
                             const std::vector<std::vector<double>>& columns, const RunHeader& header) {
    if (names.size() != columns.size()) throw std::invalid_argument("write_curves_csv: names/columns mismatch");
    out << header.line() << "\nt";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (std::size_t k = 0; k < times.size(); ++k) {
        out << format_double(times[k]);
        for (const auto& col : columns) out << ',' << format_double(col.at(k));
        out << '\n';
    }
}

/// One trajectory's Schrodinger amplitudes: t,re_0,im_0,re_1,...
inline void write_trajectory_csv(std::ostream& out, const std::vector<double>& times, const std::vector<VectorXcd>& states,
                                 const RunHeader& header) {
    out << header.line() << "\nt";
    const Eigen::Index n = states.empty() ? 0 : states.front().size();
    for (Eigen::Index i = 0; i < n; ++i) out << ",re_" << i << ",im_" << i;
    out << '\n';
    for (std::size_t k = 0; k < times.size(); ++k) {
        out << format_double(times[k]);
        for (Eigen::Index i = 0; i < n; ++i)
            out << ',' << format_double(states[k](i).real()) << ',' << format_double(states[k](i).imag());
        out << '\n';
    }
}

inline nlohmann::json report_to_json(const ComparisonReport& r) {
    nlohmann::json j;
    j["pass"] = r.passed;
    j["max_abs_z"] = std::isfinite(r.max_abs_z) ? nlohmann::json(r.max_abs_z) : nlohmann::json("inf");
    j["fraction_above_3"] = r.fraction_above_3;
    j["points"] = r.z.size();
    if (r.hard_failure) j["hard_failure"] = *r.hard_failure;
    return j;
}

/// JSON document whose first field is the header record.
inline void write_json(const std::string& path, const nlohmann::json& body, const RunHeader& header) {
    nlohmann::ordered_json doc;
    doc["header"] = {{"version", std::string(kVersion)},
                     {"master_seed", header.master_seed},
                     {"config_hash", hex64(fnv1a64(header.config_text))}};
    for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << doc.dump(2) << '\n';
}

}  // namespace sselab
