#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sselab/ensemble.hpp"
#include "sselab/errors.hpp"
#include "sselab/system.hpp"

namespace sselab {

/// Flat `section.key = value` document. '#' starts a comment; values that
/// look like JSON (arrays, objects, quoted strings) are parsed as JSON.
class KeyValueConfig {
public:
    struct Entry {
        std::string raw;
        std::size_t line = 0;
    };

    static KeyValueConfig parse(const std::string& text) {
        KeyValueConfig cfg;
        std::istringstream in(text);
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos) throw ConfigError(number, "", "expected `section.key = value`");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty() || key.find('.') == std::string::npos || key.front() == '.' || key.back() == '.')
                throw ConfigError(number, key, "keys must have the form section.key");
            if (value.empty()) throw ConfigError(number, key, "missing value");
            if (cfg.entries_.count(key)) throw ConfigError(number, key, "duplicate key");
            cfg.entries_[key] = {value, number};
        }
        return cfg;
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const Entry& entry(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError(0, key, "required key is missing");
        return it->second;
    }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    double number(const std::string& key) const {
        const auto& e = entry(key);
        try {
            std::size_t used = 0;
            const double v = std::stod(e.raw, &used);
            if (used != e.raw.size()) throw std::invalid_argument("trailing text");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(e.line, key, "expected a number, got `" + e.raw + "`");
        }
    }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::uint64_t unsigned_integer(const std::string& key) const {
        const auto& e = entry(key);
        if (e.raw.empty() || e.raw.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError(e.line, key, "expected a non-negative integer, got `" + e.raw + "`");
        try {
            return std::stoull(e.raw);
        } catch (const std::exception&) {
            throw ConfigError(e.line, key, "integer out of range");
        }
    }
    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? unsigned_integer(key) : fallback;
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& e = entry(key);
        if (e.raw == "true") return true;
        if (e.raw == "false") return false;
        throw ConfigError(e.line, key, "expected true or false");
    }

    std::string text(const std::string& key) const {
        const auto& e = entry(key);
        if (e.raw.size() >= 2 && e.raw.front() == '"' && e.raw.back() == '"') return e.raw.substr(1, e.raw.size() - 2);
        return e.raw;
    }
    std::string text(const std::string& key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }

    nlohmann::json json(const std::string& key) const {
        const auto& e = entry(key);
        try {
            return nlohmann::json::parse(e.raw);
        } catch (const nlohmann::json::exception& ex) {
            throw ConfigError(e.line, key, std::string("malformed JSON value: ") + ex.what());
        }
    }

    /// Raise on any key outside `known`.
    void reject_unknown(const std::set<std::string>& known) const {
        for (const auto& [key, e] : entries_)
            if (!known.count(key)) throw ConfigError(e.line, key, "unknown key");
    }

private:
    static std::string trim(const std::string& s) {
        const auto first = s.find_first_not_of(" \t\r");
        if (first == std::string::npos) return {};
        const auto last = s.find_last_not_of(" \t\r");
        return s.substr(first, last - first + 1);
    }

    std::map<std::string, Entry> entries_;
};

namespace detail {

inline cd complex_from_json(const nlohmann::json& j, std::size_t line, const std::string& field) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError(line, field, "complex entries must be numbers or [re, im] pairs");
}

inline std::vector<std::size_t> indices_from_json(const nlohmann::json& j, std::size_t line, const std::string& field) {
    if (!j.is_array()) throw ConfigError(line, field, "expected an array of indices");
    std::vector<std::size_t> out;
    for (const auto& v : j) {
        if (!v.is_number_unsigned()) throw ConfigError(line, field, "indices must be non-negative integers");
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

}  // namespace detail

/// SystemSpec from JSON: {"energies": [...], "V": [[[re, im], ...], ...],
/// "manifold": [...], "initial": k, "selection_rule": bool, "bath_spacing": x}.
inline SystemSpec system_spec_from_json(const nlohmann::json& j, std::size_t line = 0) {
    auto need = [&](const char* name) -> const nlohmann::json& {
        if (!j.contains(name)) throw ConfigError(line, name, "missing field");
        return j.at(name);
    };
    SystemSpec spec;
    const auto& energies = need("energies");
    if (!energies.is_array()) throw ConfigError(line, "energies", "expected an array");
    for (const auto& e : energies) {
        if (!e.is_number()) throw ConfigError(line, "energies", "entries must be numbers");
        spec.energies.push_back(e.get<double>());
    }
    const auto n = static_cast<Eigen::Index>(spec.energies.size());
    const auto& v = need("V");
    if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != n)
        throw ConfigError(line, "V", "expected " + std::to_string(n) + " rows");
    spec.V = MatrixXcd::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = v[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            throw ConfigError(line, "V", "row " + std::to_string(r) + " must have " + std::to_string(n) + " entries");
        for (Eigen::Index c = 0; c < n; ++c) spec.V(r, c) = detail::complex_from_json(row[static_cast<std::size_t>(c)], line, "V");
    }
    spec.manifold = detail::indices_from_json(need("manifold"), line, "manifold");
    const auto& initial = need("initial");
    if (!initial.is_number_unsigned()) throw ConfigError(line, "initial", "expected a non-negative integer");
    spec.initial = initial.get<std::size_t>();
    if (j.contains("selection_rule")) {
        if (!j["selection_rule"].is_boolean()) throw ConfigError(line, "selection_rule", "expected true or false");
        spec.selection_rule = j["selection_rule"].get<bool>();
    }
    if (j.contains("bath_spacing")) {
        if (!j["bath_spacing"].is_number()) throw ConfigError(line, "bath_spacing", "expected a number");
        spec.bath_spacing = j["bath_spacing"].get<double>();
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(line, "system", e.what());
    }
    return spec;
}

inline nlohmann::json system_spec_to_json(const SystemSpec& spec) {
    nlohmann::json j;
    j["energies"] = spec.energies;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < spec.V.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < spec.V.cols(); ++c) row.push_back({spec.V(r, c).real(), spec.V(r, c).imag()});
        rows.push_back(row);
    }
    j["V"] = rows;
    j["manifold"] = spec.manifold;
    j["initial"] = spec.initial;
    j["selection_rule"] = spec.selection_rule;
    if (spec.bath_spacing) j["bath_spacing"] = *spec.bath_spacing;
    return j;
}

/// Everything an experiment config describes.
struct ExperimentConfig {
    ExperimentPlan plan;
    std::vector<Engine> engines{Engine::nonlinear_sse};
    /// Absolute model-error allowance used when comparing to WW oracles.
    double oracle_allowance = 0.0;
    /// The same for individual final-state occupations.
    double occupation_allowance = 0.0;
    std::optional<std::string> bath_warning;
    std::string source_text;
};

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "system.kind",        "system.gamma",         "system.levels",     "system.spacing",
        "system.e_s",         "system.energies",      "system.V",          "system.manifold",
        "system.initial",     "system.selection_rule", "system.bath_spacing", "system.json",
        "system.initial_state", "noise.sigma",        "run.dt",            "run.horizon",
        "run.n_traj",         "run.output_stride",    "run.observables",   "run.master_seed",
        "run.allow_coarse_step", "run.engine",        "ww.mass_shift",     "ww.width",
        "ww.delta_tolerance", "compare.allowance", "compare.occupation_allowance"};
    return keys;
}

/// Builds an ExperimentConfig. `base_dir` resolves `system.json` paths.
inline ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
    const auto cfg = KeyValueConfig::parse(text);
    cfg.reject_unknown(known_config_keys());
    ExperimentConfig out;
    out.source_text = text;
    auto& plan = out.plan;

    const std::string kind = cfg.text("system.kind", "explicit");
    if (kind == "flat_bath") {
        const double gamma = cfg.number("system.gamma");
        const auto levels = cfg.unsigned_integer("system.levels");
        const double spacing = cfg.number("system.spacing");
        const double e_s = cfg.number("system.e_s", 0.0);
        try {
            auto bath = build_flat_bath(gamma, levels, spacing, e_s);
            plan.system = std::move(bath.spec);
            out.bath_warning = bath.warning;
        } catch (const std::invalid_argument& e) {
            throw ConfigError(cfg.entry("system.gamma").line, "system", e.what());
        }
    } else if (kind == "json") {
        const auto& e = cfg.entry("system.json");
        const std::filesystem::path path = base_dir / cfg.text("system.json");
        std::ifstream in(path);
        if (!in) throw ConfigError(e.line, "system.json", "cannot open " + path.string());
        try {
            plan.system = system_spec_from_json(nlohmann::json::parse(in), e.line);
        } catch (const nlohmann::json::exception& ex) {
            throw ConfigError(e.line, "system.json", ex.what());
        }
    } else if (kind == "explicit") {
        nlohmann::json j;
        j["energies"] = cfg.json("system.energies");
        j["V"] = cfg.json("system.V");
        j["manifold"] = cfg.has("system.manifold") ? cfg.json("system.manifold") : nlohmann::json::array({std::size_t{0}});
        j["initial"] = cfg.unsigned_integer("system.initial", 0);
        j["selection_rule"] = cfg.boolean("system.selection_rule", false);
        if (cfg.has("system.bath_spacing")) j["bath_spacing"] = cfg.number("system.bath_spacing");
        plan.system = system_spec_from_json(j, cfg.entry("system.energies").line);
    } else {
        throw ConfigError(cfg.entry("system.kind").line, "system.kind", "expected flat_bath, json or explicit");
    }

    if (cfg.has("system.initial_state")) {
        const auto& e = cfg.entry("system.initial_state");
        const auto j = cfg.json("system.initial_state");
        if (!j.is_array()) throw ConfigError(e.line, "system.initial_state", "expected an array of amplitudes");
        VectorXcd psi(static_cast<Eigen::Index>(j.size()));
        for (std::size_t k = 0; k < j.size(); ++k)
            psi(static_cast<Eigen::Index>(k)) = detail::complex_from_json(j[k], e.line, "system.initial_state");
        const double norm = psi.norm();
        if (!(norm > 0.0)) throw ConfigError(e.line, "system.initial_state", "zero state");
        plan.initial_state = psi / norm;
    }

    plan.noise.sigma = cfg.number("noise.sigma", 0.0);
    plan.dt = cfg.number("run.dt");
    plan.horizon = cfg.number("run.horizon");
    plan.n_traj = cfg.unsigned_integer("run.n_traj", 1000);
    plan.output_stride = cfg.unsigned_integer("run.output_stride", 1);
    plan.master_seed = cfg.unsigned_integer("run.master_seed", 0);
    plan.allow_coarse_step = cfg.boolean("run.allow_coarse_step", false);
    if (cfg.has("run.observables")) {
        const auto& e = cfg.entry("run.observables");
        const auto j = cfg.json("run.observables");
        if (!j.is_array() || j.empty()) throw ConfigError(e.line, "run.observables", "expected a non-empty array of names");
        plan.observables.clear();
        for (const auto& name : j) {
            if (!name.is_string()) throw ConfigError(e.line, "run.observables", "names must be strings");
            auto o = parse_observable(name.get<std::string>());
            if (!o) throw ConfigError(e.line, "run.observables", "unknown observable " + name.get<std::string>());
            plan.observables.push_back(*o);
        }
    }
    if (cfg.has("run.engine")) {
        const auto& e = cfg.entry("run.engine");
        const std::string name = cfg.text("run.engine");
        if (name == "all") {
            out.engines = {Engine::nonlinear_sse, Engine::imaginary_noise, Engine::linearized, Engine::pathwise};
        } else {
            auto engine = parse_engine(name);
            if (!engine) throw ConfigError(e.line, "run.engine", "unknown engine " + name);
            out.engines = {*engine};
        }
    }
    if (cfg.has("ww.mass_shift") || cfg.has("ww.width")) {
        plan.ww = WWParams::scalar(plan.system.e_s(), cfg.number("ww.mass_shift", 0.0), cfg.number("ww.width"));
    } else if (cfg.has("ww.delta_tolerance")) {
        try {
            plan.ww = compute_ww_params(plan.system, cfg.number("ww.delta_tolerance"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(cfg.entry("ww.delta_tolerance").line, "ww.delta_tolerance", e.what());
        }
    }
    out.oracle_allowance = cfg.number("compare.allowance", 0.0);
    if (out.oracle_allowance < 0.0)
        throw ConfigError(cfg.entry("compare.allowance").line, "compare.allowance", "must be >= 0");
    out.occupation_allowance = cfg.number("compare.occupation_allowance", out.oracle_allowance);
    if (out.occupation_allowance < 0.0)
        throw ConfigError(cfg.entry("compare.occupation_allowance").line, "compare.occupation_allowance", "must be >= 0");

    try {
        plan.validate();
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        std::size_t line = 0;
        std::string field = "run";
        if (what.find("dt") != std::string::npos && cfg.has("run.dt")) {
            line = cfg.entry("run.dt").line;
            field = "run.dt";
        }
        throw ConfigError(line, field, what);
    }
    return out;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "", "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_config(buffer.str(), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace sselab
