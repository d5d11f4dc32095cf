// sse_lab: command-line front end for the stochastic Schrodinger equation library.
//
// Exit codes: 0 success, 1 a comparison failed, 2 usage or configuration
// error, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sselab/sselab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sselab;

namespace {

enum ExitCode : int { kOk = 0, kComparisonFailed = 1, kUsage = 2, kNumeric = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::size_t workers = 0;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--workers", opts.workers, "Worker threads (0 = hardware concurrency)");
    cmd->add_option("--seed", opts.seed, "Master seed (overrides SSE_LAB_SEED and the config)");
    cmd->add_option("--out", opts.out_dir, "Output directory");
}

/// Precedence: --seed, then SSE_LAB_SEED, then the config value.
std::uint64_t resolve_seed(std::uint64_t config_seed, const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("SSE_LAB_SEED")) {
        std::string text(env);
        std::size_t used = 0;
        unsigned long long value = 0;
        try {
            value = std::stoull(text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (text.empty() || used != text.size() || text.front() == '-')
            throw UsageError("SSE_LAB_SEED must be a non-negative integer, got '" + text + "'");
        return value;
    }
    return config_seed;
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw UsageError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write " + path.string());
    return out;
}

Eigen::Vector3d parse_vec3(const std::vector<double>& v, const char* name) {
    if (v.size() != 3) throw UsageError(std::string(name) + " needs three components");
    return {v[0], v[1], v[2]};
}

struct Comparison {
    std::string name;
    ComparisonReport report;
    bool gating = true;
    json extra = json::object();
};

json comparisons_to_json(const std::vector<Comparison>& comparisons) {
    json arr = json::array();
    for (const auto& c : comparisons) {
        json j = report_to_json(c.report);
        j["name"] = c.name;
        j["gating"] = c.gating;
        for (auto it = c.extra.begin(); it != c.extra.end(); ++it) j[it.key()] = it.value();
        arr.push_back(j);
    }
    return arr;
}

bool all_gating_pass(const std::vector<Comparison>& comparisons) {
    for (const auto& c : comparisons)
        if (c.gating && !c.report.passed) return false;
    return true;
}

void print_comparisons(const std::vector<Comparison>& comparisons) {
    for (const auto& c : comparisons) {
        std::cout << (c.report.passed ? "PASS " : "FAIL ") << c.name << "  max|z|=" << c.report.max_abs_z
                  << "  frac(|z|>3)=" << c.report.fraction_above_3;
        if (!c.gating) std::cout << "  (informational)";
        if (c.report.hard_failure) std::cout << "  " << *c.report.hard_failure;
        std::cout << '\n';
    }
}

// Rows of `table` with t >= t_min, restricted to one column.
std::pair<std::vector<double>, std::vector<EnsembleEstimate>> late_column(const EstimateTable& table,
                                                                           const std::string& column, double t_min) {
    const auto all = table.column(column);
    std::vector<double> times;
    std::vector<EnsembleEstimate> est;
    for (std::size_t k = 0; k < table.times.size(); ++k)
        if (table.times[k] >= t_min - 1e-12) {
            times.push_back(table.times[k]);
            est.push_back(all[k]);
        }
    return {times, est};
}

// ---------------------------------------------------------------- decay

struct DecayOptions {
    std::string config;
    std::string engine;
    std::optional<double> sigma;
    std::optional<std::size_t> n_traj;
    std::optional<double> t_min;
    CommonOptions common;
};

int cmd_decay(const DecayOptions& opts) {
    ExperimentConfig cfg = load_experiment_config(opts.config);
    auto& plan = cfg.plan;
    if (!opts.engine.empty()) {
        if (opts.engine == "all") {
            cfg.engines = {Engine::nonlinear_sse, Engine::imaginary_noise, Engine::linearized, Engine::pathwise};
        } else {
            const auto e = parse_engine(opts.engine);
            if (!e) throw UsageError("unknown engine '" + opts.engine + "'");
            cfg.engines = {*e};
        }
    }
    if (opts.sigma) plan.noise.sigma = *opts.sigma;
    if (opts.n_traj) plan.n_traj = *opts.n_traj;
    plan.master_seed = resolve_seed(plan.master_seed, opts.common.seed);
    plan.validate();
    if (cfg.engines.size() > 1) {
        std::erase_if(cfg.engines, [&](Engine e) {
            const auto reason = engine_unavailable(plan, e);
            if (reason) std::cerr << "skipping " << to_string(e) << ": " << *reason << '\n';
            return reason.has_value();
        });
    }
    if (cfg.bath_warning) std::cerr << "warning: " << *cfg.bath_warning << '\n';

    const RunHeader header{plan.master_seed, cfg.source_text};
    const fs::path out_dir = prepare_out_dir(opts.common.out_dir);
    const double sigma = plan.noise.sigma;

    std::optional<WWParams> ww;
    if (plan.ww || plan.system.bath_spacing) ww = detail::resolve_ww(plan);
    const bool scalar_ww = ww && ww->dim() == 1;
    const double t_min = opts.t_min.value_or(scalar_ww && ww->width() > 0.0 ? 0.5 / ww->width() : 0.0);

    std::vector<EstimateTable> tables;
    for (auto engine : cfg.engines) {
        std::cerr << "running " << to_string(engine) << " (" << plan.n_traj << " trajectories)\n";
        tables.push_back(run_ensemble(plan, engine, {opts.common.workers}));
        const std::string name =
            cfg.engines.size() == 1 ? "occupations.csv" : "occupations_" + to_string(engine) + ".csv";
        auto out = open_output(out_dir / name);
        write_estimates_csv(out, tables.back(), header);
    }

    std::vector<Comparison> comparisons;
    json oracle_notes = json::object();
    const auto has_column = [](const EstimateTable& t, const std::string& c) {
        return std::find(t.columns.begin(), t.columns.end(), c) != t.columns.end();
    };

    if (scalar_ww) {
        const auto channels = decay_channels(plan.system);
        const auto off = plan.system.off_manifold();
        const auto survival_warn = survival_expectation(*ww, sigma, 0.0);
        if (!survival_warn.ok()) oracle_notes["warnings"] = survival_warn.warnings;
        oracle_notes["mass_shift"] = ww->mass_shift();
        oracle_notes["width"] = ww->width();
        oracle_notes["t_min"] = t_min;
        oracle_notes["allowance"] = cfg.oracle_allowance;
        oracle_notes["occupation_allowance"] = cfg.occupation_allowance;

        // Oracle curves on the output grid.
        const auto times = plan.output_times();
        std::vector<double> s_curve, decayed_curve;
        for (double t : times) {
            s_curve.push_back(survival_expectation(*ww, sigma, t).value);
            decayed_curve.push_back(summed_transition_expectation(*ww, plan.system, sigma, t));
        }
        auto out = open_output(out_dir / "oracle.csv");
        write_curves_csv(out, times, {"survival", "decayed"}, {s_curve, decayed_curve}, header);

        for (const auto& table : tables) {
            const std::string engine = to_string(table.engine);
            if (has_column(table, "survival")) {
                auto [ts, est] = late_column(table, "survival", t_min);
                std::vector<double> oracle;
                for (double t : ts) oracle.push_back(survival_expectation(*ww, sigma, t).value);
                comparisons.push_back({engine + " survival vs WW", compare_to_oracle(est, oracle, cfg.oracle_allowance)});
            }
            if (has_column(table, "p_0")) {
                std::vector<EnsembleEstimate> est;
                std::vector<double> oracle;
                for (std::size_t i = 0; i < off.size(); ++i) {
                    auto [ts, col] = late_column(table, "p_" + std::to_string(off[i]), t_min);
                    for (std::size_t k = 0; k < ts.size(); ++k) {
                        est.push_back(col[k]);
                        oracle.push_back(transition_expectation(*ww, channels[i], sigma, ts[k]));
                    }
                }
                comparisons.push_back(
                    {engine + " occupations vs WW", compare_to_oracle(est, oracle, cfg.occupation_allowance)});

                // Line shape of the final-state occupations at the last output time.
                const std::size_t last = table.times.size() - 1;
                const double t_end = table.times[last];
                if (ww->width() > 0.0 && t_end > 0.0) {
                    std::vector<double> x, p;
                    for (auto m : off) {
                        x.push_back(plan.system.energies[m] - plan.system.e_s());
                        p.push_back(table.values[last][table.column_index("p_" + std::to_string(m))].mean);
                    }
                    try {
                        const auto shape = fit_line_shape(x, p, t_end, ww->width());
                        oracle_notes["line_shape"][engine] = {{"t", t_end},
                                                              {"center", shape.center},
                                                              {"fwhm", shape.width},
                                                              {"fwhm_over_width", shape.width / ww->width()},
                                                              {"expected_center", ww->mass_shift()}};
                    } catch (const std::exception& e) {
                        oracle_notes["line_shape"][engine] = {{"error", e.what()}};
                    }
                }
            }
        }
    }

    // Cross-engine comparisons against the first engine. The two exact
    // unravelings must agree; the WW-based engines are checked above against
    // their own oracle and are listed here for information.
    const auto exact = [](Engine e) { return e == Engine::nonlinear_sse || e == Engine::imaginary_noise; };
    for (std::size_t a = 0; a < tables.size(); ++a)
        for (std::size_t b = a + 1; b < tables.size(); ++b) {
            Comparison c{to_string(tables[a].engine) + " vs " + to_string(tables[b].engine),
                         compare_tables(tables[a], tables[b]), exact(tables[a].engine) && exact(tables[b].engine)};
            comparisons.push_back(std::move(c));
        }

    json body;
    body["command"] = "decay";
    body["sigma"] = sigma;
    body["n_traj"] = plan.n_traj;
    json engines = json::array();
    for (auto e : cfg.engines) engines.push_back(to_string(e));
    body["engines"] = engines;
    body["oracle"] = oracle_notes;
    body["comparisons"] = comparisons_to_json(comparisons);
    body["pass"] = all_gating_pass(comparisons);
    write_json((out_dir / "report.json").string(), body, header);

    print_comparisons(comparisons);
    if (oracle_notes.contains("line_shape"))
        for (auto it = oracle_notes["line_shape"].begin(); it != oracle_notes["line_shape"].end(); ++it)
            if (it.value().contains("fwhm"))
                std::cout << "line shape " << it.key() << ": center=" << it.value()["center"].get<double>()
                          << " fwhm=" << it.value()["fwhm"].get<double>() << '\n';
    return all_gating_pass(comparisons) ? kOk : kComparisonFailed;
}

// ---------------------------------------------------------------- zeno

struct ZenoOptions {
    std::string config;
    std::optional<double> sigma;
    std::optional<std::size_t> n_traj;
    std::size_t points = 20;
    CommonOptions common;
};

int cmd_zeno(const ZenoOptions& opts) {
    ExperimentConfig cfg = load_experiment_config(opts.config);
    auto plan = cfg.plan;
    if (opts.sigma) plan.noise.sigma = *opts.sigma;
    if (opts.n_traj) plan.n_traj = *opts.n_traj;
    if (opts.points == 0) throw UsageError("--points must be positive");
    plan.master_seed = resolve_seed(plan.master_seed, opts.common.seed);
    const double sigma = plan.noise.sigma;
    const double variance = energy_variance(plan.system);
    if (!(variance > 0.0)) throw UsageError("zeno: the initial state is an energy eigenstate (zero variance)");

    double t_max = 1.0 / std::sqrt(variance);
    if (sigma > 0.0) t_max = std::min(t_max, 1.0 / (sigma * sigma * variance));
    t_max *= 0.05;
    const std::size_t substeps = 10;
    plan.dt = t_max / static_cast<double>(opts.points * substeps);
    plan.horizon = t_max;
    plan.output_stride = substeps;
    plan.observables = {Observable::survival};
    plan.validate();

    const auto table = run_ensemble(plan, Engine::nonlinear_sse, {opts.common.workers});
    const auto est = table.column("survival");
    std::vector<double> expansion, decayed;
    double worst_relative = 0.0;
    for (std::size_t k = 0; k < table.times.size(); ++k) {
        const double e = zeno_survival_expansion(variance, sigma, table.times[k]).survival;
        expansion.push_back(e);
        decayed.push_back(1.0 - est[k].mean);
        worst_relative = std::max(worst_relative, std::abs(est[k].mean - e) / e);
    }
    const double gamma_r = reduction_rate(variance, sigma);

    const RunHeader header{plan.master_seed, cfg.source_text};
    const fs::path out_dir = prepare_out_dir(opts.common.out_dir);
    {
        auto out = open_output(out_dir / "zeno.csv");
        write_estimates_csv(out, table, header);
    }
    json body;
    body["command"] = "zeno";
    body["sigma"] = sigma;
    body["energy_variance"] = variance;
    body["reduction_rate"] = gamma_r;
    body["t_max"] = t_max;
    body["max_relative_deviation"] = worst_relative;
    bool pass = worst_relative <= 0.05;
    const auto [slope, curvature] = fit_linear_quadratic(table.times, decayed);
    body["fit"] = {{"linear", slope}, {"quadratic", curvature}, {"expected_linear", gamma_r}, {"expected_quadratic", variance}};
    if (plan.ww || plan.system.bath_spacing) {
        const auto ww = detail::resolve_ww(plan);
        if (ww.dim() == 1) {
            body["width"] = ww.width();
            body["reduction_below_width"] = gamma_r < ww.width();
        }
    }
    body["pass"] = pass;
    write_json((out_dir / "zeno.json").string(), body, header);

    std::cout << "energy variance " << variance << ", reduction rate " << gamma_r << '\n'
              << (pass ? "PASS" : "FAIL") << " survival vs small-time expansion, max relative deviation "
              << worst_relative << " on t <= " << t_max << '\n';
    return pass ? kOk : kComparisonFailed;
}

// ---------------------------------------------------------------- rabi

struct RabiOptions {
    std::vector<double> omega{1.0, 0.0, 0.0};
    std::vector<double> r0{0.0, 0.0, 1.0};
    double sigma = 1.0;
    double t = std::numbers::pi;
    double dt = 1e-3;
    std::size_t n_traj = 10000;
    std::size_t points = 10;
    std::string engine = "imaginary-noise";
    double allowance = 0.0;
    CommonOptions common;
};

int cmd_rabi(const RabiOptions& opts) {
    const Eigen::Vector3d omega = parse_vec3(opts.omega, "--omega");
    const Eigen::Vector3d r0 = parse_vec3(opts.r0, "--r0");
    if (!(omega.norm() > 0.0)) throw UsageError("--omega must be non-zero");
    if (std::abs(r0.norm() - 1.0) > 1e-9) throw UsageError("--r0 must be a unit vector (pure initial state)");
    if (!(opts.sigma >= 0.0) || !(opts.t > 0.0) || !(opts.dt > 0.0) || opts.points == 0)
        throw UsageError("--sigma must be >= 0; --t, --dt and --points must be positive");
    const auto engine = parse_engine(opts.engine);
    if (!engine || (*engine != Engine::nonlinear_sse && *engine != Engine::imaginary_noise))
        throw UsageError("rabi supports the nonlinear-sse and imaginary-noise engines");

    ExperimentPlan plan;
    const MatrixXcd h = rabi_hamiltonian(omega);
    plan.system.energies = {h(0, 0).real(), h(1, 1).real()};
    plan.system.V = h;
    plan.system.V(0, 0) = plan.system.V(1, 1) = 0.0;
    plan.system.manifold = {0};
    plan.initial_state = pure_state_from_bloch(r0);
    plan.noise.sigma = opts.sigma;
    const auto steps = static_cast<std::size_t>(std::ceil(opts.t / opts.dt / static_cast<double>(opts.points))) * opts.points;
    plan.dt = opts.t / static_cast<double>(steps);
    plan.horizon = opts.t;
    plan.output_stride = steps / opts.points;
    plan.n_traj = opts.n_traj;
    plan.observables = {Observable::bloch};
    plan.master_seed = resolve_seed(20240601, opts.common.seed);
    plan.allow_coarse_step = true;  // the two-level splitting sets the scale, not a bath
    plan.validate();

    const auto table = run_ensemble(plan, *engine, {opts.common.workers});
    std::vector<Comparison> comparisons;
    std::vector<std::vector<double>> formula(3);
    for (double t : table.times) {
        const auto r = rabi_evolve({r0, 0.0}, omega, opts.sigma, t).R;
        for (int i = 0; i < 3; ++i) formula[static_cast<std::size_t>(i)].push_back(r(i));
    }
    for (int i = 0; i < 3; ++i) {
        const std::string col = "R" + std::to_string(i + 1);
        comparisons.push_back({col + " vs damped precession",
                               compare_to_oracle(table.column(col), formula[static_cast<std::size_t>(i)], opts.allowance)});
    }

    std::ostringstream cfg_text;
    cfg_text << "rabi omega=" << omega.transpose() << " r0=" << r0.transpose() << " sigma=" << opts.sigma
             << " t=" << opts.t << " dt=" << plan.dt << " n_traj=" << opts.n_traj << " engine=" << opts.engine
             << " allowance=" << opts.allowance;
    const RunHeader header{plan.master_seed, cfg_text.str()};
    const fs::path out_dir = prepare_out_dir(opts.common.out_dir);
    {
        auto out = open_output(out_dir / "rabi.csv");
        write_estimates_csv(out, table, header);
        auto curves = open_output(out_dir / "rabi_formula.csv");
        write_curves_csv(curves, table.times, {"R1", "R2", "R3"}, formula, header);
    }
    const auto& last = table.values.back();
    const double r3 = last[table.column_index("R3")].mean;
    const double r3_clamped = std::clamp(r3, -1.0, 1.0);
    const auto [p_plus, p_minus] = rabi_probabilities(r3_clamped);
    json body;
    body["command"] = "rabi";
    body["damping_factor"] = std::exp(-omega.squaredNorm() * opts.sigma * opts.sigma * opts.t / 8.0);
    body["final"] = {{"t", table.times.back()}, {"R3", r3}, {"P_plus", p_plus}, {"P_minus", p_minus}};
    body["comparisons"] = comparisons_to_json(comparisons);
    body["pass"] = all_gating_pass(comparisons);
    write_json((out_dir / "rabi.json").string(), body, header);
    print_comparisons(comparisons);
    return all_gating_pass(comparisons) ? kOk : kComparisonFailed;
}

// ---------------------------------------------------------------- bounds

struct BoundsOptions {
    std::vector<double> decay_mev;
    std::optional<double> rabi_mhz;
    double accuracy = 0.02;
    std::string out;
};

int cmd_bounds(const BoundsOptions& opts, const CLI::App& cmd) {
    if (opts.decay_mev.empty() && !opts.rabi_mhz) {
        std::cerr << cmd.help();
        return kUsage;
    }
    for (double e : opts.decay_mev)
        if (!(e >= 0.0)) throw UsageError("--decay-mev energies must be non-negative");
    if (opts.rabi_mhz && !(*opts.rabi_mhz > 0.0)) throw UsageError("--rabi-mhz must be positive");
    if (opts.rabi_mhz && !(opts.accuracy > 0.0 && opts.accuracy < 0.5))
        throw UsageError("--accuracy must lie in (0, 1/2)");

    nlohmann::ordered_json doc;
    doc["decay"] = json::array();
    for (double e : opts.decay_mev)
        doc["decay"].push_back({{"input", {{"E_D_MeV", e}}},
                                {"bound_MeV", decay_bound_m_sigma(e)},
                                {"bound_GeV", decay_bound_m_sigma(e) * 1e-3},
                                {"formula", "M_sigma > E_D / (8 pi)"}});
    if (opts.rabi_mhz)
        doc["rabi"] = {{"input", {{"omega_MHz", *opts.rabi_mhz}, {"accuracy", opts.accuracy}}},
                       {"bound_GeV", itano_bound(*opts.rabi_mhz, opts.accuracy)},
                       {"formula", "(1/2)(1 - exp(-pi Omega sigma^2 / 8)) = accuracy, M_sigma = 1/sigma^2, hbar = " +
                                       format_double(kHbarGeVSeconds) + " GeV s"}};
    doc["oscillation"] = json::array();
    for (const auto& b : kOscillationBounds)
        doc["oscillation"].push_back({{"system", b.system}, {"bound_GeV", b.m_sigma_gev}, {"formula", "recorded"}});

    const std::string text = doc.dump(2);
    std::cout << text << '\n';
    if (!opts.out.empty()) {
        std::ostringstream args;
        for (double e : opts.decay_mev) args << e << ' ';
        args << opts.rabi_mhz.value_or(0.0) << ' ' << opts.accuracy;
        write_json(opts.out, json::parse(text), RunHeader{0, args.str()});
    }
    return kOk;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::string& suite) {
    const auto& suites = validation_suites();
    const auto it = suites.find(suite);
    if (it == suites.end()) {
        std::cerr << "unknown suite '" << suite << "'; expected one of:";
        for (const auto& [name, fn] : suites) std::cerr << ' ' << name;
        std::cerr << '\n';
        return kUsage;
    }
    bool all = true;
    for (const auto& check : it->second()) {
        std::cout << (check.passed ? "PASS " : "FAIL ") << check.name << "  " << check.detail << '\n';
        all = all && check.passed;
    }
    return all ? kOk : kComparisonFailed;
}

// ---------------------------------------------------------------- compare

using EstimateSeries = std::map<std::string, std::vector<std::pair<double, EnsembleEstimate>>>;

EstimateSeries read_estimates_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    EstimateSeries out;
    std::string line;
    std::size_t line_no = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        if (!seen_header) {
            if (line != "t,observable,mean,std_error,n")
                throw ConfigError(line_no, path, "expected header t,observable,mean,std_error,n");
            seen_header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() == 4) f.emplace_back();  // trailing empty field
        if (f.size() != 5) throw ConfigError(line_no, path, "expected 5 fields");
        try {
            EnsembleEstimate e;
            e.mean = std::stod(f[2]);
            if (!f[3].empty()) e.std_error = std::stod(f[3]);
            e.n = std::stoul(f[4]);
            out[f[1]].emplace_back(std::stod(f[0]), e);
        } catch (const std::logic_error&) {
            throw ConfigError(line_no, path, "malformed number");
        }
    }
    if (!seen_header) throw ConfigError(0, path, "no estimate rows");
    return out;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, const std::string& out) {
    const auto a = read_estimates_csv(a_path);
    const auto b = read_estimates_csv(b_path);
    std::vector<EnsembleEstimate> xa, xb;
    std::size_t shared = 0;
    for (const auto& [name, rows] : a) {
        const auto it = b.find(name);
        if (it == b.end()) continue;
        ++shared;
        const auto& other = it->second;
        if (other.size() != rows.size()) throw UsageError("observable " + name + " has different time grids");
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (std::abs(rows[k].first - other[k].first) > 1e-12 * std::max(1.0, std::abs(rows[k].first)))
                throw UsageError("observable " + name + " has different time grids");
            xa.push_back(rows[k].second);
            xb.push_back(other[k].second);
        }
    }
    if (shared == 0) throw UsageError("the files share no observables");
    const auto report = compare_estimates(xa, xb);
    json body = report_to_json(report);
    body["command"] = "compare";
    body["observables"] = shared;
    std::cout << body.dump(2) << '\n';
    if (!out.empty()) write_json(out, body, RunHeader{0, a_path + "\n" + b_path});
    return report.passed ? kOk : kComparisonFailed;
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic Schrodinger equation laboratory"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    DecayOptions decay;
    auto* decay_cmd = app.add_subcommand("decay", "Decay of a level into a quasi-continuum, compared with WW oracles");
    decay_cmd->add_option("--config", decay.config, "Experiment config file")->required();
    decay_cmd->add_option("--engine", decay.engine, "nonlinear-sse | imaginary-noise | linearized | pathwise | all");
    decay_cmd->add_option("--sigma", decay.sigma, "Noise strength (overrides the config)");
    decay_cmd->add_option("--n-traj", decay.n_traj, "Trajectory count (overrides the config)");
    decay_cmd->add_option("--t-min", decay.t_min, "Compare against oracles only for t >= t-min (default 0.5/Gamma)");
    add_common(decay_cmd, decay.common);

    ZenoOptions zeno;
    auto* zeno_cmd = app.add_subcommand("zeno", "Small-time survival against the Zeno expansion");
    zeno_cmd->add_option("--config", zeno.config, "Experiment config file")->required();
    zeno_cmd->add_option("--sigma", zeno.sigma, "Noise strength (overrides the config)");
    zeno_cmd->add_option("--n-traj", zeno.n_traj, "Trajectory count (overrides the config)");
    zeno_cmd->add_option("--points", zeno.points, "Output times");
    add_common(zeno_cmd, zeno.common);

    RabiOptions rabi;
    auto* rabi_cmd = app.add_subcommand("rabi", "Two-level Rabi precession with stochastic damping");
    rabi_cmd->add_option("--omega", rabi.omega, "Precession vector (3 components)")->expected(3)->delimiter(',');
    rabi_cmd->add_option("--r0", rabi.r0, "Initial unit Bloch vector (3 components)")->expected(3)->delimiter(',');
    rabi_cmd->add_option("--sigma", rabi.sigma, "Noise strength");
    rabi_cmd->add_option("--t", rabi.t, "Final time");
    rabi_cmd->add_option("--dt", rabi.dt, "Maximum step");
    rabi_cmd->add_option("--n-traj", rabi.n_traj, "Trajectory count");
    rabi_cmd->add_option("--points", rabi.points, "Output times");
    rabi_cmd->add_option("--engine", rabi.engine, "imaginary-noise (exact in time) | nonlinear-sse");
    rabi_cmd->add_option("--allowance", rabi.allowance,
                         "Absolute tolerance added to the z-test, e.g. for the O(dt) weak bias of nonlinear-sse");
    add_common(rabi_cmd, rabi.common);

    BoundsOptions bounds;
    auto* bounds_cmd = app.add_subcommand("bounds", "Lower bounds on M_sigma from decays and Rabi experiments");
    bounds_cmd->add_option("--decay-mev", bounds.decay_mev, "Characteristic decay energies (MeV)");
    bounds_cmd->add_option("--rabi-mhz", bounds.rabi_mhz, "Rabi angular frequency (MHz)");
    bounds_cmd->add_option("--accuracy", bounds.accuracy, "Allowed probability deviation");
    bounds_cmd->add_option("--out", bounds.out, "Also write the JSON to this file");

    std::string suite;
    auto* validate_cmd = app.add_subcommand("validate", "Run an invariant suite");
    validate_cmd->add_option("suite", suite, "ito | lindblad | appendix | golden-rule | recipe")->required();

    std::string cmp_a, cmp_b, cmp_out;
    auto* compare_cmd = app.add_subcommand("compare", "z-score comparison of two estimate CSV files");
    compare_cmd->add_option("a", cmp_a, "First estimates CSV")->required();
    compare_cmd->add_option("b", cmp_b, "Second estimates CSV")->required();
    compare_cmd->add_option("--out", cmp_out, "Write the report JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    if (decay_cmd->parsed()) return guarded([&] { return cmd_decay(decay); });
    if (zeno_cmd->parsed()) return guarded([&] { return cmd_zeno(zeno); });
    if (rabi_cmd->parsed()) return guarded([&] { return cmd_rabi(rabi); });
    if (bounds_cmd->parsed()) return guarded([&] { return cmd_bounds(bounds, *bounds_cmd); });
    if (validate_cmd->parsed()) return guarded([&] { return cmd_validate(suite); });
    if (compare_cmd->parsed()) return guarded([&] { return cmd_compare(cmp_a, cmp_b, cmp_out); });
    return kUsage;
}
