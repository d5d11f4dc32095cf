#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sselab/brownian.hpp"
#include "sselab/errors.hpp"
#include "sselab/hamiltonian.hpp"
#include "sselab/rng.hpp"
#include "sselab/statistics.hpp"
#include "sselab/system.hpp"
#include "sselab/trajectory.hpp"

namespace sselab {

enum class Engine { nonlinear_sse, imaginary_noise, linearized, pathwise };
enum class Observable { occupations, survival, density_matrix, bloch };

inline std::string to_string(Engine e) {
    switch (e) {
        case Engine::nonlinear_sse: return "nonlinear-sse";
        case Engine::imaginary_noise: return "imaginary-noise";
        case Engine::linearized: return "linearized";
        case Engine::pathwise: return "pathwise";
    }
    return "unknown";
}

inline std::optional<Engine> parse_engine(const std::string& name) {
    for (auto e : {Engine::nonlinear_sse, Engine::imaginary_noise, Engine::linearized, Engine::pathwise})
        if (to_string(e) == name) return e;
    if (name == "pathwise-closed-form") return Engine::pathwise;
    return std::nullopt;
}

inline std::string to_string(Observable o) {
    switch (o) {
        case Observable::occupations: return "occupations";
        case Observable::survival: return "survival";
        case Observable::density_matrix: return "density_matrix";
        case Observable::bloch: return "bloch";
    }
    return "unknown";
}

inline std::optional<Observable> parse_observable(const std::string& name) {
    for (auto o : {Observable::occupations, Observable::survival, Observable::density_matrix, Observable::bloch})
        if (to_string(o) == name) return o;
    return std::nullopt;
}

struct ExperimentPlan {
    SystemSpec system;
    NoiseParams noise;
    double dt = 0.01;
    double horizon = 1.0;
    std::size_t n_traj = 1000;
    std::vector<Observable> observables{Observable::survival};
    std::uint64_t master_seed = 0;
    /// Starting state; the basis state `system.initial` when empty.
    std::optional<VectorXcd> initial_state;
    /// Record every `output_stride` steps.
    std::size_t output_stride = 1;
    /// Accept dt * max|E_n - E_s| > 0.1.
    bool allow_coarse_step = false;
    /// Mass shift and width for the pathwise engine; derived from the bath when empty.
    std::optional<WWParams> ww;

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

    std::vector<double> output_times() const {
        std::vector<double> out;
        for (std::size_t k = 0; k <= steps(); k += output_stride) out.push_back(static_cast<double>(k) * dt);
        return out;
    }

    VectorXcd start_state() const {
        if (initial_state) return *initial_state;
        VectorXcd psi = VectorXcd::Zero(static_cast<Eigen::Index>(system.dim()));
        psi(static_cast<Eigen::Index>(system.initial)) = 1.0;
        return psi;
    }

    double step_product() const {
        double worst = 0.0;
        const double es = system.e_s();
        for (double e : system.energies) worst = std::max(worst, std::abs(e - es));
        return dt * worst;
    }

    void validate() const {
        system.validate();
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("ExperimentPlan: dt must be positive");
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("ExperimentPlan: horizon must be positive");
        if (steps() == 0 || std::abs(static_cast<double>(steps()) * dt - horizon) > 1e-9 * horizon)
            throw std::invalid_argument("ExperimentPlan: horizon must be a whole number of steps");
        if (output_stride == 0 || steps() % output_stride != 0)
            throw std::invalid_argument("ExperimentPlan: output_stride must divide the step count");
        if (n_traj == 0) throw std::invalid_argument("ExperimentPlan: n_traj must be >= 1");
        if (observables.empty()) throw std::invalid_argument("ExperimentPlan: no observables requested");
        if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma)) throw std::invalid_argument("ExperimentPlan: sigma must be >= 0");
        if (!allow_coarse_step && step_product() > 0.1 + 1e-12)
            throw std::invalid_argument("ExperimentPlan: dt * max|E_n - E_s| = " + std::to_string(step_product()) +
                                        " exceeds 0.1 (set allow_coarse_step to override)");
        if (initial_state) {
            if (initial_state->size() != static_cast<Eigen::Index>(system.dim()))
                throw std::invalid_argument("ExperimentPlan: initial_state has the wrong dimension");
            if (std::abs(initial_state->squaredNorm() - 1.0) > 1e-9)
                throw std::invalid_argument("ExperimentPlan: initial_state is not normalized");
        }
        for (auto o : observables)
            if (o == Observable::bloch && system.dim() != 2)
                throw std::invalid_argument("ExperimentPlan: the bloch observable needs a two-level system");
    }
};

/// Per-time ensemble estimates; values[k][c] is column c at times[k].
struct EstimateTable {
    Engine engine = Engine::nonlinear_sse;
    std::vector<double> times;
    std::vector<std::string> columns;
    std::vector<std::vector<EnsembleEstimate>> values;
    std::size_t n_traj = 0;

    std::size_t column_index(const std::string& name) const {
        auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw std::out_of_range("EstimateTable: no column " + name);
        return static_cast<std::size_t>(it - columns.begin());
    }

    std::vector<EnsembleEstimate> column(const std::string& name) const {
        const std::size_t c = column_index(name);
        std::vector<EnsembleEstimate> out;
        out.reserve(values.size());
        for (const auto& row : values) out.push_back(row[c]);
        return out;
    }
};

namespace detail {

inline std::vector<std::string> observable_columns(const ExperimentPlan& plan) {
    std::vector<std::string> out;
    const std::size_t n = plan.system.dim();
    for (auto o : plan.observables) {
        switch (o) {
            case Observable::occupations:
                for (std::size_t i = 0; i < n; ++i) out.push_back("p_" + std::to_string(i));
                break;
            case Observable::survival: out.push_back("survival"); break;
            case Observable::density_matrix:
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = i; j < n; ++j) {
                        out.push_back("rho_re_" + std::to_string(i) + "_" + std::to_string(j));
                        if (j != i) out.push_back("rho_im_" + std::to_string(i) + "_" + std::to_string(j));
                    }
                break;
            case Observable::bloch:
                out.insert(out.end(), {"R1", "R2", "R3"});
                break;
        }
    }
    return out;
}

// Appends observable values for Schrodinger amplitudes psi in column order.
inline void extract(const ExperimentPlan& plan, const VectorXcd& psi, const VectorXcd& psi0, std::vector<double>& row) {
    row.clear();
    const auto n = psi.size();
    for (auto o : plan.observables) {
        switch (o) {
            case Observable::occupations:
                for (Eigen::Index i = 0; i < n; ++i) row.push_back(std::norm(psi(i)));
                break;
            case Observable::survival: row.push_back(std::norm(psi0.dot(psi))); break;
            case Observable::density_matrix:
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index j = i; j < n; ++j) {
                        const cd rho_ij = psi(i) * std::conj(psi(j));
                        row.push_back(rho_ij.real());
                        if (j != i) row.push_back(rho_ij.imag());
                    }
                break;
            case Observable::bloch: {
                // R = -<psi|tau|psi>
                const cd a = psi(0), b = psi(1);
                const cd cross = std::conj(a) * b;
                row.push_back(-2.0 * cross.real());
                row.push_back(-2.0 * cross.imag());
                row.push_back(-(std::norm(a) - std::norm(b)));
                break;
            }
        }
    }
}

inline WWParams resolve_ww(const ExperimentPlan& plan) {
    if (plan.ww) return *plan.ww;
    if (!plan.system.bath_spacing)
        throw std::invalid_argument("pathwise engine: supply WW parameters or a bath spacing");
    return compute_ww_params(plan.system, *plan.system.bath_spacing);
}

// Shared, read-only per-run data for the engines.
struct EngineContext {
    const ExperimentPlan& plan;
    Engine engine;
    VectorXcd psi0;
    std::optional<Hamiltonian> hamiltonian;
    std::optional<ImaginaryNoisePropagator> propagator;
    std::optional<LinearizedSystem> linearized;
    std::optional<WWParams> ww;

    EngineContext(const ExperimentPlan& p, Engine e) : plan(p), engine(e), psi0(p.start_state()) {
        switch (engine) {
            case Engine::nonlinear_sse: hamiltonian.emplace(plan.system.hamiltonian_matrix()); break;
            case Engine::imaginary_noise:
                propagator.emplace(Hamiltonian(plan.system.hamiltonian_matrix()), psi0);
                break;
            case Engine::linearized:
                if (plan.initial_state) throw std::invalid_argument("linearized engine: starts from the basis state `initial`");
                linearized.emplace(plan.system, plan.noise.sigma);
                break;
            case Engine::pathwise:
                if (plan.initial_state) throw std::invalid_argument("pathwise engine: starts from the basis state `initial`");
                if (plan.system.manifold_dim() != 1)
                    throw std::invalid_argument("pathwise engine: needs a non-degenerate initial state");
                ww = resolve_ww(plan);
                break;
        }
    }
};

// Runs one trajectory and calls sink(output_index, psi) at every output time.
template <class Sink>
void run_one(const EngineContext& ctx, std::uint64_t stream, Sink&& sink) {
    const ExperimentPlan& plan = ctx.plan;
    const RngPolicy rng{plan.master_seed, stream};
    const std::size_t n_steps = plan.steps();
    const std::size_t stride = plan.output_stride;
    const double sigma = plan.noise.sigma;
    const BrownianPath path = sigma == 0.0 ? zero_path(plan.dt, n_steps) : sample_path(plan.dt, n_steps, rng);

    switch (ctx.engine) {
        case Engine::nonlinear_sse: {
            StateVector state;
            state.amplitudes = ctx.psi0;
            sink(0, state.amplitudes);
            for (std::size_t k = 0; k < n_steps; ++k) {
                state = sse_step(state, *ctx.hamiltonian, sigma, path.increment(k), plan.dt);
                if ((k + 1) % stride == 0) sink((k + 1) / stride, state.amplitudes);
            }
            break;
        }
        case Engine::imaginary_noise:
            for (std::size_t k = 0; k <= n_steps; k += stride)
                sink(k / stride, ctx.propagator->propagate(sigma, path.times[k], path.values[k]).amplitudes);
            break;
        case Engine::linearized: {
            CoefficientState c = CoefficientState::initial(plan.system);
            sink(0, c.amplitudes(plan.system));
            for (std::size_t k = 0; k < n_steps; ++k) {
                c = ctx.linearized->step(c, path.increment(k), plan.dt);
                c.time = path.times[k + 1];
                if ((k + 1) % stride == 0) sink((k + 1) / stride, c.amplitudes(plan.system));
            }
            break;
        }
        case Engine::pathwise: {
            const auto& spec = plan.system;
            const cd i(0.0, 1.0);
            const auto off = spec.off_manifold();
            for (std::size_t k = 0; k <= n_steps; k += stride) {
                const double t = path.times[k];
                CoefficientState c;
                c.time = t;
                c.C = VectorXcd::Zero(static_cast<Eigen::Index>(spec.dim()));
                c.C(static_cast<Eigen::Index>(spec.initial)) =
                    std::exp(-i * ctx.ww->mass_shift() * t - 0.5 * ctx.ww->width() * t);
                for (auto m : off)
                    c.C(static_cast<Eigen::Index>(m)) = pathwise_cm(spec, *ctx.ww, sigma, m, path.values[k], t);
                sink(k / stride, c.amplitudes(spec));
            }
            break;
        }
    }
}

}  // namespace detail

/// Why `engine` cannot run `plan`, or nothing when it can.
inline std::optional<std::string> engine_unavailable(const ExperimentPlan& plan, Engine engine) {
    if (engine == Engine::nonlinear_sse || engine == Engine::imaginary_noise) return std::nullopt;
    if (plan.initial_state) return to_string(engine) + " starts from the basis state `initial`";
    if (engine == Engine::pathwise) {
        if (plan.system.manifold_dim() != 1) return std::string("pathwise needs a non-degenerate initial state");
        if (!plan.ww && !plan.system.bath_spacing) return std::string("pathwise needs WW parameters or a bath spacing");
    }
    return std::nullopt;
}

/// Amplitudes at each output time for a single stream (for trajectory export).
inline std::vector<VectorXcd> run_trajectory(const ExperimentPlan& plan, Engine engine, std::uint64_t stream_index) {
    plan.validate();
    const detail::EngineContext ctx(plan, engine);
    std::vector<VectorXcd> out(plan.output_times().size());
    detail::run_one(ctx, stream_index, [&](std::size_t k, const VectorXcd& psi) { out[k] = psi; });
    return out;
}

struct RunOptions {
    /// 0 picks the hardware concurrency.
    std::size_t workers = 0;
    std::size_t block_size = 64;
};

/// Runs streams 0..n_traj-1 and aggregates every observable at every output
/// time. Streams are grouped in fixed blocks accumulated in stream order and
/// the blocks are merged by a fixed pairwise tree, so the table does not depend
/// on the number of workers. A failing trajectory aborts the run with a
/// NumericFailure carrying its stream index.
inline EstimateTable run_ensemble(const ExperimentPlan& plan, Engine engine, RunOptions options = {}) {
    plan.validate();
    const detail::EngineContext ctx(plan, engine);

    EstimateTable table;
    table.engine = engine;
    table.times = plan.output_times();
    table.columns = detail::observable_columns(plan);
    table.n_traj = plan.n_traj;
    const std::size_t n_times = table.times.size();
    const std::size_t n_cols = table.columns.size();

    const std::size_t block = std::max<std::size_t>(1, options.block_size);
    const std::size_t n_blocks = (plan.n_traj + block - 1) / block;
    std::size_t workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n_blocks);

    using Accumulator = std::vector<RunningStats>;  // n_times * n_cols
    std::vector<Accumulator> partial(n_blocks);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex failure_mutex;
    std::optional<std::size_t> failed_stream;
    std::string failure_message;

    auto work = [&] {
        std::vector<double> row;
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks || abort.load()) return;
            Accumulator acc(n_times * n_cols);
            const std::size_t first = b * block;
            const std::size_t last = std::min(plan.n_traj, first + block);
            for (std::size_t s = first; s < last; ++s) {
                try {
                    detail::run_one(ctx, s, [&](std::size_t k, const VectorXcd& psi) {
                        detail::extract(plan, psi, ctx.psi0, row);
                        for (std::size_t c = 0; c < n_cols; ++c) {
                            if (!std::isfinite(row[c]))
                                throw NumericFailure("non-finite observable " + table.columns[c], table.times[k]);
                            acc[k * n_cols + c].add(row[c]);
                        }
                    });
                } catch (const std::exception& e) {
                    std::lock_guard lock(failure_mutex);
                    if (!failed_stream || s < *failed_stream) {
                        failed_stream = s;
                        failure_message = e.what();
                    }
                    abort.store(true);
                    return;
                }
            }
            partial[b] = std::move(acc);
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failed_stream)
        throw NumericFailure("trajectory stream " + std::to_string(*failed_stream) + " failed: " + failure_message,
                             std::nullopt, *failed_stream);

    Accumulator total = tree_reduce(std::move(partial), [](Accumulator& a, const Accumulator& b) {
        if (a.empty()) {
            a = b;
            return;
        }
        for (std::size_t i = 0; i < a.size(); ++i) a[i].merge(b[i]);
    });
    table.values.assign(n_times, std::vector<EnsembleEstimate>(n_cols));
    for (std::size_t k = 0; k < n_times; ++k)
        for (std::size_t c = 0; c < n_cols; ++c) table.values[k][c] = total[k * n_cols + c].estimate();
    return table;
}

struct ComparisonReport {
    std::vector<double> z;
    double max_abs_z = 0.0;
    double fraction_above_3 = 0.0;
    bool passed = false;
    /// Set when a point could not be scored (zero error with a real deviation).
    std::optional<std::string> hard_failure;
};

namespace detail {

inline ComparisonReport score(const std::vector<double>& deviation, const std::vector<double>& scale,
                              const std::vector<double>& error) {
    ComparisonReport r;
    r.z.resize(deviation.size());
    std::size_t above = 0;
    for (std::size_t k = 0; k < deviation.size(); ++k) {
        double z = 0.0;
        // Errors at rounding level (a quantity that is constant across the
        // ensemble) are treated as exactly zero.
        const double floor = 1e-12 * std::max(1.0, std::abs(scale[k]));
        if (error[k] > floor) {
            z = deviation[k] / error[k];
        } else if (std::abs(deviation[k]) > floor) {
            r.hard_failure = "zero standard error with deviation " + std::to_string(deviation[k]) + " at point " +
                             std::to_string(k);
            z = std::numeric_limits<double>::infinity();
        }
        r.z[k] = z;
        r.max_abs_z = std::max(r.max_abs_z, std::abs(z));
        if (std::abs(z) > 3.0) ++above;
    }
    r.fraction_above_3 = deviation.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(deviation.size());
    r.passed = !r.hard_failure && r.fraction_above_3 <= 0.01 && r.max_abs_z <= 5.0;
    return r;
}

}  // namespace detail

/// z = (mean - oracle) / std_error per point; passes iff at most 1% of points
/// have |z| > 3 and max |z| <= 5. `allowance` is an absolute tolerance for
/// known model error, subtracted from |mean - oracle| before scoring.
inline ComparisonReport compare_to_oracle(const std::vector<EnsembleEstimate>& estimates,
                                          const std::vector<double>& oracle, double allowance = 0.0) {
    if (estimates.size() != oracle.size()) throw std::invalid_argument("compare_to_oracle: grid sizes differ");
    std::vector<double> dev(oracle.size()), err(oracle.size());
    for (std::size_t k = 0; k < oracle.size(); ++k) {
        double d = estimates[k].mean - oracle[k];
        d = std::copysign(std::max(0.0, std::abs(d) - allowance), d);
        dev[k] = d;
        err[k] = estimates[k].std_error.value_or(0.0);
    }
    return detail::score(dev, oracle, err);
}

inline ComparisonReport compare_to_oracle(const EstimateTable& table, const std::string& column,
                                          const std::function<double(double)>& oracle, double allowance = 0.0) {
    std::vector<double> values;
    values.reserve(table.times.size());
    for (double t : table.times) values.push_back(oracle(t));
    return compare_to_oracle(table.column(column), values, allowance);
}

/// Two independent estimates: z = (m1 - m2) / sqrt(se1^2 + se2^2).
inline ComparisonReport compare_estimates(const std::vector<EnsembleEstimate>& a, const std::vector<EnsembleEstimate>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("compare_estimates: grid sizes differ");
    std::vector<double> dev(a.size()), scale(a.size()), err(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        dev[k] = a[k].mean - b[k].mean;
        scale[k] = std::max(std::abs(a[k].mean), std::abs(b[k].mean));
        const double ea = a[k].std_error.value_or(0.0), eb = b[k].std_error.value_or(0.0);
        err[k] = std::sqrt(ea * ea + eb * eb);
    }
    return detail::score(dev, scale, err);
}

/// Every shared column of two tables on the same time grid, scored together.
inline ComparisonReport compare_tables(const EstimateTable& a, const EstimateTable& b,
                                       const std::vector<std::string>& columns = {}) {
    if (a.times.size() != b.times.size()) throw std::invalid_argument("compare_tables: time grids differ");
    for (std::size_t k = 0; k < a.times.size(); ++k)
        if (std::abs(a.times[k] - b.times[k]) > 1e-12 * std::max(1.0, std::abs(a.times[k])))
            throw std::invalid_argument("compare_tables: time grids differ");
    std::vector<std::string> names = columns;
    if (names.empty())
        for (const auto& c : a.columns)
            if (std::find(b.columns.begin(), b.columns.end(), c) != b.columns.end()) names.push_back(c);
    std::vector<EnsembleEstimate> xa, xb;
    for (const auto& name : names) {
        const auto ca = a.column(name), cb = b.column(name);
        xa.insert(xa.end(), ca.begin(), ca.end());
        xb.insert(xb.end(), cb.begin(), cb.end());
    }
    return compare_estimates(xa, xb);
}

}  // namespace sselab
