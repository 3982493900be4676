#pragma once

// Parameter sweeps over group size N, pulse speed and cavity damping. Every
// grid point is an independent task; results are always returned in the
// declared order (N-major, then speed, then kappa) whatever the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pulse_dicke/closed.hpp"
#include "pulse_dicke/open.hpp"

namespace pulse_dicke {

struct SweepGrid {
    std::vector<int> n_values;
    std::vector<double> upsilon_values;
    std::vector<double> kappa_values;
    double nbar{0.0};

    static std::vector<double> log_spaced(double lo, double hi, int count) {
        if (!(lo > 0.0) || !(hi > lo) || count < 2)
            throw Error(ErrorCode::InvalidArgument, "log grid needs 0 < lo < hi and at least two points");
        std::vector<double> v(count);
        const double step = std::log(hi / lo) / (count - 1);
        for (int i = 0; i < count; ++i) v[i] = lo * std::exp(step * i);
        v.front() = lo;
        v.back() = hi;
        return v;
    }

    void validate() const {
        if (n_values.empty()) throw Error(ErrorCode::InvalidArgument, "grid has no group sizes");
        if (upsilon_values.empty()) throw Error(ErrorCode::InvalidArgument, "grid has no pulse speeds");
        for (int n : n_values)
            if (n < 1) throw Error(ErrorCode::InvalidArgument, "group sizes must be >= 1");
        for (std::size_t i = 0; i < upsilon_values.size(); ++i) {
            if (!(upsilon_values[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "pulse speeds must be positive");
            if (i > 0 && !(upsilon_values[i] > upsilon_values[i - 1]))
                throw Error(ErrorCode::InvalidArgument, "pulse speeds must be strictly ascending");
        }
        for (double k : kappa_values)
            if (!(k >= 0.0)) throw Error(ErrorCode::InvalidArgument, "kappa values must be >= 0");
        if (!(nbar >= 0.0)) throw Error(ErrorCode::InvalidArgument, "nbar must be >= 0");
    }
};

enum class RecordStatus { Pass, Failed };

struct SweepRecord {
    int n_attackers{0};
    double upsilon{0.0};
    int n_max_used{0};
    double fidelity_final{std::numeric_limits<double>::quiet_NaN()};
    double entropy_final{std::numeric_limits<double>::quiet_NaN()};
    double entropy_max{std::numeric_limits<double>::quiet_NaN()};
    std::optional<double> kappa;
    std::optional<double> negativity_final;
    std::optional<double> log_negativity_final;
    std::optional<double> purity_final;
    double truncation_tail{std::numeric_limits<double>::quiet_NaN()};
    double norm_drift{std::numeric_limits<double>::quiet_NaN()};
    RecordStatus status{RecordStatus::Pass};
    std::string error;

    bool failed() const { return status == RecordStatus::Failed; }
};

// Fock cutoff selection. Closed runs start at `start_n_max` and double until
// the tail check passes and the final fidelity moves by less than
// `fidelity_shift_tolerance` between n_max and 2 n_max. Open runs take the
// smallest n_max on the ladder open_start, open_start + open_step, ... whose
// closed (kappa = 0) run passes the tail check, and step further up if the
// open run itself overflows.
struct TruncationPolicy {
    int start_n_max{40};
    int limit_n_max{320};
    double fidelity_shift_tolerance{1e-6};
    bool verify_by_doubling{true};
    std::optional<int> fixed_n_max;
    int open_start{20};
    int open_step{10};
};

struct ExperimentConfig {
    double omega{1.0};
    double epsilon{1.0};
    double peak{1.0};
    TruncationPolicy truncation{};
    IntegratorConfig closed_integrator{};
    IntegratorConfig open_integrator{.steps_per_unit_time = 250};
    int sample_count{41};
    int max_step_refinements{3};
    int workers{1};
    std::function<void(const std::string&)> progress;

    ModelParams model(int n_attackers, int n_max) const { return {n_attackers, omega, epsilon, n_max}; }
    PulseProfile pulse(double upsilon) const { return {upsilon, peak, PulseShape::Triangular}; }

    void report(const std::string& msg) const {
        if (progress) progress(msg);
    }
};

// Runs fn(i) for i in [0, count) on `workers` threads. Results must be written
// by index; the first exception (by task index) is rethrown after joining.
inline void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, count));
    std::vector<std::exception_ptr> errors(std::max(count, 0));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline int default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

struct ClosedOutcome {
    SweepRecord record;
    Trajectory trajectory;
};

namespace detail {

inline SweepRecord failed_record(int n, double upsilon, int n_max, const std::string& why) {
    SweepRecord r;
    r.n_attackers = n;
    r.upsilon = upsilon;
    r.n_max_used = n_max;
    r.status = RecordStatus::Failed;
    r.error = why;
    return r;
}

// One closed run with step refinement on NORM_DRIFT.
inline Trajectory closed_run(int n, int n_max, double upsilon, const ExperimentConfig& cfg, int samples, bool enforce_tail) {
    const HilbertSpace space(cfg.model(n, n_max));
    IntegratorConfig ic = cfg.closed_integrator;
    ic.enforce_truncation = enforce_tail;
    for (int attempt = 0;; ++attempt) {
        try {
            return evolve_closed(initial_state(space), cfg.pulse(upsilon), ic, samples);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NormDrift || attempt >= cfg.max_step_refinements) throw;
            ic.steps_per_unit_time *= 2;
        }
    }
}

inline double entropy_peak(const Trajectory& traj) {
    double s = 0.0;
    for (const auto& st : traj.states) s = std::max(s, von_neumann_entropy(reduce_qubits(st)));
    return s;
}

}  // namespace detail

// Closed run of one (N, speed) point under the truncation policy.
inline ClosedOutcome run_closed_point(int n, double upsilon, const ExperimentConfig& cfg, int samples) {
    const TruncationPolicy& tp = cfg.truncation;
    int n_max = tp.fixed_n_max.value_or(tp.start_n_max);
    std::optional<Trajectory> base;
    try {
        while (true) {
            if (!base) {
                try {
                    base = detail::closed_run(n, n_max, upsilon, cfg, samples, true);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::TruncationOverflow || tp.fixed_n_max || 2 * n_max > tp.limit_n_max) throw;
                    n_max *= 2;
                    continue;
                }
            }
            if (tp.fixed_n_max || !tp.verify_by_doubling) break;
            if (2 * n_max > tp.limit_n_max)
                throw Error(ErrorCode::TruncationOverflow, "fidelity not converged below n_max limit " + std::to_string(tp.limit_n_max));
            Trajectory doubled = detail::closed_run(n, 2 * n_max, upsilon, cfg, 2, true);
            const double shift = std::abs(fidelity(base->initial(), base->final()) - fidelity(doubled.initial(), doubled.final()));
            if (shift < tp.fidelity_shift_tolerance) break;
            n_max *= 2;
            base.reset();
        }
    } catch (const Error& e) {
        return {detail::failed_record(n, upsilon, n_max, e.what()), {}};
    }

    SweepRecord r;
    r.n_attackers = n;
    r.upsilon = upsilon;
    r.n_max_used = n_max;
    r.fidelity_final = fidelity(base->initial(), base->final());
    r.entropy_final = von_neumann_entropy(reduce_qubits(base->final()));
    r.entropy_max = detail::entropy_peak(*base);
    r.truncation_tail = check_truncation(*base, cfg.closed_integrator.tail_levels, cfg.closed_integrator.tail_tolerance).max_tail_population;
    r.norm_drift = base->max_norm_drift;
    return {std::move(r), std::move(*base)};
}

inline std::vector<SweepRecord> sweep_fidelity(const SweepGrid& grid, const ExperimentConfig& cfg) {
    grid.validate();
    const int nu = int(grid.upsilon_values.size());
    const int count = int(grid.n_values.size()) * nu;
    std::vector<SweepRecord> out(count);
    std::mutex log_mutex;
    parallel_for(count, cfg.workers, [&](int i) {
        const int n = grid.n_values[i / nu];
        const double u = grid.upsilon_values[i % nu];
        out[i] = run_closed_point(n, u, cfg, cfg.sample_count).record;
        std::lock_guard lock(log_mutex);
        cfg.report("sweep-fidelity N=" + std::to_string(n) + " upsilon=" + std::to_string(u) +
                   (out[i].failed() ? " FAILED" : " F=" + std::to_string(out[i].fidelity_final)));
    });
    return out;
}

struct UStarResult {
    int n_attackers{0};
    double upsilon_star{0.0};
    double fidelity_min{0.0};
    int n_max_used{0};
    // Coarse-scan minimum and its grid index.
    double coarse_upsilon{0.0};
    double coarse_fidelity{0.0};
    int coarse_index{-1};
    int evaluations{0};
};

// Golden-section refinement (in log speed) of the coarse-scan minimum of
// `coarse`, which must be the records of one group size on an ascending grid.
inline UStarResult refine_ustar(const std::vector<SweepRecord>& coarse, double refine_tol, const ExperimentConfig& cfg) {
    if (coarse.size() < 3) throw Error(ErrorCode::InvalidArgument, "coarse scan needs at least three points");
    if (!(refine_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "refine_tol must be positive");
    int best = -1;
    for (int i = 0; i < int(coarse.size()); ++i) {
        if (coarse[i].failed()) continue;
        if (best < 0 || coarse[i].fidelity_final < coarse[best].fidelity_final) best = i;
    }
    if (best < 0) throw Error(ErrorCode::NoMinimum, "every coarse point failed");
    if (best == 0 || best == int(coarse.size()) - 1)
        throw Error(ErrorCode::NoMinimum, "fidelity is monotone across the bracket (minimum at an endpoint)");

    const int n = coarse[best].n_attackers;
    const int n_max = std::max({coarse[best - 1].n_max_used, coarse[best].n_max_used, coarse[best + 1].n_max_used});
    UStarResult res;
    res.n_attackers = n;
    res.n_max_used = n_max;
    res.coarse_index = best;
    res.coarse_upsilon = coarse[best].upsilon;
    res.coarse_fidelity = coarse[best].fidelity_final;
    res.upsilon_star = res.coarse_upsilon;
    res.fidelity_min = res.coarse_fidelity;

    auto eval = [&](double log_u) {
        const double u = std::exp(log_u);
        const Trajectory tr = detail::closed_run(n, n_max, u, cfg, 2, true);
        const double f = fidelity(tr.initial(), tr.final());
        ++res.evaluations;
        if (f < res.fidelity_min) {
            res.fidelity_min = f;
            res.upsilon_star = u;
        }
        return f;
    };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(coarse[best - 1].upsilon);
    double b = std::log(coarse[best + 1].upsilon);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    // |b - a| in log speed is the relative width of the bracket.
    while (b - a > refine_tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    cfg.report("find-ustar N=" + std::to_string(n) + " upsilon*=" + std::to_string(res.upsilon_star) +
               " F=" + std::to_string(res.fidelity_min));
    return res;
}

inline UStarResult find_ustar(int n_attackers, double upsilon_lo, double upsilon_hi, double refine_tol, const ExperimentConfig& cfg,
                              int coarse_points = 60) {
    const SweepGrid grid{{n_attackers}, SweepGrid::log_spaced(upsilon_lo, upsilon_hi, coarse_points), {}, 0.0};
    return refine_ustar(sweep_fidelity(grid, cfg), refine_tol, cfg);
}

struct EntropyRow {
    int n_attackers;
    double upsilon;
    double t;
    double lambda;
    double entropy;
};

struct EntropyPeak {
    int n_attackers;
    double upsilon;
    int n_max_used;
    double entropy_max;
    RecordStatus status;
    std::string error;
};

struct EntropyMap {
    std::vector<EntropyRow> rows;
    std::vector<EntropyPeak> peaks;
};

inline EntropyMap entropy_map(int n_attackers, const std::vector<double>& upsilon_values, int samples_per_trajectory,
                              const ExperimentConfig& cfg) {
    SweepGrid{{n_attackers}, upsilon_values, {}, 0.0}.validate();
    const int count = int(upsilon_values.size());
    std::vector<std::vector<EntropyRow>> rows(count);
    std::vector<EntropyPeak> peaks(count);
    parallel_for(count, cfg.workers, [&](int i) {
        const double u = upsilon_values[i];
        ClosedOutcome oc = run_closed_point(n_attackers, u, cfg, samples_per_trajectory);
        if (oc.record.failed()) {
            peaks[i] = {n_attackers, u, oc.record.n_max_used, std::numeric_limits<double>::quiet_NaN(), RecordStatus::Failed,
                        oc.record.error};
            return;
        }
        double smax = 0.0;
        const Trajectory& tr = oc.trajectory;
        for (std::size_t k = 0; k < tr.states.size(); ++k) {
            const double s = von_neumann_entropy(reduce_qubits(tr.states[k]));
            smax = std::max(smax, s);
            rows[i].push_back({n_attackers, u, tr.times[k], tr.lambdas[k], s});
        }
        peaks[i] = {n_attackers, u, oc.record.n_max_used, smax, RecordStatus::Pass, {}};
    });
    EntropyMap map;
    for (auto& r : rows) map.rows.insert(map.rows.end(), r.begin(), r.end());
    map.peaks = std::move(peaks);
    cfg.report("entropy-map N=" + std::to_string(n_attackers) + " done");
    return map;
}

struct NegativityRow {
    int n_attackers;
    double upsilon;
    double kappa;
    double t;
    double lambda;
    double negativity;
    double log_negativity;
    double purity;
    double trace;
};

struct NegativityTrace {
    std::vector<NegativityRow> rows;
    std::vector<SweepRecord> records;  // one per kappa, carrying end-of-pulse values
    std::vector<OpenDiagnostics> diagnostics;
};

// Smallest n_max on the open ladder whose closed run passes the tail check.
inline int open_truncation(int n_attackers, double upsilon, const ExperimentConfig& cfg) {
    const TruncationPolicy& tp = cfg.truncation;
    if (tp.fixed_n_max) return *tp.fixed_n_max;
    for (int n_max = tp.open_start; n_max <= tp.limit_n_max; n_max += tp.open_step) {
        const Trajectory tr = detail::closed_run(n_attackers, n_max, upsilon, cfg, cfg.sample_count, false);
        if (check_truncation(tr, cfg.closed_integrator.tail_levels, cfg.closed_integrator.tail_tolerance).pass) return n_max;
    }
    throw Error(ErrorCode::TruncationOverflow, "no n_max up to " + std::to_string(tp.limit_n_max) + " passes the tail check");
}

inline NegativityTrace negativity_trace(int n_attackers, double upsilon, const std::vector<double>& kappa_values, double nbar,
                                        int samples, const ExperimentConfig& cfg) {
    SweepGrid{{n_attackers}, {upsilon}, kappa_values, nbar}.validate();
    if (kappa_values.empty()) throw Error(ErrorCode::InvalidArgument, "no kappa values");
    const int count = int(kappa_values.size());
    NegativityTrace out;
    std::vector<std::vector<NegativityRow>> rows(count);
    out.records.resize(count);
    out.diagnostics.resize(count);

    int start_n_max = 0;
    try {
        start_n_max = open_truncation(n_attackers, upsilon, cfg);
    } catch (const Error& e) {
        for (int i = 0; i < count; ++i) {
            out.records[i] = detail::failed_record(n_attackers, upsilon, 0, e.what());
            out.records[i].kappa = kappa_values[i];
        }
        return out;
    }

    parallel_for(count, cfg.workers, [&](int i) {
        const double kappa = kappa_values[i];
        const OpenParams op{kappa, nbar};
        int n_max = start_n_max;
        IntegratorConfig ic = cfg.open_integrator;
        int refinements = 0;
        while (true) {
            std::vector<NegativityRow> local;
            NegativityRow last{};
            try {
                const HilbertSpace space(cfg.model(n_attackers, n_max));
                const OpenDiagnostics d = propagate_open(
                    projector(initial_state(space)), cfg.pulse(upsilon), op, ic, samples,
                    [&](int, double t, double lambda, const DensityMatrix& rho) {
                        const double tn = partial_transpose_trace_norm(rho);
                        last = {n_attackers, upsilon, kappa, t, lambda, negativity_from_trace_norm(tn),
                                log_negativity_from_trace_norm(tn), purity(rho), std::real(rho.trace())};
                        local.push_back(last);
                    });
                rows[i] = std::move(local);
                out.diagnostics[i] = d;
                SweepRecord& r = out.records[i];
                r.n_attackers = n_attackers;
                r.upsilon = upsilon;
                r.n_max_used = n_max;
                r.kappa = kappa;
                r.negativity_final = last.negativity;
                r.log_negativity_final = last.log_negativity;
                r.purity_final = last.purity;
                r.truncation_tail = d.max_tail_population;
                r.norm_drift = d.max_trace_drift;
                break;
            } catch (const Error& e) {
                const bool grow = e.code() == ErrorCode::TruncationOverflow && !cfg.truncation.fixed_n_max &&
                                  n_max + cfg.truncation.open_step <= cfg.truncation.limit_n_max;
                const bool refine = (e.code() == ErrorCode::PositivityLoss || e.code() == ErrorCode::TraceDrift) &&
                                    refinements < cfg.max_step_refinements;
                if (grow) {
                    n_max += cfg.truncation.open_step;
                } else if (refine) {
                    ic.steps_per_unit_time *= 2;
                    ++refinements;
                } else {
                    out.records[i] = detail::failed_record(n_attackers, upsilon, n_max, e.what());
                    out.records[i].kappa = kappa;
                    break;
                }
            }
        }
        cfg.report("negativity-trace N=" + std::to_string(n_attackers) + " kappa=" + std::to_string(kappa) +
                   (out.records[i].failed() ? " FAILED" : " done"));
    });
    for (auto& r : rows) out.rows.insert(out.rows.end(), r.begin(), r.end());
    return out;
}

}  // namespace pulse_dicke
