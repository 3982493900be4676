#pragma once

// Closed-system propagation of the pulsed Dicke model: i d(psi)/dt = H(lambda(t)) psi.

#include <algorithm>
#include <cmath>
#include <vector>

#include "pulse_dicke/integrator.hpp"
#include "pulse_dicke/model.hpp"
#include "pulse_dicke/state.hpp"

namespace pulse_dicke {

struct Trajectory {
    std::vector<double> times;
    std::vector<double> lambdas;
    std::vector<QuantumState> states;
    double max_norm_drift{0.0};
    // Richardson estimate of the end-state error; negative when not computed.
    double step_error_estimate{-1.0};

    const QuantumState& initial() const { return states.front(); }
    const QuantumState& final() const { return states.back(); }
};

struct TruncationReport {
    double max_tail_population{0.0};
    int tail_levels{0};
    double tolerance{0.0};
    bool pass{true};
};

// |n = 0> (x) |m = -N/2>, the ground state of H(lambda = 0).
inline QuantumState initial_state(const HilbertSpace& space) { return basis_state(space, {0, 0}); }

// Population in the top `tail_levels` Fock levels (clamped to the ladder size).
inline double tail_population(const QuantumState& state, int tail_levels) {
    const auto& s = state.space;
    const int first = std::max(0, s.dim_boson() - tail_levels);
    double p = 0.0;
    for (int k = 0; k < s.dim_spin(); ++k)
        for (int n = first; n < s.dim_boson(); ++n) p += std::norm(state.amplitudes(s.index(k, n)));
    return p;
}

inline TruncationReport check_truncation(const Trajectory& traj, int tail_levels = 5, double tol = 1e-8) {
    TruncationReport r{0.0, tail_levels, tol, true};
    for (const auto& st : traj.states) r.max_tail_population = std::max(r.max_tail_population, tail_population(st, tail_levels));
    r.pass = r.max_tail_population < tol;
    return r;
}

namespace detail {

inline Trajectory integrate_closed(const DrivenHamiltonian& ham, const QuantumState& state0, const CouplingSchedule& schedule,
                                   const IntegratorConfig& config, int sample_count) {
    const std::vector<double> times = sample_times(schedule.duration, sample_count);
    Trajectory traj;
    traj.times = times;
    traj.lambdas.reserve(times.size());
    for (double t : times) traj.lambdas.push_back(schedule.at(t));
    traj.states.reserve(times.size());
    traj.states.push_back(state0);

    const double norm0 = state0.norm();
    Vector psi = state0.amplitudes;
    Rk4<Vector> rk4;
    const Complex minus_i(0.0, -1.0);
    Vector hx(psi.size());
    auto rhs = [&](double t, const Vector& y, Vector& dy) {
        ham.apply(schedule.at(t), y, hx);
        dy = minus_i * hx;
    };
    for (const Segment& seg : plan_segments(times, schedule.kink, config)) {
        rk4.advance(psi, seg.t0, seg.t1, seg.steps, rhs);
        if (!seg.ends_on_sample) continue;
        const double drift = std::abs(psi.norm() - norm0);
        traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
        if (drift > config.norm_tolerance)
            throw Error(ErrorCode::NormDrift, "norm drift " + std::to_string(drift) + " at t=" + std::to_string(seg.t1) +
                                                  " exceeds tolerance; refine the time step");
        traj.states.push_back({state0.space, psi});
    }
    return traj;
}

}  // namespace detail

inline Trajectory evolve_closed(const QuantumState& state0, const CouplingSchedule& schedule, const IntegratorConfig& config,
                                int sample_count) {
    config.validate();
    if (std::abs(state0.norm() - 1.0) > config.norm_tolerance)
        throw Error(ErrorCode::InvalidArgument, "initial state is not normalised");
    const DrivenHamiltonian ham(state0.space);
    Trajectory traj = detail::integrate_closed(ham, state0, schedule, config, sample_count);

    if (config.enforce_truncation) {
        const TruncationReport tr = check_truncation(traj, config.tail_levels, config.tail_tolerance);
        if (!tr.pass)
            throw Error(ErrorCode::TruncationOverflow, "Fock tail population " + std::to_string(tr.max_tail_population) +
                                                           " exceeds " + std::to_string(tr.tolerance) + " at n_max=" +
                                                           std::to_string(state0.space.params().n_max));
    }
    if (config.richardson_check) {
        IntegratorConfig fine = config;
        fine.steps_per_unit_time *= 2;
        fine.min_steps_per_segment *= 2;
        const Trajectory ref = detail::integrate_closed(ham, state0, schedule, fine, 2);
        traj.step_error_estimate = (ref.final().amplitudes - traj.final().amplitudes).norm() * 16.0 / 15.0;
    }
    return traj;
}

inline Trajectory evolve_closed(const QuantumState& state0, const PulseProfile& profile, const IntegratorConfig& config,
                                int sample_count) {
    return evolve_closed(state0, CouplingSchedule::pulse(profile), config, sample_count);
}

}  // namespace pulse_dicke
