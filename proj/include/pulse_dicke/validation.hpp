#pragma once

// Self-checks run by `pulse_dicke validate`: oracle equivalences, analytic
// limits and structural identities, each sized to finish in seconds.

#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pulse_dicke/closed.hpp"
#include "pulse_dicke/open.hpp"
#include "pulse_dicke/oracles.hpp"

namespace pulse_dicke {

struct CheckResult {
    std::string name;
    bool pass;
    std::string detail;
};

namespace checks {

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline CheckResult hamiltonian_hermitian() {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> n_dist(1, 8), nmax_dist(1, 12);
    std::uniform_real_distribution<double> freq(0.1, 3.0), coupling(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const HilbertSpace s({n_dist(rng), freq(rng), freq(rng), nmax_dist(rng)});
        const Matrix h = assemble_hamiltonian(s, coupling(rng)).dense();
        worst = std::max(worst, max_abs(h - h.adjoint()));
    }
    return {"hamiltonian-hermitian", worst < 1e-12, "max |H - H^dag| = " + fmt(worst) + " over 100 draws"};
}

inline CheckResult parity_commutes() {
    double worst = 0.0;
    for (int n : {1, 2, 3, 5}) {
        const HilbertSpace s({n, 1.0, 1.0, 8});
        const Matrix h = assemble_hamiltonian(s, 0.7).dense();
        const Matrix p = op_parity(s).dense();
        worst = std::max(worst, max_abs(h * p - p * h));
    }
    return {"parity-commutes", worst < 1e-12, "max |[H, P]| = " + fmt(worst)};
}

inline CheckResult spin_algebra() {
    const HilbertSpace s({4, 1.0, 1.0, 2});
    const Matrix jx = op_jx(s).dense(), jy = op_jy(s).dense(), jz = op_jz(s).dense();
    const double err = max_abs(jz * jx - jx * jz - Complex(0.0, 1.0) * jy);
    return {"spin-commutator", err < 1e-12, "max |[Jz, Jx] - i Jy| = " + fmt(err)};
}

inline CheckResult closed_vs_exponential() {
    const ModelParams p{3, 1.0, 1.0, 15};
    const HilbertSpace s(p);
    IntegratorConfig ic;
    ic.enforce_truncation = false;
    const auto schedule = CouplingSchedule::pulse({0.25, 1.0, PulseShape::Triangular});
    const Trajectory tr = evolve_closed(initial_state(s), schedule, ic, 2);
    const Vector ref = oracle::propagate_closed(p, initial_state(s).amplitudes, schedule, 100);
    const double err = (tr.final().amplitudes - ref).norm();
    return {"closed-vs-exponential", err < 1e-6, "|psi_rk4 - psi_expm| = " + fmt(err) + " (dim 64)"};
}

inline CheckResult open_vs_liouvillian() {
    const ModelParams p{1, 1.0, 1.0, 7};
    const HilbertSpace s(p);
    const OpenParams op{0.1, 0.2};
    const double lambda = 0.6, duration = 3.0;
    const DensityMatrix rho0 = projector(initial_state(s));
    IntegratorConfig ic;
    ic.enforce_truncation = false;
    const OpenTrajectory tr = evolve_open(rho0, CouplingSchedule::constant(lambda, duration), op, ic, 2);
    const Matrix ref = oracle::propagate_open_constant(p, rho0.entries, lambda, op, duration);
    const double err = max_abs(tr.states.back().entries - ref);
    return {"open-vs-liouvillian", err < 1e-7, "max entry error = " + fmt(err) + " (dim 16)"};
}

// End-state error at steps h and h/2, both measured against a run at h/4.
// A fourth-order scheme gives (1 - 4^-4) / (2^-4 - 4^-4) = 17.
inline double step_halving_ratio() {
    const HilbertSpace s({3, 1.0, 1.0, 12});
    IntegratorConfig ic;
    ic.enforce_truncation = false;
    ic.min_steps_per_segment = 1;
    ic.norm_tolerance = 1.0;  // coarse steps drift by design here
    const PulseProfile pulse{0.25, 1.0, PulseShape::Triangular};
    auto run = [&](int spu) {
        ic.steps_per_unit_time = spu;
        return evolve_closed(initial_state(s), pulse, ic, 2).final().amplitudes;
    };
    const Vector ref = run(100);
    return (run(25) - ref).norm() / (run(50) - ref).norm();
}

inline CheckResult integrator_order() {
    const double ratio = step_halving_ratio();
    return {"integrator-order", ratio >= 12.0 && ratio <= 20.0, "error ratio under step halving = " + fmt(ratio)};
}

inline CheckResult unitary_limit() {
    const HilbertSpace s({2, 1.0, 1.0, 12});
    IntegratorConfig ic;
    ic.enforce_truncation = false;
    const PulseProfile pulse{0.4, 1.0, PulseShape::Triangular};
    const Trajectory closed = evolve_closed(initial_state(s), pulse, ic, 9);
    const OpenTrajectory open = evolve_open(projector(initial_state(s)), pulse, {0.0, 0.0}, ic, 9);
    double worst = 0.0;
    for (std::size_t k = 0; k < closed.states.size(); ++k)
        worst = std::max(worst, trace_distance(open.states[k].entries, projector(closed.states[k]).entries));
    return {"unitary-limit", worst < 1e-6, "max trace distance = " + fmt(worst)};
}

inline CheckResult damped_cavity() {
    const HilbertSpace s({1, 1.0, 1.0, 6});
    const double kappa = 0.2;
    const MatrixOperator num = op_boson_number(s);
    IntegratorConfig ic;
    ic.enforce_truncation = false;
    const OpenTrajectory tr = evolve_open(projector(basis_state(s, {0, 1})), CouplingSchedule::constant(0.0, 5.0),
                                          {kappa, 0.0}, ic, 11);
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.states.size(); ++k)
        worst = std::max(worst, std::abs(expectation(num, tr.states[k]) - std::exp(-2.0 * kappa * tr.times[k])));
    return {"damped-cavity", worst < 1e-5, "max |<n> - exp(-2 kappa t)| = " + fmt(worst)};
}

inline CheckResult schmidt_symmetry() {
    const HilbertSpace s({3, 1.0, 1.0, 20});
    IntegratorConfig ic;
    ic.enforce_truncation = false;
    const Trajectory tr = evolve_closed(initial_state(s), PulseProfile{0.3, 1.0, PulseShape::Triangular}, ic, 7);
    double worst = 0.0;
    for (const auto& st : tr.states)
        worst = std::max(worst, std::abs(von_neumann_entropy(reduce_qubits(st)) - von_neumann_entropy(reduce_boson(st))));
    return {"schmidt-symmetry", worst < 1e-6, "max |S_qubits - S_boson| = " + fmt(worst)};
}

inline CheckResult parity_conserved() {
    const HilbertSpace s({3, 1.0, 1.0, 20});
    IntegratorConfig ic;
    ic.enforce_truncation = false;
    const MatrixOperator p = op_parity(s);
    const Trajectory tr = evolve_closed(initial_state(s), PulseProfile{0.3, 1.0, PulseShape::Triangular}, ic, 7);
    double worst = 0.0;
    for (const auto& st : tr.states) worst = std::max(worst, std::abs(expectation(p, st) - 1.0));
    return {"parity-conserved", worst < 1e-8, "max |<P> - 1| = " + fmt(worst)};
}

inline CheckResult negativity_two_ways() {
    const HilbertSpace s({2, 1.0, 1.0, 10});
    IntegratorConfig ic;
    ic.enforce_truncation = false;
    const OpenTrajectory tr = evolve_open(projector(initial_state(s)), PulseProfile{0.5, 1.0, PulseShape::Triangular},
                                          {0.05, 0.0}, ic, 5);
    double worst = 0.0;
    for (const auto& rho : tr.states) worst = std::max(worst, std::abs(negativity(rho) - negativity_singular(rho)));
    return {"negativity-two-ways", worst < 1e-10, "max |N_eig - N_svd| = " + fmt(worst)};
}

}  // namespace checks

inline std::vector<std::function<CheckResult()>> validation_suite() {
    return {checks::hamiltonian_hermitian, checks::parity_commutes,  checks::spin_algebra,
            checks::closed_vs_exponential, checks::open_vs_liouvillian, checks::integrator_order,
            checks::unitary_limit,         checks::damped_cavity,    checks::schmidt_symmetry,
            checks::parity_conserved,      checks::negativity_two_ways};
}

inline std::vector<CheckResult> run_validation(const std::function<void(const CheckResult&)>& on_result = {}) {
    std::vector<CheckResult> out;
    for (const auto& check : validation_suite()) {
        CheckResult r;
        try {
            r = check();
        } catch (const std::exception& e) {
            r = {"?", false, e.what()};
        }
        if (on_result) on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace pulse_dicke
