#include <catch_amalgamated.hpp>

#include <random>

#include "pulse_dicke/closed.hpp"
#include "pulse_dicke/open.hpp"
#include "pulse_dicke/oracles.hpp"
#include "pulse_dicke/validation.hpp"

using namespace pulse_dicke;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kUStar = 0.2475;

PulseProfile pulse(double speed, double peak = 1.0) { return {speed, peak, PulseShape::Triangular}; }

IntegratorConfig loose() {
    IntegratorConfig ic;
    ic.enforce_truncation = false;
    return ic;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::Conflict;
}

DensityMatrix random_state(const HilbertSpace& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix m(s.dim_total(), s.dim_total());
    for (auto& x : m.reshaped()) x = Complex(g(rng), g(rng));
    Matrix rho = m * m.adjoint();
    rho /= rho.trace();
    return {s, Subsystem::Full, rho};
}

}  // namespace

TEST_CASE("closed: zero pulse leaves the ground state", "[closed]") {
    const HilbertSpace s({3, 1.0, 1.0, 10});
    const Trajectory tr = evolve_closed(initial_state(s), pulse(0.5, 0.0), IntegratorConfig{}, 5);
    CHECK_THAT(std::abs(tr.initial().amplitudes.dot(tr.final().amplitudes)), WithinAbs(1.0, 1e-8));
    CHECK(check_truncation(tr).max_tail_population == 0.0);
}

TEST_CASE("closed: trajectory layout", "[closed]") {
    const HilbertSpace s({2, 1.0, 1.0, 30});
    const Trajectory tr = evolve_closed(initial_state(s), pulse(0.7), IntegratorConfig{}, 11);
    REQUIRE(tr.times.size() == 11);
    REQUIRE(tr.states.size() == 11);
    CHECK(tr.times.front() == 0.0);
    CHECK(tr.times.back() == 2.0 / 0.7);
    CHECK(tr.lambdas.front() == 0.0);
    CHECK(tr.lambdas.back() == 0.0);
    CHECK(tr.max_norm_drift < 1e-8);
    for (const auto& st : tr.states) CHECK_THAT(st.norm(), WithinAbs(1.0, 1e-8));
}

TEST_CASE("closed: sudden and adiabatic limits recover the initial state", "[closed]") {
    const HilbertSpace s3({3, 1.0, 1.0, 15});
    const Trajectory sudden = evolve_closed(initial_state(s3), pulse(100.0), IntegratorConfig{}, 2);
    CHECK(fidelity(sudden.initial(), sudden.final()) > 0.99);
    const Vector ref = oracle::propagate_closed(s3.params(), initial_state(s3).amplitudes, CouplingSchedule::pulse(pulse(100.0)), 2000);
    CHECK((sudden.final().amplitudes - ref).norm() < 1e-6);

    const HilbertSpace s1({1, 1.0, 1.0, 8});
    const Trajectory slow = evolve_closed(initial_state(s1), pulse(0.001), IntegratorConfig{}, 2);
    CHECK(fidelity(slow.initial(), slow.final()) > 0.99);
}

TEST_CASE("closed: agrees with the dense exponential propagator", "[closed][oracle]") {
    for (int n : {1, 3}) {
        const ModelParams p{n, 1.0, 1.0, n == 1 ? 31 : 15};
        const HilbertSpace s(p);
        for (double u : {0.1, kUStar, 1.3}) {
            const auto schedule = CouplingSchedule::pulse(pulse(u));
            const Trajectory tr = evolve_closed(initial_state(s), schedule, loose(), 2);
            const Vector ref = oracle::propagate_closed(p, initial_state(s).amplitudes, schedule, 100);
            CHECK((tr.final().amplitudes - ref).norm() < 1e-6);
        }
    }
    const HilbertSpace big({3, 1.0, 1.0, 16});
    CHECK(code_of([&] { oracle::propagate_closed(big.params(), initial_state(big).amplitudes, CouplingSchedule::pulse(pulse(1.0)), 10); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("closed: fourth-order convergence", "[closed][property]") {
    const double ratio = checks::step_halving_ratio();
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("closed: richardson estimate", "[closed]") {
    const HilbertSpace s({3, 1.0, 1.0, 30});
    IntegratorConfig ic;
    ic.richardson_check = true;
    const Trajectory tr = evolve_closed(initial_state(s), pulse(kUStar), ic, 2);
    CHECK(tr.step_error_estimate >= 0.0);
    CHECK(tr.step_error_estimate < 1e-8);
}

TEST_CASE("closed: schmidt symmetry and parity along the pulse", "[closed][property]") {
    const HilbertSpace s({3, 1.0, 1.0, 40});
    const MatrixOperator parity = op_parity(s);
    const Trajectory tr = evolve_closed(initial_state(s), pulse(kUStar), IntegratorConfig{}, 21);
    for (const auto& st : tr.states) {
        CHECK_THAT(von_neumann_entropy(reduce_qubits(st)), WithinAbs(von_neumann_entropy(reduce_boson(st)), 1e-6));
        CHECK_THAT(expectation(parity, st), WithinAbs(1.0, 1e-8));
        CHECK(von_neumann_entropy(reduce_qubits(st)) <= std::log(4.0) + 1e-9);
    }
}

TEST_CASE("closed: truncation convergence at the dip", "[closed][truncation]") {
    const Trajectory a = evolve_closed(initial_state(HilbertSpace({3, 1.0, 1.0, 40})), pulse(kUStar), IntegratorConfig{}, 2);
    const Trajectory b = evolve_closed(initial_state(HilbertSpace({3, 1.0, 1.0, 80})), pulse(kUStar), IntegratorConfig{}, 2);
    CHECK(std::abs(fidelity(a.initial(), a.final()) - fidelity(b.initial(), b.final())) < 1e-6);
    CHECK(check_truncation(a).pass);
}

TEST_CASE("closed: tiny cutoff overflows", "[closed][truncation][errors]") {
    const HilbertSpace s({3, 1.0, 1.0, 2});
    const Trajectory tr = evolve_closed(initial_state(s), pulse(kUStar), loose(), 11);
    const TruncationReport r = check_truncation(tr, 5, 1e-8);
    CHECK_FALSE(r.pass);
    CHECK(r.max_tail_population > 1e-8);
    CHECK(code_of([&] { evolve_closed(initial_state(s), pulse(kUStar), IntegratorConfig{}, 11); }) ==
          ErrorCode::TruncationOverflow);
}

TEST_CASE("closed: error paths", "[closed][errors]") {
    const HilbertSpace s({3, 1.0, 1.0, 20});
    IntegratorConfig coarse = loose();
    coarse.steps_per_unit_time = 2;
    coarse.min_steps_per_segment = 1;
    CHECK(code_of([&] { evolve_closed(initial_state(s), pulse(kUStar), coarse, 5); }) == ErrorCode::NormDrift);

    QuantumState unnormalised = initial_state(s);
    unnormalised.amplitudes *= 2.0;
    CHECK(code_of([&] { evolve_closed(unnormalised, pulse(1.0), IntegratorConfig{}, 2); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { evolve_closed(initial_state(s), pulse(1.0), IntegratorConfig{}, 1); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { evolve_closed(initial_state(s), pulse(-1.0), IntegratorConfig{}, 2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("segments split at the apex", "[integrator]") {
    IntegratorConfig ic;
    ic.steps_per_unit_time = 10;
    const auto segs = plan_segments(sample_times(3.0, 3), 1.2, ic);
    REQUIRE(segs.size() == 3);
    CHECK(segs[0].t1 == 1.2);
    CHECK_FALSE(segs[0].ends_on_sample);
    CHECK(segs[1].t0 == 1.2);
    CHECK(segs[1].ends_on_sample);
    CHECK(segs[0].steps == 12);
    CHECK(segs[1].steps == ic.min_steps_per_segment);
    CHECK(segs[2].steps == 15);
}

TEST_CASE("lindblad: generator identities", "[open]") {
    const HilbertSpace s({2, 1.0, 1.0, 5});

    SECTION("no damping: eigenprojector is stationary") {
        const Matrix h = assemble_hamiltonian(s, 0.6).dense();
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        const Vector v = es.eigenvectors().col(3);
        const DensityMatrix rho{s, Subsystem::Full, v * v.adjoint()};
        CHECK(lindblad_rhs(rho, 0.6, {0.0, 0.0}).entries.cwiseAbs().maxCoeff() < 1e-12);
    }

    SECTION("trace of the derivative vanishes") {
        for (std::uint64_t seed = 0; seed < 5; ++seed)
            CHECK(std::abs(lindblad_rhs(random_state(s, seed), 0.4, {0.3, 0.7}).trace()) < 1e-12);
    }

    SECTION("single photon decays at 2 kappa") {
        const DensityMatrix rho = projector(basis_state(s, {0, 1}));
        const DensityMatrix d = lindblad_rhs(rho, 0.0, {0.25, 0.0});
        CHECK_THAT(std::real(d.entries(s.index(0, 1), s.index(0, 1))), WithinAbs(-0.5, 1e-15));
        CHECK_THAT(std::real(d.entries(s.index(0, 0), s.index(0, 0))), WithinAbs(0.5, 1e-15));
    }

    SECTION("matches the dense superoperator") {
        const oracle::DenseModel m = oracle::dense_model(s.params());
        const OpenParams op{0.2, 0.4};
        const DensityMatrix rho = random_state(s, 11);
        const Matrix h = m.drift + 0.8 * m.coupling;
        auto dis = [&](const Matrix& c) {
            return Matrix(c * rho.entries * c.adjoint() - 0.5 * (c.adjoint() * c * rho.entries + rho.entries * c.adjoint() * c));
        };
        const Matrix expected = Complex(0, -1) * (h * rho.entries - rho.entries * h) + 2 * op.kappa * (op.nbar + 1) * dis(m.a) +
                                2 * op.kappa * op.nbar * dis(m.a.adjoint());
        CHECK((lindblad_rhs(rho, 0.8, op).entries - expected).cwiseAbs().maxCoeff() < 1e-12);
    }

    SECTION("sector-blocked kernel equals the full kernel") {
        const LindbladGenerator gen(s, {0.1, 0.3});
        const Trajectory tr = evolve_closed(initial_state(s), pulse(0.5), loose(), 3);
        const Matrix rho = projector(tr.states[1]).entries;
        REQUIRE(detail::is_sector_blocked(s, rho));
        Matrix full(rho.rows(), rho.cols()), blocked(rho.rows(), rho.cols());
        gen.apply(0.7, rho, full, false);
        gen.apply(0.7, rho, blocked, true);
        CHECK((full - blocked).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("lindblad: damped cavity", "[open]") {
    const HilbertSpace s({1, 1.0, 1.0, 8});
    const MatrixOperator num = op_boson_number(s);

    SECTION("vacuum bath") {
        const double kappa = 0.15;
        const OpenTrajectory tr =
            evolve_open(projector(basis_state(s, {0, 1})), CouplingSchedule::constant(0.0, 8.0), {kappa, 0.0}, loose(), 17);
        for (std::size_t k = 0; k < tr.states.size(); ++k)
            CHECK_THAT(expectation(num, tr.states[k]), WithinAbs(std::exp(-2.0 * kappa * tr.times[k]), 1e-5));
    }

    SECTION("thermal bath") {
        const HilbertSpace wide({1, 1.0, 1.0, 30});
        const double kappa = 0.5, nbar = 0.4;
        IntegratorConfig ic;
        ic.steps_per_unit_time = 250;
        const OpenTrajectory tr =
            evolve_open(projector(initial_state(wide)), CouplingSchedule::constant(0.0, 10.0 / kappa), {kappa, nbar}, ic, 3);
        CHECK_THAT(expectation(op_boson_number(wide), tr.states.back()), WithinAbs(nbar, 1e-4));
    }
}

TEST_CASE("lindblad: unitary limit", "[open]") {
    const HilbertSpace s({3, 1.0, 1.0, 30});
    IntegratorConfig ic;
    ic.steps_per_unit_time = 250;
    const Trajectory closed = evolve_closed(initial_state(s), pulse(kUStar), IntegratorConfig{}, 9);
    const OpenTrajectory open = evolve_open(projector(initial_state(s)), pulse(kUStar), {0.0, 0.0}, ic, 9);
    for (std::size_t k = 0; k < closed.states.size(); ++k) {
        CHECK(trace_distance(open.states[k].entries, projector(closed.states[k]).entries) < 1e-6);
        CHECK_THAT(purity(open.states[k]), WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("lindblad: agrees with the vectorised liouvillian", "[open][oracle]") {
    for (const auto& [p, op, lam] : {std::tuple{ModelParams{1, 1.0, 1.0, 7}, OpenParams{0.1, 0.2}, 0.6},
                                     std::tuple{ModelParams{3, 1.0, 1.0, 3}, OpenParams{0.3, 0.0}, 1.0},
                                     std::tuple{ModelParams{2, 1.3, 0.8, 4}, OpenParams{0.05, 1.5}, 0.3}}) {
        const HilbertSpace s(p);
        const DensityMatrix rho0 = random_state(s, 5);
        const OpenTrajectory tr = evolve_open(rho0, CouplingSchedule::constant(lam, 2.5), op, loose(), 2);
        const Matrix ref = oracle::propagate_open_constant(p, rho0.entries, lam, op, 2.5);
        CHECK((tr.states.back().entries - ref).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("lindblad: state validity along a damped pulse", "[open][property]") {
    const HilbertSpace s({3, 1.0, 1.0, 30});
    IntegratorConfig ic;
    ic.steps_per_unit_time = 250;
    const OpenTrajectory tr = evolve_open(projector(initial_state(s)), pulse(kUStar), {0.1, 0.0}, ic, 11);
    CHECK(tr.diagnostics.max_trace_drift < 1e-8);
    CHECK(tr.diagnostics.max_hermiticity_error < 1e-9);
    CHECK(tr.diagnostics.min_eigenvalue >= -1e-6);
    CHECK(purity(tr.states.back()) < 1.0);
    for (const auto& rho : tr.states) CHECK_THAT(negativity(rho), WithinAbs(negativity_singular(rho), 1e-10));
}

TEST_CASE("lindblad: error paths", "[open][errors]") {
    const HilbertSpace s({3, 1.0, 1.0, 2});
    CHECK(code_of([&] { evolve_open(projector(initial_state(s)), pulse(kUStar), {0.1, 0.0}, IntegratorConfig{}, 5); }) ==
          ErrorCode::TruncationOverflow);

    const HilbertSpace t({1, 1.0, 1.0, 6});
    IntegratorConfig coarse = loose();
    coarse.steps_per_unit_time = 1;
    coarse.min_steps_per_segment = 1;
    Vector cat = Vector::Zero(t.dim_total());
    cat(t.index({0, 0})) = cat(t.index({0, 2})) = 1.0 / std::sqrt(2.0);
    CHECK(code_of([&] { evolve_open(projector(QuantumState{t, cat}), CouplingSchedule::constant(0.0, 20.0), {0.6, 0.0}, coarse, 5); }) ==
          ErrorCode::PositivityLoss);

    DensityMatrix bad = projector(initial_state(t));
    bad.entries *= 1.1;
    CHECK(code_of([&] { evolve_open(bad, pulse(1.0), {0.1, 0.0}, IntegratorConfig{}, 2); }) == ErrorCode::NotAState);
    CHECK(code_of([&] { evolve_open(projector(initial_state(t)), pulse(1.0), {-0.1, 0.0}, IntegratorConfig{}, 2); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([] { CouplingSchedule::constant(-1.0, 1.0); }) == ErrorCode::InvalidArgument);
}
