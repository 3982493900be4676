#pragma once

// Lindblad evolution with a damped, thermally populated cavity:
//
//     d(rho)/dt = -i[H, rho] + 2 kappa (nbar + 1) D(rho; a) + 2 kappa nbar D(rho; a^dag)
//     D(rho; O) = O rho O^dag - (1/2){O^dag O, rho}
//
// plus the entanglement measures built on the partial transpose over the spin
// factor.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/SVD>

#include "pulse_dicke/closed.hpp"
#include "pulse_dicke/integrator.hpp"
#include "pulse_dicke/model.hpp"
#include "pulse_dicke/state.hpp"

namespace pulse_dicke {

struct OpenParams {
    double kappa{0.0};
    double nbar{0.0};

    void validate() const {
        if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw Error(ErrorCode::InvalidArgument, "kappa must be >= 0");
        if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw Error(ErrorCode::InvalidArgument, "nbar must be >= 0");
    }
};

// Right-hand side of the master equation. The coupling J_x (a + a^dag) links
// each basis state to at most four neighbours, (m +- 1, n +- 1), so the
// commutator and both dissipators are evaluated entry by entry from a
// neighbour table; the dim^2 x dim^2 Liouvillian is never formed.
class LindbladGenerator {
public:
    static constexpr int kMaxNeighbours = 4;

    LindbladGenerator(const HilbertSpace& space, const OpenParams& open) : ham_(space), open_(open) {
        open_.validate();
        const int d = space.dim_total();
        energy_.resize(d);
        for (int r = 0; r < d; ++r) energy_(r) = std::real(ham_.drift().coeff(r, r));
        neighbour_index_.assign(std::size_t(d) * kMaxNeighbours, 0);
        neighbour_value_.assign(std::size_t(d) * kMaxNeighbours, 0.0);
        const SparseOp& v = ham_.coupling();
        for (int r = 0; r < d; ++r) {
            int slot = 0;
            for (SparseOp::InnerIterator it(v, r); it; ++it) {
                if (it.value() == Complex(0.0)) continue;
                if (slot == kMaxNeighbours) throw Error(ErrorCode::InvalidArgument, "unexpected coupling pattern");
                neighbour_index_[std::size_t(r) * kMaxNeighbours + slot] = int(it.col());
                neighbour_value_[std::size_t(r) * kMaxNeighbours + slot] = std::real(it.value());
                ++slot;
            }
            for (; slot < kMaxNeighbours; ++slot) neighbour_index_[std::size_t(r) * kMaxNeighbours + slot] = r;
        }
        photons_.resize(d);
        sqrt_photons_.resize(d);
        sqrt_photons_plus_.resize(d);
        anti_loss_.resize(d);
        anti_gain_.resize(d);
        parity_.resize(d);
        for (int r = 0; r < d; ++r) {
            const int n = space.label(r).photons;
            const bool top = n == space.dim_boson() - 1;
            photons_[r] = n;
            parity_[r] = (space.label(r).spin_index + n) % 2;
            sqrt_photons_(r) = std::sqrt(double(n));
            sqrt_photons_plus_(r) = top ? 0.0 : std::sqrt(double(n + 1));
            // Diagonals of a^dag a and of a a^dag on the truncated ladder; the
            // latter vanishes on the top level, which keeps the trace exact.
            anti_loss_(r) = 0.5 * loss_rate() * n;
            anti_gain_(r) = 0.5 * gain_rate() * (top ? 0.0 : double(n + 1));
        }
    }

    const DrivenHamiltonian& hamiltonian() const { return ham_; }
    const OpenParams& open_params() const { return open_; }

    double loss_rate() const { return 2.0 * open_.kappa * (open_.nbar + 1.0); }
    double gain_rate() const { return 2.0 * open_.kappa * open_.nbar; }

    // out = L(lambda)[rho]; rho need not be Hermitian. With `sector_blocked`
    // the caller asserts that rho has no coherences between the two parity
    // sectors; those entries are mapped onto themselves and are written as
    // zero without being evaluated.
    void apply(double lambda, const Matrix& rho, Matrix& out, bool sector_blocked = false) const {
        const Eigen::Index d = rho.rows();
        out.resize(d, d);
        const double g_loss = loss_rate();
        const double g_gain = gain_rate();
        const int* nidx = neighbour_index_.data();
        const double* nval = neighbour_value_.data();
        const int dim_boson = ham_.space().dim_boson();
        const int dim_spin = ham_.space().dim_spin();
        if (sector_blocked) out.setZero();
        for (Eigen::Index c = 0; c < d; ++c) {
            const Complex* col = rho.data() + c * d;
            Complex* dst = out.data() + c * d;
            const int* cn = nidx + c * kMaxNeighbours;
            const double* cv = nval + c * kMaxNeighbours;
            const Complex* ccol[kMaxNeighbours];
            for (int s = 0; s < kMaxNeighbours; ++s) ccol[s] = rho.data() + Eigen::Index(cn[s]) * d;
            const double ec = energy_(c);
            const double anti_c = anti_loss_(c) + anti_gain_(c);
            auto entry = [&](Eigen::Index r) {
                const int* rn = nidx + r * kMaxNeighbours;
                const double* rv = nval + r * kMaxNeighbours;
                Complex comm = (energy_(r) - ec) * col[r];
                Complex hop(0.0);
                for (int s = 0; s < kMaxNeighbours; ++s) hop += rv[s] * col[rn[s]] - cv[s] * ccol[s][r];
                comm += lambda * hop;
                Complex acc(comm.imag(), -comm.real());  // -i [H, rho]
                acc -= (anti_loss_(r) + anti_gain_(r) + anti_c) * col[r];
                if (g_loss != 0.0 && sqrt_photons_plus_(r) != 0.0 && sqrt_photons_plus_(c) != 0.0)
                    acc += g_loss * sqrt_photons_plus_(r) * sqrt_photons_plus_(c) * col[r + 1 + d];
                if (g_gain != 0.0 && photons_[r] > 0 && photons_[c] > 0)
                    acc += g_gain * sqrt_photons_(r) * sqrt_photons_(c) * col[r - 1 - d];
                dst[r] = acc;
            };
            if (sector_blocked) {
                const int pc = parity_[c];
                for (int k = 0; k < dim_spin; ++k)
                    for (int n = (pc + k) % 2; n < dim_boson; n += 2) entry(Eigen::Index(k) * dim_boson + n);
            } else {
                for (Eigen::Index r = 0; r < d; ++r) entry(r);
            }
        }
    }

private:
    DrivenHamiltonian ham_;
    OpenParams open_;
    Eigen::VectorXd energy_;
    std::vector<int> neighbour_index_;
    std::vector<double> neighbour_value_;
    std::vector<int> photons_;
    Eigen::VectorXd sqrt_photons_;
    Eigen::VectorXd sqrt_photons_plus_;
    Eigen::VectorXd anti_loss_;
    Eigen::VectorXd anti_gain_;
    std::vector<int> parity_;
};

inline DensityMatrix lindblad_rhs(const DensityMatrix& rho, double lambda_now, const OpenParams& open) {
    if (rho.subsystem != Subsystem::Full) throw Error(ErrorCode::SpaceMismatch, "master equation acts on the full space");
    if (!(lambda_now >= 0.0)) throw Error(ErrorCode::InvalidArgument, "coupling must be non-negative");
    const LindbladGenerator gen(rho.space, open);
    Matrix out(rho.entries.rows(), rho.entries.cols());
    gen.apply(lambda_now, rho.entries, out);
    return {rho.space, Subsystem::Full, std::move(out)};
}

struct OpenDiagnostics {
    double max_trace_drift{0.0};
    double max_hermiticity_error{0.0};
    double min_eigenvalue{1.0};
    double max_tail_population{0.0};
    int clamped_snapshots{0};  // snapshots with an eigenvalue in [-1e-6, -1e-8)
};

struct OpenTrajectory {
    std::vector<double> times;
    std::vector<double> lambdas;
    std::vector<DensityMatrix> states;
    OpenDiagnostics diagnostics;
};

inline constexpr double kPositivityTolerance = 1e-6;

inline double tail_population(const DensityMatrix& rho, int tail_levels) {
    const auto& s = rho.space;
    const int first = std::max(0, s.dim_boson() - tail_levels);
    double p = 0.0;
    for (int k = 0; k < s.dim_spin(); ++k)
        for (int n = first; n < s.dim_boson(); ++n) p += std::real(rho.entries(s.index(k, n), s.index(k, n)));
    return p;
}

using OpenObserver = std::function<void(int sample, double t, double lambda, const DensityMatrix& rho)>;

// Integrates the master equation over the pulse and hands every snapshot to
// `observer` after validating it. Snapshots are not retained.
inline OpenDiagnostics propagate_open(const DensityMatrix& rho0, const CouplingSchedule& schedule, const OpenParams& open,
                                      const IntegratorConfig& config, int sample_count, const OpenObserver& observer) {
    open.validate();
    config.validate();
    if (rho0.subsystem != Subsystem::Full) throw Error(ErrorCode::SpaceMismatch, "initial density matrix must be full-space");
    const StateDiagnostics d0 = diagnose(rho0);
    if (d0.trace_error > kTraceTolerance || d0.min_eigenvalue < -kNegativeEigenTolerance || d0.hermiticity_error > 1e-10)
        throw Error(ErrorCode::NotAState, "initial density matrix is not a valid state");

    const LindbladGenerator gen(rho0.space, open);
    const std::vector<double> times = sample_times(schedule.duration, sample_count);
    OpenDiagnostics diag;
    DensityMatrix rho = rho0;
    int sample = 0;

    auto check_and_emit = [&](double t) {
        const StateDiagnostics d = diagnose(rho);
        diag.max_trace_drift = std::max(diag.max_trace_drift, d.trace_error);
        diag.max_hermiticity_error = std::max(diag.max_hermiticity_error, d.hermiticity_error);
        diag.min_eigenvalue = std::min(diag.min_eigenvalue, d.min_eigenvalue);
        if (d.trace_error > kTraceTolerance)
            throw Error(ErrorCode::TraceDrift, "trace drift " + std::to_string(d.trace_error) + " at t=" + std::to_string(t));
        if (d.min_eigenvalue < -kPositivityTolerance)
            throw Error(ErrorCode::PositivityLoss, "eigenvalue " + std::to_string(d.min_eigenvalue) + " at t=" +
                                                       std::to_string(t) + "; refine the time step");
        if (d.min_eigenvalue < -kNegativeEigenTolerance) ++diag.clamped_snapshots;
        const double tail = tail_population(rho, config.tail_levels);
        diag.max_tail_population = std::max(diag.max_tail_population, tail);
        if (config.enforce_truncation && tail >= config.tail_tolerance)
            throw Error(ErrorCode::TruncationOverflow, "Fock tail population " + std::to_string(tail) + " at n_max=" +
                                                           std::to_string(rho.space.params().n_max));
        observer(sample, t, schedule.at(t), rho);
        ++sample;
    };

    check_and_emit(0.0);
    Rk4<Matrix> rk4;
    const bool blocked = detail::is_sector_blocked(rho0.space, rho0.entries);
    auto rhs = [&](double t, const Matrix& y, Matrix& dy) { gen.apply(schedule.at(t), y, dy, blocked); };
    for (const Segment& seg : plan_segments(times, schedule.kink, config)) {
        rk4.advance(rho.entries, seg.t0, seg.t1, seg.steps, rhs);
        if (seg.ends_on_sample) check_and_emit(seg.t1);
    }
    return diag;
}

inline OpenDiagnostics propagate_open(const DensityMatrix& rho0, const PulseProfile& profile, const OpenParams& open,
                                      const IntegratorConfig& config, int sample_count, const OpenObserver& observer) {
    return propagate_open(rho0, CouplingSchedule::pulse(profile), open, config, sample_count, observer);
}

inline OpenTrajectory evolve_open(const DensityMatrix& rho0, const CouplingSchedule& schedule, const OpenParams& open,
                                  const IntegratorConfig& config, int sample_count) {
    OpenTrajectory traj;
    traj.diagnostics = propagate_open(rho0, schedule, open, config, sample_count,
                                      [&](int, double t, double lambda, const DensityMatrix& rho) {
                                          traj.times.push_back(t);
                                          traj.lambdas.push_back(lambda);
                                          traj.states.push_back(rho);
                                      });
    return traj;
}

inline OpenTrajectory evolve_open(const DensityMatrix& rho0, const PulseProfile& profile, const OpenParams& open,
                                  const IntegratorConfig& config, int sample_count) {
    return evolve_open(rho0, CouplingSchedule::pulse(profile), open, config, sample_count);
}

// (rho^Gamma)[(m,n),(m',n')] = rho[(m',n),(m,n')]: spin blocks are swapped,
// boson blocks kept.
inline Matrix partial_transpose_qubits(const DensityMatrix& rho) {
    if (rho.subsystem != Subsystem::Full) throw Error(ErrorCode::SpaceMismatch, "partial transpose needs a full-space matrix");
    const auto& s = rho.space;
    const int db = s.dim_boson();
    Matrix out(rho.entries.rows(), rho.entries.cols());
    for (int k = 0; k < s.dim_spin(); ++k)
        for (int kp = 0; kp < s.dim_spin(); ++kp) out.block(k * db, kp * db, db, db) = rho.entries.block(kp * db, k * db, db, db);
    return out;
}

// Trace norm of the (Hermitian) partial transpose.
inline double partial_transpose_trace_norm(const DensityMatrix& rho) {
    const Matrix pt = partial_transpose_qubits(rho);
    return detail::full_space_spectrum(rho.space, 0.5 * (pt + pt.adjoint())).cwiseAbs().sum();
}

inline double negativity_from_trace_norm(double trace_norm) { return std::max(0.0, 0.5 * (trace_norm - 1.0)); }
inline double log_negativity_from_trace_norm(double trace_norm) { return std::max(0.0, std::log2(trace_norm)); }

inline double negativity(const DensityMatrix& rho) { return negativity_from_trace_norm(partial_transpose_trace_norm(rho)); }

inline double log_negativity(const DensityMatrix& rho) {
    return log_negativity_from_trace_norm(partial_transpose_trace_norm(rho));
}

// Same quantity through singular values; agrees with `negativity` because the
// partial transpose is Hermitian.
inline double negativity_singular(const DensityMatrix& rho) {
    const Matrix pt = partial_transpose_qubits(rho);
    Eigen::BDCSVD<Matrix> svd(pt);
    return std::max(0.0, 0.5 * (svd.singularValues().sum() - 1.0));
}

}  // namespace pulse_dicke
