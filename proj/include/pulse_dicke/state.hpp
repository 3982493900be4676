#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pulse_dicke/model.hpp"

namespace pulse_dicke {

struct QuantumState {
    HilbertSpace space;
    Vector amplitudes;

    double norm() const { return amplitudes.norm(); }
    Complex amplitude(BasisLabel label) const { return amplitudes(space.index(label)); }
};

// Which factor of spin (x) boson the matrix lives on. Reduced matrices keep the
// parent space so that dimensions can be checked.
enum class Subsystem { Full, Qubits, Boson };

struct DensityMatrix {
    HilbertSpace space;
    Subsystem subsystem{Subsystem::Full};
    Matrix entries;

    int dim() const { return int(entries.rows()); }
    Complex trace() const { return entries.trace(); }
};

struct StateDiagnostics {
    double hermiticity_error;  // max |rho - rho^dag|
    double trace_error;        // |tr rho - 1|
    double min_eigenvalue;
};

inline void require_same_basis(const HilbertSpace& a, const HilbertSpace& b) {
    if (!a.same_basis(b)) throw Error(ErrorCode::SpaceMismatch, "states live on different Hilbert spaces");
}

inline QuantumState basis_state(const HilbertSpace& space, BasisLabel label) {
    Vector v = Vector::Zero(space.dim_total());
    v(space.index(label)) = 1.0;
    return {space, std::move(v)};
}

inline DensityMatrix projector(const QuantumState& state) {
    return {state.space, Subsystem::Full, state.amplitudes * state.amplitudes.adjoint()};
}

inline double fidelity(const QuantumState& a, const QuantumState& b) {
    require_same_basis(a.space, b.space);
    const double f = std::norm(a.amplitudes.dot(b.amplitudes));
    return std::clamp(f, 0.0, 1.0);
}

namespace detail {

// psi reshaped as (spin x boson), using the flat ordering of HilbertSpace.
inline Matrix as_grid(const QuantumState& state) {
    const auto& s = state.space;
    Matrix grid(s.dim_spin(), s.dim_boson());
    for (int k = 0; k < s.dim_spin(); ++k)
        for (int n = 0; n < s.dim_boson(); ++n) grid(k, n) = state.amplitudes(s.index(k, n));
    return grid;
}

inline Eigen::VectorXd hermitian_eigenvalues(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

// Basis indices of the two parity sectors, (m + N/2 + n) even and odd.
inline std::array<std::vector<int>, 2> parity_sectors(const HilbertSpace& space) {
    std::array<std::vector<int>, 2> sectors;
    for (int r = 0; r < space.dim_total(); ++r) {
        const BasisLabel l = space.label(r);
        sectors[(l.spin_index + l.photons) % 2].push_back(r);
    }
    return sectors;
}

// True when m has no entry (exactly) coupling the two parity sectors.
inline bool is_sector_blocked(const HilbertSpace& space, const Matrix& m) {
    const auto sectors = parity_sectors(space);
    for (int c : sectors[0])
        for (int r : sectors[1])
            if (m(r, c) != Complex(0.0) || m(c, r) != Complex(0.0)) return false;
    return true;
}

// Spectrum of a Hermitian full-space matrix; diagonalises the two parity
// blocks separately when the matrix is sector-blocked.
inline Eigen::VectorXd full_space_spectrum(const HilbertSpace& space, const Matrix& herm) {
    if (!is_sector_blocked(space, herm)) return hermitian_eigenvalues(herm);
    Eigen::VectorXd out(herm.rows());
    Eigen::Index offset = 0;
    for (const auto& idx : parity_sectors(space)) {
        if (idx.empty()) continue;
        const Eigen::Index n = Eigen::Index(idx.size());
        Matrix block(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) block(i, j) = herm(idx[i], idx[j]);
        out.segment(offset, n) = hermitian_eigenvalues(block);
        offset += n;
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline Eigen::VectorXd spectrum(const DensityMatrix& rho, const Matrix& herm) {
    return rho.subsystem == Subsystem::Full ? full_space_spectrum(rho.space, herm) : hermitian_eigenvalues(herm);
}

}  // namespace detail

// rho_q[m, m'] = sum_n psi(m, n) psi*(m', n)
inline DensityMatrix reduce_qubits(const QuantumState& state) {
    const Matrix grid = detail::as_grid(state);
    return {state.space, Subsystem::Qubits, grid * grid.adjoint()};
}

// rho_b[n, n'] = sum_m psi(m, n) psi*(m, n')
inline DensityMatrix reduce_boson(const QuantumState& state) {
    const Matrix grid = detail::as_grid(state);
    return {state.space, Subsystem::Boson, (grid.transpose() * grid.conjugate())};
}

inline DensityMatrix reduce_qubits(const DensityMatrix& rho) {
    if (rho.subsystem != Subsystem::Full) throw Error(ErrorCode::SpaceMismatch, "partial trace needs a full-space matrix");
    const auto& s = rho.space;
    Matrix out = Matrix::Zero(s.dim_spin(), s.dim_spin());
    for (int k = 0; k < s.dim_spin(); ++k)
        for (int kp = 0; kp < s.dim_spin(); ++kp)
            for (int n = 0; n < s.dim_boson(); ++n) out(k, kp) += rho.entries(s.index(k, n), s.index(kp, n));
    return {s, Subsystem::Qubits, std::move(out)};
}

inline DensityMatrix reduce_boson(const DensityMatrix& rho) {
    if (rho.subsystem != Subsystem::Full) throw Error(ErrorCode::SpaceMismatch, "partial trace needs a full-space matrix");
    const auto& s = rho.space;
    Matrix out = Matrix::Zero(s.dim_boson(), s.dim_boson());
    for (int k = 0; k < s.dim_spin(); ++k)
        out += rho.entries.block(s.index(k, 0), s.index(k, 0), s.dim_boson(), s.dim_boson());
    return {s, Subsystem::Boson, std::move(out)};
}

inline StateDiagnostics diagnose(const DensityMatrix& rho) {
    const Matrix& m = rho.entries;
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    const double trace_err = std::abs(m.trace() - 1.0);
    const Matrix sym = 0.5 * (m + m.adjoint());
    const double min_eig = detail::spectrum(rho, sym).minCoeff();
    return {herm, trace_err, min_eig};
}

inline constexpr double kTraceTolerance = 1e-8;
inline constexpr double kNegativeEigenTolerance = 1e-8;

namespace detail {

inline Eigen::VectorXd state_spectrum(const DensityMatrix& rho) {
    const double trace_err = std::abs(rho.trace() - 1.0);
    if (trace_err > kTraceTolerance)
        throw Error(ErrorCode::NotAState, "trace deviates from 1 by " + std::to_string(trace_err));
    Eigen::VectorXd p = spectrum(rho, 0.5 * (rho.entries + rho.entries.adjoint()));
    if (p.minCoeff() < -kNegativeEigenTolerance)
        throw Error(ErrorCode::NotAState, "negative eigenvalue " + std::to_string(p.minCoeff()));
    return p.cwiseMax(0.0);
}

}  // namespace detail

// -sum p ln p over the spectrum, with eigenvalues in [-1e-8, 0) clamped to 0.
inline double von_neumann_entropy(const DensityMatrix& rho) {
    const Eigen::VectorXd p = detail::state_spectrum(rho);
    double s = 0.0;
    for (double x : p)
        if (x > 0.0) s -= x * std::log(x);
    return std::max(s, 0.0);
}

inline double von_neumann_entropy_bits(const DensityMatrix& rho) {
    return von_neumann_entropy(rho) / std::numbers::ln2;
}

// tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
inline double purity(const DensityMatrix& rho) { return rho.entries.cwiseAbs2().sum(); }

// (1/2) || rho - sigma ||_1 for Hermitian arguments.
inline double trace_distance(const Matrix& rho, const Matrix& sigma) {
    const Matrix d = rho - sigma;
    return 0.5 * detail::hermitian_eigenvalues(0.5 * (d + d.adjoint())).cwiseAbs().sum();
}

inline double expectation(const MatrixOperator& op, const QuantumState& state) {
    require_same_basis(op.space, state.space);
    return std::real(state.amplitudes.dot(op.entries * state.amplitudes));
}

inline double expectation(const MatrixOperator& op, const DensityMatrix& rho) {
    require_same_basis(op.space, rho.space);
    return std::real((op.entries * rho.entries).trace());
}

}  // namespace pulse_dicke
