#pragma once

// Hilbert space, pulse envelope and operators of the pulsed single-mode Dicke
// model
//
//     H(t) = omega a^dag a + epsilon J_z + (2 lambda(t) / sqrt(N)) (a^dag + a) J_x
//
// realised on the symmetric (j = N/2) sector of N qubits tensored with a
// truncated Fock ladder. hbar = 1 throughout.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pulse_dicke/error.hpp"

namespace pulse_dicke {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using SparseOp = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

struct ModelParams {
    int n_attackers{3};  // N
    double omega{1.0};   // cavity frequency
    double epsilon{1.0}; // qubit splitting
    int n_max{40};       // highest retained Fock level

    bool resonant() const { return epsilon == omega; }

    void validate() const {
        if (n_attackers < 1)
            throw Error(ErrorCode::InvalidArgument, "n_attackers must be >= 1, got " + std::to_string(n_attackers));
        if (n_max < 1)
            throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1, got " + std::to_string(n_max));
        if (!(omega > 0.0) || !std::isfinite(omega))
            throw Error(ErrorCode::InvalidArgument, "omega must be positive and finite");
        if (!(epsilon > 0.0) || !std::isfinite(epsilon))
            throw Error(ErrorCode::InvalidArgument, "epsilon must be positive and finite");
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

enum class PulseShape { Triangular };

// Up-down coupling envelope: rises linearly from 0 to `peak` over 1/speed and
// falls back to 0 at 2/speed.
struct PulseProfile {
    double speed{1.0};
    double peak{1.0};
    PulseShape shape{PulseShape::Triangular};

    double duration() const { return 2.0 / speed; }
    double apex_time() const { return 1.0 / speed; }

    void validate() const {
        if (!(speed > 0.0) || !std::isfinite(speed))
            throw Error(ErrorCode::InvalidArgument, "pulse speed must be positive and finite");
        if (!(peak >= 0.0) || !std::isfinite(peak))
            throw Error(ErrorCode::InvalidArgument, "pulse peak must be non-negative and finite");
    }
};

inline double pulse_value(const PulseProfile& profile, double t) {
    if (!(t > 0.0) || t >= profile.duration()) return 0.0;
    switch (profile.shape) {
        case PulseShape::Triangular: {
            const double s = profile.speed * t;
            const double ramp = s <= 1.0 ? s : 2.0 - s;
            return ramp > 0.0 ? profile.peak * ramp : 0.0;
        }
    }
    return 0.0;
}

struct BasisLabel {
    int spin_index;  // m + N/2, in [0, N]
    int photons;     // n, in [0, n_max]

    friend bool operator==(const BasisLabel&, const BasisLabel&) = default;
};

// Product basis |m> (x) |n> with the boson index running fastest:
// flat = (m + N/2) * (n_max + 1) + n.
class HilbertSpace {
public:
    HilbertSpace() : HilbertSpace(ModelParams{}) {}

    explicit HilbertSpace(const ModelParams& params) : params_(params) {
        params_.validate();
        dim_spin_ = params_.n_attackers + 1;
        dim_boson_ = params_.n_max + 1;
        dim_total_ = dim_spin_ * dim_boson_;
    }

    const ModelParams& params() const { return params_; }
    int n_attackers() const { return params_.n_attackers; }
    int dim_spin() const { return dim_spin_; }
    int dim_boson() const { return dim_boson_; }
    int dim_total() const { return dim_total_; }
    double total_spin() const { return 0.5 * params_.n_attackers; }

    double magnetic(int spin_index) const { return spin_index - total_spin(); }

    int index(BasisLabel label) const { return label.spin_index * dim_boson_ + label.photons; }
    int index(int spin_index, int photons) const { return spin_index * dim_boson_ + photons; }

    BasisLabel label(int flat) const { return {flat / dim_boson_, flat % dim_boson_}; }

    // Same basis (the frequencies do not enter the basis).
    bool same_basis(const HilbertSpace& other) const {
        return params_.n_attackers == other.params_.n_attackers && params_.n_max == other.params_.n_max;
    }

private:
    ModelParams params_;
    int dim_spin_{};
    int dim_boson_{};
    int dim_total_{};
};

inline HilbertSpace build_space(const ModelParams& params) { return HilbertSpace(params); }

struct MatrixOperator {
    HilbertSpace space;
    SparseOp entries;

    Matrix dense() const { return Matrix(entries); }
    MatrixOperator adjoint() const { return {space, SparseOp(entries.adjoint())}; }
};

namespace detail {

using Triplet = Eigen::Triplet<Complex>;

inline SparseOp from_triplets(int dim, const std::vector<Triplet>& triplets) {
    SparseOp op(dim, dim);
    op.setFromTriplets(triplets.begin(), triplets.end());
    op.makeCompressed();
    return op;
}

// <m+1| J_+ |m> for the spin index k = m + j.
inline double raising_coefficient(const HilbertSpace& space, int spin_index) {
    const double j = space.total_spin();
    const double m = space.magnetic(spin_index);
    return std::sqrt(j * (j + 1.0) - m * (m + 1.0));
}

}  // namespace detail

inline MatrixOperator op_boson_annihilate(const HilbertSpace& space) {
    std::vector<detail::Triplet> t;
    for (int k = 0; k < space.dim_spin(); ++k)
        for (int n = 1; n < space.dim_boson(); ++n)
            t.emplace_back(space.index(k, n - 1), space.index(k, n), std::sqrt(double(n)));
    return {space, detail::from_triplets(space.dim_total(), t)};
}

inline MatrixOperator op_boson_create(const HilbertSpace& space) { return op_boson_annihilate(space).adjoint(); }

inline MatrixOperator op_boson_number(const HilbertSpace& space) {
    std::vector<detail::Triplet> t;
    for (int k = 0; k < space.dim_spin(); ++k)
        for (int n = 1; n < space.dim_boson(); ++n) t.emplace_back(space.index(k, n), space.index(k, n), double(n));
    return {space, detail::from_triplets(space.dim_total(), t)};
}

inline MatrixOperator op_jz(const HilbertSpace& space) {
    std::vector<detail::Triplet> t;
    for (int k = 0; k < space.dim_spin(); ++k) {
        const double m = space.magnetic(k);
        if (m == 0.0) continue;
        for (int n = 0; n < space.dim_boson(); ++n) t.emplace_back(space.index(k, n), space.index(k, n), m);
    }
    return {space, detail::from_triplets(space.dim_total(), t)};
}

inline MatrixOperator op_jplus(const HilbertSpace& space) {
    std::vector<detail::Triplet> t;
    for (int k = 0; k + 1 < space.dim_spin(); ++k) {
        const double c = detail::raising_coefficient(space, k);
        for (int n = 0; n < space.dim_boson(); ++n) t.emplace_back(space.index(k + 1, n), space.index(k, n), c);
    }
    return {space, detail::from_triplets(space.dim_total(), t)};
}

inline MatrixOperator op_jx(const HilbertSpace& space) {
    const SparseOp jp = op_jplus(space).entries;
    return {space, SparseOp(0.5 * (jp + SparseOp(jp.adjoint())))};
}

inline MatrixOperator op_jy(const HilbertSpace& space) {
    const SparseOp jp = op_jplus(space).entries;
    return {space, SparseOp(Complex(0.0, -0.5) * (jp - SparseOp(jp.adjoint())))};
}

// exp(i pi (a^dag a + J_z + N/2)), diagonal with entries (-1)^(n + k).
inline MatrixOperator op_parity(const HilbertSpace& space) {
    std::vector<detail::Triplet> t;
    for (int k = 0; k < space.dim_spin(); ++k)
        for (int n = 0; n < space.dim_boson(); ++n)
            t.emplace_back(space.index(k, n), space.index(k, n), ((k + n) % 2 == 0) ? 1.0 : -1.0);
    return {space, detail::from_triplets(space.dim_total(), t)};
}

// H(lambda) split as drift + lambda * coupling, so that time stepping never
// reassembles the sparse pattern.
class DrivenHamiltonian {
public:
    explicit DrivenHamiltonian(const HilbertSpace& space) : space_(space) {
        const ModelParams& p = space.params();
        const SparseOp a = op_boson_annihilate(space).entries;
        const SparseOp adag = SparseOp(a.adjoint());
        drift_ = p.omega * op_boson_number(space).entries + p.epsilon * op_jz(space).entries;
        drift_.makeCompressed();
        const double scale = 2.0 / std::sqrt(double(p.n_attackers));
        coupling_ = scale * SparseOp((adag + a) * op_jx(space).entries);
        coupling_.prune(Complex(0.0), 1e-300);
        coupling_.makeCompressed();
    }

    const HilbertSpace& space() const { return space_; }
    const SparseOp& drift() const { return drift_; }
    const SparseOp& coupling() const { return coupling_; }

    SparseOp at(double lambda) const {
        SparseOp h = drift_ + lambda * coupling_;
        h.makeCompressed();
        return h;
    }

    // out = H(lambda) x
    template <class In, class Out>
    void apply(double lambda, const In& x, Out& out) const {
        out.noalias() = drift_ * x;
        if (lambda != 0.0) out.noalias() += lambda * (coupling_ * x);
    }

private:
    HilbertSpace space_;
    SparseOp drift_;
    SparseOp coupling_;
};

inline MatrixOperator assemble_hamiltonian(const HilbertSpace& space, double lambda_now) {
    if (!(lambda_now >= 0.0) || !std::isfinite(lambda_now))
        throw Error(ErrorCode::InvalidArgument, "coupling must be non-negative and finite");
    return {space, DrivenHamiltonian(space).at(lambda_now)};
}

}  // namespace pulse_dicke
