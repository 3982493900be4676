#pragma once

// Independent dense reference propagators for small dimensions. Operators are
// rebuilt here from Kronecker products and propagated with matrix
// exponentials, sharing nothing with the RK4 engines but the basis order.

#include <cmath>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "pulse_dicke/integrator.hpp"
#include "pulse_dicke/open.hpp"

namespace pulse_dicke::oracle {

inline constexpr int kMaxClosedDim = 64;
inline constexpr int kMaxOpenDim = 16;

struct DenseModel {
    Matrix drift;     // omega a^dag a + epsilon J_z
    Matrix coupling;  // (2 / sqrt N) (a^dag + a) J_x
    Matrix a;         // cavity annihilation on the full space
};

inline DenseModel dense_model(const ModelParams& p) {
    p.validate();
    const int ds = p.n_attackers + 1;
    const int db = p.n_max + 1;
    const double j = 0.5 * p.n_attackers;
    Matrix jz = Matrix::Zero(ds, ds), jx = Matrix::Zero(ds, ds);
    for (int k = 0; k < ds; ++k) {
        const double m = k - j;
        jz(k, k) = m;
        if (k + 1 < ds) {
            const double c = 0.5 * std::sqrt(j * (j + 1.0) - m * (m + 1.0));
            jx(k + 1, k) = c;
            jx(k, k + 1) = c;
        }
    }
    Matrix b = Matrix::Zero(db, db);
    for (int n = 1; n < db; ++n) b(n - 1, n) = std::sqrt(double(n));
    const Matrix is = Matrix::Identity(ds, ds), ib = Matrix::Identity(db, db);
    DenseModel m;
    m.a = Eigen::kroneckerProduct(is, b);
    m.drift = p.omega * Eigen::kroneckerProduct(is, Matrix(b.adjoint() * b)) + p.epsilon * Eigen::kroneckerProduct(jz, ib);
    m.coupling = (2.0 / std::sqrt(double(p.n_attackers))) * Eigen::kroneckerProduct(jx, Matrix(b + b.adjoint()));
    return m;
}

// Fourth-order commutator-free Magnus propagation with dense exponentials:
// each step applies exp(-i h (a1 H1 + a2 H2)) exp(-i h (a2 H1 + a1 H2)), H1, H2
// sampled at the two Gauss points. Steps never straddle the schedule's kink.
inline Vector propagate_closed(const ModelParams& p, const Vector& psi0, const CouplingSchedule& schedule, int steps_per_unit_time) {
    const int dim = (p.n_attackers + 1) * (p.n_max + 1);
    if (dim > kMaxClosedDim) throw Error(ErrorCode::InvalidArgument, "closed oracle limited to dimension 64");
    if (psi0.size() != dim) throw Error(ErrorCode::SpaceMismatch, "initial vector has the wrong dimension");
    const DenseModel m = dense_model(p);
    const double g = std::sqrt(3.0) / 6.0;
    const double a1 = (3.0 - 2.0 * std::sqrt(3.0)) / 12.0;
    const double a2 = (3.0 + 2.0 * std::sqrt(3.0)) / 12.0;
    std::vector<double> cuts{0.0};
    if (schedule.kink > 0.0 && schedule.kink < schedule.duration) cuts.push_back(schedule.kink);
    cuts.push_back(schedule.duration);
    Vector psi = psi0;
    const Complex mi(0.0, -1.0);
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const int steps = std::max(1, int(std::ceil((cuts[s + 1] - cuts[s]) * steps_per_unit_time)));
        const double h = (cuts[s + 1] - cuts[s]) / steps;
        for (int i = 0; i < steps; ++i) {
            const double t = cuts[s] + i * h;
            const Matrix h1 = m.drift + schedule.at(t + (0.5 - g) * h) * m.coupling;
            const Matrix h2 = m.drift + schedule.at(t + (0.5 + g) * h) * m.coupling;
            psi = Matrix((mi * h * (a2 * h1 + a1 * h2)).exp()) * psi;
            psi = Matrix((mi * h * (a1 * h1 + a2 * h2)).exp()) * psi;
        }
    }
    return psi;
}

// Column-stacked Liouvillian for constant coupling:
// vec(A X B) = (B^T (x) A) vec(X).
inline Matrix liouvillian(const ModelParams& p, double lambda, const OpenParams& open) {
    const int dim = (p.n_attackers + 1) * (p.n_max + 1);
    if (dim > kMaxOpenDim) throw Error(ErrorCode::InvalidArgument, "open oracle limited to dimension 16");
    open.validate();
    const DenseModel m = dense_model(p);
    const Matrix h = m.drift + lambda * m.coupling;
    const Matrix id = Matrix::Identity(dim, dim);
    const Complex mi(0.0, -1.0);
    Matrix l = mi * (Matrix(Eigen::kroneckerProduct(id, h)) - Matrix(Eigen::kroneckerProduct(h.transpose(), id)));
    auto dissipator = [&](const Matrix& c, double rate) {
        const Matrix cdc = c.adjoint() * c;
        l += rate * (Matrix(Eigen::kroneckerProduct(c.conjugate(), c)) - 0.5 * Matrix(Eigen::kroneckerProduct(id, cdc)) -
                     0.5 * Matrix(Eigen::kroneckerProduct(cdc.transpose(), id)));
    };
    dissipator(m.a, 2.0 * open.kappa * (open.nbar + 1.0));
    dissipator(m.a.adjoint(), 2.0 * open.kappa * open.nbar);
    return l;
}

inline Matrix propagate_open_constant(const ModelParams& p, const Matrix& rho0, double lambda, const OpenParams& open, double t) {
    const int dim = int(rho0.rows());
    const Matrix l = liouvillian(p, lambda, open);
    const Vector v0 = Eigen::Map<const Vector>(rho0.data(), dim * dim);
    const Vector v = Matrix((t * l).exp()) * v0;
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

}  // namespace pulse_dicke::oracle
