#pragma once

// Dense complex linear algebra used throughout qtomo: Hermitian spectral
// calculus, Loewner interval tests and random unitaries / density matrices.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qtomo/error.hpp"

namespace qtomo {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Floor applied to every relative tolerance.
inline constexpr double kAbsFloor = 1e-12;

/// Seeded generator with a platform-independent output sequence.
///
/// Built on std::mt19937_64, whose output is fixed by the standard; the
/// uniform and normal transforms are implemented here because the standard
/// distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Circularly symmetric complex Gaussian with E|z|^2 = 1.
    cplx complex_normal() {
        const double re = normal();
        const double im = normal();
        return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
    }

    /// Index drawn from unnormalized non-negative weights.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        require(total > 0.0, "categorical: weights sum to zero");
        const double target = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (target < acc) return i;
        }
        // Rounding left target at the very top; return the last positive weight.
        for (std::size_t i = weights.size(); i-- > 0;)
            if (weights[i] > 0.0) return i;
        return weights.size() - 1;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Spectral decomposition of a Hermitian matrix, eigenvalues descending.
struct EigenSystem {
    RVector values;
    CMatrix vectors;
};

inline double frobenius_norm(const CMatrix& m) { return m.norm(); }

inline CMatrix identity(Eigen::Index d) { return CMatrix::Identity(d, d); }

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline CMatrix diagonal(const std::vector<double>& entries) {
    CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(entries.size()),
                                static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = entries[i];
    return out;
}

inline bool is_unitary(const CMatrix& u, double tol = 1e-10) {
    if (u.rows() != u.cols()) return false;
    return (u.adjoint() * u - identity(u.rows())).norm() <= tol;
}

inline bool all_finite(const CMatrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const cplx z = m.data()[i];
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized after
/// checking that its anti-Hermitian part is below 1e-10 * ||H||.
inline EigenSystem herm_eigendecompose(const CMatrix& h) {
    require(h.rows() == h.cols(), "herm_eigendecompose: matrix is not square");
    require(h.rows() > 0, "herm_eigendecompose: empty matrix");
    const double scale = std::max(h.norm(), kAbsFloor);
    const double skew = (h - h.adjoint()).norm();
    if (skew > 1e-10 * scale)
        throw Error("herm_eigendecompose: matrix is not Hermitian (skew " +
                    std::to_string(skew) + ")");
    const CMatrix sym = (h + h.adjoint()) * 0.5;
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
    if (solver.info() != Eigen::Success)
        throw NumericalIntegrityError("herm_eigendecompose: solver did not converge");
    const Eigen::Index n = h.rows();
    EigenSystem out{RVector(n), CMatrix(n, n)};
    // Eigen returns ascending order.
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = solver.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

inline RVector herm_eigenvalues(const CMatrix& h) { return herm_eigendecompose(h).values; }

inline CMatrix reconstruct(const EigenSystem& es, const RVector& values) {
    return es.vectors * values.cast<cplx>().asDiagonal() * es.vectors.adjoint();
}

namespace detail {

inline EigenSystem clamped_psd_spectrum(const CMatrix& a, const char* who) {
    EigenSystem es = herm_eigendecompose(a);
    const double scale = std::max(es.values.cwiseAbs().maxCoeff(), kAbsFloor);
    const double min_eig = es.values.minCoeff();
    if (min_eig < -1e-9 * scale)
        throw Error(std::string(who) + ": input is not positive semidefinite (min eigenvalue " +
                    std::to_string(min_eig) + ")");
    es.values = es.values.cwiseMax(0.0);
    return es;
}

}  // namespace detail

/// Principal square root of a PSD matrix.
inline CMatrix psd_sqrt(const CMatrix& a) {
    EigenSystem es = detail::clamped_psd_spectrum(a, "psd_sqrt");
    return reconstruct(es, es.values.cwiseSqrt());
}

/// Moore-Penrose pseudo-inverse of psd_sqrt(a). Eigenvalues at or below
/// `cutoff` are treated as zero; a negative cutoff selects 1e-12 * max eigenvalue.
inline CMatrix pseudo_inv_sqrt(const CMatrix& a, double cutoff = -1.0) {
    EigenSystem es = detail::clamped_psd_spectrum(a, "pseudo_inv_sqrt");
    if (cutoff < 0.0) cutoff = 1e-12 * es.values.maxCoeff();
    RVector inv(es.values.size());
    for (Eigen::Index i = 0; i < es.values.size(); ++i)
        inv(i) = es.values(i) > cutoff ? 1.0 / std::sqrt(es.values(i)) : 0.0;
    return reconstruct(es, inv);
}

/// True iff every eigenvalue of the Hermitian matrix x lies in [lo - tol, hi + tol].
inline bool loewner_between(const CMatrix& x, double lo, double hi, double tol) {
    const RVector w = herm_eigenvalues(x);
    return w.minCoeff() >= lo - tol && w.maxCoeff() <= hi + tol;
}

inline CMatrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    CMatrix g(rows, cols);
    // Row-major fill so the sample sequence does not depend on storage order.
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.complex_normal();
    return g;
}

/// Haar-distributed unitary: QR of a Ginibre matrix with each column of Q
/// rotated by the phase of the matching R diagonal entry.
inline CMatrix sample_haar_unitary(int d, Rng& rng) {
    require(d >= 1, "sample_haar_unitary: dimension must be positive");
    const CMatrix g = ginibre(d, d, rng);
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    const CMatrix& r = qr.matrixQR();
    for (int j = 0; j < d; ++j) {
        const cplx rjj = r(j, j);
        const double mag = std::abs(rjj);
        const cplx phase = mag > 0.0 ? rjj / mag : cplx(1.0, 0.0);
        q.col(j) *= phase;
    }
    return q;
}

/// Rank-r density matrix from the Hilbert-Schmidt-induced ensemble G G^dag / Tr.
inline CMatrix sample_density(int d, int r, Rng& rng) {
    require(d >= 1, "sample_density: dimension must be positive");
    require(r >= 1 && r <= d, "sample_density: rank must satisfy 1 <= r <= d");
    const CMatrix g = ginibre(d, r, rng);
    CMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return (rho + rho.adjoint()) * 0.5;
}

/// Number of eigenvalues above `tol`.
inline int numerical_rank(const CMatrix& h, double tol = 1e-10) {
    const RVector w = herm_eigenvalues(h);
    return static_cast<int>((w.array() > tol).count());
}

inline double purity(const CMatrix& rho) { return (rho * rho).trace().real(); }

/// Re Tr[a b] without forming the product.
inline double trace_product(const CMatrix& a, const CMatrix& b) {
    return (a.transpose().cwiseProduct(b)).sum().real();
}

}  // namespace qtomo
