#pragma once

// Discrete Haar POVMs N_{S,eta}(lambda, U): set construction and persistence,
// required set sizes, twirl scalars, and the class-A / class-B membership tests.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qtomo/error.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/parallel.hpp"
#include "qtomo/partitions.hpp"
#include "qtomo/repr.hpp"

namespace qtomo {

/// Finite set S of unitaries on C^d, always generated from a recorded seed.
struct UnitarySet {
    int d = 0;
    std::vector<CMatrix> members;
    std::uint64_t seed = 0;

    std::size_t count() const { return members.size(); }
};

inline UnitarySet generate_haar_set(int d, std::size_t count, std::uint64_t seed) {
    require(d >= 1, "generate_haar_set: dimension must be positive");
    UnitarySet set{d, {}, seed};
    set.members.reserve(count);
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) set.members.push_back(sample_haar_unitary(d, rng));
    return set;
}

// USET file: ASCII header line "USET 1 <d> <count> <seed>\n", then count * d^2
// complex entries as little-endian float64 (re, im) pairs, row-major per matrix.

namespace detail {

inline void write_le_double(std::ostream& os, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    os.write(bytes, 8);
}

inline double read_le_double(std::istream& is) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw Error("USET: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

}  // namespace detail

inline void write_unitary_set(std::ostream& os, const UnitarySet& set) {
    os << "USET 1 " << set.d << ' ' << set.count() << ' ' << set.seed << '\n';
    for (const auto& u : set.members)
        for (int i = 0; i < set.d; ++i)
            for (int j = 0; j < set.d; ++j) {
                detail::write_le_double(os, u(i, j).real());
                detail::write_le_double(os, u(i, j).imag());
            }
    if (!os) throw Error("USET: write failed");
}

inline UnitarySet read_unitary_set(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw Error("USET: missing header");
    std::istringstream hs(header);
    std::string magic;
    int version = 0;
    UnitarySet set;
    std::size_t count = 0;
    if (!(hs >> magic >> version >> set.d >> count >> set.seed) || magic != "USET")
        throw Error("USET: malformed header '" + header + "'");
    if (version != 1) throw Error("USET: unsupported version " + std::to_string(version));
    require(set.d >= 1, "USET: dimension must be positive");
    set.members.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        CMatrix u(set.d, set.d);
        for (int i = 0; i < set.d; ++i)
            for (int j = 0; j < set.d; ++j) {
                const double re = detail::read_le_double(is);
                const double im = detail::read_le_double(is);
                u(i, j) = cplx(re, im);
            }
        set.members.push_back(std::move(u));
    }
    return set;
}

inline void save_unitary_set(const std::string& path, const UnitarySet& set) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("USET: cannot open '" + path + "' for writing");
    write_unitary_set(os, set);
}

inline UnitarySet load_unitary_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("USET: cannot open '" + path + "'");
    return read_unitary_set(is);
}

enum class MembershipClass { A, B };

inline const char* to_string(MembershipClass c) { return c == MembershipClass::A ? "A" : "B"; }

struct SetSize {
    std::uint64_t size = 0;
    /// Set when n >= d >= 2 fails, i.e. outside the regime with a proven guarantee.
    bool outside_guarantee = false;
};

/// Set size at which a Haar-random S lies in A (or B) with positive probability:
/// ceil(2 m^{dr} ln 2 / eta^2 * ln(2 m^{2dr})) with m = n+1 (class A) or n+2 (class B).
inline SetSize required_set_size(int n, int d, int r, double eta, MembershipClass cls) {
    if (!(eta > 0.0 && eta <= 0.5)) throw Error("required_set_size: eta must lie in (0, 1/2]");
    require(n >= 1 && d >= 1 && r >= 1, "required_set_size: n, d, r must be positive");
    const long double base = cls == MembershipClass::A ? n + 1 : n + 2;
    const long double power = std::pow(base, static_cast<long double>(d) * r);
    const long double value = 2.0L * power * std::log(2.0L) / (static_cast<long double>(eta) * eta) *
                              std::log(2.0L * power * power);
    if (!(value < 1.8e19L)) throw Error("required_set_size: size exceeds 64-bit range");
    return {static_cast<std::uint64_t>(std::ceil(value)), !(n >= d && d >= 2)};
}

namespace detail {

inline void require_twirl_pair(const Partition& lambda, const Partition& mu, int d) {
    if (mu == lambda) return;
    for (const auto& cand : add_box(lambda, d))
        if (cand == mu) return;
    throw Error("twirl: " + mu.to_string() + " is neither " + lambda.to_string() + " nor lambda plus one box");
}

}  // namespace detail

/// c with Haar twirl U_{lambda,mu} = c I, namely s_mu(lambda bar) / dim Q_mu^d.
inline double twirl_scalar(const Partition& lambda, const Partition& mu, int d) {
    require(lambda.rows() <= d && mu.rows() <= d, "twirl_scalar: partition exceeds d rows");
    detail::require_twirl_pair(lambda, mu, d);
    return schur_polynomial_diag(mu, normalized_diag(lambda, d)) / static_cast<double>(dim_gl(mu, d));
}

/// (1/|S|) sum_U q_mu(U lambda_bar U^dag).
inline CMatrix empirical_twirl(const UnitarySet& set, const Partition& lambda, const Partition& mu) {
    require(set.count() > 0, "empirical_twirl: empty set");
    detail::require_twirl_pair(lambda, mu, set.d);
    const CMatrix bar = normalized_diag(lambda, set.d);
    const auto dim = static_cast<Eigen::Index>(dim_gl(mu, set.d));
    CMatrix acc = CMatrix::Zero(dim, dim);
    for (const auto& u : set.members) acc += irrep_matrix(mu, u * bar * u.adjoint()).mat;
    acc /= static_cast<double>(set.count());
    return (acc + acc.adjoint()) * 0.5;
}

struct MembershipEntry {
    Partition lambda;
    Partition mu;  // equals lambda for class A
    double scalar = 0.0;
    double min_eig_ratio = 0.0;  // min eigenvalue / scalar (0 when scalar is 0)
    double max_eig_ratio = 0.0;
    double twirl_norm = 0.0;     // Frobenius norm of the empirical twirl
    bool pass = false;
};

struct MembershipReport {
    MembershipClass cls = MembershipClass::A;
    double eta = 0.0;
    int n = 0, d = 0, r = 0;
    std::uint64_t seed = 0;
    std::size_t set_size = 0;
    std::vector<MembershipEntry> per_label;
    bool overall = false;
};

/// Tests (1 - eta) c I <= U^S_{lambda,mu} <= (1 + eta) c I for every lambda |- n
/// with at most r rows (and, for class B, every mu in lambda + box with at most
/// r rows). Pairs with c = 0 pass iff the empirical twirl vanishes.
inline MembershipReport check_membership(const UnitarySet& set, int n, int d, int r, double eta,
                                         MembershipClass cls, unsigned threads = 1) {
    if (!(eta > 0.0 && eta < 1.0)) throw Error("check_membership: eta must lie in (0, 1)");
    require(set.d == d, "check_membership: set dimension does not match d");
    require(r >= 1 && r <= d, "check_membership: need 1 <= r <= d");
    require(set.count() > 0, "check_membership: empty set");

    MembershipReport report{cls, eta, n, d, r, set.seed, set.count(), {}, true};
    const std::vector<Partition> labels = enumerate_partitions(n, r);
    std::vector<std::vector<MembershipEntry>> grouped(labels.size());

    parallel_for(labels.size(), threads, [&](std::size_t li) {
        const Partition& lambda = labels[li];
        std::vector<Partition> targets;
        if (cls == MembershipClass::A)
            targets.push_back(lambda);
        else
            targets = add_box(lambda, r);
        const CMatrix bar = normalized_diag(lambda, d);
        std::vector<CMatrix> acc;
        for (const auto& mu : targets) {
            const auto dim = static_cast<Eigen::Index>(dim_gl(mu, d));
            acc.push_back(CMatrix::Zero(dim, dim));
        }
        for (const auto& u : set.members) {
            const CMatrix rotated = u * bar * u.adjoint();
            for (std::size_t t = 0; t < targets.size(); ++t) acc[t] += irrep_matrix(targets[t], rotated).mat;
        }
        for (std::size_t t = 0; t < targets.size(); ++t) {
            CMatrix twirl = acc[t] / static_cast<double>(set.count());
            twirl = (twirl + twirl.adjoint()) * 0.5;
            MembershipEntry entry;
            entry.lambda = lambda;
            entry.mu = targets[t];
            entry.scalar = twirl_scalar(lambda, targets[t], d);
            entry.twirl_norm = twirl.norm();
            if (entry.scalar == 0.0) {
                entry.pass = entry.twirl_norm <= 1e-10;
            } else {
                const RVector w = herm_eigenvalues(twirl);
                entry.min_eig_ratio = w.minCoeff() / entry.scalar;
                entry.max_eig_ratio = w.maxCoeff() / entry.scalar;
                entry.pass = w.minCoeff() >= (1.0 - eta) * entry.scalar - 1e-10 &&
                             w.maxCoeff() <= (1.0 + eta) * entry.scalar + 1e-10;
            }
            grouped[li].push_back(entry);
        }
    });
    for (auto& group : grouped)
        for (auto& entry : group) {
            report.overall = report.overall && entry.pass;
            report.per_label.push_back(std::move(entry));
        }
    return report;
}

/// The family {N(lambda, U)}_{U in S} together with N(lambda, fail) on Q_lambda^d.
struct DiscretePovm {
    Partition label;
    double eta = 0.0;
    std::shared_ptr<const UnitarySet> set;
    std::vector<CMatrix> elements;
    CMatrix fail_element;
    std::string basis_id;

    double fail_min_eigenvalue() const { return herm_eigenvalues(fail_element).minCoeff(); }

    double completeness_residual() const {
        CMatrix acc = fail_element;
        for (const auto& e : elements) acc += e;
        return (acc - identity(acc.rows())).norm();
    }
};

/// N(lambda, U) = dim Q / ((1 + eta) |S| s_lambda(lambda bar)) q_lambda(U lambda_bar U^dag),
/// N(lambda, fail) = I - sum_U N(lambda, U). When `verified` carries a passing
/// membership report the fail element must be PSD (to -1e-8).
inline DiscretePovm build_povm(const Partition& lambda, std::shared_ptr<const UnitarySet> set, double eta,
                               const MembershipReport* verified = nullptr) {
    require(set && set->count() > 0, "build_povm: empty unitary set");
    require(eta >= 0.0, "build_povm: eta must be non-negative");
    const int d = set->d;
    require(lambda.rows() <= d, "build_povm: partition exceeds d rows");
    const CMatrix bar = normalized_diag(lambda, d);
    const double s_bar = schur_polynomial_diag(lambda, bar);
    const auto dim = static_cast<Eigen::Index>(dim_gl(lambda, d));
    const double coef = static_cast<double>(dim) / ((1.0 + eta) * static_cast<double>(set->count()) * s_bar);

    DiscretePovm povm;
    povm.label = lambda;
    povm.eta = eta;
    povm.basis_id = young_basis(lambda, d)->basis_id;
    povm.elements.reserve(set->count());
    CMatrix sum = CMatrix::Zero(dim, dim);
    for (const auto& u : set->members) {
        CMatrix e = coef * irrep_matrix(lambda, u * bar * u.adjoint()).mat;
        e = (e + e.adjoint()) * 0.5;
        sum += e;
        povm.elements.push_back(std::move(e));
    }
    povm.fail_element = identity(dim) - sum;
    povm.set = std::move(set);
    if (verified && verified->overall) {
        const double min_eig = povm.fail_min_eigenvalue();
        if (min_eig < -1e-8)
            throw NumericalIntegrityError("build_povm: fail element has eigenvalue " + std::to_string(min_eig) +
                                          " although membership was asserted");
    }
    return povm;
}

}  // namespace qtomo
