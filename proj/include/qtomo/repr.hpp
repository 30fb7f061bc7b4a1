#pragma once

// Numerical Schur-Weyl engine: Schur polynomials, symmetric-group characters,
// isotypic projectors, GL(d) irrep matrices and Clebsch-Gordan isometries.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtomo/cache.hpp"
#include "qtomo/error.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/partitions.hpp"
#include "qtomo/tensor.hpp"

namespace qtomo {

// ---------------------------------------------------------------------------
// Schur polynomials

/// s_lambda(x_1, ..., x_k) as the semistandard-tableau monomial sum, evaluated
/// through the branching rule s_lambda(x_1..x_k) = sum_{mu interlacing lambda}
/// s_mu(x_1..x_{k-1}) x_k^{|lambda|-|mu|}. Every term is non-negative for
/// non-negative arguments, so small values keep full relative precision.
inline double schur_polynomial(const Partition& lambda, std::span<const double> xs) {
    const int k_total = static_cast<int>(xs.size());
    if (lambda.rows() > k_total) return 0.0;
    if (lambda.empty()) return 1.0;

    std::map<std::pair<std::vector<int>, int>, double> memo;
    auto eval = [&](auto&& self, const std::vector<int>& parts, int k) -> double {
        // parts has no trailing zeros
        if (static_cast<int>(parts.size()) > k) return 0.0;
        if (parts.empty()) return 1.0;
        int total = 0;
        for (int p : parts) total += p;
        if (k == 1) return std::pow(xs[0], total);
        auto key = std::make_pair(parts, k);
        if (auto it = memo.find(key); it != memo.end()) return it->second;

        const double x_last = xs[static_cast<std::size_t>(k - 1)];
        double sum = 0.0;
        std::vector<int> mu(static_cast<std::size_t>(k - 1), 0);
        auto part = [&](int i) { return i < static_cast<int>(parts.size()) ? parts[static_cast<std::size_t>(i)] : 0; };
        // Enumerate mu_i in [lambda_{i+1}, lambda_i] for i = 0..k-2.
        auto choose = [&](auto&& next, int i, int mu_total) -> void {
            if (i == k - 1) {
                std::vector<int> trimmed = mu;
                while (!trimmed.empty() && trimmed.back() == 0) trimmed.pop_back();
                const int boxes = total - mu_total;
                if (x_last == 0.0 && boxes > 0) return;
                sum += self(self, trimmed, k - 1) * std::pow(x_last, boxes);
                return;
            }
            for (int v = part(i + 1); v <= part(i); ++v) {
                mu[static_cast<std::size_t>(i)] = v;
                next(next, i + 1, mu_total + v);
            }
        };
        choose(choose, 0, 0);
        memo.emplace(std::move(key), sum);
        return sum;
    };
    return eval(eval, lambda.parts(), k_total);
}

inline double schur_polynomial(const Partition& lambda, const std::vector<double>& xs) {
    return schur_polynomial(lambda, std::span<const double>(xs.data(), xs.size()));
}

/// s_lambda evaluated on the (real) diagonal of a diagonal matrix.
inline double schur_polynomial_diag(const Partition& lambda, const CMatrix& diag_matrix) {
    std::vector<double> xs(static_cast<std::size_t>(diag_matrix.rows()));
    for (Eigen::Index i = 0; i < diag_matrix.rows(); ++i) xs[static_cast<std::size_t>(i)] = diag_matrix(i, i).real();
    return schur_polynomial(lambda, xs);
}

// ---------------------------------------------------------------------------
// Symmetric-group characters

namespace detail {

inline long long mn_character(const std::vector<int>& shape, std::span<const int> cycles,
                              std::map<std::pair<std::vector<int>, std::vector<int>>, long long>& memo) {
    if (cycles.empty()) return shape.empty() ? 1 : 0;
    auto key = std::make_pair(shape, std::vector<int>(cycles.begin(), cycles.end()));
    if (auto it = memo.find(key); it != memo.end()) return it->second;

    // Beta-set (abacus) form: removing a rim hook of length k moves one bead k
    // positions down onto an empty spot; the sign counts beads jumped over.
    const int len = static_cast<int>(shape.size());
    const int k = cycles.front();
    std::vector<int> beta(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) beta[static_cast<std::size_t>(i)] = shape[static_cast<std::size_t>(i)] + (len - 1 - i);

    long long total = 0;
    for (int i = 0; i < len; ++i) {
        const int from = beta[static_cast<std::size_t>(i)];
        const int to = from - k;
        if (to < 0) continue;
        if (std::find(beta.begin(), beta.end(), to) != beta.end()) continue;
        int jumped = 0;
        for (int b : beta)
            if (b > to && b < from) ++jumped;
        std::vector<int> next_beta = beta;
        next_beta[static_cast<std::size_t>(i)] = to;
        std::sort(next_beta.rbegin(), next_beta.rend());
        std::vector<int> next_shape(static_cast<std::size_t>(len));
        for (int j = 0; j < len; ++j) next_shape[static_cast<std::size_t>(j)] = next_beta[static_cast<std::size_t>(j)] - (len - 1 - j);
        while (!next_shape.empty() && next_shape.back() == 0) next_shape.pop_back();
        const long long sub = mn_character(next_shape, cycles.subspan(1), memo);
        total += (jumped % 2 == 0) ? sub : -sub;
    }
    memo.emplace(std::move(key), total);
    return total;
}

}  // namespace detail

/// chi_lambda on the conjugacy class with the given cycle type (Murnaghan-Nakayama).
inline long long sn_character(const Partition& lambda, const Partition& cycle_type_partition) {
    require(lambda.size() == cycle_type_partition.size(),
            "sn_character: shape and cycle type partition different n");
    static std::mutex mutex;
    static std::map<std::pair<std::vector<int>, std::vector<int>>, long long> memo;
    std::lock_guard lock(mutex);
    const auto& cycles = cycle_type_partition.parts();
    return detail::mn_character(lambda.parts(), std::span<const int>(cycles.data(), cycles.size()), memo);
}

// ---------------------------------------------------------------------------
// Isotypic projectors (tensor-space oracle)

namespace detail {

inline CMatrix build_isotypic_projector(const Partition& lambda, int n, int d) {
    const std::int64_t dim = int_pow(d, n);
    CMatrix proj = CMatrix::Zero(dim, dim);
    if (lambda.rows() > d) return proj;

    std::vector<std::vector<int>> digits(static_cast<std::size_t>(dim));
    for (std::int64_t i = 0; i < dim; ++i) digits[static_cast<std::size_t>(i)] = index_digits(i, d, n);

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::map<std::vector<int>, long long> chi_by_class;
    std::vector<int> moved(static_cast<std::size_t>(n));
    double n_factorial = 1.0;
    for (int k = 2; k <= n; ++k) n_factorial *= k;
    do {
        const std::vector<int> type = cycle_type(perm);
        auto it = chi_by_class.find(type);
        if (it == chi_by_class.end()) it = chi_by_class.emplace(type, sn_character(lambda, Partition(type))).first;
        const long long chi = it->second;
        if (chi == 0) continue;
        for (std::int64_t col = 0; col < dim; ++col) {
            const auto& in = digits[static_cast<std::size_t>(col)];
            for (int k = 0; k < n; ++k) moved[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = in[static_cast<std::size_t>(k)];
            proj(digits_index(moved, d), col) += static_cast<double>(chi);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    proj *= static_cast<double>(dim_sym(lambda)) / n_factorial;
    return proj;
}

}  // namespace detail

/// Pi_lambda = (dim P_lambda / n!) sum_pi chi_lambda(pi) P(pi) on (C^d)^{(x)n}.
inline CMatrix isotypic_projector(const Partition& lambda, int n, int d) {
    require(lambda.size() == n, "isotypic_projector: partition does not have n boxes");
    require(d >= 1 && n >= 0, "isotypic_projector: invalid dimensions");
    require_oracle_scale(d, n, "isotypic_projector");
    static OnceCache<std::pair<std::vector<int>, int>, CMatrix> cache;
    return *cache.get({lambda.parts(), d}, [&] { return detail::build_isotypic_projector(lambda, n, d); });
}

// ---------------------------------------------------------------------------
// Irrep bases and matrices

/// Orthonormal basis of Q_lambda^d embedded in (C^d)^{(x)n}: columns span the
/// image of the Young symmetrizer (row symmetrization, then column
/// antisymmetrization) of the column-reading standard tableau.
struct YoungBasis {
    Partition label;
    int d = 0;
    std::string basis_id;
    RowMajorCMatrix vectors;  // d^n x dim_gl(lambda, d)
};

namespace detail {

struct TableauLayout {
    std::vector<std::vector<int>> row_positions;
    std::vector<std::vector<int>> col_positions;
};

inline TableauLayout column_reading_layout(const Partition& lambda) {
    TableauLayout layout;
    layout.row_positions.resize(static_cast<std::size_t>(lambda.rows()));
    const Partition conj = lambda.conjugate();
    int next = 0;
    for (int j = 0; j < conj.rows(); ++j) {
        std::vector<int> col;
        for (int i = 0; i < conj[j]; ++i) {
            layout.row_positions[static_cast<std::size_t>(i)].push_back(next);
            col.push_back(next);
            ++next;
        }
        layout.col_positions.push_back(std::move(col));
    }
    return layout;
}

/// Every element of the column group as (position map, sign).
inline std::vector<std::pair<std::vector<int>, int>> column_group(const TableauLayout& layout, int n) {
    std::vector<std::pair<std::vector<int>, int>> group;
    std::vector<int> base(static_cast<std::size_t>(n));
    std::iota(base.begin(), base.end(), 0);
    group.emplace_back(base, 1);
    for (const auto& col : layout.col_positions) {
        if (col.size() < 2) continue;
        std::vector<std::pair<std::vector<int>, int>> expanded;
        std::vector<int> order(col.size());
        std::iota(order.begin(), order.end(), 0);
        do {
            std::vector<int> as_perm(order.begin(), order.end());
            const int sign = (static_cast<int>(as_perm.size()) - static_cast<int>(cycle_type(as_perm).size())) % 2 == 0 ? 1 : -1;
            for (const auto& [map, s] : group) {
                std::vector<int> composed = map;
                for (std::size_t t = 0; t < col.size(); ++t)
                    composed[static_cast<std::size_t>(col[t])] = map[static_cast<std::size_t>(col[static_cast<std::size_t>(order[t])])];
                expanded.emplace_back(std::move(composed), s * sign);
            }
        } while (std::next_permutation(order.begin(), order.end()));
        group = std::move(expanded);
    }
    return group;
}

/// Weakly increasing sequences of length len over [0, d).
inline std::vector<std::vector<int>> weak_rows(int len, int d) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int lo) -> void {
        if (static_cast<int>(cur.size()) == len) {
            out.push_back(cur);
            return;
        }
        for (int v = lo; v < d; ++v) {
            cur.push_back(v);
            self(self, v);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

inline YoungBasis build_young_basis(const Partition& lambda, int d) {
    const int n = lambda.size();
    require_oracle_scale(d, n, "irrep basis");
    const std::int64_t dim = int_pow(d, n);
    const auto target = static_cast<Eigen::Index>(dim_gl(lambda, d));
    YoungBasis basis{lambda, d, "young-colread:" + lambda.to_string() + ":d" + std::to_string(d),
                     RowMajorCMatrix(dim, target)};
    if (n == 0) {
        basis.vectors(0, 0) = 1.0;
        return basis;
    }

    const TableauLayout layout = column_reading_layout(lambda);
    const auto group = column_group(layout, n);

    // Row fillings: weakly increasing per row. Semistandard fillings (strictly
    // increasing down columns) are tried first; the rest are a fallback.
    std::vector<std::vector<std::vector<int>>> per_row;
    for (int i = 0; i < lambda.rows(); ++i) per_row.push_back(weak_rows(lambda[i], d));
    std::vector<std::vector<std::vector<int>>> fillings;
    std::vector<std::vector<int>> cur(static_cast<std::size_t>(lambda.rows()));
    auto product = [&](auto&& self, std::size_t row) -> void {
        if (row == per_row.size()) {
            fillings.push_back(cur);
            return;
        }
        for (const auto& r : per_row[row]) {
            cur[row] = r;
            self(self, row + 1);
        }
    };
    product(product, 0);
    auto semistandard = [&](const std::vector<std::vector<int>>& f) {
        for (std::size_t i = 1; i < f.size(); ++i)
            for (std::size_t j = 0; j < f[i].size(); ++j)
                if (f[i][j] <= f[i - 1][j]) return false;
        return true;
    };
    std::stable_partition(fillings.begin(), fillings.end(), semistandard);

    CVector work(dim);
    CVector antisym(dim);
    std::vector<int> digits(static_cast<std::size_t>(n));
    std::vector<int> moved(static_cast<std::size_t>(n));
    Eigen::Index found = 0;
    for (const auto& filling : fillings) {
        if (found == target) break;
        // Row symmetrization: sum over distinct arrangements within each row.
        work.setZero();
        std::vector<std::vector<int>> rows = filling;
        auto arrange = [&](auto&& self, std::size_t row) -> void {
            if (row == rows.size()) {
                for (std::size_t i = 0; i < rows.size(); ++i)
                    for (std::size_t j = 0; j < rows[i].size(); ++j)
                        digits[static_cast<std::size_t>(layout.row_positions[i][j])] = rows[i][j];
                work(digits_index(digits, d)) += 1.0;
                return;
            }
            std::sort(rows[row].begin(), rows[row].end());
            do {
                self(self, row + 1);
            } while (std::next_permutation(rows[row].begin(), rows[row].end()));
        };
        arrange(arrange, 0);
        // Column antisymmetrization.
        antisym.setZero();
        for (std::int64_t idx = 0; idx < dim; ++idx) {
            const cplx c = work(idx);
            if (c == cplx(0.0, 0.0)) continue;
            const std::vector<int> in = index_digits(idx, d, n);
            for (const auto& [map, sign] : group) {
                for (int k = 0; k < n; ++k) moved[static_cast<std::size_t>(k)] = in[static_cast<std::size_t>(map[static_cast<std::size_t>(k)])];
                antisym(digits_index(moved, d)) += static_cast<double>(sign) * c;
            }
        }
        const double raw = antisym.norm();
        if (raw < 1e-12) continue;
        antisym /= raw;
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index j = 0; j < found; ++j) {
                const CVector col = basis.vectors.col(j);
                antisym -= col * col.dot(antisym);
            }
        const double residual = antisym.norm();
        if (residual < 1e-8) continue;
        basis.vectors.col(found++) = antisym / residual;
    }
    if (found != target)
        throw NumericalIntegrityError("irrep basis: spanned " + std::to_string(found) + " of " +
                                      std::to_string(target) + " dimensions for " + lambda.to_string());
    return basis;
}

}  // namespace detail

/// Cached basis for Q_lambda^d.
inline std::shared_ptr<const YoungBasis> young_basis(const Partition& lambda, int d) {
    require(lambda.rows() <= d, "irrep basis: partition has more rows than the dimension");
    static OnceCache<std::pair<std::vector<int>, int>, YoungBasis> cache;
    return cache.get({lambda.parts(), d}, [&] { return detail::build_young_basis(lambda, d); });
}

/// q_lambda(X) in the fixed orthonormal basis of Q_lambda^d.
struct IrrepMatrix {
    Partition label;
    int d = 0;
    std::string basis_id;
    CMatrix mat;
};

inline IrrepMatrix irrep_matrix(const Partition& lambda, const CMatrix& x) {
    require(x.rows() == x.cols(), "irrep_matrix: operator is not square");
    const int d = static_cast<int>(x.rows());
    if (lambda.rows() > d) throw Error("irrep_matrix: partition " + lambda.to_string() + " has more than d rows");
    const auto basis = young_basis(lambda, d);
    RowMajorCMatrix image = basis->vectors;
    apply_tensor_power(x, lambda.size(), image);
    return IrrepMatrix{lambda, d, basis->basis_id, basis->vectors.adjoint() * image};
}

/// Lie-algebra action dq_lambda(X) = d/dt q_lambda(exp(tX)) at t = 0.
inline CMatrix irrep_generator(const Partition& lambda, const CMatrix& x) {
    const int d = static_cast<int>(x.rows());
    require(lambda.rows() <= d, "irrep_generator: partition has more than d rows");
    const auto basis = young_basis(lambda, d);
    RowMajorCMatrix image = basis->vectors;
    apply_tensor_sum(x, lambda.size(), image);
    return basis->vectors.adjoint() * image;
}

/// Quadratic Casimir sum_ij E_ij E_ji on Q_mu^d: sum_i mu_i (mu_i + d + 1 - 2i).
inline double casimir_eigenvalue(const Partition& mu, int d) {
    double c = 0.0;
    for (int i = 0; i < mu.rows(); ++i) c += static_cast<double>(mu[i]) * (mu[i] + d - 1 - 2 * i);
    return c;
}

// ---------------------------------------------------------------------------
// Clebsch-Gordan isometries

struct CgBlock {
    Partition mu;
    CMatrix isometry;  // (dim Q_lambda * d) x dim Q_mu
};

/// Q_lambda^d (x) C^d = (+)_{mu in lambda + box} Q_mu^d.
struct CgDecomposition {
    Partition source;
    int d = 0;
    std::vector<CgBlock> blocks;

    const CgBlock& block(const Partition& mu) const {
        for (const auto& b : blocks)
            if (b.mu == mu) return b;
        throw Error("CgDecomposition: no block for " + mu.to_string());
    }
};

namespace detail {

/// Orthonormal basis of the common null space of Z -> A_i Z - Z B_i for
/// unitary pairs (A_i, B_i). Uses vec(A Z B^T) = (B (x) A) vec(Z) and the
/// unitary identity L^dag L = 2I - B^* (x) A - (B^* (x) A)^dag.
inline std::vector<CMatrix> intertwiner_space(const std::vector<std::pair<CMatrix, CMatrix>>& pairs) {
    const Eigen::Index rows = pairs.front().first.rows();
    const Eigen::Index cols = pairs.front().second.rows();
    const Eigen::Index size = rows * cols;
    CMatrix gram = CMatrix::Zero(size, size);
    for (const auto& [a, b] : pairs) {
        const CMatrix k = kron(b.conjugate(), a);
        gram += 2.0 * identity(size) - k - k.adjoint();
    }
    const EigenSystem es = herm_eigendecompose(gram);
    const double scale = std::max(es.values.maxCoeff(), 1.0);
    std::vector<CMatrix> out;
    for (Eigen::Index i = size - 1; i >= 0; --i) {
        if (es.values(i) > 1e-9 * scale) break;
        CVector v = es.vectors.col(i);
        out.emplace_back(Eigen::Map<CMatrix>(v.data(), rows, cols));
    }
    return out;
}

inline CgDecomposition build_cg(const Partition& lambda, int d) {
    const std::vector<Partition> targets = add_box(lambda, d);
    const auto m = static_cast<Eigen::Index>(dim_gl(lambda, d));
    const Eigen::Index size = m * d;

    std::uint64_t seed = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(d);
    for (int p : lambda.parts()) seed = seed * 1000003ULL + static_cast<std::uint64_t>(p);
    Rng rng(seed);

    std::vector<CMatrix> probes;
    std::vector<CMatrix> joint;
    for (int i = 0; i < 2; ++i) {
        probes.push_back(sample_haar_unitary(d, rng));
        joint.push_back(kron(irrep_matrix(lambda, probes.back()).mat, probes.back()));
    }

    // The Casimir separates the blocks: boxes added to different rows have different contents.
    CMatrix casimir = CMatrix::Zero(size, size);
    const CMatrix id_m = identity(m), id_d = identity(d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            CMatrix unit = CMatrix::Zero(d, d);
            unit(i, j) = 1.0;
            const CMatrix gen = kron(irrep_generator(lambda, unit), id_d) + kron(id_m, unit);
            casimir += gen * gen.adjoint();
        }
    }
    const EigenSystem es = herm_eigendecompose(casimir);
    const double scale = std::max(1.0, es.values.cwiseAbs().maxCoeff());

    CgDecomposition out{lambda, d, {}};
    Eigen::Index covered = 0;
    for (const auto& mu : targets) {
        const double c = casimir_eigenvalue(mu, d);
        std::vector<Eigen::Index> cols;
        for (Eigen::Index i = 0; i < size; ++i)
            if (std::abs(es.values(i) - c) <= 1e-8 * scale) cols.push_back(i);
        if (static_cast<std::uint64_t>(cols.size()) != dim_gl(mu, d))
            throw NumericalIntegrityError("cg_isometries: Casimir eigenspace for " + mu.to_string() + " has dimension " +
                                          std::to_string(cols.size()));
        covered += static_cast<Eigen::Index>(cols.size());
        CMatrix span(size, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) span.col(static_cast<Eigen::Index>(k)) = es.vectors.col(cols[k]);

        // Rotate the block basis so the restricted action equals q_mu exactly.
        std::vector<std::pair<CMatrix, CMatrix>> pairs;
        for (std::size_t i = 0; i < probes.size(); ++i)
            pairs.emplace_back(span.adjoint() * joint[i] * span, irrep_matrix(mu, probes[i]).mat);
        const auto w_space = intertwiner_space(pairs);
        if (w_space.size() != 1) throw NumericalIntegrityError("cg_isometries: block intertwiner is not unique");
        CMatrix w = w_space.front();
        const double norm = (w.adjoint() * w).trace().real() / static_cast<double>(w.cols());
        w /= std::sqrt(norm);
        out.blocks.push_back({mu, span * w});
    }
    if (covered != size) throw NumericalIntegrityError("cg_isometries: blocks do not exhaust the tensor product");
    std::sort(out.blocks.begin(), out.blocks.end(), [](const CgBlock& a, const CgBlock& b) { return a.mu > b.mu; });
    return out;
}

}  // namespace detail

/// Cached Clebsch-Gordan isometries for Q_lambda^d (x) C^d.
inline std::shared_ptr<const CgDecomposition> cg_isometries(const Partition& lambda, int d) {
    require(lambda.rows() <= d, "cg_isometries: partition has more rows than the dimension");
    static OnceCache<std::pair<std::vector<int>, int>, CgDecomposition> cache;
    return cache.get({lambda.parts(), d}, [&] { return detail::build_cg(lambda, d); });
}

/// max_mu || V_mu^dag (q_lambda(U) (x) U) V_mu - q_mu(U) ||_F.
inline double cg_intertwining_residual(const CgDecomposition& cg, const CMatrix& u) {
    const CMatrix joint = kron(irrep_matrix(cg.source, u).mat, u);
    double worst = 0.0;
    for (const auto& block : cg.blocks) {
        const CMatrix restricted = block.isometry.adjoint() * joint * block.isometry;
        worst = std::max(worst, (restricted - irrep_matrix(block.mu, u).mat).norm());
    }
    return worst;
}

/// || sum_mu V_mu V_mu^dag - I ||_F.
inline double cg_completeness_residual(const CgDecomposition& cg) {
    const Eigen::Index size = static_cast<Eigen::Index>(dim_gl(cg.source, cg.d)) * cg.d;
    CMatrix acc = CMatrix::Zero(size, size);
    for (const auto& block : cg.blocks) acc += block.isometry * block.isometry.adjoint();
    return (acc - identity(size)).norm();
}

}  // namespace qtomo
