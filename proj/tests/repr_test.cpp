#include "qtomo/repr.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "gtest/gtest.h"

using namespace qtomo;

namespace {

// s_lambda(xs) as a sum of monomials over semistandard tableaux.
double schur_by_tableaux(const std::vector<int>& shape, const std::vector<double>& xs) {
    const int d = static_cast<int>(xs.size());
    std::vector<std::pair<int, int>> cells;
    for (std::size_t r = 0; r < shape.size(); ++r)
        for (int c = 0; c < shape[r]; ++c) cells.emplace_back(static_cast<int>(r), c);
    std::vector<std::vector<int>> t(shape.size());
    for (std::size_t r = 0; r < shape.size(); ++r) t[r].assign(static_cast<std::size_t>(shape[r]), 0);
    double total = 0.0;
    auto fill = [&](auto&& self, std::size_t k, double monomial) -> void {
        if (k == cells.size()) {
            total += monomial;
            return;
        }
        const auto [r, c] = cells[k];
        int lo = 0;
        if (c > 0) lo = std::max(lo, t[r][c - 1]);
        if (r > 0) lo = std::max(lo, t[r - 1][c] + 1);
        for (int v = lo; v < d; ++v) {
            t[r][c] = v;
            self(self, k + 1, monomial * xs[static_cast<std::size_t>(v)]);
        }
    };
    fill(fill, 0, 1.0);
    return total;
}

std::uint64_t class_size(const Partition& cycles) {
    // n! / prod_k (k^{m_k} m_k!)
    const int n = cycles.size();
    double denom = 1.0;
    std::map<int, int> mult;
    for (int c : cycles.parts()) mult[c]++;
    for (const auto& [k, m] : mult) {
        denom *= std::pow(k, m);
        for (int i = 2; i <= m; ++i) denom *= i;
    }
    double fact = 1.0;
    for (int i = 2; i <= n; ++i) fact *= i;
    return static_cast<std::uint64_t>(std::llround(fact / denom));
}

}  // namespace

TEST(repr, schur_examples) {
    EXPECT_NEAR(schur_polynomial(Partition{2}, {0.5, 0.5}), 0.75, 1e-15);
    EXPECT_NEAR(schur_polynomial(Partition{2, 1}, {2.0, 3.0, 5.0}), 280.0, 1e-12);
    EXPECT_EQ(schur_polynomial(Partition{1, 1, 1}, {1.0, 1.0}), 0.0);
    EXPECT_EQ(schur_polynomial(Partition{}, {0.3}), 1.0);
}

TEST(repr, schur_matches_tableau_sum) {
    Rng rng(3);
    for (int d = 1; d <= 4; ++d)
        for (int n = 1; n <= 6; ++n) {
            std::vector<double> xs(static_cast<std::size_t>(d));
            for (auto& x : xs) x = rng.uniform();
            for (const auto& lam : enumerate_partitions(n, d)) {
                const double expect = schur_by_tableaux(lam.parts(), xs);
                EXPECT_NEAR(schur_polynomial(lam, xs), expect, 1e-12 * std::max(1.0, expect)) << lam;
            }
        }
}

TEST(repr, schur_at_ones_is_weyl_dimension) {
    for (int d = 1; d <= 4; ++d)
        for (const auto& lam : enumerate_partitions(7, d))
            EXPECT_NEAR(schur_polynomial(lam, std::vector<double>(static_cast<std::size_t>(d), 1.0)),
                        static_cast<double>(dim_gl(lam, d)), 1e-9);
}

TEST(repr, character_examples) {
    EXPECT_EQ(sn_character(Partition{2, 1}, Partition{3}), -1);
    EXPECT_EQ(sn_character(Partition{2, 1}, Partition{1, 1, 1}), 2);
    EXPECT_EQ(sn_character(Partition{2, 1}, Partition{2, 1}), 0);
    EXPECT_EQ(sn_character(Partition{2, 2}, Partition{2, 2}), 2);
    EXPECT_EQ(sn_character(Partition{1, 1, 1, 1}, Partition{2, 1, 1}), -1);
    EXPECT_THROW(sn_character(Partition{2, 1}, Partition{2}), Error);
}

TEST(repr, character_orthogonality) {
    for (int n = 1; n <= 7; ++n) {
        const auto labels = enumerate_partitions(n, n);
        double fact = 1.0;
        for (int i = 2; i <= n; ++i) fact *= i;
        for (const auto& a : labels)
            for (const auto& b : labels) {
                double inner = 0.0;
                for (const auto& cls : labels)
                    inner += static_cast<double>(class_size(cls)) * sn_character(a, cls) * sn_character(b, cls);
                EXPECT_NEAR(inner / fact, a == b ? 1.0 : 0.0, 1e-9);
            }
        for (const auto& lam : labels)
            EXPECT_EQ(sn_character(lam, Partition(std::vector<int>(static_cast<std::size_t>(n), 1))),
                      static_cast<long long>(dim_sym(lam)));
    }
}

TEST(repr, isotypic_projectors_resolve_identity) {
    for (const auto& [d, n] : std::vector<std::pair<int, int>>{{2, 4}, {3, 3}}) {
        const auto size = static_cast<Eigen::Index>(std::llround(std::pow(d, n)));
        CMatrix sum = CMatrix::Zero(size, size);
        for (const auto& lam : enumerate_partitions(n, d)) {
            const CMatrix p = isotypic_projector(lam, n, d);
            EXPECT_LT((p * p - p).norm(), 1e-10);
            EXPECT_LT((p - p.adjoint()).norm(), 1e-12);
            EXPECT_NEAR(p.trace().real(), static_cast<double>(dim_sym(lam) * dim_gl(lam, d)), 1e-9);
            sum += p;
        }
        EXPECT_LT((sum - identity(size)).norm(), 1e-10);
    }
}

TEST(repr, symmetric_projector_for_two_qubits) {
    const CMatrix p = isotypic_projector(Partition{2}, 2, 2);
    EXPECT_NEAR(p(0, 0).real(), 1.0, 1e-15);
    EXPECT_NEAR(p(1, 1).real(), 0.5, 1e-15);
    EXPECT_NEAR(p(1, 2).real(), 0.5, 1e-15);
    EXPECT_NEAR(p(3, 3).real(), 1.0, 1e-15);
    EXPECT_LT(isotypic_projector(Partition{1, 1, 1}, 3, 2).norm(), 1e-15);
}

TEST(repr, young_basis_is_orthonormal_and_spans_the_irrep) {
    for (int d = 2; d <= 3; ++d)
        for (const auto& lam : enumerate_partitions(4, d)) {
            const auto basis = young_basis(lam, d);
            const CMatrix v = basis->vectors;
            EXPECT_EQ(static_cast<std::uint64_t>(v.cols()), dim_gl(lam, d));
            EXPECT_LT((v.adjoint() * v - identity(v.cols())).norm(), 1e-10);
            const CMatrix p = isotypic_projector(lam, 4, d);
            EXPECT_LT((p * v - v).norm(), 1e-10) << lam;
            EXPECT_NE(basis->basis_id.find("young-colread"), std::string::npos);
        }
}

TEST(repr, irrep_matrix_is_a_representation) {
    Rng rng(17);
    for (int d = 2; d <= 3; ++d)
        for (int n = 1; n <= 5; ++n)
            for (const auto& lam : enumerate_partitions(n, d)) {
                const CMatrix x = ginibre(d, d, rng), y = ginibre(d, d, rng);
                const CMatrix lhs = irrep_matrix(lam, x * y).mat;
                const CMatrix rhs = irrep_matrix(lam, x).mat * irrep_matrix(lam, y).mat;
                EXPECT_LT((lhs - rhs).norm(), 1e-10 * std::max(1.0, lhs.norm()));
                EXPECT_LT((irrep_matrix(lam, x.adjoint()).mat - irrep_matrix(lam, x).mat.adjoint()).norm(),
                          1e-10 * std::max(1.0, lhs.norm()));
                const CMatrix u = sample_haar_unitary(d, rng);
                EXPECT_TRUE(is_unitary(irrep_matrix(lam, u).mat, 1e-10));
            }
}

TEST(repr, irrep_trace_is_schur_polynomial) {
    Rng rng(19);
    for (int d = 2; d <= 4; ++d)
        for (const auto& lam : enumerate_partitions(4, d)) {
            const CMatrix rho = sample_density(d, d, rng);
            const RVector w = herm_eigenvalues(rho);
            const std::vector<double> xs(w.data(), w.data() + w.size());
            EXPECT_NEAR(irrep_matrix(lam, rho).mat.trace().real(), schur_by_tableaux(lam.parts(), xs), 1e-12);
        }
}

TEST(repr, irrep_rejects_too_many_rows) {
    EXPECT_THROW(irrep_matrix(Partition{1, 1, 1}, identity(2)), Error);
}

TEST(repr, generator_is_derivative_of_group_action) {
    Rng rng(23);
    const Partition lam{2, 1};
    const CMatrix h = ginibre(3, 3, rng);
    const double t = 1e-6;
    const CMatrix numeric =
        (irrep_matrix(lam, identity(3) + t * h).mat - irrep_matrix(lam, identity(3) - t * h).mat) / (2 * t);
    EXPECT_LT((irrep_generator(lam, h) - numeric).norm(), 1e-6);
}

TEST(repr, clebsch_gordan_blocks) {
    Rng rng(29);
    for (const auto& [lam, d] : std::vector<std::pair<Partition, int>>{
             {Partition{1}, 2}, {Partition{2}, 2}, {Partition{2, 1}, 2}, {Partition{2, 1}, 3}, {Partition{1, 1}, 3},
             {Partition{3, 1}, 3}, {Partition{1}, 4}}) {
        const auto cg = cg_isometries(lam, d);
        ASSERT_EQ(cg->blocks.size(), add_box(lam, d).size());
        std::uint64_t total = 0;
        for (const auto& b : cg->blocks) {
            EXPECT_EQ(static_cast<std::uint64_t>(b.isometry.cols()), dim_gl(b.mu, d));
            EXPECT_LT((b.isometry.adjoint() * b.isometry - identity(b.isometry.cols())).norm(), 1e-9);
            total += dim_gl(b.mu, d);
        }
        EXPECT_EQ(total, dim_gl(lam, d) * static_cast<std::uint64_t>(d));
        EXPECT_LT(cg_completeness_residual(*cg), 1e-9);
        EXPECT_LT(cg_intertwining_residual(*cg, sample_haar_unitary(d, rng)), 1e-9) << lam << " d=" << d;
        for (std::size_t i = 1; i < cg->blocks.size(); ++i) EXPECT_GT(cg->blocks[i - 1].mu, cg->blocks[i].mu);
    }
}

TEST(repr, clebsch_gordan_intertwines_general_linear_maps) {
    Rng rng(31);
    const auto cg = cg_isometries(Partition{2, 1}, 3);
    const CMatrix x = ginibre(3, 3, rng);
    const CMatrix joint = kron(irrep_matrix(cg->source, x).mat, x);
    for (const auto& b : cg->blocks)
        EXPECT_LT((joint * b.isometry - b.isometry * irrep_matrix(b.mu, x).mat).norm(), 1e-9);
}
