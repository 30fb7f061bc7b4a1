#include "qtomo/povm.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "gtest/gtest.h"

using namespace qtomo;

namespace {

UnitarySet identity_set(int d) { return UnitarySet{d, {identity(d)}, 0}; }

}  // namespace

TEST(povm, required_size_small_case) {
    // ceil(2 * 4 * ln2 / 0.25 * ln 32)
    const double expect = std::ceil(2.0 * 4.0 * std::log(2.0) / 0.25 * std::log(32.0));
    EXPECT_EQ(expect, 77.0);
    const SetSize s = required_set_size(1, 2, 1, 0.5, MembershipClass::A);
    EXPECT_EQ(s.size, 77u);
    EXPECT_TRUE(s.outside_guarantee);
    EXPECT_FALSE(required_set_size(2, 2, 2, 0.4, MembershipClass::A).outside_guarantee);
}

TEST(povm, required_size_scaling) {
    for (int n = 1; n <= 6; ++n) {
        const double full = static_cast<double>(required_set_size(n, 2, 1, 0.5, MembershipClass::A).size);
        const double half = static_cast<double>(required_set_size(n, 2, 1, 0.25, MembershipClass::A).size);
        EXPECT_LE(std::abs(half - 4.0 * full), 4.0);
        EXPECT_GE(required_set_size(n, 2, 1, 0.5, MembershipClass::B).size,
                  required_set_size(n, 2, 1, 0.5, MembershipClass::A).size);
    }
    EXPECT_EQ(required_set_size(2, 2, 2, 0.4, MembershipClass::A).size, 6655u);
}

TEST(povm, required_size_rejects_eta) {
    EXPECT_THROW(required_set_size(2, 2, 1, 0.0, MembershipClass::A), Error);
    EXPECT_THROW(required_set_size(2, 2, 1, 0.6, MembershipClass::A), Error);
}

TEST(povm, twirl_scalar_examples) {
    EXPECT_NEAR(twirl_scalar(Partition{1}, Partition{1}, 2), 0.5, 1e-15);
    EXPECT_NEAR(twirl_scalar(Partition{2}, Partition{2}, 2), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(twirl_scalar(Partition{1, 1}, Partition{1, 1}, 2), 0.25, 1e-15);
    EXPECT_THROW(twirl_scalar(Partition{2}, Partition{1, 1, 1}, 3), Error);
}

TEST(povm, empirical_twirl_examples) {
    const CMatrix t = empirical_twirl(identity_set(2), Partition{1}, Partition{1});
    EXPECT_LT((t - diagonal({1.0, 0.0})).norm(), 1e-15);
    const UnitarySet set = generate_haar_set(3, 25, 4);
    for (const auto& [lam, mu] : std::vector<std::pair<Partition, Partition>>{
             {Partition{2}, Partition{2}}, {Partition{2, 1}, Partition{3, 1}}, {Partition{2, 1}, Partition{2, 1, 1}}}) {
        const CMatrix tw = empirical_twirl(set, lam, mu);
        EXPECT_NEAR(tw.trace().real(), schur_polynomial_diag(mu, normalized_diag(lam, 3)), 1e-12);
    }
}

TEST(povm, empirical_twirl_converges_to_scalar) {
    const UnitarySet set = generate_haar_set(2, 10000, 8);
    const CMatrix tw = empirical_twirl(set, Partition{2}, Partition{2});
    const CMatrix target = identity(3) / 3.0;
    EXPECT_LT((tw - target).cwiseAbs().maxCoeff(), 5e-2);
}

TEST(povm, identity_set_fails_membership) {
    const auto rep = check_membership(identity_set(2), 1, 2, 1, 0.5, MembershipClass::A);
    EXPECT_FALSE(rep.overall);
    ASSERT_EQ(rep.per_label.size(), 1u);
    EXPECT_NEAR(rep.per_label[0].min_eig_ratio, 0.0, 1e-15);
    EXPECT_NEAR(rep.per_label[0].max_eig_ratio, 2.0, 1e-15);
    EXPECT_THROW(check_membership(identity_set(2), 1, 2, 1, 1.0, MembershipClass::A), Error);
}

TEST(povm, class_b_implies_class_a) {
    int b_passes = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const UnitarySet set = generate_haar_set(2, 60, seed);
        const bool b = check_membership(set, 2, 2, 2, 0.5, MembershipClass::B).overall;
        const bool a = check_membership(set, 2, 2, 2, 0.5, MembershipClass::A).overall;
        if (b) {
            ++b_passes;
            EXPECT_TRUE(a) << "seed " << seed;
        }
    }
    EXPECT_GT(b_passes, 0);
}

TEST(povm, class_b_checks_every_added_box) {
    const UnitarySet set = generate_haar_set(3, 40, 2);
    const auto rep = check_membership(set, 2, 3, 2, 0.5, MembershipClass::B);
    // (2) -> (3), (2,1); (1,1) -> (2,1); mu with three rows is excluded at r = 2.
    EXPECT_EQ(rep.per_label.size(), 3u);
}

TEST(povm, zero_scalar_pairs_need_vanishing_twirl) {
    // lambda = (2) at d = 3 has lambda_bar of rank 1, so mu = (1,1,1) style pairs carry c = 0.
    EXPECT_EQ(twirl_scalar(Partition{2}, Partition{2, 1}, 3), 0.0);
    const UnitarySet set = generate_haar_set(3, 30, 1);
    EXPECT_LT(empirical_twirl(set, Partition{2}, Partition{2, 1}).norm(), 1e-12);
    const auto rep = check_membership(set, 2, 3, 3, 0.9, MembershipClass::B);
    for (const auto& e : rep.per_label)
        if (e.scalar == 0.0) EXPECT_TRUE(e.pass);
}

TEST(povm, identity_set_povm_is_not_positive) {
    const auto set = std::make_shared<const UnitarySet>(identity_set(2));
    const DiscretePovm povm = build_povm(Partition{1}, set, 0.0);
    ASSERT_EQ(povm.elements.size(), 1u);
    EXPECT_LT((povm.elements[0] - 2.0 * diagonal({1.0, 0.0})).norm(), 1e-15);
    EXPECT_LT((povm.fail_element - diagonal({-1.0, 1.0})).norm(), 1e-15);
    EXPECT_LT(povm.fail_min_eigenvalue(), 0.0);
    EXPECT_LT(povm.completeness_residual(), 1e-15);
}

TEST(povm, asserted_membership_with_bad_set_is_an_integrity_error) {
    const auto set = std::make_shared<const UnitarySet>(identity_set(2));
    MembershipReport fake;
    fake.overall = true;
    EXPECT_THROW(build_povm(Partition{1}, set, 0.0, &fake), NumericalIntegrityError);
}

TEST(povm, element_traces_are_uniform) {
    const auto set = std::make_shared<const UnitarySet>(generate_haar_set(3, 12, 5));
    const double eta = 0.3;
    for (const auto& lam : enumerate_partitions(3, 3)) {
        const DiscretePovm povm = build_povm(lam, set, eta);
        const double expect = static_cast<double>(dim_gl(lam, 3)) / ((1 + eta) * 12.0);
        for (const auto& e : povm.elements) {
            EXPECT_NEAR(e.trace().real(), expect, 1e-12);
            EXPECT_GE(herm_eigenvalues(e).minCoeff(), -1e-12);
        }
        EXPECT_LT(povm.completeness_residual(), 1e-12);
    }
}

TEST(povm, verified_sets_give_positive_fail_elements) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto set = std::make_shared<const UnitarySet>(generate_haar_set(2, 120, 100 + seed));
        const auto rep = check_membership(*set, 3, 2, 2, 0.5, MembershipClass::A);
        if (!rep.overall) continue;
        for (const auto& lam : enumerate_partitions(3, 2))
            EXPECT_GE(build_povm(lam, set, 0.5, &rep).fail_min_eigenvalue(), -1e-9);
    }
}

TEST(povm, uset_round_trip_is_bit_exact) {
    const UnitarySet set = generate_haar_set(3, 5, 0xDEADBEEFULL);
    std::stringstream buf;
    write_unitary_set(buf, set);
    const std::string bytes = buf.str();
    EXPECT_EQ(bytes.rfind("USET 1 3 5 3735928559\n", 0), 0u);
    EXPECT_EQ(bytes.size(), std::string("USET 1 3 5 3735928559\n").size() + 5 * 9 * 16);
    const UnitarySet back = read_unitary_set(buf);
    EXPECT_EQ(back.d, 3);
    EXPECT_EQ(back.seed, set.seed);
    ASSERT_EQ(back.count(), set.count());
    for (std::size_t i = 0; i < set.count(); ++i)
        for (Eigen::Index k = 0; k < 9; ++k) EXPECT_EQ(back.members[i](k), set.members[i](k));
}

TEST(povm, uset_file_round_trip) {
    const UnitarySet set = generate_haar_set(2, 7, 11);
    const std::string path = ::testing::TempDir() + "set.uset";
    save_unitary_set(path, set);
    const UnitarySet back = load_unitary_set(path);
    for (std::size_t i = 0; i < set.count(); ++i) EXPECT_EQ(back.members[i], set.members[i]);
    std::remove(path.c_str());
}

TEST(povm, uset_rejects_bad_input) {
    std::stringstream bad_magic("USXT 1 2 1 0\n");
    EXPECT_THROW(read_unitary_set(bad_magic), Error);
    std::stringstream truncated("USET 1 2 1 0\nabc");
    EXPECT_THROW(read_unitary_set(truncated), Error);
}

TEST(povm, haar_set_is_reproducible) {
    const UnitarySet a = generate_haar_set(2, 3, 9), b = generate_haar_set(2, 3, 9);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.members[i], b.members[i]);
}
