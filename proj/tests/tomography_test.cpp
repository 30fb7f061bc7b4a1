#include "qtomo/tomography.hpp"

#include <cmath>
#include <sstream>

#include "gtest/gtest.h"

using namespace qtomo;

namespace {

CMatrix pure(const CVector& v) { return v * v.adjoint() / v.squaredNorm(); }

CVector ket(std::initializer_list<cplx> entries) {
    CVector v(static_cast<Eigen::Index>(entries.size()));
    Eigen::Index i = 0;
    for (auto e : entries) v(i++) = e;
    return v;
}

std::shared_ptr<const UnitarySet> share(UnitarySet s) { return std::make_shared<const UnitarySet>(std::move(s)); }

}  // namespace

TEST(tomography, distance_identities) {
    Rng rng(1);
    const CMatrix rho = sample_density(3, 2, rng);
    EXPECT_NEAR(distance(Metric::trace, rho, rho), 0.0, 1e-12);
    EXPECT_NEAR(distance(Metric::fidelity, rho, rho), 1.0, 1e-9);
    const CMatrix zero = pure(ket({1, 0})), one = pure(ket({0, 1}));
    EXPECT_NEAR(distance(Metric::trace, zero, one), 1.0, 1e-12);
    EXPECT_NEAR(distance(Metric::fidelity, zero, one), 0.0, 1e-12);
    EXPECT_NEAR(distance(Metric::purified, zero, one), 1.0, 1e-12);
    EXPECT_NEAR(distance(Metric::bures, zero, one), std::sqrt(2.0), 1e-12);
}

TEST(tomography, mixed_versus_pure_qubit) {
    const CMatrix mixed = identity(2) / 2.0, zero = pure(ket({1, 0}));
    EXPECT_NEAR(fidelity(mixed, zero), 0.5, 1e-12);
    EXPECT_NEAR(trace_distance(mixed, zero), 0.5, 1e-12);
    EXPECT_NEAR(distance(Metric::infidelity, mixed, zero), 0.5, 1e-12);
}

TEST(tomography, fidelity_is_symmetric_and_matches_pure_overlap) {
    Rng rng(2);
    const CMatrix a = sample_density(3, 3, rng), b = sample_density(3, 1, rng);
    EXPECT_NEAR(fidelity(a, b), fidelity(b, a), 1e-10);
    const CMatrix g = ginibre(3, 1, rng), h = ginibre(3, 1, rng);
    const CVector u = g.col(0).normalized(), v = h.col(0).normalized();
    EXPECT_NEAR(fidelity(pure(u), pure(v)), std::norm(u.dot(v)), 1e-10);
}

TEST(tomography, metric_parsing) {
    EXPECT_EQ(parse_metric("bures"), Metric::bures);
    EXPECT_THROW(parse_metric("euclid"), Error);
    EXPECT_TRUE(is_metric(Metric::purified));
    EXPECT_FALSE(is_metric(Metric::infidelity));
}

TEST(tomography, fuchs_van_de_graaf_and_sandwich) {
    Rng rng(3);
    for (int i = 0; i < 300; ++i) {
        const int d = 1 + i % 4;
        const CMatrix a = sample_density(d, 1 + i % d, rng), b = sample_density(d, 1 + (i / 4) % d, rng);
        const double f = fidelity(a, b), t = trace_distance(a, b);
        EXPECT_GE(t - (1 - std::sqrt(f)), -1e-10);
        EXPECT_GE(std::sqrt(1 - f) - t, -1e-10);
        const double root = root_infidelity(a, b), infid = 1 - f;
        EXPECT_GE(infid - root, -1e-10);
        EXPECT_GE(2 * root - infid, -1e-10);
    }
}

TEST(tomography, hand_evaluated_joint_distribution) {
    // d = 2, n = 2, S = {I}, eta = 1/2, rho = I/2.
    const auto joint = direct_joint_distribution(identity(2) / 2.0, share(UnitarySet{2, {identity(2)}, 0}), 0.5, 2);
    EXPECT_NEAR((joint.at({Partition{2}, 0})), 0.5, 1e-14);
    EXPECT_NEAR((joint.at({Partition{2}, kFailOutcome})), 0.25, 1e-14);
    EXPECT_NEAR((joint.at({Partition{1, 1}, 0})), 1.0 / 6.0, 1e-14);
    EXPECT_NEAR((joint.at({Partition{1, 1}, kFailOutcome})), 1.0 / 12.0, 1e-14);
}

TEST(tomography, joint_marginal_is_label_distribution) {
    Rng rng(4);
    const auto set = share(generate_haar_set(3, 10, 4));
    const CMatrix rho = sample_density(3, 2, rng);
    const auto marg = marginal_labels(direct_joint_distribution(rho, set, 0.4, 4));
    const auto labels = label_distribution(rho, 4);
    double total = 0.0;
    for (const auto& [lam, p] : labels) {
        EXPECT_NEAR(marg.at(lam), p, 1e-9);
        total += marg.at(lam);
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(tomography, closed_form_matches_tensor_space) {
    Rng rng(5);
    for (int n = 1; n <= 4; ++n) {
        const UnitarySet set = generate_haar_set(2, 8, 50 + n);
        const CMatrix rho = sample_density(2, 1 + n % 2, rng);
        const auto a = direct_joint_distribution(rho, share(set), 0.6, n);
        const auto b = tensor_oracle_joint_distribution(rho, set, 0.6, n);
        ASSERT_EQ(a.size(), b.size());
        for (const auto& [key, p] : a) EXPECT_NEAR(p, b.at(key), 1e-8);
    }
}

TEST(tomography, pure_input_gives_pure_estimates) {
    Rng rng(6);
    const CMatrix u = sample_haar_unitary(3, rng);
    const CMatrix rho = u * diagonal({1, 0, 0}) * u.adjoint();
    const auto set = share(generate_haar_set(3, 300, 6));
    const auto rep = check_membership(*set, 5, 3, 1, 0.5, MembershipClass::A);
    ASSERT_TRUE(rep.overall);
    const TomographyEngine engine(set, 0.5, rep);
    const auto bound = engine.bind(rho);
    for (int i = 0; i < 50; ++i) {
        const TrialResult t = bound.run(5, rng);
        EXPECT_EQ(t.final_label, Partition{5});
        if (t.outcome == kFailOutcome) {
            EXPECT_LT((t.estimate - identity(3) / 3.0).norm(), 1e-15);
        } else {
            EXPECT_NEAR(purity(t.estimate), 1.0, 1e-10);
            EXPECT_EQ(numerical_rank(t.estimate), 1);
        }
        EXPECT_TRUE(t.verified_set);
    }
}

TEST(tomography, estimates_respect_rank_and_trace) {
    Rng rng(7);
    const CMatrix rho = sample_density(4, 2, rng);
    const TomographyEngine engine(share(generate_haar_set(4, 30, 7)), 0.5);
    const auto bound = engine.bind(rho);
    for (int i = 0; i < 40; ++i) {
        const TrialResult t = bound.run(4, rng);
        EXPECT_NEAR(t.estimate.trace().real(), 1.0, 1e-12);
        EXPECT_GE(herm_eigenvalues(t.estimate).minCoeff(), -1e-12);
        if (t.outcome != kFailOutcome) EXPECT_LE(numerical_rank(t.estimate), 2);
        EXPECT_NEAR(t.trace_dist, trace_distance(t.estimate, rho), 1e-12);
        EXPECT_NEAR(t.infidelity, 1 - fidelity(t.estimate, rho), 1e-12);
    }
}

TEST(tomography, verified_runs_are_stamped) {
    const auto set = share(generate_haar_set(2, 200, 3));
    const auto rep = check_membership(*set, 2, 2, 2, 0.5, MembershipClass::A);
    ASSERT_TRUE(rep.overall);
    Rng rng(8);
    const TrialResult t = run_tomography(identity(2) / 2.0, set, 0.5, 2, rng, rep);
    EXPECT_TRUE(t.verified_set);
    EXPECT_EQ(t.seed, 8u);
}

TEST(tomography, negative_probabilities_are_integrity_errors) {
    // S = {I} with eta = 0 has a fail element with eigenvalue -1.
    Rng rng(9);
    const CMatrix excited = diagonal({0.0, 1.0});
    const CMatrix rho = 0.02 * identity(2) / 2.0 + 0.98 * diagonal({1.0, 0.0});
    const TomographyEngine engine(share(UnitarySet{2, {identity(2)}, 0}), 0.0);
    EXPECT_THROW(engine.bind(rho).run(1, rng), NumericalIntegrityError);
    (void)excited;
}

TEST(tomography, empirical_frequencies_follow_closed_form) {
    Rng rng(10);
    const UnitarySet raw = generate_haar_set(2, 6, 31);
    const auto set = share(raw);
    const CMatrix rho = sample_density(2, 2, rng);
    const double eta = 0.9;
    const TomographyEngine engine(set, eta);
    const auto joint = direct_joint_distribution(engine, rho, 3);
    for (const auto& [key, p] : joint) ASSERT_GE(p, -1e-12) << "choose a seed with positive fail elements";
    const auto bound = engine.bind(rho);
    const int samples = 20000;
    std::map<std::pair<Partition, int>, int> counts;
    for (int i = 0; i < samples; ++i) {
        const TrialResult t = bound.run(3, rng);
        counts[{t.final_label, t.outcome}]++;
    }
    for (const auto& [key, p] : joint) {
        const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / samples);
        EXPECT_NEAR(counts[key] / double(samples), p, 4 * sigma);
    }
}

TEST(tomography, exact_statistics_bounds_on_small_grid) {
    const double eta = 0.5;
    const auto set = share(generate_haar_set(2, 200, 3));
    const auto rep = check_membership(*set, 3, 2, 2, eta, MembershipClass::A);
    ASSERT_TRUE(rep.overall);
    const TomographyEngine engine(set, eta, rep);
    Rng rng(11);
    for (int r = 1; r <= 2; ++r) {
        const CMatrix rho = sample_density(2, r, rng);
        const auto stats = exact_statistics(engine, rho, 3, {0.1, 0.3, 0.5});
        EXPECT_NEAR(stats.fail_probability + stats.success_probability, 1.0, 1e-9);
        EXPECT_LE(stats.fail_probability, fail_probability_bound(eta) + 1e-12);
        for (std::size_t i = 0; i < 3; ++i)
            EXPECT_LE(stats.infidelity_tail[i], infidelity_tail_bound(3, 2, r, eta, 0.1 + 0.2 * i));
        EXPECT_LE(stats.conditional_trace_norm_sq, trace_norm_sq_bound(3, 2, r, eta));
    }
}

TEST(tomography, mean_infidelity_on_passing_set) {
    const double eta = 0.5;
    std::shared_ptr<const UnitarySet> set;
    std::optional<MembershipReport> rep;
    for (std::uint64_t seed = 0; seed < 10 && !set; ++seed) {
        auto candidate = share(generate_haar_set(2, 256, seed));
        auto r = check_membership(*candidate, 4, 2, 2, eta, MembershipClass::A);
        if (r.overall) {
            set = candidate;
            rep = std::move(r);
        }
    }
    ASSERT_TRUE(set) << "no passing 256-element set among 10 seeds";
    const TomographyEngine engine(set, eta, rep);
    const CMatrix rho = diagonal({0.75, 0.25});

    double exact = 0.0;
    const double fail_infidelity = 1.0 - fidelity(identity(2) / 2.0, rho);
    for (const auto& [key, p] : direct_joint_distribution(engine, rho, 4))
        exact += p * (key.second == kFailOutcome ? fail_infidelity
                                                  : 1.0 - fidelity(estimate_for(*set, key.first, key.second), rho));

    Rng rng(12);
    const auto bound = engine.bind(rho);
    const int trials = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < trials; ++i) {
        const double infid = bound.run(4, rng).infidelity;
        ASSERT_TRUE(std::isfinite(infid));
        sum += infid;
        sum_sq += infid * infid;
    }
    const double mean = sum / trials;
    const double sigma = std::sqrt(std::max(sum_sq / trials - mean * mean, 0.0) / trials);
    EXPECT_NEAR(mean, exact, 4 * sigma + 1e-12);
    EXPECT_LE(mean, infidelity_tail_bound(4, 2, 2, eta, 2 * mean));
}

TEST(tomography, bound_formulas) {
    EXPECT_NEAR(fail_probability_bound(0.5), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(trace_norm_sq_bound(10, 2, 1, 0.5), 8.0 * (2 + 5) / 5.0, 1e-12);
    EXPECT_NEAR(infidelity_tail_bound(2, 1, 1, 0.5, 0.5), 2.0 / 3.0 + 27.0 * 0.75 * 0.75 / 1.5, 1e-12);
}

TEST(tomography, median_select_examples) {
    const std::vector<double> values{0.1, 0.2, 5.0, 0.15};
    auto absdiff = [](double a, double b) { return std::abs(a - b); };
    EXPECT_EQ(median_select_index(std::span<const double>(values), 1.0, absdiff), 0u);
    const std::vector<double> one{3.0};
    EXPECT_EQ(median_select_index(std::span<const double>(one), 0.1, absdiff), 0u);
    const std::vector<double> same{2.0, 2.0, 2.0};
    EXPECT_EQ(median_select_index(std::span<const double>(same), 0.1, absdiff), 0u);
    const std::vector<double> empty;
    EXPECT_THROW(median_select_index(std::span<const double>(empty), 0.1, absdiff), Error);
}

TEST(tomography, median_select_on_states) {
    const CMatrix zero = pure(ket({1, 0})), one = pure(ket({0, 1}));
    const std::vector<CMatrix> ests{one, zero, 0.9 * zero + 0.1 * one, 0.95 * zero + 0.05 * one};
    EXPECT_LT((median_select(ests, 0.1, Metric::trace) - zero).norm(), 1e-15);
    EXPECT_THROW(median_select(ests, 0.1, Metric::infidelity), Error);
    EXPECT_THROW(median_select(ests, 0.1, Metric::fidelity), Error);
}

TEST(tomography, median_select_three_epsilon_guarantee) {
    Rng rng(12);
    const double eps = 0.05;
    for (int trial = 0; trial < 200; ++trial) {
        const int c = 1 + trial % 4;
        const CMatrix truth = sample_density(2, 2, rng);
        std::vector<CMatrix> ests;
        for (int i = 0; i < c + 1; ++i) ests.push_back((1 - eps) * truth + eps * sample_density(2, 1, rng));
        for (int i = 0; i < c - 1; ++i) ests.push_back(sample_density(2, 1, rng));
        EXPECT_LE(trace_distance(median_select(ests, eps, Metric::trace), truth), 3 * eps + 1e-12);
    }
}

TEST(tomography, batch_stats_examples) {
    std::vector<TrialResult> trials(2);
    trials[0].trace_dist = 0.0;
    trials[1].trace_dist = 1.0;
    trials[1].outcome = 0;
    trials[0].outcome = kFailOutcome;
    const BatchStats s = batch_stats(trials, {0.5});
    EXPECT_DOUBLE_EQ(s.pac_rate_trace[0], 0.5);
    EXPECT_DOUBLE_EQ(s.smd_trace, std::sqrt(0.5));
    EXPECT_DOUBLE_EQ(s.fail_rate, 0.5);
    std::vector<TrialResult> zeros(5);
    for (auto& t : zeros) t.outcome = 1;
    const BatchStats z = batch_stats(zeros, {1e-3, 0.2});
    EXPECT_EQ(z.pac_rate_infidelity, (std::vector<double>{1.0, 1.0}));
    EXPECT_EQ(z.smd_infidelity, 0.0);
    EXPECT_EQ(z.fail_rate, 0.0);
    EXPECT_THROW(batch_stats(std::vector<TrialResult>{}, {0.1}), Error);
}

TEST(tomography, jsonl_record_format) {
    TrialResult t;
    t.final_label = Partition{3, 1};
    t.outcome = 7;
    t.infidelity = 0.25;
    t.trace_dist = 0.1;
    t.max_register_dim = 6;
    t.seed = 99;
    std::ostringstream os;
    write_trial_jsonl(os, 3, t);
    EXPECT_EQ(os.str(),
              "{\"trial\":3,\"seed\":99,\"label\":\"3,1\",\"outcome\":7,\"infidelity\":0.25,"
              "\"trace_dist\":0.10000000000000001,\"max_register_dim\":6,\"verified\":false}\n");
    t.outcome = kFailOutcome;
    std::ostringstream fail;
    write_trial_jsonl(fail, 0, t);
    EXPECT_NE(fail.str().find("\"outcome\":\"fail\""), std::string::npos);
}
