#pragma once

// End-to-end tomography: Schur sampling followed by the discrete POVM on the
// irrep register, estimate assignment, exact outcome distributions, distance
// measures, and median-of-estimates aggregation.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtomo/cache.hpp"
#include "qtomo/error.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/partitions.hpp"
#include "qtomo/povm.hpp"
#include "qtomo/repr.hpp"
#include "qtomo/schur_stream.hpp"

namespace qtomo {

// ---------------------------------------------------------------------------
// Distances

enum class Metric { trace, fidelity, infidelity, purified, bures };

inline const char* to_string(Metric m) {
    switch (m) {
        case Metric::trace: return "trace";
        case Metric::fidelity: return "fidelity";
        case Metric::infidelity: return "infidelity";
        case Metric::purified: return "purified";
        case Metric::bures: return "bures";
    }
    return "?";
}

inline Metric parse_metric(const std::string& name) {
    if (name == "trace") return Metric::trace;
    if (name == "fidelity") return Metric::fidelity;
    if (name == "infidelity") return Metric::infidelity;
    if (name == "purified") return Metric::purified;
    if (name == "bures") return Metric::bures;
    throw Error("unknown metric '" + name + "'");
}

/// True for the measures that satisfy the triangle inequality.
inline bool is_metric(Metric m) { return m == Metric::trace || m == Metric::purified || m == Metric::bures; }

namespace detail {

/// Factor A with rho = A A^dag, keeping eigenvalues above 1e-12 of the largest.
inline CMatrix support_factor(const CMatrix& rho) {
    const EigenSystem es = clamped_psd_spectrum(rho, "fidelity");
    const double cutoff = 1e-12 * std::max(es.values.maxCoeff(), 0.0);
    Eigen::Index keep = 0;
    while (keep < es.values.size() && es.values(keep) > cutoff) ++keep;
    CMatrix factor = es.vectors.leftCols(keep);
    for (Eigen::Index i = 0; i < keep; ++i) factor.col(i) *= std::sqrt(es.values(i));
    return factor;
}

}  // namespace detail

/// F(rho, sigma) = (Tr |sqrt(rho) sqrt(sigma)|)^2, computed as the squared
/// nuclear norm of A^dag B for support factors rho = A A^dag, sigma = B B^dag.
inline double fidelity(const CMatrix& rho, const CMatrix& sigma) {
    require(rho.rows() == sigma.rows(), "fidelity: dimension mismatch");
    const CMatrix overlap = detail::support_factor(rho).adjoint() * detail::support_factor(sigma);
    if (overlap.size() == 0) return 0.0;
    const double root_fid = Eigen::JacobiSVD<CMatrix>(overlap).singularValues().sum();
    return std::clamp(root_fid * root_fid, 0.0, 1.0);
}

/// 1 - sqrt(F): the square-root-fidelity form of the infidelity.
inline double root_infidelity(const CMatrix& rho, const CMatrix& sigma) {
    return 1.0 - std::sqrt(fidelity(rho, sigma));
}

inline double trace_distance(const CMatrix& rho, const CMatrix& sigma) {
    const RVector w = herm_eigenvalues(rho - sigma);
    return 0.5 * w.cwiseAbs().sum();
}

inline double trace_norm(const CMatrix& hermitian) { return herm_eigenvalues(hermitian).cwiseAbs().sum(); }

inline double distance(Metric metric, const CMatrix& rho, const CMatrix& sigma) {
    switch (metric) {
        case Metric::trace: return trace_distance(rho, sigma);
        case Metric::fidelity: return fidelity(rho, sigma);
        case Metric::infidelity: return 1.0 - fidelity(rho, sigma);
        case Metric::purified: return std::sqrt(std::max(0.0, 1.0 - fidelity(rho, sigma)));
        case Metric::bures: return std::sqrt(std::max(0.0, 2.0 * root_infidelity(rho, sigma)));
    }
    throw Error("distance: unknown metric");
}

// ---------------------------------------------------------------------------
// Trials

inline constexpr int kFailOutcome = -1;

struct TrialResult {
    Partition final_label;
    int outcome = kFailOutcome;  // index into S, or kFailOutcome
    CMatrix estimate;
    double infidelity = 0.0;
    double trace_dist = 0.0;
    std::uint64_t max_register_dim = 0;
    std::uint64_t seed = 0;
    bool verified_set = false;
};

/// Estimate assigned to an outcome: U lambda_bar U^dag, or I/d on failure.
inline CMatrix estimate_for(const UnitarySet& set, const Partition& lambda, int outcome) {
    if (outcome == kFailOutcome) return identity(set.d) / static_cast<double>(set.d);
    const CMatrix& u = set.members.at(static_cast<std::size_t>(outcome));
    return u * normalized_diag(lambda, set.d) * u.adjoint();
}

class BoundTomography;

/// Holds S, eta and the per-label POVMs; independent of the measured state.
class TomographyEngine {
public:
    TomographyEngine(std::shared_ptr<const UnitarySet> set, double eta,
                     std::optional<MembershipReport> membership = std::nullopt)
        : set_(std::move(set)), eta_(eta), membership_(std::move(membership)) {
        require(set_ && set_->count() > 0, "TomographyEngine: empty unitary set");
        require(eta_ >= 0.0 && eta_ < 1.0, "TomographyEngine: eta must lie in [0, 1)");
        povms_ = std::make_shared<OnceCache<std::vector<int>, DiscretePovm>>();
    }

    const UnitarySet& set() const { return *set_; }
    std::shared_ptr<const UnitarySet> set_ptr() const { return set_; }
    double eta() const { return eta_; }
    int d() const { return set_->d; }

    /// True when a passing membership report was supplied.
    bool verified() const { return membership_ && membership_->overall; }
    const std::optional<MembershipReport>& membership() const { return membership_; }

    std::shared_ptr<const DiscretePovm> povm(const Partition& lambda) const {
        return povms_->get(lambda.parts(), [&] {
            const bool covered = membership_ && membership_->n == lambda.size() && lambda.rows() <= membership_->r;
            return build_povm(lambda, set_, eta_, covered ? &*membership_ : nullptr);
        });
    }

    BoundTomography bind(const CMatrix& rho) const;

private:
    std::shared_ptr<const UnitarySet> set_;
    double eta_;
    std::optional<MembershipReport> membership_;
    std::shared_ptr<OnceCache<std::vector<int>, DiscretePovm>> povms_;
};

/// An engine bound to one input state; caches per-label outcome distributions.
class BoundTomography {
public:
    BoundTomography(const TomographyEngine& engine, CMatrix rho)
        : engine_(engine), rho_(std::move(rho)),
          conditionals_(std::make_shared<OnceCache<std::vector<int>, std::vector<double>>>()) {
        require(rho_.rows() == engine_.d() && rho_.cols() == engine_.d(), "BoundTomography: state dimension mismatch");
    }

    const CMatrix& rho() const { return rho_; }

    /// Outcome probabilities given the label: entries 0..|S|-1 for U, last for fail.
    std::shared_ptr<const std::vector<double>> conditional(const Partition& lambda) const {
        return conditionals_->get(lambda.parts(), [&] {
            const std::vector<double> xs = gated_spectrum(rho_);
            const double s = schur_polynomial(lambda, xs);
            if (!(s > 0.0)) throw NumericalIntegrityError("conditional: label has zero probability");
            const CMatrix post = irrep_matrix(lambda, rho_).mat / s;
            const auto povm = engine_.povm(lambda);
            std::vector<double> probs;
            probs.reserve(povm->elements.size() + 1);
            for (const auto& e : povm->elements) probs.push_back(trace_product(post, e));
            probs.push_back(trace_product(post, povm->fail_element));
            for (double& p : probs) {
                if (p < -1e-10)
                    throw NumericalIntegrityError("run_tomography: negative outcome probability " + std::to_string(p));
                p = std::max(p, 0.0);
            }
            return probs;
        });
    }

    TrialResult run(int n, Rng& rng) const {
        const StreamOutcome stream = stream_sample(rho_, n, rng, {StreamOptions::PostState::never});
        const auto probs = conditional(stream.final_label);
        const std::size_t pick = rng.categorical(*probs);
        TrialResult result;
        result.final_label = stream.final_label;
        result.outcome = pick + 1 == probs->size() ? kFailOutcome : static_cast<int>(pick);
        result.estimate = estimate_for(engine_.set(), stream.final_label, result.outcome);
        result.infidelity = 1.0 - fidelity(result.estimate, rho_);
        result.trace_dist = trace_distance(result.estimate, rho_);
        result.max_register_dim = stream.max_register_dim;
        result.seed = rng.seed();
        result.verified_set = engine_.verified();
        return result;
    }

private:
    const TomographyEngine& engine_;
    CMatrix rho_;
    std::shared_ptr<OnceCache<std::vector<int>, std::vector<double>>> conditionals_;
};

inline BoundTomography TomographyEngine::bind(const CMatrix& rho) const { return BoundTomography(*this, rho); }

/// One tomography run on rho^{(x)n}. Pass a membership report to mark the set verified.
inline TrialResult run_tomography(const CMatrix& rho, std::shared_ptr<const UnitarySet> set, double eta, int n,
                                  Rng& rng, std::optional<MembershipReport> membership = std::nullopt) {
    const TomographyEngine engine(std::move(set), eta, std::move(membership));
    return engine.bind(rho).run(n, rng);
}

// ---------------------------------------------------------------------------
// Exact outcome distributions

/// Key (lambda, outcome) with outcome == kFailOutcome for the fail branch.
using JointDistribution = std::map<std::pair<Partition, int>, double>;

/// Pr[lambda, U] = dim P_lambda Tr[N(lambda, U) q_lambda(rho)] in closed form.
inline JointDistribution direct_joint_distribution(const TomographyEngine& engine, const CMatrix& rho, int n) {
    const int d = engine.d();
    require(rho.rows() == d, "direct_joint_distribution: state dimension mismatch");
    const std::vector<double> xs = gated_spectrum(rho);
    JointDistribution out;
    for (const auto& lambda : enumerate_partitions(n, d)) {
        const double weight = static_cast<double>(dim_sym(lambda));
        const std::size_t count = engine.set().count();
        if (schur_polynomial(lambda, xs) == 0.0) {
            for (std::size_t i = 0; i < count; ++i) out[{lambda, static_cast<int>(i)}] = 0.0;
            out[{lambda, kFailOutcome}] = 0.0;
            continue;
        }
        const CMatrix q = irrep_matrix(lambda, rho).mat;
        const auto povm = engine.povm(lambda);
        for (std::size_t i = 0; i < count; ++i)
            out[{lambda, static_cast<int>(i)}] = weight * trace_product(povm->elements[i], q);
        out[{lambda, kFailOutcome}] = weight * trace_product(povm->fail_element, q);
    }
    return out;
}

inline JointDistribution direct_joint_distribution(const CMatrix& rho, std::shared_ptr<const UnitarySet> set,
                                                   double eta, int n) {
    return direct_joint_distribution(TomographyEngine(std::move(set), eta), rho, n);
}

/// Brute force on (C^d)^{(x)n}: Pr[lambda, U] = Tr[rho^{(x)n} M(lambda, U)] with
/// M(lambda, U) = coef Pi_lambda (U lambda_bar U^dag)^{(x)n} Pi_lambda.
inline JointDistribution tensor_oracle_joint_distribution(const CMatrix& rho, const UnitarySet& set, double eta, int n) {
    const int d = set.d;
    require_oracle_scale(d, n, "tensor_oracle_joint_distribution");
    const CMatrix power = tensor_power(rho, n);
    JointDistribution out;
    for (const auto& lambda : enumerate_partitions(n, d)) {
        const CMatrix proj = isotypic_projector(lambda, n, d);
        const CMatrix bar = normalized_diag(lambda, d);
        const double coef = static_cast<double>(dim_gl(lambda, d)) /
                            ((1.0 + eta) * static_cast<double>(set.count()) * schur_polynomial_diag(lambda, bar));
        const CMatrix sandwiched = proj * power * proj;
        double total = 0.0;
        for (std::size_t i = 0; i < set.count(); ++i) {
            const CMatrix& u = set.members[i];
            const double p = coef * trace_product(sandwiched, tensor_power(u * bar * u.adjoint(), n));
            out[{lambda, static_cast<int>(i)}] = p;
            total += p;
        }
        out[{lambda, kFailOutcome}] = trace_product(proj, power) - total;
    }
    return out;
}

/// Marginal over outcomes.
inline LabelDistribution marginal_labels(const JointDistribution& joint) {
    LabelDistribution out;
    for (const auto& [key, p] : joint) out[key.first] += p;
    return out;
}

// ---------------------------------------------------------------------------
// Exact error statistics and the finite-size bounds they are compared with

struct ExactStatistics {
    double fail_probability = 0.0;
    double success_probability = 0.0;
    /// Pr[I(rho_hat, rho) >= delta/2] per requested delta (fail outcomes use I/d).
    std::vector<double> infidelity_tail;
    /// E[ ||rho_hat - rho||_1^2 | success ].
    double conditional_trace_norm_sq = 0.0;
};

inline ExactStatistics exact_statistics(const TomographyEngine& engine, const CMatrix& rho, int n,
                                        const std::vector<double>& deltas) {
    const JointDistribution joint = direct_joint_distribution(engine, rho, n);
    ExactStatistics stats;
    stats.infidelity_tail.assign(deltas.size(), 0.0);
    double weighted_sq = 0.0;
    const double fail_infidelity = 1.0 - fidelity(identity(engine.d()) / static_cast<double>(engine.d()), rho);
    for (const auto& [key, p] : joint) {
        if (p == 0.0) continue;
        const auto& [lambda, outcome] = key;
        double infid = fail_infidelity;
        if (outcome == kFailOutcome) {
            stats.fail_probability += p;
        } else {
            stats.success_probability += p;
            const CMatrix est = estimate_for(engine.set(), lambda, outcome);
            infid = 1.0 - fidelity(est, rho);
            const double tn = trace_norm(est - rho);
            weighted_sq += p * tn * tn;
        }
        for (std::size_t i = 0; i < deltas.size(); ++i)
            if (infid >= deltas[i] / 2.0) stats.infidelity_tail[i] += p;
    }
    stats.conditional_trace_norm_sq = stats.success_probability > 0.0 ? weighted_sq / stats.success_probability : 0.0;
    return stats;
}

/// 2 eta/(1 + eta): ceiling on Pr[fail] for a class-A set.
inline double fail_probability_bound(double eta) { return 2.0 * eta / (1.0 + eta); }

/// 2 eta/(1 + eta) + (n+1)^{3dr} (1 - delta/2)^n / (1 + eta).
inline double infidelity_tail_bound(int n, int d, int r, double eta, double delta) {
    const double log_term = 3.0 * d * r * std::log(n + 1.0) + n * std::log1p(-delta / 2.0);
    return fail_probability_bound(eta) + std::exp(log_term) / (1.0 + eta);
}

/// 8 r (d + eta n) / ((1 - eta) n).
inline double trace_norm_sq_bound(int n, int d, int r, double eta) {
    return 8.0 * r * (d + eta * n) / ((1.0 - eta) * n);
}

// ---------------------------------------------------------------------------
// Aggregation

/// Index of the item whose 2 eps-ball (inclusive, counting itself) holds the
/// most items; ties go to the lowest index.
template <class T, class Dist>
std::size_t median_select_index(std::span<const T> items, double eps, Dist&& dist) {
    require(!items.empty(), "median_select: no estimates");
    std::size_t best = 0;
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < items.size(); ++j)
            if (i == j || dist(items[i], items[j]) <= 2.0 * eps) ++count;
        if (count > best_count) {
            best = i;
            best_count = count;
        }
    }
    return best;
}

inline CMatrix median_select(const std::vector<CMatrix>& estimates, double eps, Metric metric) {
    if (!is_metric(metric)) throw Error(std::string("median_select: '") + to_string(metric) + "' is not a metric");
    const auto idx = median_select_index(std::span<const CMatrix>(estimates), eps,
                                         [metric](const CMatrix& a, const CMatrix& b) { return distance(metric, a, b); });
    return estimates[idx];
}

struct BatchStats {
    std::size_t trials = 0;
    std::vector<double> thresholds;
    std::vector<double> pac_rate_trace;       // fraction with trace distance <= threshold
    std::vector<double> pac_rate_infidelity;  // fraction with infidelity <= threshold
    double smd_trace = 0.0;                   // sqrt(mean T^2)
    double smd_infidelity = 0.0;              // sqrt(mean I^2)
    double fail_rate = 0.0;
};

inline BatchStats batch_stats(std::span<const TrialResult> trials, const std::vector<double>& thresholds) {
    require(!trials.empty(), "batch_stats: no trials");
    BatchStats stats;
    stats.trials = trials.size();
    stats.thresholds = thresholds;
    stats.pac_rate_trace.assign(thresholds.size(), 0.0);
    stats.pac_rate_infidelity.assign(thresholds.size(), 0.0);
    std::size_t fails = 0;
    double sq_trace = 0.0, sq_infid = 0.0;
    for (const auto& t : trials) {
        if (t.outcome == kFailOutcome) ++fails;
        sq_trace += t.trace_dist * t.trace_dist;
        sq_infid += t.infidelity * t.infidelity;
        for (std::size_t i = 0; i < thresholds.size(); ++i) {
            if (t.trace_dist <= thresholds[i]) stats.pac_rate_trace[i] += 1.0;
            if (t.infidelity <= thresholds[i]) stats.pac_rate_infidelity[i] += 1.0;
        }
    }
    const double count = static_cast<double>(trials.size());
    for (auto& v : stats.pac_rate_trace) v /= count;
    for (auto& v : stats.pac_rate_infidelity) v /= count;
    stats.smd_trace = std::sqrt(sq_trace / count);
    stats.smd_infidelity = std::sqrt(sq_infid / count);
    stats.fail_rate = static_cast<double>(fails) / count;
    return stats;
}

// ---------------------------------------------------------------------------
// JSON Lines output (17 significant digits)

inline void write_trial_jsonl(std::ostream& os, std::size_t trial_index, const TrialResult& t) {
    os << "{\"trial\":" << trial_index << ",\"seed\":" << t.seed << ",\"label\":\"" << t.final_label.to_string()
       << "\",\"outcome\":";
    if (t.outcome == kFailOutcome)
        os << "\"fail\"";
    else
        os << t.outcome;
    os << ",\"infidelity\":" << format_g17(t.infidelity) << ",\"trace_dist\":" << format_g17(t.trace_dist)
       << ",\"max_register_dim\":" << t.max_register_dim << ",\"verified\":" << (t.verified_set ? "true" : "false")
       << "}\n";
}

inline void write_summary_jsonl(std::ostream& os, const BatchStats& s) {
    auto list = [&](const std::vector<double>& v) {
        os << '[';
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_g17(v[i]);
        os << ']';
    };
    os << "{\"summary\":{\"trials\":" << s.trials << ",\"fail_rate\":" << format_g17(s.fail_rate)
       << ",\"smd_trace\":" << format_g17(s.smd_trace) << ",\"smd_infidelity\":" << format_g17(s.smd_infidelity)
       << ",\"thresholds\":";
    list(s.thresholds);
    os << ",\"pac_rate_trace\":";
    list(s.pac_rate_trace);
    os << ",\"pac_rate_infidelity\":";
    list(s.pac_rate_infidelity);
    os << "}}\n";
}

}  // namespace qtomo
