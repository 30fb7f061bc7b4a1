#pragma once

// Streaming unitary Schur sampling on i.i.d. inputs rho^{(x)n}.
//
// The label chain is sampled with Schur-polynomial ratios; physical_step_check
// replays one step through explicit Clebsch-Gordan isometries.

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include "qtomo/error.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/partitions.hpp"
#include "qtomo/repr.hpp"
#include "qtomo/tensor.hpp"

namespace qtomo {

/// Eigenvalues below this are exact zeros for the rank gate.
inline constexpr double kRankGate = 1e-14;

using LabelDistribution = std::map<Partition, double>;

/// Descending spectrum of a density matrix with sub-gate eigenvalues zeroed.
inline std::vector<double> gated_spectrum(const CMatrix& rho) {
    const RVector w = herm_eigenvalues(rho);
    std::vector<double> xs(static_cast<std::size_t>(w.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) xs[static_cast<std::size_t>(i)] = w(i) < kRankGate ? 0.0 : w(i);
    return xs;
}

struct StreamOutcome {
    std::vector<Partition> path;  // lambda^1, ..., lambda^n
    Partition final_label;
    /// q_lambda(rho) / s_lambda(rho); only materialized within the tensor-space scale.
    std::optional<CMatrix> post_state;
    /// Largest simulated register R_k (x) Q_{k+1}, i.e. max_k dim Q_{lambda^k} * d.
    std::uint64_t max_register_dim = 0;
};

struct StreamOptions {
    enum class PostState { automatic, always, never };
    PostState post_state = PostState::automatic;
};

/// One run of the streaming Schur sampler on rho^{(x)n}.
inline StreamOutcome stream_sample(const CMatrix& rho, int n, Rng& rng, StreamOptions options = {}) {
    require(n >= 1, "stream_sample: need at least one copy");
    require(rho.rows() == rho.cols(), "stream_sample: state is not square");
    const int d = static_cast<int>(rho.rows());
    const std::vector<double> xs = gated_spectrum(rho);

    StreamOutcome out;
    Partition lambda{1};
    out.path.push_back(lambda);
    double s_lambda = schur_polynomial(lambda, xs);
    out.max_register_dim = static_cast<std::uint64_t>(d);
    std::vector<double> weights;
    for (int k = 1; k < n; ++k) {
        out.max_register_dim = std::max(out.max_register_dim, dim_gl(lambda, d) * static_cast<std::uint64_t>(d));
        const std::vector<Partition> candidates = add_box(lambda, d);
        weights.clear();
        for (const auto& mu : candidates) weights.push_back(schur_polynomial(mu, xs));
        if (s_lambda <= 0.0) throw NumericalIntegrityError("stream_sample: reached a label with zero character");
        const std::size_t pick = rng.categorical(weights);
        lambda = candidates[pick];
        s_lambda = weights[pick];
        out.path.push_back(lambda);
    }
    out.final_label = lambda;

    const bool in_scale = std::pow(static_cast<double>(d), n) <= static_cast<double>(kOracleScale);
    const bool want = options.post_state == StreamOptions::PostState::always ||
                      (options.post_state == StreamOptions::PostState::automatic && in_scale);
    if (want) out.post_state = irrep_matrix(lambda, rho).mat / s_lambda;
    return out;
}

/// p_lambda = dim P_lambda * s_lambda(spec rho) over lambda |- n with at most d rows.
inline LabelDistribution label_distribution(const CMatrix& rho, int n) {
    require(n >= 1, "label_distribution: need at least one copy");
    const int d = static_cast<int>(rho.rows());
    const std::vector<double> xs = gated_spectrum(rho);
    LabelDistribution out;
    for (const auto& lambda : enumerate_partitions(n, d))
        out[lambda] = static_cast<double>(dim_sym(lambda)) * schur_polynomial(lambda, xs);
    return out;
}

/// Brute-force p_lambda = Tr[Pi_lambda rho^{(x)n}] on the full tensor space.
inline LabelDistribution tensor_oracle_distribution(const CMatrix& rho, int n) {
    const int d = static_cast<int>(rho.rows());
    require_oracle_scale(d, n, "tensor_oracle_distribution");
    const CMatrix power = tensor_power(rho, n);
    LabelDistribution out;
    for (const auto& lambda : enumerate_partitions(n, d))
        out[lambda] = trace_product(isotypic_projector(lambda, n, d), power);
    return out;
}

struct StepBlockCheck {
    Partition mu;
    double expected_probability = 0.0;  // s_mu / s_lambda
    double observed_probability = 0.0;  // Tr[V_mu^dag state V_mu]
    double state_residual = 0.0;        // ||post - q_mu(rho)/s_mu||_F, 0 for null blocks
};

struct StepCheckReport {
    Partition source;
    std::vector<StepBlockCheck> blocks;
    double max_probability_residual = 0.0;
    double max_state_residual = 0.0;
    bool ok = false;
};

/// One Clebsch-Gordan step applied to q_lambda(rho)/s_lambda (x) rho.
inline StepCheckReport physical_step_check(const Partition& lambda, const CMatrix& rho, int d, double tol = 1e-7) {
    require(rho.rows() == d, "physical_step_check: state dimension mismatch");
    const std::vector<double> xs = gated_spectrum(rho);
    const double s_lambda = schur_polynomial(lambda, xs);
    require(s_lambda > 0.0, "physical_step_check: lambda has zero probability under rho");
    const auto cg = cg_isometries(lambda, d);
    const CMatrix state = kron(irrep_matrix(lambda, rho).mat / s_lambda, rho);

    StepCheckReport report;
    report.source = lambda;
    for (const auto& block : cg->blocks) {
        StepBlockCheck check;
        check.mu = block.mu;
        const double s_mu = schur_polynomial(block.mu, xs);
        check.expected_probability = s_mu / s_lambda;
        const CMatrix restricted = block.isometry.adjoint() * state * block.isometry;
        check.observed_probability = restricted.trace().real();
        if (s_mu > 0.0 && check.observed_probability > 0.0) {
            const CMatrix post = restricted / check.observed_probability;
            check.state_residual = (post - irrep_matrix(block.mu, rho).mat / s_mu).norm();
        } else {
            check.state_residual = restricted.norm();
        }
        report.max_probability_residual =
            std::max(report.max_probability_residual, std::abs(check.expected_probability - check.observed_probability));
        report.max_state_residual = std::max(report.max_state_residual, check.state_residual);
        report.blocks.push_back(std::move(check));
    }
    report.ok = report.max_probability_residual <= tol && report.max_state_residual <= tol;
    return report;
}

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV with columns partition,probability; labels are quoted ("3,1").
inline void write_distribution_csv(std::ostream& os, const LabelDistribution& dist) {
    os << "partition,probability\n";
    // Descending lexicographic order, matching enumerate_partitions.
    for (auto it = dist.rbegin(); it != dist.rend(); ++it)
        os << '"' << it->first.to_string() << "\"," << format_g17(it->second) << '\n';
}

}  // namespace qtomo
