#pragma once

// Executors for an arbitrary finite POVM: Naimark dilation into a unitary
// plus computational-basis ancilla readout, and the recursive coarse-to-fine
// measurement that only ever applies k-outcome instruments.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qtomo/error.hpp"
#include "qtomo/numerics.hpp"

namespace qtomo {

class FinitePovm {
public:
    explicit FinitePovm(std::vector<CMatrix> elements, double tol = 1e-8) : elements_(std::move(elements)) {
        require(!elements_.empty(), "FinitePovm: no outcomes");
        const Eigen::Index dim = elements_.front().rows();
        CMatrix sum = CMatrix::Zero(dim, dim);
        for (const auto& e : elements_) {
            require(e.rows() == dim && e.cols() == dim, "FinitePovm: inconsistent element shape");
            if (herm_eigenvalues(e).minCoeff() < -tol) throw Error("FinitePovm: element is not positive semidefinite");
            sum += e;
        }
        if ((sum - identity(dim)).norm() > tol) throw Error("FinitePovm: elements do not sum to the identity");
    }

    int dim() const { return static_cast<int>(elements_.front().rows()); }
    int outcomes() const { return static_cast<int>(elements_.size()); }
    const std::vector<CMatrix>& elements() const { return elements_; }
    const CMatrix& operator[](int x) const { return elements_[static_cast<std::size_t>(x)]; }

    std::vector<double> born_probabilities(const CMatrix& rho) const {
        std::vector<double> p;
        p.reserve(elements_.size());
        for (const auto& e : elements_) p.push_back(std::max(0.0, trace_product(e, rho)));
        return p;
    }

private:
    std::vector<CMatrix> elements_;
};

/// Rank-`rank` POVM from Gram-normalized Wishart seeds.
inline FinitePovm random_finite_povm(int dim, int outcomes, int rank, Rng& rng) {
    std::vector<CMatrix> seeds;
    CMatrix total = CMatrix::Zero(dim, dim);
    for (int x = 0; x < outcomes; ++x) {
        const CMatrix g = ginibre(dim, rank, rng);
        seeds.push_back(g * g.adjoint());
        total += seeds.back();
    }
    const CMatrix w = pseudo_inv_sqrt(total);
    for (auto& s : seeds) {
        s = w * s * w;
        s = (s + s.adjoint()).eval() * 0.5;
    }
    return FinitePovm(std::move(seeds));
}

inline int ancilla_qubits(int outcomes) {
    require(outcomes >= 1, "ancilla_qubits: need at least one outcome");
    int q = 0;
    while ((std::int64_t{1} << q) < outcomes) ++q;
    return q;
}

// ---------------------------------------------------------------------------
// Naimark dilation

/// Unitary on C^D (x) C^K, flat index i*K + x. Columns (i, anchor) carry the
/// isometry sum_x sqrt(E_x) (x) |x>.
struct Dilation {
    CMatrix unitary;
    int anchor = 0;
    int ancilla_dim = 0;
    int system_dim = 0;
};

inline Dilation naimark_unitary(const FinitePovm& povm, int anchor = 0) {
    const int dim = povm.dim();
    const int k = povm.outcomes();
    require(anchor >= 0 && anchor < k, "naimark_unitary: anchor outside the outcome range");
    const Eigen::Index total = static_cast<Eigen::Index>(dim) * k;

    CMatrix iso = CMatrix::Zero(total, dim);
    for (int x = 0; x < k; ++x) {
        const CMatrix root = psd_sqrt(povm[x]);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) iso(static_cast<Eigen::Index>(i) * k + x, j) = root(i, j);
    }
    if ((iso.adjoint() * iso - identity(dim)).norm() > 1e-8)
        throw Error("naimark_unitary: POVM completeness violated");

    CMatrix u = CMatrix::Zero(total, total);
    std::vector<bool> taken(static_cast<std::size_t>(total), false);
    std::vector<CVector> basis;
    for (int j = 0; j < dim; ++j) {
        const Eigen::Index col = static_cast<Eigen::Index>(j) * k + anchor;
        u.col(col) = iso.col(j);
        taken[static_cast<std::size_t>(col)] = true;
        basis.push_back(iso.col(j));
    }
    Eigen::Index next_slot = 0;
    for (Eigen::Index e = 0; e < total && static_cast<Eigen::Index>(basis.size()) < total; ++e) {
        CVector v = CVector::Unit(total, e);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) v -= b * b.dot(v);
        const double nv = v.norm();
        if (nv < 1e-8) continue;
        v /= nv;
        while (taken[static_cast<std::size_t>(next_slot)]) ++next_slot;
        u.col(next_slot) = v;
        taken[static_cast<std::size_t>(next_slot)] = true;
        basis.push_back(std::move(v));
    }
    require(static_cast<Eigen::Index>(basis.size()) == total, "naimark_unitary: completion fell short");
    return {std::move(u), anchor, k, dim};
}

/// Ancilla readout distribution of U (rho (x) |anchor><anchor|) U^dag.
inline std::vector<double> dilated_probabilities(const CMatrix& rho, const Dilation& dil) {
    require(rho.rows() == dil.system_dim, "dilated_probabilities: state dimension mismatch");
    const int k = dil.ancilla_dim;
    CMatrix input = CMatrix::Zero(dil.unitary.rows(), dil.unitary.cols());
    for (int i = 0; i < dil.system_dim; ++i)
        for (int j = 0; j < dil.system_dim; ++j)
            input(static_cast<Eigen::Index>(i) * k + dil.anchor, static_cast<Eigen::Index>(j) * k + dil.anchor) = rho(i, j);
    const CMatrix out = dil.unitary * input * dil.unitary.adjoint();
    std::vector<double> p(static_cast<std::size_t>(k), 0.0);
    for (int i = 0; i < dil.system_dim; ++i)
        for (int x = 0; x < k; ++x) {
            const Eigen::Index idx = static_cast<Eigen::Index>(i) * k + x;
            p[static_cast<std::size_t>(x)] += out(idx, idx).real();
        }
    for (double& v : p) v = std::max(v, 0.0);
    return p;
}

inline int dilated_measure(const CMatrix& rho, const Dilation& dil, Rng& rng) {
    return static_cast<int>(rng.categorical(dilated_probabilities(rho, dil)));
}

// ---------------------------------------------------------------------------
// Recursive measurement

/// One node of the coarse-to-fine tree. `outcomes` are global labels of the
/// real outcomes handled here, `operators` their (refined) effects, `bottom`
/// the completion remainder I - sum(operators).
struct RecursiveNode {
    std::vector<int> outcomes;
    std::vector<CMatrix> operators;
    CMatrix bottom;
    // Populated only for internal nodes.
    std::vector<CMatrix> coarse;        // G_i
    std::vector<CMatrix> coarse_sqrt;   // G_i^{1/2}
    std::vector<std::unique_ptr<RecursiveNode>> children;

    bool leaf() const { return children.empty(); }
};

class RecursivePlan {
public:
    RecursivePlan(const FinitePovm& povm, int branching) : branching_(branching) {
        require(branching >= 2, "RecursivePlan: branching must be at least 2");
        std::vector<int> labels(static_cast<std::size_t>(povm.outcomes()));
        for (int x = 0; x < povm.outcomes(); ++x) labels[static_cast<std::size_t>(x)] = x;
        root_ = build(std::move(labels), povm.elements());
    }

    int branching() const { return branching_; }
    const RecursiveNode& root() const { return *root_; }

    template <class Fn>
    void for_each_node(Fn&& fn) const { visit(*root_, 0, fn); }

    int depth() const {
        int deepest = 0;
        for_each_node([&](const RecursiveNode&, int level) { deepest = std::max(deepest, level + 1); });
        return deepest;
    }

private:
    std::unique_ptr<RecursiveNode> build(std::vector<int> labels, std::vector<CMatrix> ops) const {
        auto node = std::make_unique<RecursiveNode>();
        const Eigen::Index dim = ops.front().rows();
        CMatrix sum = CMatrix::Zero(dim, dim);
        for (const auto& e : ops) sum += e;
        node->bottom = identity(dim) - sum;
        node->outcomes = std::move(labels);
        node->operators = std::move(ops);
        const std::size_t count = node->outcomes.size();
        if (count <= static_cast<std::size_t>(branching_)) return node;

        const std::size_t chunk = (count + branching_ - 1) / branching_;
        for (std::size_t start = 0; start < count; start += chunk) {
            const std::size_t stop = std::min(count, start + chunk);
            CMatrix g = CMatrix::Zero(dim, dim);
            for (std::size_t x = start; x < stop; ++x) g += node->operators[x];
            const CMatrix g_inv_sqrt = pseudo_inv_sqrt(g);
            std::vector<int> sub_labels(node->outcomes.begin() + static_cast<std::ptrdiff_t>(start),
                                        node->outcomes.begin() + static_cast<std::ptrdiff_t>(stop));
            std::vector<CMatrix> refined;
            for (std::size_t x = start; x < stop; ++x) {
                CMatrix f = g_inv_sqrt * node->operators[x] * g_inv_sqrt;
                refined.push_back((f + f.adjoint()) * 0.5);
            }
            node->coarse_sqrt.push_back(psd_sqrt(g));
            node->coarse.push_back(std::move(g));
            node->children.push_back(build(std::move(sub_labels), std::move(refined)));
        }
        return node;
    }

    template <class Fn>
    static void visit(const RecursiveNode& node, int level, Fn& fn) {
        fn(node, level);
        for (const auto& c : node.children) visit(*c, level + 1, fn);
    }

    int branching_;
    std::unique_ptr<RecursiveNode> root_;
};

inline constexpr int kBottomOutcome = -1;

struct RecursiveOutcome {
    int outcome = kBottomOutcome;  // global label, or kBottomOutcome if the remainder fired
    double bottom_mass = 0.0;      // summed remainder probability along the path
    int depth = 0;                 // instruments applied
};

/// One run of the recursive measurement against a prebuilt plan.
inline RecursiveOutcome recursive_measure(const CMatrix& rho, const RecursivePlan& plan, Rng& rng,
                                          double bottom_tolerance = 1e-8) {
    RecursiveOutcome result;
    CMatrix state = rho;
    const RecursiveNode* node = &plan.root();
    std::vector<double> weights;
    while (true) {
        ++result.depth;
        const double bottom = std::max(0.0, trace_product(node->bottom, state));
        result.bottom_mass += bottom;
        if (result.bottom_mass > bottom_tolerance)
            throw NumericalIntegrityError("recursive_measure: remainder probability " + std::to_string(result.bottom_mass));
        weights.clear();
        const auto& effects = node->leaf() ? node->operators : node->coarse;
        for (const auto& e : effects) weights.push_back(std::max(0.0, trace_product(e, state)));
        weights.push_back(bottom);
        const std::size_t pick = rng.categorical(weights);
        if (pick + 1 == weights.size()) {
            result.outcome = kBottomOutcome;
            return result;
        }
        if (node->leaf()) {
            result.outcome = node->outcomes[pick];
            return result;
        }
        const CMatrix& root = node->coarse_sqrt[pick];
        state = root * state * root / weights[pick];
        state = (state + state.adjoint()).eval() * 0.5;
        node = node->children[pick].get();
    }
}

inline RecursiveOutcome recursive_measure(const CMatrix& rho, const FinitePovm& povm, int branching, Rng& rng) {
    return recursive_measure(rho, RecursivePlan(povm, branching), rng);
}

}  // namespace qtomo
