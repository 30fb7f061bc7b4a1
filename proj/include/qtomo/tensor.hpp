#pragma once

// Brute-force tensor-space helpers on (C^d)^{(x)n}. Tensor factor 0 is the most
// significant digit of a basis index, matching kron(A, B) ordering.

#include <cstdint>
#include <numeric>
#include <vector>

#include "qtomo/error.hpp"
#include "qtomo/numerics.hpp"

namespace qtomo {

/// Largest d^n that the tensor-space oracles accept.
inline constexpr std::int64_t kOracleScale = 10000;

using RowMajorCMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::int64_t int_pow(std::int64_t base, int exp) {
    std::int64_t out = 1;
    for (int i = 0; i < exp; ++i) out *= base;
    return out;
}

inline void require_oracle_scale(int d, int n, const char* who) {
    // Compare in floating point to avoid overflow for absurd inputs.
    if (std::pow(static_cast<double>(d), n) > static_cast<double>(kOracleScale))
        throw Error(std::string(who) + ": d^n exceeds the tensor-space scale guard");
}

/// Digits of a basis index, most significant first.
inline std::vector<int> index_digits(std::int64_t index, int d, int n) {
    std::vector<int> digits(static_cast<std::size_t>(n));
    for (int k = n - 1; k >= 0; --k) {
        digits[static_cast<std::size_t>(k)] = static_cast<int>(index % d);
        index /= d;
    }
    return digits;
}

inline std::int64_t digits_index(const std::vector<int>& digits, int d) {
    std::int64_t index = 0;
    for (int v : digits) index = index * d + v;
    return index;
}

/// In-place application of X^{(x)n} to every column of `cols` (d^n rows).
inline void apply_tensor_power(const CMatrix& x, int n, RowMajorCMatrix& cols) {
    const int d = static_cast<int>(x.rows());
    require(x.cols() == d, "apply_tensor_power: operator is not square");
    require(cols.rows() == int_pow(d, n), "apply_tensor_power: row count is not d^n");
    const Eigen::Index m = cols.cols();
    RowMajorCMatrix scratch(d, m);
    for (int k = 0; k < n; ++k) {
        const std::int64_t stride = int_pow(d, n - 1 - k);
        const std::int64_t outer = int_pow(d, k);
        for (std::int64_t hi = 0; hi < outer; ++hi) {
            for (std::int64_t lo = 0; lo < stride; ++lo) {
                const std::int64_t base = hi * d * stride + lo;
                for (int j = 0; j < d; ++j) scratch.row(j) = cols.row(base + j * stride);
                for (int i = 0; i < d; ++i) {
                    auto row = cols.row(base + i * stride);
                    row.setZero();
                    for (int j = 0; j < d; ++j)
                        if (x(i, j) != cplx(0.0, 0.0)) row += x(i, j) * scratch.row(j);
                }
            }
        }
    }
}

/// In-place application of sum_k I (x) .. (x) X_k (x) .. (x) I to every column.
inline void apply_tensor_sum(const CMatrix& x, int n, RowMajorCMatrix& cols) {
    const int d = static_cast<int>(x.rows());
    require(x.cols() == d, "apply_tensor_sum: operator is not square");
    require(cols.rows() == int_pow(d, n), "apply_tensor_sum: row count is not d^n");
    RowMajorCMatrix out = RowMajorCMatrix::Zero(cols.rows(), cols.cols());
    for (int k = 0; k < n; ++k) {
        const std::int64_t stride = int_pow(d, n - 1 - k);
        const std::int64_t outer = int_pow(d, k);
        for (std::int64_t hi = 0; hi < outer; ++hi)
            for (std::int64_t lo = 0; lo < stride; ++lo) {
                const std::int64_t base = hi * d * stride + lo;
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j)
                        if (x(i, j) != cplx(0.0, 0.0)) out.row(base + i * stride) += x(i, j) * cols.row(base + j * stride);
            }
    }
    cols = std::move(out);
}

/// Dense X^{(x)n}.
inline CMatrix tensor_power(const CMatrix& x, int n) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (int k = 0; k < n; ++k) out = kron(out, x);
    return out;
}

/// Cycle type (descending) of a permutation given as an image array.
inline std::vector<int> cycle_type(const std::vector<int>& perm) {
    std::vector<char> seen(perm.size(), 0);
    std::vector<int> lengths;
    for (std::size_t start = 0; start < perm.size(); ++start) {
        if (seen[start]) continue;
        int len = 0;
        for (std::size_t i = start; !seen[i]; i = static_cast<std::size_t>(perm[i])) {
            seen[i] = 1;
            ++len;
        }
        lengths.push_back(len);
    }
    std::sort(lengths.rbegin(), lengths.rend());
    return lengths;
}

}  // namespace qtomo
