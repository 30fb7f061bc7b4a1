#pragma once

// Young-label combinatorics.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qtomo/error.hpp"
#include "qtomo/numerics.hpp"

namespace qtomo {

/// Integer partition (Young label). Parts are stored non-increasing with
/// trailing zeros trimmed; the row bound is supplied per call.
class Partition {
public:
    Partition() = default;

    Partition(std::initializer_list<int> parts) : Partition(std::vector<int>(parts)) {}

    explicit Partition(std::vector<int> parts) : parts_(std::move(parts)) {
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            require(parts_[i] >= 0, "Partition: negative part");
            if (i > 0) require(parts_[i - 1] >= parts_[i], "Partition: parts must be non-increasing");
        }
        while (!parts_.empty() && parts_.back() == 0) parts_.pop_back();
    }

    const std::vector<int>& parts() const { return parts_; }

    /// Number of boxes.
    int size() const {
        int n = 0;
        for (int p : parts_) n += p;
        return n;
    }

    /// Count of positive parts.
    int rows() const { return static_cast<int>(parts_.size()); }

    bool empty() const { return parts_.empty(); }

    /// Part i (0-based); zero beyond the last row.
    int operator[](int i) const {
        return i < rows() ? parts_[static_cast<std::size_t>(i)] : 0;
    }

    /// Conjugate (transposed) partition.
    Partition conjugate() const {
        std::vector<int> out(parts_.empty() ? 0 : static_cast<std::size_t>(parts_[0]), 0);
        for (int p : parts_)
            for (int j = 0; j < p; ++j) ++out[static_cast<std::size_t>(j)];
        return Partition(std::move(out));
    }

    /// Literal form "3,1"; the empty partition prints as "".
    std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(parts_[i]);
        }
        return s;
    }

    static Partition parse(std::string_view text) {
        std::vector<int> parts;
        std::string token;
        auto flush = [&] {
            if (token.empty()) throw Error("Partition::parse: empty part in '" + std::string(text) + "'");
            std::size_t pos = 0;
            int v = 0;
            try {
                v = std::stoi(token, &pos);
            } catch (const std::exception&) {
                throw Error("Partition::parse: bad number '" + token + "'");
            }
            if (pos != token.size()) throw Error("Partition::parse: bad number '" + token + "'");
            parts.push_back(v);
            token.clear();
        };
        if (text.empty() || text == "()") return Partition();
        for (char c : text) {
            if (c == ',') {
                flush();
            } else if (c != ' ' && c != '(' && c != ')') {
                token += c;
            }
        }
        flush();
        return Partition(std::move(parts));
    }

    friend bool operator==(const Partition&, const Partition&) = default;
    friend std::strong_ordering operator<=>(const Partition& a, const Partition& b) {
        return a.parts_ <=> b.parts_;
    }

    friend std::ostream& operator<<(std::ostream& os, const Partition& p) {
        return os << '(' << p.to_string() << ')';
    }

private:
    std::vector<int> parts_;
};

/// Partitions of n with at most max_rows parts, lexicographically descending.
inline std::vector<Partition> enumerate_partitions(int n, int max_rows) {
    require(n >= 0, "enumerate_partitions: n must be non-negative");
    require(max_rows >= 1, "enumerate_partitions: max_rows must be positive");
    std::vector<Partition> out;
    std::vector<int> current;
    auto recurse = [&](auto&& self, int remaining, int cap) -> void {
        if (remaining == 0) {
            out.emplace_back(current);
            return;
        }
        if (static_cast<int>(current.size()) == max_rows) return;
        for (int part = std::min(remaining, cap); part >= 1; --part) {
            current.push_back(part);
            self(self, remaining - part, part);
            current.pop_back();
        }
    };
    recurse(recurse, n, n);
    return out;
}

/// Every mu = lambda + e_j that is still a partition with at most max_rows rows,
/// ordered by the row that received the box.
inline std::vector<Partition> add_box(const Partition& lambda, int max_rows) {
    std::vector<Partition> out;
    const int rows = lambda.rows();
    for (int j = 0; j <= rows && j < max_rows; ++j) {
        if (j > 0 && lambda[j - 1] <= lambda[j]) continue;
        std::vector<int> parts = lambda.parts();
        if (j == rows)
            parts.push_back(1);
        else
            ++parts[static_cast<std::size_t>(j)];
        out.emplace_back(std::move(parts));
    }
    return out;
}

namespace detail {

inline std::vector<int> primes_up_to(int n) {
    std::vector<int> primes;
    for (int p = 2; p <= n; ++p) {
        bool prime = true;
        for (int q : primes) {
            if (q * q > p) break;
            if (p % q == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(p);
    }
    return primes;
}

/// Accumulates a rational number as prime exponents; exact for the products
/// of small integers that appear in the dimension formulas.
class PrimeLedger {
public:
    void multiply(int value) { add(value, +1); }
    void divide(int value) { add(value, -1); }

    /// Value as an integer; throws if the ledger is not integral or overflows.
    std::uint64_t integer_value() const {
        unsigned __int128 acc = 1;
        for (const auto& [p, e] : exps_) {
            if (e < 0) throw NumericalIntegrityError("PrimeLedger: non-integral dimension");
            for (int i = 0; i < e; ++i) {
                acc *= static_cast<unsigned>(p);
                if (acc > std::numeric_limits<std::uint64_t>::max())
                    throw Error("dimension exceeds 64-bit range");
            }
        }
        return static_cast<std::uint64_t>(acc);
    }

private:
    void add(int value, int sign) {
        require(value > 0, "PrimeLedger: factor must be positive");
        for (int p = 2; p * p <= value; ++p) {
            while (value % p == 0) {
                exps_[p] += sign;
                value /= p;
            }
        }
        if (value > 1) exps_[value] += sign;
    }

    std::map<int, int> exps_;
};

}  // namespace detail

/// dim P_lambda via the hook-length formula.
inline std::uint64_t dim_sym(const Partition& lambda) {
    const int n = lambda.size();
    const Partition conj = lambda.conjugate();
    detail::PrimeLedger ledger;
    for (int k = 2; k <= n; ++k) ledger.multiply(k);
    for (int i = 0; i < lambda.rows(); ++i)
        for (int j = 0; j < lambda[i]; ++j) {
            const int hook = (lambda[i] - j - 1) + (conj[j] - i - 1) + 1;
            ledger.divide(hook);
        }
    return ledger.integer_value();
}

/// dim Q_lambda^d via the Weyl dimension formula; 0 when lambda has more than d rows.
inline std::uint64_t dim_gl(const Partition& lambda, int d) {
    require(d >= 1, "dim_gl: dimension must be positive");
    if (lambda.rows() > d) return 0;
    detail::PrimeLedger ledger;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            ledger.multiply(lambda[i] - lambda[j] + j - i);
            ledger.divide(j - i);
        }
    return ledger.integer_value();
}

/// The diagonal matrix diag(lambda_1/n, ..., lambda_d/n).
inline CMatrix normalized_diag(const Partition& lambda, int d) {
    const int n = lambda.size();
    require(n > 0, "normalized_diag: empty partition");
    require(lambda.rows() <= d, "normalized_diag: partition has more rows than the dimension");
    std::vector<double> entries(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) entries[static_cast<std::size_t>(i)] = static_cast<double>(lambda[i]) / n;
    return diagonal(entries);
}

/// Number of ways to place n boxes into r ordered groups (weak compositions).
inline std::uint64_t count_weak_compositions(int n, int r) {
    require(n >= 0 && r >= 1, "count_weak_compositions: need n >= 0, r >= 1");
    // C(n + r - 1, r - 1)
    unsigned __int128 acc = 1;
    for (int i = 1; i < r; ++i) acc = acc * static_cast<unsigned>(n + i) / static_cast<unsigned>(i);
    return static_cast<std::uint64_t>(acc);
}

}  // namespace qtomo
