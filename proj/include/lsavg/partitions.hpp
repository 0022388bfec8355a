#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <string>
#include <vector>

#include "lsavg/tensor.hpp"

namespace lsavg {

inline constexpr int kMaxOrder = 5;

struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d = 1) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend Rational operator*(Rational a, Rational b) { return Rational(a.num * b.num, a.den * b.den); }
    friend Rational operator+(Rational a, Rational b) { return Rational(a.num * b.den + b.num * a.den, a.den * b.den); }
    friend bool operator==(const Rational& a, const Rational& b) { return a.num == b.num && a.den == b.den; }
    std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }
};

inline long long factorial(int n) {
    long long r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

/// One tuple (c_1..c_len) of a partition index set. counts[j-1] = c_j.
struct PartitionTerm {
    std::vector<int> counts;
    int order = 0;          // L = c_1 + ... + c_len
    Rational coefficient;   // 1 / prod_j c_j! (j!)^{c_j}
};

namespace detail {

inline void enumerate_weighted(std::vector<int>& cur, int j, int remaining, std::vector<std::vector<int>>& out) {
    const int len = static_cast<int>(cur.size());
    if (j > len) {
        if (remaining == 0) out.push_back(cur);
        return;
    }
    for (int c = 0; c * j <= remaining; ++c) {
        cur[j - 1] = c;
        enumerate_weighted(cur, j + 1, remaining - c * j, out);
    }
    cur[j - 1] = 0;
}

inline std::vector<PartitionTerm> build_terms(int len, int weight) {
    std::vector<std::vector<int>> tuples;
    std::vector<int> cur(len, 0);
    enumerate_weighted(cur, 1, weight, tuples);
    // colexicographic: compare from the last component
    std::sort(tuples.begin(), tuples.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
        return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
    });
    std::vector<PartitionTerm> terms;
    for (auto& c : tuples) {
        PartitionTerm t;
        t.counts = c;
        long long den = 1;
        for (int j = 1; j <= len; ++j) {
            t.order += c[j - 1];
            long long fj = factorial(j);
            den *= factorial(c[j - 1]);
            for (int e = 0; e < c[j - 1]; ++e) den *= fj;
        }
        t.coefficient = Rational(1, den);
        terms.push_back(std::move(t));
    }
    return terms;
}

}  // namespace detail

/// S_l: l-tuples with c_1 + 2c_2 + ... + l c_l = l.
inline const std::vector<PartitionTerm>& partitions_S(int l) {
    if (l < 1 || l > kMaxOrder) throw RangeError("partitions_S: l must be in 1..5, got " + std::to_string(l));
    static const std::array<std::vector<PartitionTerm>, kMaxOrder + 1> table = [] {
        std::array<std::vector<PartitionTerm>, kMaxOrder + 1> t;
        for (int i = 1; i <= kMaxOrder; ++i) t[i] = detail::build_terms(i, i);
        return t;
    }();
    return table[l];
}

/// S'_i: (i-1)-tuples with c_1 + 2c_2 + ... + (i-1)c_{i-1} = i. order is I'.
inline const std::vector<PartitionTerm>& partitions_Sprime(int i) {
    if (i < 2 || i > kMaxOrder) throw RangeError("partitions_Sprime: i must be in 2..5, got " + std::to_string(i));
    static const std::array<std::vector<PartitionTerm>, kMaxOrder + 1> table = [] {
        std::array<std::vector<PartitionTerm>, kMaxOrder + 1> t;
        for (int k = 2; k <= kMaxOrder; ++k) t[k] = detail::build_terms(k - 1, k);
        return t;
    }();
    return table[i];
}

/// T ⊙ v_1^{c_1} ⊙ ... with vecs[j-1] = v_j.
inline Vec apply_term(const SymTensor& T, const PartitionTerm& term, const std::vector<Vec>& vecs) {
    std::vector<Factor> f;
    for (std::size_t j = 0; j < term.counts.size(); ++j) {
        if (term.counts[j] == 0) continue;
        if (j >= vecs.size()) throw RangeError("missing factor vector of order " + std::to_string(j + 1));
        f.push_back({&vecs[j], term.counts[j]});
    }
    return lsavg::apply(T, f);
}

/// l-th derivative of u(v(t)). outer[L] = D^L u(v(t)) for L = 0..l (outer[0] unused),
/// inner[j-1] = v^{(j)}(t) for j = 1..l.
inline Vec faa_di_bruno(const std::vector<SymTensor>& outer, const std::vector<Vec>& inner, int l) {
    if (static_cast<int>(outer.size()) <= l) throw RangeError("faa_di_bruno: outer derivatives up to order l required");
    if (static_cast<int>(inner.size()) < l) throw RangeError("faa_di_bruno: inner derivatives up to order l required");
    const double lf = static_cast<double>(factorial(l));
    Vec out = Vec::Zero(outer[1].codomain_dim());
    for (const PartitionTerm& t : partitions_S(l)) out += lf * t.coefficient.value() * apply_term(outer[t.order], t, inner);
    return out;
}

}  // namespace lsavg
