#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lsavg/error.hpp"

namespace lsavg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline long long binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Non-decreasing index tuples (i_1 <= ... <= i_L) over p symbols in
/// lexicographic order. Shared, immutable, built once per (p, L).
class MultisetTable {
public:
    MultisetTable(int p, int L) : p_(p), L_(L) {
        std::vector<int> cur(L, 0);
        if (L == 0) {
            count_ = 1;
        } else if (p > 0) {
            build(cur, 0, 0);
            count_ = static_cast<int>(tuples_.size()) / L;
        }
        long long full = 1;
        for (int i = 0; i < L; ++i) full *= p;
        if (p > 0 && full <= (1LL << 22)) {
            ordered_rank_.assign(static_cast<std::size_t>(full), -1);
            for (int s = 0; s < count_; ++s) {
                std::vector<int> perm(tuple(s), tuple(s) + L);
                do {
                    ordered_rank_[linear(perm.data())] = s;
                } while (std::next_permutation(perm.begin(), perm.end()));
            }
        }
    }

    static const MultisetTable& get(int p, int L) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::unique_ptr<MultisetTable>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[{p, L}];
        if (!slot) slot = std::make_unique<MultisetTable>(p, L);
        return *slot;
    }

    int p() const { return p_; }
    int order() const { return L_; }
    int size() const { return count_; }
    const int* tuple(int s) const { return tuples_.data() + static_cast<std::size_t>(s) * L_; }

    /// Rank of an index tuple given in any order.
    int rank(const int* idx) const {
        for (int k = 0; k < L_; ++k)
            if (idx[k] < 0 || idx[k] >= p_) throw DimensionError("tensor index out of range");
        if (L_ == 0) return 0;
        if (!ordered_rank_.empty()) return ordered_rank_[linear(idx)];
        std::vector<int> sorted(idx, idx + L_);
        std::sort(sorted.begin(), sorted.end());
        for (int s = 0; s < count_; ++s)
            if (std::equal(sorted.begin(), sorted.end(), tuple(s))) return s;
        return -1;
    }

private:
    void build(std::vector<int>& cur, int pos, int lo) {
        if (pos == L_) {
            tuples_.insert(tuples_.end(), cur.begin(), cur.end());
            return;
        }
        for (int i = lo; i < p_; ++i) {
            cur[pos] = i;
            build(cur, pos + 1, i);
        }
    }
    std::size_t linear(const int* idx) const {
        std::size_t r = 0;
        for (int k = 0; k < L_; ++k) r = r * p_ + idx[k];
        return r;
    }

    int p_, L_;
    int count_ = 0;
    std::vector<int> tuples_;
    std::vector<int> ordered_rank_;
};

/// Symmetric L-linear map R^p x ... x R^p -> R^q in packed storage.
/// Entry (c, s) is the partial derivative of component c along the
/// multiset tuple s of the MultisetTable for (p, L).
class SymTensor {
public:
    SymTensor() = default;
    SymTensor(int order, int p, int q)
        : L_(order), p_(p), q_(q), table_(&MultisetTable::get(p, order)),
          data_(static_cast<std::size_t>(q) * table_->size(), 0.0) {}

    int order() const { return L_; }
    int domain_dim() const { return p_; }
    int codomain_dim() const { return q_; }
    int packed_size() const { return table_ ? table_->size() : 0; }
    std::size_t entry_count() const { return data_.size(); }
    const MultisetTable& table() const { return *table_; }

    double& packed(int comp, int s) { return data_[static_cast<std::size_t>(comp) * packed_size() + s]; }
    double packed(int comp, int s) const { return data_[static_cast<std::size_t>(comp) * packed_size() + s]; }

    double entry(int comp, const std::vector<int>& idx) const {
        check_index(comp, idx);
        return packed(comp, table_->rank(idx.data()));
    }
    void set_entry(int comp, const std::vector<int>& idx, double v) {
        check_index(comp, idx);
        packed(comp, table_->rank(idx.data())) = v;
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    SymTensor& operator+=(const SymTensor& o) {
        if (o.L_ != L_ || o.p_ != p_ || o.q_ != q_) throw DimensionError("tensor shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    SymTensor& operator*=(double a) {
        for (double& v : data_) v *= a;
        return *this;
    }

    /// Order-0 value as a vector; order-1 tensor as a q x p matrix.
    Vec as_vector() const {
        if (L_ != 0) throw DimensionError("as_vector needs an order-0 tensor");
        return Eigen::Map<const Vec>(data_.data(), q_);
    }
    Mat as_matrix() const {
        if (L_ != 1) throw DimensionError("as_matrix needs an order-1 tensor");
        Mat m(q_, p_);
        for (int c = 0; c < q_; ++c)
            for (int j = 0; j < p_; ++j) m(c, j) = packed(c, j);
        return m;
    }

private:
    void check_index(int comp, const std::vector<int>& idx) const {
        if (comp < 0 || comp >= q_) throw DimensionError("component index out of range");
        if (static_cast<int>(idx.size()) != L_) throw DimensionError("index tuple length differs from tensor order");
    }

    int L_ = 0, p_ = 0, q_ = 0;
    const MultisetTable* table_ = nullptr;
    std::vector<double> data_;
};

/// A vector repeated `multiplicity` times inside a product v_1^{c_1} ⊙ v_2^{c_2} ⊙ ...
struct Factor {
    const Vec* vec;
    int multiplicity;
};

/// T ⊙ (factors): sum over all ordered index tuples of entry times the
/// product of factor components. Each packed entry is visited once and
/// weighted by the sum over its distinct orderings.
inline Vec apply(const SymTensor& T, const std::vector<Factor>& factors) {
    const int L = T.order(), p = T.domain_dim(), q = T.codomain_dim();
    std::vector<const double*> slots;
    slots.reserve(L);
    for (const Factor& f : factors) {
        if (f.multiplicity < 0) throw DimensionError("negative multiplicity");
        if (f.multiplicity > 0 && f.vec->size() != p) throw DimensionError("factor dimension differs from tensor domain");
        for (int k = 0; k < f.multiplicity; ++k) slots.push_back(f.vec->data());
    }
    if (static_cast<int>(slots.size()) != L) throw DimensionError("multiplicities do not sum to tensor order");
    Vec out = Vec::Zero(q);
    if (L == 0) {
        for (int c = 0; c < q; ++c) out[c] = T.packed(c, 0);
        return out;
    }
    const MultisetTable& tab = T.table();
    std::vector<int> perm(L);
    for (int s = 0; s < tab.size(); ++s) {
        const int* tup = tab.tuple(s);
        perm.assign(tup, tup + L);
        double w = 0.0;
        do {
            double prod = 1.0;
            for (int k = 0; k < L; ++k) prod *= slots[k][perm[k]];
            w += prod;
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (w == 0.0) continue;
        for (int c = 0; c < q; ++c) out[c] += T.packed(c, s) * w;
    }
    return out;
}

inline Vec apply(const SymTensor& T, const Vec& v, int multiplicity) {
    return lsavg::apply(T, std::vector<Factor>{{&v, multiplicity}});
}

}  // namespace lsavg
