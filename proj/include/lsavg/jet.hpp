#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "lsavg/tensor.hpp"

namespace lsavg {

/// Monomials in nv variables of total degree <= D. Within each degree the
/// monomials follow the MultisetTable order, so a degree-L block maps
/// one-to-one onto packed SymTensor entries.
class JetSpace {
public:
    struct MulEntry {
        int i, j, k;
    };

    JetSpace(int nv, int D) : nv_(nv), D_(D) {
        std::map<std::vector<int>, int> index;
        start_.push_back(0);
        for (int L = 0; L <= D; ++L) {
            const MultisetTable& tab = MultisetTable::get(nv, L);
            for (int s = 0; s < tab.size(); ++s) {
                std::vector<int> e(nv, 0);
                for (int k = 0; k < L; ++k) e[tab.tuple(s)[k]]++;
                index[e] = static_cast<int>(exps_.size());
                exps_.push_back(e);
                degree_.push_back(L);
                double f = 1.0;
                for (int v : e)
                    for (int m = 2; m <= v; ++m) f *= m;
                fact_.push_back(f);
            }
            start_.push_back(static_cast<int>(exps_.size()));
        }
        for (int i = 0; i < size(); ++i)
            for (int j = 0; j < size(); ++j) {
                if (degree_[i] + degree_[j] > D) continue;
                std::vector<int> e(nv);
                for (int v = 0; v < nv; ++v) e[v] = exps_[i][v] + exps_[j][v];
                mul_.push_back({i, j, index.at(e)});
            }
        for (int v = 0; v < nv; ++v) {
            std::vector<int> e(nv, 0);
            e[v] = 1;
            var_index_.push_back(D >= 1 ? index.at(e) : -1);
        }
    }

    static const JetSpace& get(int nv, int D) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::unique_ptr<JetSpace>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[{nv, D}];
        if (!slot) slot = std::make_unique<JetSpace>(nv, D);
        return *slot;
    }

    int nvars() const { return nv_; }
    int degree() const { return D_; }
    int size() const { return static_cast<int>(exps_.size()); }
    int block_start(int L) const { return start_[L]; }
    int var_index(int v) const { return var_index_[v]; }
    /// prod of exponent factorials, the factor between a Taylor coefficient and a partial derivative
    double factorial_weight(int m) const { return fact_[m]; }
    const std::vector<MulEntry>& mul_table() const { return mul_; }

private:
    int nv_, D_;
    std::vector<std::vector<int>> exps_;
    std::vector<int> degree_, start_, var_index_;
    std::vector<double> fact_;
    std::vector<MulEntry> mul_;
};

/// Truncated multivariate Taylor polynomial.
class Jet {
public:
    explicit Jet(const JetSpace& sp, double c0 = 0.0) : sp_(&sp), c_(sp.size(), 0.0) { c_[0] = c0; }

    static Jet variable(const JetSpace& sp, int v, double value) {
        Jet j(sp, value);
        if (sp.degree() >= 1) j.c_[sp.var_index(v)] = 1.0;
        return j;
    }

    const JetSpace& space() const { return *sp_; }
    double value() const { return c_[0]; }
    double operator[](int m) const { return c_[m]; }
    double& operator[](int m) { return c_[m]; }
    bool is_constant() const {
        for (std::size_t m = 1; m < c_.size(); ++m)
            if (c_[m] != 0.0) return false;
        return true;
    }

    Jet& operator+=(const Jet& o) {
        for (std::size_t m = 0; m < c_.size(); ++m) c_[m] += o.c_[m];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (std::size_t m = 0; m < c_.size(); ++m) c_[m] -= o.c_[m];
        return *this;
    }
    Jet& operator*=(double a) {
        for (double& v : c_) v *= a;
        return *this;
    }
    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator-(Jet a) { return a *= -1.0; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        if (a.is_constant()) return b * a.c_[0];
        if (b.is_constant()) return a * b.c_[0];
        Jet out(*a.sp_);
        for (const auto& e : a.sp_->mul_table()) {
            const double ai = a.c_[e.i];
            if (ai != 0.0) out.c_[e.k] += ai * b.c_[e.j];
        }
        return out;
    }

    /// sum_k coef[k] (this - value)^k, i.e. composition with a univariate
    /// function whose scaled derivatives f^{(k)}(value)/k! are coef.
    Jet compose(const std::vector<double>& coef) const {
        Jet out(*sp_, coef[0]);
        Jet h = *this;
        h.c_[0] = 0.0;
        Jet pw = h;
        const int D = sp_->degree();
        for (int k = 1; k <= D; ++k) {
            if (k > 1) pw = pw * h;
            out += pw * coef[k];
        }
        return out;
    }

private:
    const JetSpace* sp_;
    std::vector<double> c_;
};

}  // namespace lsavg
