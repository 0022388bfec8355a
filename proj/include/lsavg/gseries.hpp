#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lsavg/averaging.hpp"

namespace lsavg {

/// g(z, eps) = sum_i eps^i g_i(z) together with partial derivatives of the g_i.
class GSeries {
public:
    virtual ~GSeries() = default;
    virtual int dim() const = 0;
    virtual int order() const = 0;
    virtual std::string provenance() const = 0;

    /// out[i][L] = D^L g_i(z) with respect to the coordinates listed in
    /// `active`, for L = 0..max_order[i]. An empty `active` gives values only.
    virtual std::vector<std::vector<SymTensor>> tensors(const Vec& z, const std::vector<int>& active,
                                                        const std::vector<int>& max_order) const = 0;

    std::vector<Vec> values(const Vec& z) const {
        auto t = tensors(z, {}, std::vector<int>(order() + 1, 0));
        std::vector<Vec> v;
        for (auto& ti : t) v.push_back(ti[0].as_vector());
        return v;
    }

    /// Jacobian of g_i in all coordinates.
    Mat jacobian(int i, const Vec& z) const {
        std::vector<int> mo(order() + 1, 0);
        mo[i] = 1;
        return tensors(z, all_coordinates(), mo)[i][1].as_matrix();
    }

    std::vector<int> all_coordinates() const {
        std::vector<int> a(dim());
        for (int j = 0; j < dim(); ++j) a[j] = j;
        return a;
    }
};

/// g_i given directly as expressions in z (exact derivatives).
class ExprGSeries : public GSeries {
public:
    ExprGSeries(const Declarations& d, const std::vector<std::vector<std::string>>& g, const Vec& params = Vec())
        : decl_(std::make_shared<const Declarations>(d)) {
        params_ = params.size() ? params : Vec::Zero(static_cast<Eigen::Index>(d.params.size()));
        for (const auto& comp : g) {
            if (comp.size() != d.states.size()) throw ValidationError("each g_i needs one expression per coordinate");
            std::vector<Expression> row;
            for (const auto& s : comp) row.push_back(parse(s, decl_));
            g_.push_back(std::move(row));
        }
        if (g_.empty()) throw ValidationError("g series is empty");
    }

    int dim() const override { return static_cast<int>(decl_->states.size()); }
    int order() const override { return static_cast<int>(g_.size()) - 1; }
    std::string provenance() const override { return "expressions"; }

    std::vector<std::vector<SymTensor>> tensors(const Vec& z, const std::vector<int>& active,
                                                const std::vector<int>& max_order) const override {
        std::vector<std::vector<SymTensor>> out;
        for (int i = 0; i <= order(); ++i) {
            if (active.empty()) {
                out.push_back(derivative_tensors(g_[i], 0.0, z.data(), params_.data(), 0));
                for (int L = 1; L <= max_order[i]; ++L) out.back().emplace_back(L, 0, dim());
            } else {
                out.push_back(derivative_tensors(g_[i], 0.0, z.data(), params_.data(), max_order[i], active));
            }
        }
        return out;
    }

private:
    std::shared_ptr<const Declarations> decl_;
    std::vector<std::vector<Expression>> g_;
    Vec params_;
};

/// Central-difference stencils of order 2 for the c-th derivative, c = 1..5:
/// (offset in steps, weight); divide by h^c.
inline const std::vector<std::pair<int, double>>& central_stencil(int c) {
    static const std::vector<std::pair<int, double>> s[6] = {
        {{0, 1.0}},
        {{1, 0.5}, {-1, -0.5}},
        {{1, 1.0}, {0, -2.0}, {-1, 1.0}},
        {{2, 0.5}, {1, -1.0}, {-1, 1.0}, {-2, -0.5}},
        {{2, 1.0}, {1, -4.0}, {0, 6.0}, {-1, -4.0}, {-2, 1.0}},
        {{3, 0.5}, {2, -2.0}, {1, 2.5}, {-1, -2.5}, {-2, 2.0}, {-3, -0.5}}};
    if (c < 0 || c > 5) throw RangeError("stencil order must be in 0..5");
    return s[c];
}

/// Base step for finite differences of order L.
inline double fd_step(int L) { return L <= 2 ? 1e-3 : std::pow(10.0, -16.0 / (L + 4)); }

/// g_i from the averaging pipeline. Derivatives in z are finite differences
/// with one Richardson step (h, h/2), all evaluated on the step mesh of the
/// base point so the discrete flow is smooth in z.
class AveragingGSeries : public GSeries {
public:
    AveragingGSeries(VectorFieldSeries F, int k, IntegratorConfig cfg = {}) : F_(std::move(F)), k_(k), cfg_(cfg) {
        F_.validate();
        if (k < 1 || k > F_.order()) throw RangeError("averaging order must be in 1..min(5, field order)");
    }

    int dim() const override { return F_.dim(); }
    int order() const override { return k_; }
    std::string provenance() const override { return "averaging"; }
    const VectorFieldSeries& field() const { return F_; }
    const IntegratorConfig& config() const { return cfg_; }

    std::vector<std::vector<SymTensor>> tensors(const Vec& z, const std::vector<int>& active,
                                                const std::vector<int>& max_order) const override {
        const int n = dim(), p = static_cast<int>(active.size());
        AveragedSeries base = averaged_functions(F_, z, k_, cfg_);
        std::map<std::vector<double>, std::vector<Vec>> memo;
        auto at = [&](const std::vector<double>& off) -> const std::vector<Vec>& {
            auto it = memo.find(off);
            if (it != memo.end()) return it->second;
            Vec zz = z;
            for (int d = 0; d < p; ++d) zz[active[d]] += off[d];
            return memo.emplace(off, averaged_functions(F_, zz, k_, cfg_, &base.mesh).g).first->second;
        };
        const std::vector<Vec>& center = at(std::vector<double>(p, 0.0));
        const bool on_cycle = base.y_T[0].norm() <= 1e-7 * (1.0 + z.norm());

        std::vector<std::vector<SymTensor>> out(k_ + 1);
        for (int i = 0; i <= k_; ++i) {
            SymTensor v(0, p, n);
            for (int c = 0; c < n; ++c) v.packed(c, 0) = center[i][c];
            out[i].push_back(std::move(v));
            for (int L = 1; L <= max_order[i]; ++L) out[i].emplace_back(L, p, n);
        }
        if (p == 0) return out;

        for (int L = 1; L <= *std::max_element(max_order.begin(), max_order.end()); ++L) {
            const MultisetTable& tab = MultisetTable::get(p, L);
            const double h = fd_step(L);
            for (int s = 0; s < tab.size(); ++s) {
                std::vector<int> counts(p, 0);
                for (int q = 0; q < L; ++q) counts[tab.tuple(s)[q]]++;
                auto diff = [&](double step) {
                    std::vector<Vec> acc(k_ + 1, Vec::Zero(n));
                    std::vector<double> off(p, 0.0);
                    std::function<void(int, double)> rec = [&](int d, double w) {
                        if (d == p) {
                            const std::vector<Vec>& g = at(off);
                            for (int i = 0; i <= k_; ++i)
                                if (max_order[i] >= L) acc[i] += w * g[i];
                            return;
                        }
                        for (auto [o, wt] : central_stencil(counts[d])) {
                            off[d] = o * step;
                            rec(d + 1, w * wt);
                        }
                        off[d] = 0.0;
                    };
                    rec(0, 1.0);
                    for (auto& a : acc) a /= std::pow(step, L);
                    return acc;
                };
                std::vector<Vec> d1 = diff(h), d2 = diff(0.5 * h);
                for (int i = 0; i <= k_; ++i) {
                    if (max_order[i] < L) continue;
                    Vec r = (4.0 * d2[i] - d1[i]) / 3.0;
                    for (int c = 0; c < n; ++c) out[i][L].packed(c, s) = r[c];
                }
            }
        }
        if (on_cycle && max_order[0] >= 1) {
            Mat D = base.Dg0();
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < p; ++d) out[0][1].packed(c, d) = D(c, active[d]);
        }
        return out;
    }

private:
    VectorFieldSeries F_;
    int k_;
    IntegratorConfig cfg_;
};

/// g~_i = g_{i+r}: the series h/eps^r used once g_1..g_{r-1} vanish identically.
class ShiftedGSeries : public GSeries {
public:
    ShiftedGSeries(std::shared_ptr<const GSeries> base, int shift) : base_(std::move(base)), r_(shift) {
        if (r_ < 1 || r_ > base_->order()) throw RangeError("shift must be in 1..order");
    }
    int dim() const override { return base_->dim(); }
    int order() const override { return base_->order() - r_; }
    std::string provenance() const override { return base_->provenance() + "/shift" + std::to_string(r_); }
    int shift() const { return r_; }
    const GSeries& base() const { return *base_; }

    std::vector<std::vector<SymTensor>> tensors(const Vec& z, const std::vector<int>& active,
                                                const std::vector<int>& max_order) const override {
        std::vector<int> mo(base_->order() + 1, 0);
        for (int i = 0; i <= order(); ++i) mo[i + r_] = max_order[i];
        auto t = base_->tensors(z, active, mo);
        return std::vector<std::vector<SymTensor>>(t.begin() + r_, t.end());
    }

private:
    std::shared_ptr<const GSeries> base_;
    int r_;
};

}  // namespace lsavg
