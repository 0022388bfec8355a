#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "lsavg/chart.hpp"
#include "lsavg/gseries.hpp"
#include "lsavg/numerics.hpp"

namespace lsavg {

enum class ReductionFormula {
    Recurrence,         // partition sums
    ExpandedCorrected,  // hard-coded expansions, consistent with the recurrence
    ExpandedLiteral     // hard-coded expansions transcribed without the index and coefficient fixes
};

/// Rows [r0, r0+cnt) of a tensor's codomain.
inline SymTensor codomain_rows(const SymTensor& T, int r0, int cnt) {
    SymTensor out(T.order(), T.domain_dim(), cnt);
    for (int c = 0; c < cnt; ++c)
        for (int s = 0; s < T.packed_size(); ++s) out.packed(c, s) = T.packed(r0 + c, s);
    return out;
}

/// Everything the reduction produces at one alpha.
struct ReductionPoint {
    Vec alpha;
    Vec z;
    Mat Delta;   // d pi_perp g_0 / d b, (n-m) x (n-m)
    Mat Gamma;   // d pi g_0 / d b, m x (n-m)
    double det_delta = 1.0;
    std::vector<Vec> gamma;  // gamma[j-1] = gamma_j(alpha), j = 1..k
    std::vector<Vec> f;      // f[i-1] = f_i(alpha), i = 1..k
    std::vector<Vec> g;      // g[i] = g_i(z_alpha), i = 0..k
};

/// Orders of b-derivatives needed for f_1..f_k, gamma_1..gamma_k.
inline std::vector<int> reduction_orders(int k) {
    std::vector<int> mo(k + 1);
    mo[0] = k;
    for (int i = 1; i <= k; ++i) mo[i] = k - i;
    return mo;
}

namespace detail {

struct Split {
    std::vector<std::vector<SymTensor>> pi, perp;  // [i][L]
    const SymTensor& P(int i, int L) const { return at(pi, i, L); }
    const SymTensor& Q(int i, int L) const { return at(perp, i, L); }
    static const SymTensor& at(const std::vector<std::vector<SymTensor>>& v, int i, int L) {
        if (i >= static_cast<int>(v.size()) || L >= static_cast<int>(v[i].size()))
            throw RangeError("missing b-derivative of order " + std::to_string(L) + " of g_" + std::to_string(i));
        return v[i][L];
    }
};

inline Vec ap(const SymTensor& T, std::vector<Factor> f) { return lsavg::apply(T, f); }

inline Vec expanded_gamma_sum(int i, const Split& S, const std::vector<Vec>& gm, bool literal) {
    const Vec& g1 = gm[0];
    auto Q = [&](int j, int L) -> const SymTensor& { return S.Q(j, L); };
    auto v = [&](int j) { return Q(j, 0).as_vector(); };
    switch (i) {
        case 1: return v(1);
        case 2: return ap(Q(0, 2), {{&g1, 2}}) + 2 * ap(Q(1, 1), {{&g1, 1}}) + 2 * v(2);
        case 3: {
            const Vec& g2 = gm[1];
            return ap(Q(0, 3), {{&g1, 3}}) + 3 * ap(Q(0, 2), {{&g1, 1}, {&g2, 1}}) + 3 * ap(Q(1, 2), {{&g1, 2}}) +
                   (literal ? 2.0 : 3.0) * ap(Q(1, 1), {{&g2, 1}}) + 6 * ap(Q(2, 1), {{&g1, 1}}) + 6 * v(3);
        }
        case 4: {
            const Vec &g2 = gm[1], &g3 = gm[2];
            Vec s = ap(Q(0, 4), {{&g1, 4}}) + 3 * ap(Q(0, 2), {{&g2, 2}}) + 4 * ap(Q(0, 2), {{&g1, 1}, {&g3, 1}}) +
                    6 * ap(Q(0, 3), {{&g1, 2}, {&g2, 1}}) + 4 * ap(Q(1, 1), {{&g3, 1}}) + 12 * ap(Q(1, 2), {{&g1, 1}, {&g2, 1}}) +
                    4 * ap(Q(1, 3), {{&g1, 3}}) + 12 * ap(Q(2, 1), {{&g2, 1}}) + 12 * ap(Q(2, 2), {{&g1, 2}}) +
                    24 * ap(Q(3, 1), {{&g1, 1}});
            if (!literal) s += 24 * v(4);
            return s;
        }
        case 5: {
            const Vec &g2 = gm[1], &g3 = gm[2], &g4 = gm[3];
            Vec s = 10 * ap(Q(0, 2), {{&g2, 1}, {&g3, 1}}) + 5 * ap(Q(0, 2), {{&g1, 1}, {&g4, 1}}) +
                    15 * ap(Q(0, 3), {{&g1, 1}, {&g2, 2}}) + 10 * ap(Q(0, 3), {{&g1, 2}, {&g3, 1}}) +
                    10 * ap(Q(0, 4), {{&g1, 3}, {&g2, 1}}) + ap(Q(0, 5), {{&g1, 5}}) + 5 * ap(Q(1, 1), {{&g4, 1}}) +
                    15 * ap(Q(1, 2), {{&g2, 2}}) + 20 * ap(Q(1, 2), {{&g1, 1}, {&g3, 1}}) +
                    30 * ap(Q(1, 3), {{&g1, 2}, {&g2, 1}}) + 5 * ap(Q(1, 4), {{&g1, 4}}) + 20 * ap(Q(2, 1), {{&g3, 1}}) +
                    60 * ap(Q(2, 2), {{&g1, 1}, {&g2, 1}}) + 20 * ap(Q(2, 3), {{&g1, 3}}) + 60 * ap(Q(3, 1), {{&g2, 1}}) +
                    60 * ap(Q(3, 2), {{&g1, 2}}) + 120 * ap(Q(4, 1), {{&g1, 1}});
            if (!literal) s += 120 * v(5);
            return s;
        }
        default: throw RangeError("order must be in 1..5");
    }
}

inline Vec expanded_f(int i, const Split& S, const std::vector<Vec>& gm, bool literal) {
    auto P = [&](int j, int L) -> const SymTensor& { return S.P(j, L); };
    auto v = [&](int j) { return P(j, 0).as_vector(); };
    const Vec& g1 = gm[0];
    switch (i) {
        case 1: return ap(P(0, 1), {{&g1, 1}}) + v(1);
        case 2: {
            const Vec& g2 = gm[1];
            return 0.5 * ap(P(0, 1), {{&g2, 1}}) + 0.5 * ap(P(0, 2), {{&g1, 2}}) + ap(P(1, 1), {{&g1, 1}}) + v(2);
        }
        case 3: {
            const Vec &g2 = gm[1], &g3 = gm[2];
            return ap(P(0, 1), {{&g3, 1}}) / 6 + ap(P(0, 3), {{&g1, 3}}) / 6 + 0.5 * ap(P(0, 2), {{&g1, 1}, {&g2, 1}}) +
                   0.5 * ap(P(1, 2), {{&g1, 2}}) + 0.5 * ap(P(1, 1), {{&g2, 1}}) + ap(P(2, 1), {{&g1, 1}}) + v(3);
        }
        case 4: {
            const Vec &g2 = gm[1], &g3 = gm[2], &g4 = gm[3];
            return ap(P(0, 1), {{&g4, 1}}) / 24 + ap(P(0, 4), {{&g1, 4}}) / 24 + ap(P(0, 3), {{&g1, 2}, {&g2, 1}}) / 4 +
                   ap(P(0, 2), {{&g2, 2}}) / 8 + ap(P(0, 2), {{&g1, 1}, {&g3, 1}}) / 6 + ap(P(1, 3), {{&g1, 3}}) / 6 +
                   0.5 * ap(P(1, 2), {{&g1, 1}, {&g2, 1}}) + ap(P(1, 1), {{&g3, 1}}) / 6 + 0.5 * ap(P(2, 2), {{&g1, 2}}) +
                   0.5 * ap(P(2, 1), {{&g2, 1}}) + ap(P(3, 1), {{&g1, 1}}) + v(4);
        }
        case 5: {
            const Vec &g2 = gm[1], &g3 = gm[2], &g4 = gm[3], &g5 = gm[4];
            const Vec& partner = literal ? g1 : g3;
            Vec s = ap(P(0, 1), {{&g5, 1}}) / 120 + ap(P(0, 2), {{&g2, 1}, {&partner, 1}}) / 12 +
                    ap(P(0, 2), {{&g1, 1}, {&g4, 1}}) / 24 + ap(P(0, 3), {{&g1, 1}, {&g2, 2}}) / 8 +
                    ap(P(0, 3), {{&g1, 2}, {&g3, 1}}) / 12 + ap(P(0, 4), {{&g1, 3}, {&g2, 1}}) / 12 +
                    ap(P(0, 5), {{&g1, 5}}) / 120 + ap(P(1, 1), {{&g4, 1}}) / 24 + ap(P(1, 2), {{&g2, 2}}) / 8 +
                    ap(P(1, 2), {{&g1, 1}, {&g3, 1}}) / 6 + ap(P(1, 3), {{&g1, 2}, {&g2, 1}}) / 4 +
                    ap(P(1, 4), {{&g1, 4}}) / 24 + ap(P(2, 1), {{&g3, 1}}) / 6 + 0.5 * ap(P(2, 2), {{&g1, 1}, {&g2, 1}}) +
                    ap(P(2, 3), {{&g1, 3}}) / 6 + 0.5 * ap(P(3, 1), {{&g2, 1}}) + 0.5 * ap(P(3, 2), {{&g1, 2}}) +
                    ap(P(4, 1), {{&g1, 1}}) + v(5);
            if (literal) s += v(4);
            return s;
        }
        default: throw RangeError("order must be in 1..5");
    }
}

}  // namespace detail

/// Reduction at one point from b-derivative tensors bt[i][L] = D_b^L g_i(z_alpha)
/// (codomain R^n, domain R^{n-m}).
inline ReductionPoint reduce_from_tensors(const std::vector<std::vector<SymTensor>>& bt, int m, int k,
                                          ReductionFormula formula = ReductionFormula::Recurrence) {
    if (k < 1 || k > kMaxOrder) throw RangeError("reduction order must be in 1..5");
    if (static_cast<int>(bt.size()) < k + 1) throw RangeError("g series shorter than the reduction order");
    const int n = bt[0][0].codomain_dim(), p = n - m;
    ReductionPoint out;
    for (int i = 0; i <= k; ++i) out.g.push_back(bt[i][0].as_vector());
    if (p == 0) {
        out.Delta = Mat(0, 0);
        out.Gamma = Mat(m, 0);
        for (int i = 1; i <= k; ++i) {
            out.gamma.push_back(Vec(0));
            out.f.push_back(out.g[i]);
        }
        return out;
    }
    detail::Split S;
    for (int i = 0; i <= k; ++i) {
        S.pi.emplace_back();
        S.perp.emplace_back();
        for (const SymTensor& T : bt[i]) {
            S.pi.back().push_back(codomain_rows(T, 0, m));
            S.perp.back().push_back(codomain_rows(T, m, p));
        }
    }
    out.Delta = S.Q(0, 1).as_matrix();
    out.Gamma = S.P(0, 1).as_matrix();
    Eigen::PartialPivLU<Mat> lu(out.Delta);
    out.det_delta = out.Delta.determinant();
    const double scale = std::pow(std::max(1.0, out.Delta.cwiseAbs().maxCoeff()), p);
    if (!(std::fabs(out.det_delta) > 1e-10 * scale)) throw SingularError("Delta_alpha is singular");

    const bool expanded = formula != ReductionFormula::Recurrence;
    const bool literal = formula == ReductionFormula::ExpandedLiteral;
    for (int i = 1; i <= k; ++i) {
        Vec s;
        if (expanded) {
            s = detail::expanded_gamma_sum(i, S, out.gamma, literal);
        } else {
            s = S.Q(i, 0).as_vector();
            if (i >= 2)
                for (const PartitionTerm& t : partitions_Sprime(i)) s += t.coefficient.value() * apply_term(S.Q(0, t.order), t, out.gamma);
            for (int l = 1; l <= i - 1; ++l)
                for (const PartitionTerm& t : partitions_S(l)) s += t.coefficient.value() * apply_term(S.Q(i - l, t.order), t, out.gamma);
        }
        const double w = expanded ? 1.0 : static_cast<double>(factorial(i));
        out.gamma.push_back(-w * lu.solve(s));
    }
    for (int i = 1; i <= k; ++i) {
        if (expanded) {
            out.f.push_back(detail::expanded_f(i, S, out.gamma, literal));
            continue;
        }
        Vec f = S.P(i, 0).as_vector();
        for (int l = 1; l <= i; ++l)
            for (const PartitionTerm& t : partitions_S(l)) f += t.coefficient.value() * apply_term(S.P(i - l, t.order), t, out.gamma);
        out.f.push_back(f);
    }
    return out;
}

/// Indices of the normal (b) coordinates.
inline std::vector<int> normal_coordinates(const ManifoldChart& chart) {
    std::vector<int> a;
    for (int j = chart.m; j < chart.n; ++j) a.push_back(j);
    return a;
}

inline ReductionPoint reduce_at(const GSeries& gs, const ManifoldChart& chart, const Vec& alpha, int k,
                                ReductionFormula formula = ReductionFormula::Recurrence) {
    if (gs.dim() != chart.n) throw DimensionError("chart and g series dimensions differ");
    if (k > gs.order()) throw RangeError("reduction order exceeds the g series order");
    Vec z = chart.embed(alpha);
    std::vector<int> mo = reduction_orders(k);
    mo.resize(gs.order() + 1, 0);
    auto bt = gs.tensors(z, normal_coordinates(chart), mo);
    ReductionPoint r = reduce_from_tensors(bt, chart.m, k, formula);
    r.alpha = alpha;
    r.z = z;
    return r;
}

struct DeltaInfo {
    Mat Delta;
    double det = 1.0;
};

inline DeltaInfo delta_alpha(const GSeries& gs, const ManifoldChart& chart, const Vec& alpha) {
    DeltaInfo d;
    if (chart.m == chart.n) {
        d.Delta = Mat(0, 0);
        return d;
    }
    std::vector<int> mo(gs.order() + 1, 0);
    mo[0] = 1;
    auto bt = gs.tensors(chart.embed(alpha), normal_coordinates(chart), mo);
    d.Delta = codomain_rows(bt[0][1], chart.m, chart.codim()).as_matrix();
    d.det = d.Delta.determinant();
    return d;
}

inline std::vector<Vec> gamma_functions(const GSeries& gs, const ManifoldChart& chart, const Vec& alpha, int k) {
    return reduce_at(gs, chart, alpha, k).gamma;
}

/// f_1..f_k at alpha with caching, and F^k(alpha, eps) = sum eps^i f_i(alpha).
class BifurcationSeries {
public:
    BifurcationSeries(std::shared_ptr<const GSeries> gs, ManifoldChart chart, int k,
                      ReductionFormula formula = ReductionFormula::Recurrence)
        : gs_(std::move(gs)), chart_(std::move(chart)), k_(k), formula_(formula) {
        chart_.validate();
        if (k_ < 1 || k_ > gs_->order()) throw RangeError("reduction order must be in 1..order of the g series");
    }

    int order() const { return k_; }
    int m() const { return chart_.m; }
    const ManifoldChart& chart() const { return chart_; }
    const GSeries& gseries() const { return *gs_; }
    std::shared_ptr<const GSeries> gseries_ptr() const { return gs_; }

    const ReductionPoint& at(const Vec& alpha) const {
        std::vector<double> key(alpha.data(), alpha.data() + alpha.size());
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = cache_.find(key);
            if (it != cache_.end()) return it->second;
        }
        ReductionPoint r = reduce_at(*gs_, chart_, alpha, k_, formula_);
        std::lock_guard<std::mutex> lock(mu_);
        return cache_.emplace(key, std::move(r)).first->second;
    }

    std::vector<Vec> f(const Vec& alpha) const { return at(alpha).f; }

    /// F^j(alpha, eps) truncated at order j (default: k).
    Vec value(const Vec& alpha, double eps, int upto = -1) const {
        const auto& fs = at(alpha).f;
        const int K = upto < 0 ? k_ : upto;
        Vec s = Vec::Zero(chart_.m);
        for (int i = K; i >= 1; --i) s = eps * (fs[i - 1] + s);
        return s;
    }

    /// D_alpha F^k by central differences of the f_i.
    Mat jacobian(const Vec& alpha, double eps, int upto = -1) const {
        const int m = chart_.m;
        Mat J(m, m);
        for (int j = 0; j < m; ++j) {
            const double h = 1e-5 * std::max(1.0, std::fabs(alpha[j]));
            Vec ap = alpha, am = alpha;
            ap[j] += h;
            am[j] -= h;
            J.col(j) = (value(ap, eps, upto) - value(am, eps, upto)) / (2 * h);
        }
        return J;
    }

private:
    std::shared_ptr<const GSeries> gs_;
    ManifoldChart chart_;
    int k_;
    ReductionFormula formula_;
    mutable std::mutex mu_;
    mutable std::map<std::vector<double>, ReductionPoint> cache_;
};

/// Sample grid on the chart box: `per_dim` Chebyshev points per dimension.
inline std::vector<Vec> chart_grid(const ManifoldChart& chart, int per_dim) {
    std::vector<std::vector<double>> axes;
    for (int j = 0; j < chart.m; ++j) axes.push_back(chebyshev_grid(chart.lo[j], chart.hi[j], per_dim));
    std::vector<Vec> pts;
    if (chart.m == 0) return {Vec(0)};
    std::vector<int> idx(chart.m, 0);
    while (true) {
        Vec a(chart.m);
        for (int j = 0; j < chart.m; ++j) a[j] = axes[j][idx[j]];
        pts.push_back(a);
        int j = 0;
        while (j < chart.m && ++idx[j] == per_dim) idx[j++] = 0;
        if (j == chart.m) break;
    }
    return pts;
}

/// Samples for the zero test. For m >= 2 the full grid is too costly with an
/// averaged g series, so `per_dim` Chebyshev points are taken along each
/// axis-parallel line through the box centre and along both diagonals.
inline std::vector<Vec> zero_test_samples(const ManifoldChart& chart, int per_dim) {
    if (chart.m <= 1) return chart_grid(chart, per_dim);
    const Vec c = chart.center();
    std::vector<double> u = chebyshev_grid(0.0, 1.0, per_dim);
    std::vector<Vec> pts;
    for (int j = 0; j < chart.m; ++j)
        for (double s : u) {
            Vec a = c;
            a[j] = chart.lo[j] + s * (chart.hi[j] - chart.lo[j]);
            pts.push_back(a);
        }
    for (double s : u) {
        Vec a = chart.lo + s * (chart.hi - chart.lo);
        Vec b = a;
        b[0] = chart.hi[0] - s * (chart.hi[0] - chart.lo[0]);
        pts.push_back(a);
        pts.push_back(b);
    }
    return pts;
}

struct OrderReport {
    int r = 0;                      // first order not identically zero; 0 if none
    std::vector<double> max_abs;    // max |f_i| over the grid, i = 1..k
    std::vector<bool> zero;
    double scale = 0.0;
    double min_abs_det_delta = 0.0;
};

/// Determine r on the sample grid.
inline OrderReport detect_order(const BifurcationSeries& bf, int per_dim = 64) {
    OrderReport rep;
    const int k = bf.order();
    rep.max_abs.assign(k, 0.0);
    rep.min_abs_det_delta = std::numeric_limits<double>::infinity();
    for (const Vec& a : zero_test_samples(bf.chart(), per_dim)) {
        const ReductionPoint& p = bf.at(a);
        rep.min_abs_det_delta = std::min(rep.min_abs_det_delta, std::fabs(p.det_delta));
        for (int i = 0; i < k; ++i) rep.max_abs[i] = std::max(rep.max_abs[i], p.f[i].size() ? p.f[i].cwiseAbs().maxCoeff() : 0.0);
    }
    rep.scale = *std::max_element(rep.max_abs.begin(), rep.max_abs.end());
    for (int i = 0; i < k; ++i) {
        rep.zero.push_back(rep.max_abs[i] <= 1e-8 * rep.scale);
        if (!rep.zero.back() && rep.r == 0) rep.r = i + 1;
    }
    return rep;
}

/// max |x(T, z_alpha, 0) - z_alpha| over chart samples: the periodicity hypothesis on Z.
inline double chart_defect(const VectorFieldSeries& F, const ManifoldChart& chart, int per_dim = 8, const IntegratorConfig& cfg = {}) {
    double worst = 0.0;
    for (const Vec& a : chart_grid(chart, per_dim)) {
        Vec z = chart.embed(a);
        worst = std::max(worst, integrate_unperturbed(F, z, cfg).periodicity_defect());
    }
    return worst;
}

}  // namespace lsavg
