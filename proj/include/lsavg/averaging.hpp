#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "lsavg/flow.hpp"
#include "lsavg/partitions.hpp"

namespace lsavg {

/// Derivative tensors of F_0..F_k at one point of the unperturbed orbit
/// (dF[j][L] = D^L F_j) together with y_1..y_{i-1} (y[j-1] = y_j).
struct Ingredients {
    std::vector<std::vector<SymTensor>> dF;
    std::vector<Vec> y;

    const SymTensor& D(int j, int L) const {
        if (j >= static_cast<int>(dF.size()) || L >= static_cast<int>(dF[j].size()))
            throw RangeError("missing derivative tensor D^" + std::to_string(L) + " F_" + std::to_string(j));
        return dF[j][L];
    }
    const Vec& Y(int j) const {
        if (j < 1 || j > static_cast<int>(y.size())) throw RangeError("missing y_" + std::to_string(j));
        return y[j - 1];
    }
};

/// Tensors needed for orders up to k: F_0 up to order max(1,k), F_j up to k-j.
inline std::vector<std::vector<SymTensor>> field_tensors(const VectorFieldSeries& F, int k, double t, const Vec& x) {
    std::vector<std::vector<SymTensor>> dF;
    for (int j = 0; j <= k; ++j) dF.push_back(derivative_tensors(F.F[j], t, x.data(), F.params.data(), j == 0 ? std::max(1, k) : k - j));
    return dF;
}

/// B_i of y_i' = A y_i + B_i from the partition sums.
inline Vec recurrence_integrand(int i, const Ingredients& in) {
    if (i < 1 || i > kMaxOrder) throw RangeError("order must be in 1..5");
    Vec s = in.D(i, 0).as_vector();
    if (i >= 2)
        for (const PartitionTerm& t : partitions_Sprime(i)) s += t.coefficient.value() * apply_term(in.D(0, t.order), t, in.y);
    for (int l = 1; l <= i - 1; ++l)
        for (const PartitionTerm& t : partitions_S(l)) s += t.coefficient.value() * apply_term(in.D(i - l, t.order), t, in.y);
    return static_cast<double>(factorial(i)) * s;
}

enum class ExpandedVariant {
    Corrected,  // consistent with the partition recurrence
    Literal     // transcription including the y2.y3 -> y1.y3 slip in order 5
};

/// Hard-coded integrands for orders 1..5, an independent check of recurrence_integrand.
inline Vec expanded_integrand(int i, const Ingredients& in, ExpandedVariant variant = ExpandedVariant::Corrected) {
    auto T = [&](int j, int L) -> const SymTensor& { return in.D(j, L); };
    auto ap = [](const SymTensor& t, std::vector<Factor> f) { return lsavg::apply(t, f); };
    auto F = [&](int j) { return T(j, 0).as_vector(); };
    switch (i) {
        case 1: return F(1);
        case 2: {
            const Vec &y1 = in.Y(1);
            return 2 * F(2) + 2 * ap(T(1, 1), {{&y1, 1}}) + ap(T(0, 2), {{&y1, 2}});
        }
        case 3: {
            const Vec &y1 = in.Y(1), &y2 = in.Y(2);
            return 6 * F(3) + 6 * ap(T(2, 1), {{&y1, 1}}) + 3 * ap(T(1, 2), {{&y1, 2}}) + 3 * ap(T(1, 1), {{&y2, 1}}) +
                   3 * ap(T(0, 2), {{&y1, 1}, {&y2, 1}}) + ap(T(0, 3), {{&y1, 3}});
        }
        case 4: {
            const Vec &y1 = in.Y(1), &y2 = in.Y(2), &y3 = in.Y(3);
            return 24 * F(4) + 24 * ap(T(3, 1), {{&y1, 1}}) + 12 * ap(T(2, 2), {{&y1, 2}}) + 12 * ap(T(2, 1), {{&y2, 1}}) +
                   12 * ap(T(1, 2), {{&y1, 1}, {&y2, 1}}) + 4 * ap(T(1, 3), {{&y1, 3}}) + 4 * ap(T(1, 1), {{&y3, 1}}) +
                   3 * ap(T(0, 2), {{&y2, 2}}) + 4 * ap(T(0, 2), {{&y1, 1}, {&y3, 1}}) + 6 * ap(T(0, 3), {{&y1, 2}, {&y2, 1}}) +
                   ap(T(0, 4), {{&y1, 4}});
        }
        case 5: {
            const Vec &y1 = in.Y(1), &y2 = in.Y(2), &y3 = in.Y(3), &y4 = in.Y(4);
            const Vec& partner = variant == ExpandedVariant::Corrected ? y2 : y1;
            return 120 * F(5) + 120 * ap(T(4, 1), {{&y1, 1}}) + 60 * ap(T(3, 2), {{&y1, 2}}) + 60 * ap(T(3, 1), {{&y2, 1}}) +
                   60 * ap(T(2, 2), {{&y1, 1}, {&y2, 1}}) + 20 * ap(T(2, 3), {{&y1, 3}}) + 20 * ap(T(2, 1), {{&y3, 1}}) +
                   20 * ap(T(1, 2), {{&y1, 1}, {&y3, 1}}) + 15 * ap(T(1, 2), {{&y2, 2}}) +
                   30 * ap(T(1, 3), {{&y1, 2}, {&y2, 1}}) + 5 * ap(T(1, 4), {{&y1, 4}}) + 5 * ap(T(1, 1), {{&y4, 1}}) +
                   10 * ap(T(0, 2), {{&partner, 1}, {&y3, 1}}) + 5 * ap(T(0, 2), {{&y1, 1}, {&y4, 1}}) +
                   15 * ap(T(0, 3), {{&y1, 1}, {&y2, 2}}) + 10 * ap(T(0, 3), {{&y1, 2}, {&y3, 1}}) +
                   10 * ap(T(0, 4), {{&y1, 3}, {&y2, 1}}) + ap(T(0, 5), {{&y1, 5}});
        }
        default: throw RangeError("order must be in 1..5");
    }
}

enum class IntegrandSource { Recurrence, Expanded };

/// Layout of the augmented state [x, vec(Y), y_1, ..., y_k].
struct AugmentedLayout {
    int n, k;
    int size() const { return n + n * n + k * n; }
    int y_offset(int i) const { return n + n * n + (i - 1) * n; }
};

/// y_1..y_k along the unperturbed orbit through z, computed together with
/// x and Y as one Cauchy problem.
struct YFunctions {
    Vec z;
    int k = 0;
    double period = 0.0;
    Vec x_T;
    Mat Y_T;
    std::vector<Vec> y_T;            // y_T[i] = y_i(T,z); y_T[0] = x(T,z,0) - z
    std::vector<Vec> error_estimate; // same indexing as y_T
    std::vector<double> mesh;
    DenseSolution dense;

    AugmentedLayout layout() const { return {static_cast<int>(z.size()), k}; }
    Vec x(double t) const { return dense(t).head(z.size()); }
    Mat Y(double t) const {
        const int n = static_cast<int>(z.size());
        Vec v = dense(t);
        return Eigen::Map<const Mat>(v.data() + n, n, n);
    }
    Vec y(int i, double t) const {
        if (i == 0) return x(t) - z;
        return dense(t).segment(layout().y_offset(i), z.size());
    }
};

inline YFunctions y_functions(const VectorFieldSeries& F, const Vec& z, int k, const IntegratorConfig& cfg = {},
                              const std::vector<double>* mesh = nullptr, IntegrandSource source = IntegrandSource::Recurrence) {
    F.validate();
    if (k < 1 || k > F.order()) throw RangeError("averaging order must be in 1..min(5, field order)");
    const int n = F.dim();
    if (z.size() != n) throw DimensionError("base point has wrong dimension");
    const AugmentedLayout lay{n, k};
    auto rhs = [&](double t, const Vec& s, Vec& ds) {
        ds.resize(s.size());
        Vec x = s.head(n);
        Ingredients in;
        in.dF = field_tensors(F, k, t, x);
        Mat A = in.dF[0][1].as_matrix();
        ds.head(n) = in.dF[0][0].as_vector();
        Eigen::Map<Mat>(ds.data() + n, n, n) = A * Eigen::Map<const Mat>(s.data() + n, n, n);
        for (int i = 1; i <= k; ++i) {
            Vec yi = s.segment(lay.y_offset(i), n);
            Vec Bi = source == IntegrandSource::Recurrence ? recurrence_integrand(i, in) : expanded_integrand(i, in);
            ds.segment(lay.y_offset(i), n) = A * yi + Bi;
            in.y.push_back(std::move(yi));
        }
    };
    Vec s0 = Vec::Zero(lay.size());
    s0.head(n) = z;
    Eigen::Map<Mat>(s0.data() + n, n, n).setIdentity();
    IntegrationResult r = integrate_dop853(rhs, 0.0, F.period, s0, cfg, mesh);
    YFunctions out;
    out.z = z;
    out.k = k;
    out.period = F.period;
    out.x_T = r.y_end.head(n);
    out.Y_T = Eigen::Map<const Mat>(r.y_end.data() + n, n, n);
    out.y_T.push_back(out.x_T - z);
    out.error_estimate.push_back(r.error_estimate.head(n));
    for (int i = 1; i <= k; ++i) {
        out.y_T.push_back(r.y_end.segment(lay.y_offset(i), n));
        out.error_estimate.push_back(r.error_estimate.segment(lay.y_offset(i), n));
    }
    out.mesh = std::move(r.mesh);
    out.dense = std::move(r.dense);
    return out;
}

/// g_0..g_k at z with g_i = Y(T)^{-1} y_i(T) / i!.
struct AveragedSeries {
    Vec z;
    int k = 0;
    std::vector<Vec> g;          // g[0..k]
    std::vector<Vec> y_T;        // y[0..k]
    Mat Y0_inv;                  // identity: Y(0,z) = Id
    Mat YT_inv;
    std::vector<Vec> error;      // estimated absolute error of g[i], componentwise
    std::vector<double> mesh;

    /// D g_0(z) = Y(0)^{-1} - Y(T)^{-1}
    Mat Dg0() const { return Y0_inv - YT_inv; }
};

inline AveragedSeries averaged_functions(const VectorFieldSeries& F, const Vec& z, int k, const IntegratorConfig& cfg = {},
                                         const std::vector<double>* mesh = nullptr) {
    YFunctions yf = y_functions(F, z, k, cfg, mesh);
    const int n = F.dim();
    Eigen::FullPivLU<Mat> lu(yf.Y_T);
    if (!lu.isInvertible() || !std::isfinite(lu.rcond()) || lu.rcond() < 1e-14)
        throw SingularError("fundamental matrix Y(T,z) is numerically singular");
    AveragedSeries a;
    a.z = z;
    a.k = k;
    a.Y0_inv = Mat::Identity(n, n);
    a.YT_inv = lu.inverse();
    Mat absinv = a.YT_inv.cwiseAbs();
    for (int i = 0; i <= k; ++i) {
        const double f = static_cast<double>(factorial(i));
        a.g.push_back(a.YT_inv * yf.y_T[i] / f);
        a.error.push_back(absinv * yf.error_estimate[i] / f);
    }
    a.y_T = std::move(yf.y_T);
    a.mesh = std::move(yf.mesh);
    return a;
}

/// y_i(T) from the integral form Y(T) int_0^T Y(s)^{-1} B_i(s) ds, using
/// Gauss-Legendre quadrature on the dense output of a reduced-tolerance run.
inline std::vector<Vec> y_by_quadrature(const VectorFieldSeries& F, const Vec& z, int k, const IntegratorConfig& cfg = {}) {
    IntegratorConfig c = cfg;
    c.dense = true;
    YFunctions yf = y_functions(F, z, k, c);
    static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
    static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891};
    const int n = F.dim();
    std::vector<Vec> acc(k + 1, Vec::Zero(n));
    for (std::size_t m = 1; m < yf.mesh.size(); ++m) {
        const double a = yf.mesh[m - 1], h = yf.mesh[m] - a;
        for (int q = 0; q < 5; ++q) {
            const double t = a + 0.5 * h * (gx[q] + 1.0);
            Vec s = yf.dense(t);
            Ingredients in;
            in.dF = field_tensors(F, k, t, s.head(n));
            Mat Yinv = Eigen::Map<const Mat>(s.data() + n, n, n).inverse();
            for (int i = 1; i <= k; ++i) {
                acc[i] += 0.5 * h * gw[q] * (Yinv * recurrence_integrand(i, in));
                in.y.push_back(s.segment(yf.layout().y_offset(i), n));
            }
        }
    }
    std::vector<Vec> out{yf.x_T - z};
    for (int i = 1; i <= k; ++i) out.push_back(yf.Y_T * acc[i]);
    return out;
}

/// y_1(T)..y_k(T) from the eps-expansion X(t, eps) = sum_m X_m(t) eps^m of the
/// full solution, propagated with univariate jets in eps: y_m = m! X_m.
inline std::vector<Vec> y_by_eps_jets(const VectorFieldSeries& F, const Vec& z, int k, const IntegratorConfig& cfg = {}) {
    F.validate();
    if (k < 1 || k > F.order()) throw RangeError("order must be in 1..min(5, field order)");
    const int n = F.dim();
    const JetSpace& sp = JetSpace::get(1, k);
    auto rhs = [&](double t, const Vec& s, Vec& ds) {
        ds = Vec::Zero(s.size());
        std::vector<Jet> X;
        for (int c = 0; c < n; ++c) {
            Jet j(sp);
            for (int m = 0; m <= k; ++m) j[sp.block_start(m)] = s[m * n + c];
            X.push_back(std::move(j));
        }
        for (int j = 0; j <= std::min(k, F.order()); ++j)
            for (int c = 0; c < n; ++c) {
                Jet v = eval_jet_composed(F.F[j][c], t, X, F.params.data());
                for (int m = j; m <= k; ++m) ds[m * n + c] += v[sp.block_start(m - j)];
            }
    };
    Vec s0 = Vec::Zero(n * (k + 1));
    s0.head(n) = z;
    IntegrationResult r = integrate_dop853(rhs, 0.0, F.period, s0, cfg);
    std::vector<Vec> out{r.y_end.head(n) - z};
    for (int m = 1; m <= k; ++m) out.push_back(static_cast<double>(factorial(m)) * r.y_end.segment(m * n, n));
    return out;
}

/// Zero test used for hypothesis (ii): max |samples| below 1e-8 * scale.
inline bool is_identically_zero(const std::vector<Vec>& samples, double scale, double rel = 1e-8) {
    double m = 0.0;
    for (const Vec& v : samples) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m <= rel * scale;
}

}  // namespace lsavg
