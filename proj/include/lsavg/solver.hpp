#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "lsavg/lyapschmidt.hpp"

namespace lsavg {

struct DegreeZero {
    Vec x;
    double det = 0.0;
    int sign = 0;
};

struct DegreeCertificate {
    Vec lo, hi, y0;
    int degree = 0;
    std::string method = "regular-zero sign sum";
    std::vector<DegreeZero> zeros;
    double boundary_min = 0.0;  // min |map - y0| over the boundary samples
};

struct DegreeConfig {
    int boundary_per_dim = 64;
    int starts_per_dim = 0;  // 0: 64, 16, 8 for m = 1, 2, 3
    int random_starts = 32;
    unsigned long long seed = 0;
    int max_iter = 60;
    double boundary_rel = 1e-6;  // boundary min must exceed this times the boundary max
    double singular_rel = 1e-4;  // on det J scaled by box volume over boundary max^m
};

namespace detail {

inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& g, const Vec& x, const Vec& h) {
    const int m = static_cast<int>(x.size());
    Mat J;
    for (int j = 0; j < m; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h[j];
        xm[j] -= h[j];
        Vec col = (g(xp) - g(xm)) / (2 * h[j]);
        if (j == 0) J.resize(col.size(), m);
        J.col(j) = col;
    }
    return J;
}

/// Points on the faces of the box, `per_dim` Chebyshev nodes along each free axis.
inline std::vector<Vec> boundary_samples(const Vec& lo, const Vec& hi, int per_dim) {
    const int m = static_cast<int>(lo.size());
    std::vector<Vec> pts;
    for (int face = 0; face < m; ++face)
        for (int side = 0; side < 2; ++side) {
            std::vector<int> idx(m, 0);
            std::vector<std::vector<double>> ax(m);
            for (int j = 0; j < m; ++j) ax[j] = j == face ? std::vector<double>{side ? hi[j] : lo[j]} : chebyshev_grid(lo[j], hi[j], per_dim);
            while (true) {
                Vec x(m);
                for (int j = 0; j < m; ++j) x[j] = ax[j][idx[j]];
                pts.push_back(x);
                int j = 0;
                while (j < m && ++idx[j] == static_cast<int>(ax[j].size())) idx[j++] = 0;
                if (j == m) break;
            }
        }
    // Chebyshev nodes miss the edges; add the corners
    for (int c = 0; c < (1 << m); ++c) {
        Vec x(m);
        for (int j = 0; j < m; ++j) x[j] = (c >> j) & 1 ? hi[j] : lo[j];
        pts.push_back(x);
    }
    return pts;
}

}  // namespace detail

/// Brouwer degree of `map` on the open box (lo, hi) at y0 as the sign sum over
/// regular zeros found by multi-start Newton.
inline DegreeCertificate brouwer_degree(const std::function<Vec(const Vec&)>& map, const Vec& lo, const Vec& hi, const Vec& y0,
                                        const DegreeConfig& cfg = {}) {
    const int m = static_cast<int>(lo.size());
    if (m < 1 || m > 3) throw RangeError("degree is implemented for dimensions 1..3");
    if (hi.size() != m || y0.size() != m) throw DimensionError("box and target dimensions differ");
    for (int j = 0; j < m; ++j)
        if (!(lo[j] < hi[j])) throw ValidationError("degree box needs lo < hi");
    auto G = [&](const Vec& x) -> Vec { return map(x) - y0; };

    DegreeCertificate cert;
    cert.lo = lo;
    cert.hi = hi;
    cert.y0 = y0;
    double bmin = std::numeric_limits<double>::infinity(), bmax = 0.0;
    for (const Vec& x : detail::boundary_samples(lo, hi, cfg.boundary_per_dim)) {
        const double v = G(x).norm();
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
    }
    cert.boundary_min = bmin;
    if (!(bmin > cfg.boundary_rel * bmax) || bmin == 0.0) throw BoundaryError("map comes within " + std::to_string(bmin) + " of y0 on the box boundary");

    const Vec width = hi - lo;
    const double diam = width.norm();
    const Vec h = 1e-5 * width;
    const double ftol = 1e-12 * bmax;

    std::vector<Vec> starts;
    const int per = cfg.starts_per_dim > 0 ? cfg.starts_per_dim : (m == 1 ? 64 : m == 2 ? 16 : 8);
    {
        std::vector<int> idx(m, 0);
        while (true) {
            Vec x(m);
            for (int j = 0; j < m; ++j) x[j] = lo[j] + (idx[j] + 0.5) / per * width[j];
            starts.push_back(x);
            int j = 0;
            while (j < m && ++idx[j] == per) idx[j++] = 0;
            if (j == m) break;
        }
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int s = 0; s < cfg.random_starts; ++s) {
        Vec x(m);
        for (int j = 0; j < m; ++j) x[j] = lo[j] + U(rng) * width[j];
        starts.push_back(x);
    }

    for (const Vec& x0 : starts) {
        Vec x = x0;
        Vec g = G(x);
        bool ok = false;
        for (int it = 0; it < cfg.max_iter; ++it) {
            Mat J = detail::fd_jacobian(G, x, h);
            Eigen::FullPivLU<Mat> lu(J);
            if (!lu.isInvertible()) break;
            Vec dx = -lu.solve(g);
            double t = 1.0;
            Vec xn = x + dx, gn = G(xn);
            while (gn.norm() > g.norm() && t > 1e-4) {
                t *= 0.5;
                xn = x + t * dx;
                gn = G(xn);
            }
            x = xn;
            g = gn;
            if (!((x - lo).minCoeff() > -0.5 * width.maxCoeff() && (hi - x).minCoeff() > -0.5 * width.maxCoeff())) break;
            if (g.norm() <= ftol || (t * dx.norm() <= 1e-14 * diam && g.norm() <= 1e-8 * bmax)) {
                ok = true;
                break;
            }
        }
        if (!ok) continue;
        bool inside = true;
        for (int j = 0; j < m; ++j) inside = inside && x[j] > lo[j] && x[j] < hi[j];
        if (!inside) continue;
        bool dup = false;
        for (const auto& z : cert.zeros) dup = dup || (z.x - x).norm() <= 1e-6 * diam;
        if (dup) continue;
        DegreeZero z;
        z.x = x;
        z.det = detail::fd_jacobian(G, x, h).determinant();
        // det scaled to the box: a map moving by bmax across the box has unit scaled det
        if (std::fabs(z.det) * width.prod() <= cfg.singular_rel * std::pow(bmax, m))
            throw SingularError("zero of the degree map is not regular");
        z.sign = z.det > 0 ? 1 : -1;
        cert.zeros.push_back(z);
    }
    std::sort(cert.zeros.begin(), cert.zeros.end(), [](const DegreeZero& a, const DegreeZero& b) {
        return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(), b.x.data() + b.x.size());
    });
    for (const auto& z : cert.zeros) cert.degree += z.sign;
    return cert;
}

struct PreservationResult {
    bool preserved = false;
    double min_boundary = 0.0;
    double bound = 0.0;   // R |eps|^(kappa+1)
    double margin = 0.0;  // min_boundary - bound
};

/// min over the box boundary of |g(x, eps)| against R |eps|^(kappa+1).
inline PreservationResult degree_preservation_check(const std::function<Vec(const Vec&, double)>& g, double R, double eps, int kappa,
                                                    const Vec& lo, const Vec& hi, int per_dim = 64) {
    PreservationResult r;
    r.min_boundary = std::numeric_limits<double>::infinity();
    for (const Vec& x : detail::boundary_samples(lo, hi, per_dim)) r.min_boundary = std::min(r.min_boundary, g(x, eps).norm());
    r.bound = R * std::pow(std::fabs(eps), kappa + 1);
    r.margin = r.min_boundary - r.bound;
    r.preserved = r.min_boundary > r.bound;
    return r;
}

struct BranchConfig {
    double tol = 1e-10;       // residual relative to the series scale
    int samples = 64;         // bracketing samples (m = 1) or grid starts per dimension (m >= 2)
    int random_starts = 32;
    unsigned long long seed = 0;
    int max_iter = 60;
    int upto = -1;            // truncation order of F^k, default the series order
    std::optional<Vec> anchor;  // root choice at the first eps; default the box centre
    double certify_Q = 0.0;   // > 0: degree on B(a_eps, Q |eps|^(k+1-l))
    int certify_l = 0;
};

struct BranchPoint {
    double eps = 0.0;
    bool found = false;
    Vec a;
    double residual = 0.0;
    double scale = 0.0;
    Vec z;  // z_{a_eps}
    double det_delta = 0.0;
    std::vector<Vec> roots;  // all accepted roots at this eps
    std::optional<DegreeCertificate> certificate;
    std::string message;
};

struct BranchResult {
    int order = 0;
    std::vector<BranchPoint> points;
    bool complete() const {
        return std::all_of(points.begin(), points.end(), [](const BranchPoint& p) { return p.found; });
    }
};

namespace detail {

inline std::vector<Vec> roots_1d(const BifurcationSeries& bf, double eps, int upto, const BranchConfig& cfg, double& scale) {
    const ManifoldChart& ch = bf.chart();
    std::vector<double> xs = chebyshev_grid(ch.lo[0], ch.hi[0], cfg.samples);
    xs.insert(xs.begin(), ch.lo[0]);
    xs.push_back(ch.hi[0]);
    auto F = [&](double a) { return bf.value(Vec::Constant(1, a), eps, upto)[0]; };
    std::vector<double> fs;
    scale = 0.0;
    for (double x : xs) {
        fs.push_back(F(x));
        scale = std::max(scale, std::fabs(fs.back()));
    }
    std::vector<Vec> roots;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (fs[i] == 0.0) {
            roots.push_back(Vec::Constant(1, xs[i]));
            continue;
        }
        if (i + 1 < xs.size() && fs[i + 1] != 0.0 && (fs[i] < 0) != (fs[i + 1] < 0)) {
            boost::uintmax_t iters = static_cast<boost::uintmax_t>(cfg.max_iter) * 4;
            auto [a, b] = boost::math::tools::toms748_solve(F, xs[i], xs[i + 1], fs[i], fs[i + 1],
                                                             boost::math::tools::eps_tolerance<double>(52), iters);
            const double fa = std::fabs(F(a)), fb = std::fabs(F(b));
            roots.push_back(Vec::Constant(1, fa <= fb ? a : b));
        }
    }
    return roots;
}

inline std::vector<Vec> roots_nd(const BifurcationSeries& bf, double eps, int upto, const BranchConfig& cfg, double& scale) {
    const ManifoldChart& ch = bf.chart();
    const int m = ch.m;
    const Vec width = ch.hi - ch.lo;
    std::vector<Vec> starts = chart_grid(ch, std::max(2, static_cast<int>(std::lround(std::pow(cfg.samples, 1.0 / m)))));
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int s = 0; s < cfg.random_starts; ++s) {
        Vec x(m);
        for (int j = 0; j < m; ++j) x[j] = ch.lo[j] + U(rng) * width[j];
        starts.push_back(x);
    }
    scale = 0.0;
    for (const Vec& x : starts) scale = std::max(scale, bf.value(x, eps, upto).norm());
    std::vector<Vec> roots;
    for (const Vec& x0 : starts) {
        Vec x = x0, g = bf.value(x, eps, upto);
        bool ok = false;
        for (int it = 0; it < cfg.max_iter; ++it) {
            Eigen::FullPivLU<Mat> lu(bf.jacobian(x, eps, upto));
            if (!lu.isInvertible()) break;
            Vec dx = -lu.solve(g);
            double t = 1.0;
            Vec xn = x + dx, gn = bf.value(xn, eps, upto);
            while (!(gn.norm() < g.norm()) && t > 1e-4) {
                t *= 0.5;
                xn = x + t * dx;
                gn = bf.value(xn, eps, upto);
            }
            x = xn;
            g = gn;
            if (!ch.contains(x, 0.5 * width.maxCoeff())) break;
            if (g.norm() <= cfg.tol * scale) {
                ok = true;
                break;
            }
        }
        if (!ok || !ch.contains(x)) continue;
        bool dup = false;
        for (const Vec& r : roots) dup = dup || (r - x).norm() <= 1e-6 * width.norm();
        if (!dup) roots.push_back(x);
    }
    return roots;
}

}  // namespace detail

/// Zeros a_eps of F^k(., eps) on the chart box for each eps of the grid. When
/// several roots exist the one nearest the previous eps (or the anchor) is kept.
inline BranchResult find_branch(const BifurcationSeries& bf, const std::vector<double>& eps_grid, const BranchConfig& cfg = {}) {
    const ManifoldChart& ch = bf.chart();
    if (ch.m < 1 || ch.m > 3) throw RangeError("branch search needs chart dimension 1..3");
    const int upto = cfg.upto < 0 ? bf.order() : cfg.upto;
    if (upto < 1 || upto > bf.order()) throw RangeError("truncation order outside 1..k");
    BranchResult out;
    out.order = upto;
    std::vector<std::size_t> order(eps_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::fabs(eps_grid[a]) < std::fabs(eps_grid[b]); });
    out.points.resize(eps_grid.size());
    std::optional<Vec> prev = cfg.anchor;
    for (std::size_t idx : order) {
        BranchPoint& p = out.points[idx];
        p.eps = eps_grid[idx];
        if (p.eps == 0.0) throw ValidationError("eps grid must exclude 0");
        try {
            double scale = 0.0;
            p.roots = ch.m == 1 ? detail::roots_1d(bf, p.eps, upto, cfg, scale) : detail::roots_nd(bf, p.eps, upto, cfg, scale);
            p.scale = scale;
            std::erase_if(p.roots, [&](const Vec& r) { return !ch.contains(r) || !(bf.value(r, p.eps, upto).norm() <= cfg.tol * scale); });
            if (p.roots.empty()) {
                p.message = "no root found";
                continue;
            }
            const Vec target = prev ? *prev : ch.center();
            p.a = *std::min_element(p.roots.begin(), p.roots.end(),
                                    [&](const Vec& a, const Vec& b) { return (a - target).norm() < (b - target).norm(); });
            p.residual = bf.value(p.a, p.eps, upto).norm();
            p.z = ch.embed(p.a);
            p.det_delta = bf.at(p.a).det_delta;
            p.found = true;
            prev = p.a;
            if (cfg.certify_Q > 0) {
                const double rad = cfg.certify_Q * std::pow(std::fabs(p.eps), upto + 1 - cfg.certify_l);
                const Vec lo = p.a.array() - rad, hi = p.a.array() + rad;
                const double e = p.eps;
                DegreeConfig dc;
                dc.starts_per_dim = 4;
                dc.random_starts = 0;
                dc.boundary_per_dim = 4;
                p.certificate = brouwer_degree([&](const Vec& a) { return bf.value(a, e, upto); }, lo, hi, Vec::Zero(ch.m), dc);
            }
        } catch (const Error& e) {
            p.found = false;
            p.message = e.what();
        }
    }
    return out;
}

struct HypothesisReport {
    double min_abs_det_delta = 0.0;
    bool det_ok = false;
    int r = 0;
    int k = 0;
    double l_fit = 0.0;      // least-squares slope of log sigma_min vs log |eps|
    int l = 0;
    double l_deviation = 0.0;
    bool l_reliable = false;
    double P0 = 0.0;
    bool l_condition = false;  // l <= (k + r + 1) / 2
    bool simple_root_path = false;
    int pi_error_order = 0;    // k + 1 - l
    int perp_error_order = 1;
    std::vector<double> sigma_min;  // per accepted branch point
};

/// Hypotheses (i), (ii) and (iv) from the zero test and the branch.
inline HypothesisReport check_hypotheses(const BifurcationSeries& bf, const BranchResult& br, const OrderReport& rep,
                                         double det_threshold = 1e-8) {
    HypothesisReport h;
    h.k = br.order;
    h.r = rep.r;
    h.min_abs_det_delta = rep.min_abs_det_delta;
    h.det_ok = rep.min_abs_det_delta > det_threshold;
    std::vector<double> eps, sig;
    for (const BranchPoint& p : br.points) {
        if (!p.found) continue;
        Eigen::JacobiSVD<Mat> svd(bf.jacobian(p.a, p.eps, br.order));
        eps.push_back(std::fabs(p.eps));
        sig.push_back(svd.singularValues().minCoeff());
    }
    if (eps.empty()) throw ValidationError("hypothesis check needs a nonempty branch");
    h.sigma_min = sig;
    if (h.r == h.k) {
        // f_1..f_{k-1} vanish: a simple root of f_k gives l = r = k
        bool simple = true;
        for (const BranchPoint& p : br.points) {
            if (!p.found) continue;
            Mat J = bf.jacobian(p.a, 1.0, h.k) - (h.k > 1 ? bf.jacobian(p.a, 1.0, h.k - 1) : Mat::Zero(bf.m(), bf.m()));
            simple = simple && std::fabs(J.determinant()) > det_threshold;
        }
        h.simple_root_path = simple;
    }
    if (eps.size() >= 2) {
        h.l_fit = loglog_slope(eps, sig);
        h.l = static_cast<int>(std::lround(h.l_fit));
        h.l_deviation = std::fabs(h.l_fit - h.l);
        h.l_reliable = h.l_deviation <= 0.25;
    }
    if (h.simple_root_path) {
        h.l = h.k;
        h.l_reliable = true;
    }
    h.P0 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eps.size(); ++i) h.P0 = std::min(h.P0, sig[i] / std::pow(eps[i], h.l));
    h.l_condition = 2 * h.l <= h.k + h.r + 1;
    h.pi_error_order = h.k + 1 - h.l;
    return h;
}

/// Second pass of the reduction for a series whose first `r` terms after g_0
/// vanish up to g_r, which vanishes on `sub`: returns g~_i = g_{r+i}.
inline std::shared_ptr<ShiftedGSeries> nested_reduction(std::shared_ptr<const GSeries> gs, int r, const ManifoldChart& sub,
                                                        double tol = 1e-7, int per_dim = 16) {
    sub.validate();
    if (sub.n != gs->dim()) throw DimensionError("sub-chart and g series dimensions differ");
    if (r < 1 || r >= gs->order()) throw RangeError("shift must be in 1..order-1");
    for (const Vec& a : zero_test_samples(sub, per_dim)) {
        std::vector<Vec> g = gs->values(sub.embed(a));
        for (int i = 0; i <= r; ++i) {
            const double v = g[i].cwiseAbs().maxCoeff();
            if (v > tol)
                throw ValidationError("sub-chart validation failed: |g" + std::to_string(i) + "| = " + std::to_string(v) +
                                      " at alpha = " + std::to_string(a[0]));
        }
    }
    return std::make_shared<ShiftedGSeries>(std::move(gs), r);
}

struct BranchExpansion {
    int r = 0;
    Vec alpha0, alpha1;
    Vec z0, z1;
};

/// alpha(eps) = alpha0 + eps alpha1 about a simple root of f_r, and
/// z(eps) = z0 + eps z1 with z1 = (alpha1, beta'(alpha0) alpha1 + gamma_1(alpha0)).
inline BranchExpansion expand_branch(const BifurcationSeries& bf, int r, const Vec& alpha_guess) {
    if (r < 1 || r + 1 > bf.order()) throw RangeError("expansion needs f_r and f_{r+1}");
    const ManifoldChart& ch = bf.chart();
    const int m = ch.m;
    auto fr = [&](const Vec& a) { return bf.at(a).f[r - 1]; };
    auto Dfr = [&](const Vec& a) {
        Vec h(m);
        for (int j = 0; j < m; ++j) h[j] = 1e-5 * std::max(1.0, std::fabs(a[j]));
        return detail::fd_jacobian(fr, a, h);
    };
    Vec a = alpha_guess;
    for (int it = 0; it < 40; ++it) {
        Vec v = fr(a);
        Eigen::FullPivLU<Mat> lu(Dfr(a));
        if (!lu.isInvertible()) throw SingularError("root of f_r is not simple");
        Vec da = -lu.solve(v);
        a += da;
        if (da.norm() <= 1e-13 * (1 + a.norm())) break;
    }
    Mat J = Dfr(a);
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible() || std::fabs(J.determinant()) <= 1e-12 * std::max(1.0, J.cwiseAbs().maxCoeff())) throw SingularError("root of f_r is not simple");
    BranchExpansion e;
    e.r = r;
    e.alpha0 = a;
    e.alpha1 = -lu.solve(bf.at(a).f[r]);
    e.z0 = ch.embed(a);
    e.z1.resize(ch.n);
    e.z1.head(m) = e.alpha1;
    if (ch.codim() > 0) e.z1.tail(ch.codim()) = ch.beta_jacobian(a) * e.alpha1 + bf.at(a).gamma[0];
    return e;
}

}  // namespace lsavg
