#pragma once

#include <algorithm>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lsavg/flow.hpp"
#include "lsavg/gseries.hpp"
#include "lsavg/solver.hpp"

namespace lsavg {

using Complex = std::complex<double>;

struct Displacement {
    Vec h;          // x(T,z,eps) - z
    Mat monodromy;  // dx(T,z,eps)/dz
    Mat Dh;         // monodromy - Id
    Vec error_estimate;
};

inline Displacement displacement(const VectorFieldSeries& F, const Vec& z, double eps, const IntegratorConfig& cfg = {}) {
    DenseTrajectory tr = detail::run_flow(F, z, eps, true, cfg);
    Displacement d;
    d.h = tr.x_end - z;
    d.monodromy = tr.Y_end;
    d.Dh = tr.Y_end - Mat::Identity(z.size(), z.size());
    d.error_estimate = tr.error_estimate;
    return d;
}

enum class Stability { HasUnstableDirection, AsymptoticallyStable, Inconclusive };

inline std::string to_string(Stability s) {
    switch (s) {
        case Stability::HasUnstableDirection: return "has-unstable-direction";
        case Stability::AsymptoticallyStable: return "asymptotically-stable";
        default: return "inconclusive";
    }
}

/// Classification from eigenvalues of D_z h, i.e. multipliers 1 + lambda of the time-T map.
inline Stability stability_classify(const std::vector<Complex>& dh_eigenvalues, double unit_tol = 1e-8) {
    bool boundary = false;
    for (const Complex& l : dh_eigenvalues) {
        const double mu = std::abs(1.0 + l);
        if (mu > 1.0 + unit_tol) return Stability::HasUnstableDirection;
        if (mu >= 1.0 - unit_tol) boundary = true;
    }
    return boundary ? Stability::Inconclusive : Stability::AsymptoticallyStable;
}

inline std::vector<Complex> sorted_eigenvalues(const Mat& A) {
    std::vector<Complex> ev;
    if (A.rows() == 0) return ev;
    Eigen::EigenSolver<Mat> es(A, false);
    for (Eigen::Index i = 0; i < A.rows(); ++i) ev.push_back(es.eigenvalues()[i]);
    std::sort(ev.begin(), ev.end(), [](const Complex& a, const Complex& b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return ev;
}

struct PeriodicOrbit {
    double eps = 0.0;
    Vec z;
    double residual = 0.0;
    int iterations = 0;
    Mat monodromy;
    Mat Dh;
    std::vector<Complex> eigenvalues;  // of D_z h, by magnitude
    Stability stability = Stability::Inconclusive;
};

struct RefineConfig {
    int max_iter = 30;
    double tol = 1e-10;  // on |h| relative to |z| + 1
    IntegratorConfig integrator;
};

/// Eigenvalues of D_z h and the stability class.
inline void floquet(PeriodicOrbit& orbit) {
    orbit.eigenvalues = sorted_eigenvalues(orbit.Dh);
    orbit.stability = stability_classify(orbit.eigenvalues);
}

/// Newton iteration on h(., eps) with the variational Jacobian.
inline PeriodicOrbit refine_periodic(const VectorFieldSeries& F, const Vec& z_guess, double eps, const RefineConfig& cfg = {}) {
    PeriodicOrbit o;
    o.eps = eps;
    Vec z = z_guess;
    Displacement d = displacement(F, z, eps, cfg.integrator);
    int it = 0;
    while (d.h.norm() > cfg.tol * (z.norm() + 1)) {
        if (it == cfg.max_iter) throw ConvergenceError("Newton refinement did not converge, |h| = " + std::to_string(d.h.norm()));
        Eigen::FullPivLU<Mat> lu(d.Dh);
        if (!lu.isInvertible()) throw SingularError("displacement Jacobian is singular");
        Vec dz = -lu.solve(d.h);
        double t = 1.0;
        Displacement dn;
        while (true) {
            try {
                dn = displacement(F, z + t * dz, eps, cfg.integrator);
                if (dn.h.norm() < d.h.norm() || t < 1e-3) break;
            } catch (const IntegrationError&) {
                if (t < 1e-3) throw;
            }
            t *= 0.5;
        }
        z += t * dz;
        d = std::move(dn);
        ++it;
    }
    o.z = z;
    o.residual = d.h.norm();
    o.iterations = it;
    o.monodromy = d.monodromy;
    o.Dh = d.Dh;
    floquet(o);
    return o;
}

/// |x(jT, z*, eps) - z*| for j = 1..periods, integrated as in the refinement.
inline std::vector<double> return_defects(const VectorFieldSeries& F, const PeriodicOrbit& o, int periods, const IntegratorConfig& cfg = {}) {
    std::vector<double> out;
    Vec x = o.z;
    for (int p = 0; p < periods; ++p) {
        x += displacement(F, x, o.eps, cfg).h;
        out.push_back((x - o.z).norm());
    }
    return out;
}

/// Leading term of one eigenvalue branch of eps A1 + eps^2 A2.
struct EigenExpansion {
    int order = 1;  // power of eps of the leading term
    Complex coefficient;
};

struct JacobianSeries {
    Mat A1, A2;
    std::vector<EigenExpansion> leading;
    std::vector<Complex> eigenvalues(double eps) const { return sorted_eigenvalues(eps * A1 + eps * eps * A2); }
};

/// D_z g(z(eps), eps) = eps A1 + eps^2 A2 + O(eps^3) along z(eps) = z0 + eps z1,
/// with A1 = Dg1(z0), A2 = D^2 g1(z0) z1 + Dg2(z0). Zero eigenvalues of A1 get
/// their eps^2 coefficient u^T A2 v / u^T v from left and right null vectors.
inline JacobianSeries jacobian_series(const GSeries& gs, const Vec& z0, const Vec& z1) {
    if (gs.order() < 2) throw RangeError("jacobian series needs g_1 and g_2");
    const int n = gs.dim();
    std::vector<int> mo(gs.order() + 1, 0);
    mo[1] = 2;
    mo[2] = 1;
    auto t = gs.tensors(z0, gs.all_coordinates(), mo);
    JacobianSeries s;
    s.A1 = t[1][1].as_matrix();
    s.A2 = t[2][1].as_matrix();
    for (int j = 0; j < n; ++j) {
        Vec e = Vec::Unit(n, j);
        s.A2.col(j) += apply(t[1][2], {{&z1, 1}, {&e, 1}});
    }
    Eigen::EigenSolver<Mat> right(s.A1), left(Mat(s.A1.transpose()));
    const double scale = std::max(1.0, s.A1.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
        const Complex mu = right.eigenvalues()[i];
        if (std::abs(mu) > 1e-9 * scale) {
            s.leading.push_back({1, mu});
            continue;
        }
        int jl = 0;
        for (int j = 1; j < n; ++j)
            if (std::abs(left.eigenvalues()[j]) < std::abs(left.eigenvalues()[jl])) jl = j;
        Eigen::VectorXcd v = right.eigenvectors().col(i), u = left.eigenvectors().col(jl);
        const Complex num = u.transpose() * s.A2.cast<Complex>() * v, den = u.transpose() * v;
        s.leading.push_back({2, num / den});
    }
    return s;
}

/// Samples of the full-system solution over several periods.
struct TrajectorySample {
    double t = 0.0;
    Vec x;
};

inline std::vector<TrajectorySample> trajectory(const VectorFieldSeries& F, const Vec& z, double eps, int periods, int per_period,
                                                const IntegratorConfig& cfg = {}) {
    IntegratorConfig c = cfg;
    c.dense = true;
    std::vector<TrajectorySample> out;
    Vec x = z;
    for (int p = 0; p < periods; ++p) {
        DenseTrajectory tr = integrate_full(F, x, eps, c);
        for (int s = 0; s < per_period; ++s) {
            const double tl = F.period * s / per_period;
            out.push_back({p * F.period + tl, tr.x(tl)});
        }
        x = tr.x_end;
    }
    out.push_back({periods * F.period, x});
    return out;
}

/// x(jT), j = 0..periods: the section of the suspended flow at t = 0 mod T.
inline std::vector<Vec> stroboscopic(const VectorFieldSeries& F, const Vec& z, double eps, int periods, const IntegratorConfig& cfg = {}) {
    std::vector<Vec> out{z};
    Vec x = z;
    for (int p = 0; p < periods; ++p) {
        x = integrate_full(F, x, eps, cfg).x_end;
        out.push_back(x);
    }
    return out;
}

}  // namespace lsavg
