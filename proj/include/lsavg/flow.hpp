#pragma once

#include <cmath>
#include <optional>

#include "lsavg/dop853.hpp"
#include "lsavg/field.hpp"

namespace lsavg {

/// Solution of the unperturbed (or full) system over [0,T], optionally with
/// the fundamental matrix of the variational equation.
struct DenseTrajectory {
    Vec z;
    double period = 0.0;
    double eps = 0.0;
    bool has_Y = false;
    Vec x_end;                   // x(T)
    Mat Y_end;                   // Y(T) when has_Y
    DenseSolution dense;         // stacked [x, vec(Y)] when dense output was kept
    std::vector<double> mesh;
    Vec error_estimate;
    IntegratorConfig config;

    Vec x(double t) const {
        if (t == 0.0) return z;
        if (t == period) return x_end;
        return dense(t).head(z.size());
    }
    Mat Y(double t) const {
        if (!has_Y) throw Error("trajectory carries no fundamental matrix");
        const Eigen::Index n = z.size();
        if (t == 0.0) return Mat::Identity(n, n);
        if (t == period) return Y_end;
        Vec v = dense(t);
        return Eigen::Map<const Mat>(v.data() + n, n, n);
    }
    double periodicity_defect() const { return (x_end - z).norm(); }
};

namespace detail {

inline DenseTrajectory run_flow(const VectorFieldSeries& F, const Vec& z, double eps, bool with_Y, const IntegratorConfig& cfg,
                                const std::vector<double>* mesh = nullptr) {
    F.validate();
    const int n = F.dim();
    if (z.size() != n) throw DimensionError("initial state has wrong dimension");
    const bool unperturbed = (eps == 0.0);
    auto rhs = [&](double t, const Vec& y, Vec& dy) {
        Vec x = y.head(n);
        dy.resize(y.size());
        dy.head(n) = unperturbed ? F.eval(0, t, x) : F.full(t, x, eps);
        if (with_Y) {
            Mat A = unperturbed ? F.jacobian(0, t, x) : F.full_jacobian(t, x, eps);
            Eigen::Map<const Mat> Y(y.data() + n, n, n);
            Eigen::Map<Mat>(dy.data() + n, n, n) = A * Y;
        }
    };
    Vec y0(with_Y ? n + n * n : n);
    y0.head(n) = z;
    if (with_Y) Eigen::Map<Mat>(y0.data() + n, n, n).setIdentity();
    IntegrationResult r = integrate_dop853(rhs, 0.0, F.period, y0, cfg, mesh);
    DenseTrajectory tr;
    tr.z = z;
    tr.period = F.period;
    tr.eps = eps;
    tr.has_Y = with_Y;
    tr.x_end = r.y_end.head(n);
    if (with_Y) tr.Y_end = Eigen::Map<const Mat>(r.y_end.data() + n, n, n);
    tr.dense = std::move(r.dense);
    tr.mesh = std::move(r.mesh);
    tr.error_estimate = r.error_estimate;
    tr.config = cfg;
    return tr;
}

}  // namespace detail

/// x(t,z,0) of x' = F_0(t,x).
inline DenseTrajectory integrate_unperturbed(const VectorFieldSeries& F, const Vec& z, const IntegratorConfig& cfg = {}) {
    return detail::run_flow(F, z, 0.0, false, cfg);
}

/// Adds Y(t,z) with Y(0,z) = Id along the trajectory's initial condition.
inline DenseTrajectory fundamental_matrix(const VectorFieldSeries& F, const DenseTrajectory& traj, const IntegratorConfig& cfg = {}) {
    return detail::run_flow(F, traj.z, traj.eps, true, cfg);
}

/// x(t,z,eps) of the full system.
inline DenseTrajectory integrate_full(const VectorFieldSeries& F, const Vec& z, double eps, const IntegratorConfig& cfg = {}) {
    return detail::run_flow(F, z, eps, false, cfg);
}

/// |det Y(T) - exp(int_0^T tr D_xF_0)| / |det Y(T)| using Gauss-Legendre
/// quadrature on the dense output.
inline double liouville_defect(const VectorFieldSeries& F, const DenseTrajectory& traj, int panels = 200) {
    static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
    static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891};
    const double T = traj.period, h = T / panels;
    double integral = 0.0;
    for (int p = 0; p < panels; ++p) {
        double a = p * h;
        for (int q = 0; q < 5; ++q) {
            double t = a + 0.5 * h * (gx[q] + 1.0);
            integral += 0.5 * h * gw[q] * F.jacobian(0, t, traj.x(t)).trace();
        }
    }
    double det = traj.Y_end.determinant();
    return std::fabs(det - std::exp(integral)) / std::fabs(det);
}

}  // namespace lsavg
