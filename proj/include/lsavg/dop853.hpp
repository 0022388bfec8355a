#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lsavg/dop853_tableau.hpp"
#include "lsavg/error.hpp"
#include "lsavg/tensor.hpp"

namespace lsavg {

struct IntegratorConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    long max_steps = 500000;
    double max_step = std::numeric_limits<double>::infinity();
    bool dense = false;

    void validate() const {
        if (!(abs_tol > 0) || !(rel_tol > 0)) throw ValidationError("integrator tolerances must be positive");
        if (max_steps <= 0) throw ValidationError("max step count must be positive");
    }
    IntegratorConfig scaled(double factor) const {
        IntegratorConfig c = *this;
        c.abs_tol *= factor;
        c.rel_tol *= factor;
        return c;
    }
};

/// Piecewise 7th-order interpolant built from accepted DOP853 steps.
class DenseSolution {
public:
    struct Segment {
        double t0, h;
        Vec y0;
        Mat F;  // dim x 7
    };

    int dim() const { return segments_.empty() ? 0 : static_cast<int>(segments_.front().y0.size()); }
    bool empty() const { return segments_.empty(); }
    double t_begin() const { return segments_.front().t0; }
    double t_end() const { return segments_.back().t0 + segments_.back().h; }
    const std::vector<Segment>& segments() const { return segments_; }
    void push(Segment s) { segments_.push_back(std::move(s)); }

    Vec operator()(double t) const {
        if (segments_.empty()) throw IntegrationError("no dense output stored", t);
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double v, const Segment& s) { return v < s.t0; });
        const Segment& s = (it == segments_.begin()) ? segments_.front() : *std::prev(it);
        const double x = (t - s.t0) / s.h;
        Vec y = Vec::Zero(s.y0.size());
        for (int i = 6; i >= 0; --i) {
            y += s.F.col(i);
            // reversed index parity: F[6] is applied first with factor x
            y *= ((6 - i) % 2 == 0) ? x : (1.0 - x);
        }
        return y + s.y0;
    }

private:
    std::vector<Segment> segments_;
};

struct IntegrationResult {
    Vec y_end;
    std::vector<double> mesh;   // accepted step end points, mesh.front() = t0
    Vec error_estimate;         // accumulated local error estimates per component
    long steps = 0;
    long rejected = 0;
    long evaluations = 0;
    DenseSolution dense;
};

/// Adaptive DOP853. rhs(t, y, dy) fills dy. When fixed_mesh is given the
/// steps follow it exactly and no error control is applied.
template <class Rhs>
IntegrationResult integrate_dop853(Rhs&& rhs, double t0, double t1, const Vec& y0, const IntegratorConfig& cfg,
                                   const std::vector<double>* fixed_mesh = nullptr) {
    using namespace dop853;
    cfg.validate();
    const Eigen::Index n = y0.size();
    IntegrationResult res;
    res.mesh.push_back(t0);
    res.error_estimate = Vec::Zero(n);
    Vec y = y0;
    if (t1 == t0) {
        res.y_end = y;
        return res;
    }
    const double dir = t1 > t0 ? 1.0 : -1.0;
    Mat K(n, kStagesExtended);
    Vec f(n), fnew(n), ynew(n), tmp(n), dy(n);
    auto call = [&](double t, const Vec& yy, Vec& out) {
        rhs(t, yy, out);
        ++res.evaluations;
    };
    double t = t0;
    call(t, y, f);

    auto one_step = [&](double h) {
        K.col(0) = f;
        for (int s = 1; s < kStages; ++s) {
            tmp = y;
            for (int j = 0; j < s; ++j)
                if (A[s][j] != 0.0) tmp += (h * A[s][j]) * K.col(j);
            call(t + C[s] * h, tmp, dy);
            K.col(s) = dy;
        }
        ynew = y;
        for (int j = 0; j < kStages; ++j)
            if (B[j] != 0.0) ynew += (h * B[j]) * K.col(j);
    };
    auto dense_segment = [&](double h) {
        for (int s = kStages + 1; s < kStagesExtended; ++s) {
            tmp = y;
            for (int j = 0; j < s; ++j)
                if (A[s][j] != 0.0) tmp += (h * A[s][j]) * K.col(j);
            call(t + C[s] * h, tmp, dy);
            K.col(s) = dy;
        }
        DenseSolution::Segment seg{t, h, y, Mat(n, 7)};
        Vec dlt = ynew - y;
        seg.F.col(0) = dlt;
        seg.F.col(1) = h * K.col(0) - dlt;
        seg.F.col(2) = 2.0 * dlt - h * (fnew + K.col(0));
        for (int r = 0; r < 4; ++r) {
            Vec acc = Vec::Zero(n);
            for (int j = 0; j < kStagesExtended; ++j)
                if (D[r][j] != 0.0) acc += D[r][j] * K.col(j);
            seg.F.col(3 + r) = h * acc;
        }
        res.dense.push(std::move(seg));
    };
    auto finite = [](const Vec& v) { return v.allFinite(); };

    if (fixed_mesh) {
        const auto& m = *fixed_mesh;
        for (std::size_t i = 1; i < m.size(); ++i) {
            const double h = m[i] - m[i - 1];
            one_step(h);
            call(t + h, ynew, fnew);
            K.col(kStages) = fnew;
            if (!finite(ynew)) throw IntegrationError("non-finite state", t);
            if (cfg.dense) dense_segment(h);
            t = m[i];
            y = ynew;
            f = fnew;
            res.mesh.push_back(t);
            ++res.steps;
        }
        res.y_end = y;
        return res;
    }

    auto scale_of = [&](const Vec& a, const Vec& b) {
        return (cfg.abs_tol + a.cwiseAbs().cwiseMax(b.cwiseAbs()).array() * cfg.rel_tol).matrix();
    };

    // initial step (Hairer, Norsett & Wanner II.4)
    double h_abs;
    {
        Vec sc = scale_of(y, y);
        double d0 = (y.array() / sc.array()).matrix().norm() / std::sqrt(static_cast<double>(n));
        double d1 = (f.array() / sc.array()).matrix().norm() / std::sqrt(static_cast<double>(n));
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, std::fabs(t1 - t0));
        tmp = y + dir * h0 * f;
        call(t + dir * h0, tmp, dy);
        double d2 = ((dy - f).array() / sc.array()).matrix().norm() / std::sqrt(static_cast<double>(n)) / h0;
        double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                  : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
        h_abs = std::min({100 * h0, h1, cfg.max_step});
    }

    constexpr double safety = 0.9, min_factor = 0.2, max_factor = 10.0, exponent = -1.0 / 8.0;
    while (dir * (t1 - t) > 0) {
        if (res.steps >= cfg.max_steps) throw IntegrationError("step count exhausted", t);
        const double min_step = 10.0 * std::fabs(std::nextafter(t, dir * std::numeric_limits<double>::infinity()) - t);
        h_abs = std::clamp(h_abs, min_step, cfg.max_step);
        bool rejected = false;
        for (;;) {
            if (h_abs < min_step) throw IntegrationError(finite(y) ? "step size underflow" : "non-finite state", t);
            double h = h_abs * dir;
            double tn = t + h;
            if (dir * (tn - t1) > 0) tn = t1;
            h = tn - t;
            h_abs = std::fabs(h);
            one_step(h);
            double err_norm;
            if (!finite(ynew)) {
                err_norm = std::numeric_limits<double>::infinity();
            } else {
                call(tn, ynew, fnew);
                K.col(kStages) = fnew;
                Vec sc = scale_of(y, ynew);
                Vec e5 = Vec::Zero(n), e3 = Vec::Zero(n);
                for (int j = 0; j <= kStages; ++j) {
                    if (E5[j] != 0.0) e5 += E5[j] * K.col(j);
                    if (E3[j] != 0.0) e3 += E3[j] * K.col(j);
                }
                double n5 = (e5.array() / sc.array()).matrix().squaredNorm();
                double n3 = (e3.array() / sc.array()).matrix().squaredNorm();
                err_norm = (n5 == 0 && n3 == 0) ? 0.0 : h_abs * n5 / std::sqrt((n5 + 0.01 * n3) * n);
                if (!std::isfinite(err_norm)) err_norm = std::numeric_limits<double>::infinity();
                if (err_norm < 1) {
                    Vec denom = (e5.array().square() + 0.01 * e3.array().square()).sqrt().matrix();
                    for (Eigen::Index c = 0; c < n; ++c)
                        if (denom[c] > 0) res.error_estimate[c] += h_abs * e5[c] * e5[c] / denom[c];
                }
            }
            if (err_norm < 1) {
                double factor = err_norm == 0 ? max_factor : std::min(max_factor, safety * std::pow(err_norm, exponent));
                if (rejected) factor = std::min(1.0, factor);
                if (cfg.dense) dense_segment(h);
                t = tn;
                y = ynew;
                f = fnew;
                res.mesh.push_back(t);
                ++res.steps;
                h_abs *= factor;
                break;
            }
            h_abs *= std::isfinite(err_norm) ? std::max(min_factor, safety * std::pow(err_norm, exponent)) : min_factor;
            rejected = true;
            ++res.rejected;
        }
    }
    res.y_end = y;
    return res;
}

}  // namespace lsavg
