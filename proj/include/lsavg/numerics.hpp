#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "lsavg/error.hpp"

namespace lsavg {

/// Chebyshev points of the first kind mapped to [lo, hi], ascending.
inline std::vector<double> chebyshev_grid(double lo, double hi, int count) {
    std::vector<double> x(count);
    for (int j = 0; j < count; ++j) {
        double c = -std::cos(std::numbers::pi * (2.0 * j + 1.0) / (2.0 * count));
        x[j] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * c;
    }
    return x;
}

/// `per_decade` logarithmically spaced points per decade from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
    if (!(lo > 0) || !(hi >= lo) || per_decade < 1) throw ValidationError("log grid needs 0 < lo <= hi and a positive density");
    const double decades = std::log10(hi / lo);
    const int n = static_cast<int>(std::lround(decades * per_decade));
    std::vector<double> g;
    for (int i = 0; i <= n; ++i) g.push_back(n == 0 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / n));
    return g;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least-squares line through (x_i, y_i).
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("line fit needs at least two points");
    double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

/// Slope of log|y| against log|x|.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx.push_back(std::log(std::fabs(x[i])));
        ly.push_back(std::log(std::fabs(y[i])));
    }
    return fit_line(lx, ly).slope;
}

}  // namespace lsavg
