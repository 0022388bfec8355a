#pragma once

#include <string>
#include <vector>

#include "lsavg/field.hpp"
#include "lsavg/problem.hpp"
#include "random_fields.hpp"

namespace testing_helpers {

inline lsavg::Declarations states(std::vector<std::string> s, std::string time = "t") {
    lsavg::Declarations d;
    d.states = std::move(s);
    d.time = std::move(time);
    return d;
}

inline std::vector<std::string> xnames(int n) {
    std::vector<std::string> v;
    for (int i = 1; i <= n; ++i) v.push_back("x" + std::to_string(i));
    return v;
}

// Mildly nonlinear random system on period 1 that stays bounded near the unit ball.
inline lsavg::VectorFieldSeries random_system(RandomFields& R, int n, int k) {
    std::vector<std::vector<std::string>> f(k + 1);
    for (int i = 0; i <= k; ++i)
        for (int c = 0; c < n; ++c) f[i].push_back("0.2*(" + R.poly_trig(n) + ")");
    return lsavg::VectorFieldSeries::from_strings(states(xnames(n)), 1.0, f);
}

inline lsavg::Vec random_point(RandomFields& R, int n, double lo = -0.5, double hi = 0.5) {
    auto p = R.point(n, lo, hi);
    return Eigen::Map<lsavg::Vec>(p.data(), n);
}

inline lsavg::Problem fixture(const std::string& name) { return lsavg::load_problem(std::string(LSAVG_FIXTURE_DIR) + "/" + name); }

}  // namespace testing_helpers
