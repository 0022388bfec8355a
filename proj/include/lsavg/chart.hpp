#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lsavg/expr.hpp"

namespace lsavg {

/// Z = {(alpha, beta(alpha)) : alpha in Cl(V)} with V an axis-aligned box.
/// The chart occupies the first m coordinates.
struct ManifoldChart {
    int n = 0;
    int m = 0;
    std::shared_ptr<const Declarations> decl;  // states = alpha names
    std::vector<Expression> beta;              // n - m components
    Vec params;
    Vec lo, hi;

    int codim() const { return n - m; }

    void validate() const {
        if (m < 0 || m > n || n < 1) throw ValidationError("chart dimension m must satisfy 0 <= m <= n");
        if (lo.size() != m || hi.size() != m) throw ValidationError("chart box needs one interval per alpha variable");
        for (int j = 0; j < m; ++j)
            if (!(std::isfinite(lo[j]) && std::isfinite(hi[j]) && lo[j] < hi[j]))
                throw ValidationError("chart box interval " + std::to_string(j + 1) + " must be finite with lo < hi");
        if (static_cast<int>(beta.size()) != n - m) throw ValidationError("chart needs n - m beta expressions");
        if (n - m > 0 && !decl) throw ValidationError("chart has no declarations");
        if (decl && static_cast<int>(decl->states.size()) != m) throw ValidationError("chart declares the wrong number of alpha variables");
    }

    bool contains(const Vec& a, double slack = 0.0) const {
        for (int j = 0; j < m; ++j)
            if (a[j] < lo[j] - slack || a[j] > hi[j] + slack) return false;
        return true;
    }

    Vec beta_at(const Vec& a) const {
        Vec b(n - m);
        for (int c = 0; c < n - m; ++c) b[c] = lsavg::eval(beta[c], 0.0, a.data(), params.data());
        return b;
    }

    /// z_alpha = (alpha, beta(alpha)).
    Vec embed(const Vec& a) const {
        if (a.size() != m) throw DimensionError("alpha has wrong dimension");
        Vec z(n);
        z.head(m) = a;
        z.tail(n - m) = beta_at(a);
        return z;
    }

    /// D beta(alpha), (n-m) x m.
    Mat beta_jacobian(const Vec& a) const {
        if (n == m) return Mat(0, m);
        return derivative_tensors(beta, 0.0, a.data(), params.data(), 1)[1].as_matrix();
    }

    Vec center() const { return 0.5 * (lo + hi); }

    static ManifoldChart whole_space(int n, const Vec& lo, const Vec& hi) {
        ManifoldChart c;
        c.n = c.m = n;
        Declarations d;
        for (int j = 0; j < n; ++j) d.states.push_back("a" + std::to_string(j + 1));
        c.decl = std::make_shared<const Declarations>(d);
        c.lo = lo;
        c.hi = hi;
        c.validate();
        return c;
    }

    static ManifoldChart from_strings(int n, const Declarations& d, const std::vector<std::string>& beta_text, const Vec& params,
                                      const Vec& lo, const Vec& hi) {
        ManifoldChart c;
        c.n = n;
        c.m = static_cast<int>(d.states.size());
        c.decl = std::make_shared<const Declarations>(d);
        for (const auto& s : beta_text) c.beta.push_back(parse(s, c.decl));
        c.params = params.size() ? params : Vec::Zero(static_cast<Eigen::Index>(d.params.size()));
        c.lo = lo;
        c.hi = hi;
        c.validate();
        return c;
    }
};

}  // namespace lsavg
