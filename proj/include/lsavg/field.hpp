#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lsavg/expr.hpp"

namespace lsavg {

/// x' = F_0(t,x) + sum_{i=1}^k eps^i F_i(t,x), T-periodic in t.
struct VectorFieldSeries {
    std::shared_ptr<const Declarations> decl;
    double period = 0.0;
    std::vector<std::vector<Expression>> F;  // F[i][c], i = 0..k
    Vec params;

    int dim() const { return decl ? static_cast<int>(decl->states.size()) : 0; }
    int order() const { return static_cast<int>(F.size()) - 1; }

    void validate() const {
        if (!decl) throw ValidationError("vector field has no declarations");
        lsavg::validate(*decl);
        const int n = dim();
        if (n < 1) throw ValidationError("dimension must be at least 1");
        if (!(period > 0)) throw ValidationError("period must be positive");
        if (order() < 1 || order() > kMaxOrderField) throw ValidationError("order k must be in 1..5");
        if (params.size() != static_cast<Eigen::Index>(decl->params.size())) throw ValidationError("parameter values do not match declarations");
        for (int i = 0; i <= order(); ++i) {
            if (static_cast<int>(F[i].size()) != n)
                throw ValidationError("F" + std::to_string(i) + " needs " + std::to_string(n) + " components");
            for (const Expression& e : F[i])
                if (e.declarations_ptr() != decl) throw ValidationError("field components must share one declaration");
        }
    }

    /// Parse component strings; fields[i][c] is the text of component c of F_i.
    static VectorFieldSeries from_strings(const Declarations& d, double T, const std::vector<std::vector<std::string>>& fields,
                                          const Vec& params = Vec()) {
        VectorFieldSeries s;
        s.decl = std::make_shared<const Declarations>(d);
        s.period = T;
        s.params = params.size() ? params : Vec::Zero(static_cast<Eigen::Index>(d.params.size()));
        for (const auto& comp : fields) {
            std::vector<Expression> row;
            for (const auto& text : comp) row.push_back(parse(text, s.decl));
            s.F.push_back(std::move(row));
        }
        s.validate();
        return s;
    }

    Vec eval(int i, double t, const Vec& x) const {
        Vec out(dim());
        for (int c = 0; c < dim(); ++c) out[c] = lsavg::eval(F[i][c], t, x.data(), params.data());
        return out;
    }

    /// Full right-hand side F(t,x,eps), exactly polynomial of degree k in eps.
    Vec full(double t, const Vec& x, double eps) const {
        Vec out = eval(order(), t, x);
        for (int i = order() - 1; i >= 0; --i) out = eval(i, t, x) + eps * out;
        return out;
    }

    /// D_x F_i as an n x n matrix.
    Mat jacobian(int i, double t, const Vec& x) const {
        return derivative_tensors(F[i], t, x.data(), params.data(), 1)[1].as_matrix();
    }

    Mat full_jacobian(double t, const Vec& x, double eps) const {
        Mat J = jacobian(order(), t, x);
        for (int i = order() - 1; i >= 0; --i) J = jacobian(i, t, x) + eps * J;
        return J;
    }

    static constexpr int kMaxOrderField = 5;
};

}  // namespace lsavg
