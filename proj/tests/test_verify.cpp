#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lsavg/problem.hpp"
#include "lsavg/verify.hpp"
#include "test_helpers.hpp"

using namespace lsavg;
using namespace testing_helpers;
using std::numbers::pi;

namespace {

Vec v2(double a, double b) {
    Vec x(2);
    x << a, b;
    return x;
}

}  // namespace

TEST(Verify, UnperturbedChartPointIsFixed) {
    Problem P = fixture("polynomial3d.prob");
    Vec z = P.chart.embed(Vec::Constant(1, 0.8));
    Displacement d = displacement(P.field, z, 0.0);
    EXPECT_LT(d.h.norm(), 1e-12);
    EXPECT_LT((d.Dh - (d.monodromy - Mat::Identity(2, 2))).norm(), 1e-15);
    PeriodicOrbit o = refine_periodic(P.field, z, 0.0);
    EXPECT_EQ(o.iterations, 0);
}

TEST(Verify, MonodromyMatchesFiniteDifferences) {
    Problem P = fixture("polynomial3d.prob");
    const double eps = 0.01;
    Vec z = v2(0.3, 0.05);
    Displacement d = displacement(P.field, z, eps);
    const double h = 1e-5;
    for (int j = 0; j < 2; ++j) {
        Vec e = Vec::Unit(2, j) * h;
        Vec col = (integrate_full(P.field, z + e, eps).x_end - integrate_full(P.field, z - e, eps).x_end) / (2 * h);
        EXPECT_LT((col - d.monodromy.col(j)).norm(), 1e-5);
    }
}

TEST(Verify, ForcedDampedOscillatorOrbit) {
    // x' = -x + eps cos t has the periodic solution eps (cos t + sin t) / 2
    auto F = VectorFieldSeries::from_strings(states({"x"}), 2 * pi, {{"-x"}, {"cos(t)"}});
    const double eps = 0.3;
    PeriodicOrbit o = refine_periodic(F, Vec::Constant(1, 1.0), eps);
    EXPECT_NEAR(o.z[0], eps / 2, 1e-10);
    EXPECT_LE(o.residual, 1e-10 * (std::fabs(o.z[0]) + 1));
    ASSERT_EQ(o.eigenvalues.size(), 1u);
    EXPECT_NEAR(o.eigenvalues[0].real(), std::exp(-2 * pi) - 1, 1e-9);
    EXPECT_EQ(o.stability, Stability::AsymptoticallyStable);
}

TEST(Verify, RefinedOrbitReturnsTwice) {
    Problem P = fixture("polynomial3d.prob");
    const double eps = 0.01;
    PeriodicOrbit o = refine_periodic(P.field, v2(std::sqrt(8 * eps), 0.0), eps);
    auto d = return_defects(P.field, o, 2);
    EXPECT_EQ(d[0], o.residual);
    // the second return carries the first defect through the monodromy
    EXPECT_LE(d[1], 10 * (1 + o.monodromy.norm()) * o.residual);

    auto F = VectorFieldSeries::from_strings(states({"x", "y"}), 2 * pi, {{"-x + y", "-x - y"}, {"cos(t)", "x^2"}});
    PeriodicOrbit s = refine_periodic(F, v2(0.1, 0.1), 0.2);
    auto ds = return_defects(F, s, 2);
    EXPECT_LE(ds[0], 10 * std::max(s.residual, 1e-16));
    EXPECT_LE(ds[1], 10 * std::max(s.residual, 1e-16));
    auto mu = sorted_eigenvalues(o.monodromy);
    auto la = sorted_eigenvalues(o.Dh);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        bool matched = false;
        for (const Complex& l : la) matched = matched || std::abs(mu[i] - 1.0 - l) <= 1e-8;
        EXPECT_TRUE(matched);
    }
}

TEST(Verify, ClassificationFromDisplacementEigenvalues) {
    EXPECT_EQ(stability_classify({Complex(0.1, 0)}), Stability::HasUnstableDirection);
    EXPECT_EQ(stability_classify({Complex(-0.5, 0), Complex(-0.1, 0.05)}), Stability::AsymptoticallyStable);
    EXPECT_EQ(stability_classify({Complex(0, 0), Complex(-0.5, 0)}), Stability::Inconclusive);
    EXPECT_EQ(stability_classify({Complex(-2.5, 0)}), Stability::HasUnstableDirection);
    EXPECT_EQ(to_string(Stability::AsymptoticallyStable), "asymptotically-stable");
}

TEST(Verify, JacobianSeriesCoefficients) {
    ExprGSeries gs(states({"a", "b"}), {{"0", "0"}, {"0", "a - 2*b + a^2*b"}, {"-3*a + b^2", "sin(a)*b"}});
    Vec z0 = v2(0.0, 0.0), z1 = v2(1.5, -0.5);
    JacobianSeries js = jacobian_series(gs, z0, z1);
    auto J = [&](double e) {
        Vec z = z0 + e * z1;
        return Mat(e * gs.jacobian(1, z) + e * e * gs.jacobian(2, z));
    };
    const double e = 1e-4;
    EXPECT_LT((js.A1 - gs.jacobian(1, z0)).norm(), 1e-14);
    EXPECT_LT(((J(e) / e - js.A1) / e - js.A2).norm(), 1e-3);
    ASSERT_EQ(js.leading.size(), 2u);
    int second = 0;
    for (const auto& l : js.leading) {
        if (l.order == 1) {
            EXPECT_NEAR(l.coefficient.real(), -2.0, 1e-12);
        } else {
            ++second;
            // u = (1, 0), v = (2, 1)
            const double expect = (2 * js.A2(0, 0) + js.A2(0, 1)) / 2;
            EXPECT_NEAR(l.coefficient.real(), expect, 1e-12);
            auto ev = js.eigenvalues(1e-3);
            EXPECT_NEAR(ev[0].real() / 1e-6, expect, 1e-2 * std::fabs(expect));
        }
    }
    EXPECT_EQ(second, 1);

    ExprGSeries flat(states({"a", "b"}), {{"0", "0"}, {"0", "0"}, {"a", "b"}});
    EXPECT_EQ(jacobian_series(flat, z0, z1).A1.norm(), 0.0);
}

TEST(Verify, TrajectoryAndSectionSamples) {
    auto F = VectorFieldSeries::from_strings(states({"x"}), 2 * pi, {{"-x"}, {"cos(t)"}});
    auto tr = trajectory(F, Vec::Constant(1, 1.0), 0.0, 2, 4);
    ASSERT_EQ(tr.size(), 9u);
    EXPECT_NEAR(tr[2].x[0], std::exp(-pi), 1e-9);
    EXPECT_NEAR(tr.back().t, 4 * pi, 1e-15);
    auto s = stroboscopic(F, Vec::Constant(1, 1.0), 0.0, 3);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_NEAR(s[3][0], std::exp(-6 * pi), 1e-12);
}
