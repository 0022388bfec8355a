#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lsavg/expr.hpp"
#include "random_fields.hpp"

using namespace lsavg;

namespace {

Declarations decl_x(int n, std::vector<std::string> params = {}) {
    Declarations d;
    for (int i = 1; i <= n; ++i) d.states.push_back("x" + std::to_string(i));
    d.params = std::move(params);
    return d;
}

Vec vec(std::vector<double> v) { return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

TEST(Parse, ProductOfSinAndSquare) {
    Expression e = parse("sin(t)*x1^2", decl_x(1));
    const Node* r = e.root();
    ASSERT_EQ(r->op, Op::Mul);
    EXPECT_EQ(r->a->op, Op::Sin);
    EXPECT_EQ(r->a->a->op, Op::Time);
    ASSERT_EQ(r->b->op, Op::Pow);
    EXPECT_EQ(r->b->a->op, Op::Var);
    EXPECT_EQ(r->b->pnum, 2);
    EXPECT_EQ(r->b->pden, 1);
    EXPECT_EQ(e.node_count(), 5);
    EXPECT_EQ(e.depth(), 3);
}

TEST(Parse, PowerBindsTighterThanUnaryMinus) {
    Expression e = parse("-x1^2", decl_x(1));
    EXPECT_DOUBLE_EQ(eval(e, 0.0, vec({3.0})), -9.0);
    EXPECT_DOUBLE_EQ(eval(parse("2^3^2", decl_x(1)), 0.0, vec({0.0})), 512.0);
    EXPECT_DOUBLE_EQ(eval(parse("x1^-1", decl_x(1)), 0.0, vec({4.0})), 0.25);
}

TEST(Parse, PolarFieldVanishesAtOrigin) {
    Declarations d;
    d.states = {"r", "w"};
    Expression e = parse("(1/4)*(r^3 + r^2*(r*(pi*sin(4*t)+2*cos(2*t)+cos(4*t)) - 3*cos(t) - cos(3*t)) - 4*sin(t))", d);
    EXPECT_NEAR(eval(e, 0.0, vec({1.0, 0.3})), 0.0, 1e-15);
}

TEST(Parse, UnbalancedParenthesisReportsOffset) {
    try {
        parse("sin(t", decl_x(1));
        FAIL() << "expected a parse error";
    } catch (const ParseError& err) {
        EXPECT_EQ(err.offset(), 5u);
    }
}

TEST(Parse, UndeclaredIdentifierIsNamed) {
    try {
        parse("x1 + y*2", decl_x(1));
        FAIL() << "expected an undeclared identifier error";
    } catch (const UndeclaredIdentifier& err) {
        EXPECT_EQ(err.name(), "y");
        EXPECT_EQ(err.offset(), 5u);
    }
}

TEST(Parse, ExponentMustBeRationalConstant) {
    EXPECT_THROW(parse("x1^pi", decl_x(1)), ExponentError);
    EXPECT_THROW(parse("x1^a", decl_x(1, {"a"})), ExponentError);
    EXPECT_THROW(parse("x1^x1", decl_x(1)), ExponentError);
    Expression e = parse("x1^1.5 + x1^(1/3)", decl_x(1));
    EXPECT_NEAR(eval(e, 0.0, vec({8.0})), std::pow(8.0, 1.5) + 2.0, 1e-12);
}

TEST(Parse, OtherSyntaxErrors) {
    EXPECT_THROW(parse("", decl_x(1)), ParseError);
    EXPECT_THROW(parse("x1 +", decl_x(1)), ParseError);
    EXPECT_THROW(parse("sin x1", decl_x(1)), ParseError);
    EXPECT_THROW(parse("x1 $ 2", decl_x(1)), ParseError);
    EXPECT_THROW(parse("abs(x1)", decl_x(1)), UndeclaredIdentifier);
}

TEST(Parse, DeclarationsAreValidated) {
    Declarations d;
    d.states = {"sin"};
    EXPECT_THROW(validate(d), ValidationError);
    d.states = {"x", "x"};
    EXPECT_THROW(validate(d), ValidationError);
    d.states = {"1x"};
    EXPECT_THROW(validate(d), ValidationError);
    EXPECT_NO_THROW(validate(decl_x(2, {"a0", "omega"})));
}

TEST(Eval, LiteralsAndParameters) {
    EXPECT_DOUBLE_EQ(eval(parse("3.5", decl_x(1)), 0.0, vec({0.0})), 3.5);
    Expression e = parse("pi*a^3/2", decl_x(1, {"a"}));
    EXPECT_NEAR(eval(e, 0.0, vec({0.0}), vec({2.0})), 4.0 * std::numbers::pi, 1e-14);
    EXPECT_NEAR(eval(e, 0.0, vec({0.0}), vec({2.0})), 12.566370614, 1e-9);
    Declarations d = decl_x(1, {"a", "b"});
    Vec p = bind_params(d, {{"b", 2.0}, {"a", 1.0}});
    EXPECT_DOUBLE_EQ(eval(parse("a - b", d), 0.0, vec({0.0}), p), -1.0);
    EXPECT_THROW(bind_params(d, {{"a", 1.0}}), ValidationError);
}

TEST(Eval, DomainErrorsNameTheSubexpression) {
    try {
        eval(parse("2 + 1/x1", decl_x(1)), 0.0, vec({0.0}));
        FAIL();
    } catch (const DomainError& err) {
        EXPECT_EQ(err.subexpression(), "1/x1");
    }
    EXPECT_THROW(eval(parse("log(x1)", decl_x(1)), 0.0, vec({0.0})), DomainError);
    EXPECT_THROW(eval(parse("log(x1)", decl_x(1)), 0.0, vec({-1.0})), DomainError);
    EXPECT_THROW(eval(parse("sqrt(x1)", decl_x(1)), 0.0, vec({-1.0})), DomainError);
    EXPECT_THROW(eval(parse("x1^(1/2)", decl_x(1)), 0.0, vec({-1.0})), DomainError);
    EXPECT_NEAR(eval(parse("x1^(1/3)", decl_x(1)), 0.0, vec({-8.0})), -2.0, 1e-14);
}

TEST(Print, RoundTripOnRandomTrees) {
    RandomFields rf(11);
    Declarations d = decl_x(3);
    for (int k = 0; k < 200; ++k) {
        std::string text = rf.tree(3, 5);
        Expression e = parse(text, d);
        Expression back = parse(to_string(e), d);
        for (int s = 0; s < 5; ++s) {
            Vec x = vec(rf.point(3));
            double t = rf.uniform(0, 6);
            double a = eval(e, t, x), b = eval(back, t, x);
            EXPECT_NEAR(a, b, 1e-13 * (1 + std::fabs(a))) << text << "\n" << to_string(e);
        }
    }
}

TEST(Derivative, SquareHasConstantHessian) {
    Declarations d = decl_x(1);
    std::vector<Expression> f{parse("x1^2", d)};
    for (double x : {-2.0, 0.0, 3.0}) {
        SymTensor h = derivative_tensor(f, 0.0, vec({x}), 2);
        ASSERT_EQ(h.entry_count(), 1u);
        EXPECT_DOUBLE_EQ(h.packed(0, 0), 2.0);
    }
}

TEST(Derivative, OrderZeroIsEvaluation) {
    RandomFields rf(3);
    Declarations d = decl_x(3);
    std::vector<Expression> f;
    for (int c = 0; c < 3; ++c) f.push_back(parse(rf.poly_trig(3), d));
    Vec x = vec(rf.point(3));
    SymTensor t0 = derivative_tensor(f, 0.7, x, 0);
    for (int c = 0; c < 3; ++c) EXPECT_EQ(t0.packed(c, 0), eval(f[c], 0.7, x));
}

TEST(Derivative, MatchesSymbolicDifferentiation) {
    RandomFields rf(5);
    Declarations d = decl_x(3);
    for (int k = 0; k < 40; ++k) {
        Expression e = parse(rf.tree(3, 4), d);
        Vec x = vec(rf.point(3));
        auto tensors = derivative_tensors({e}, 0.4, x.data(), nullptr, 3);
        for (int i = 0; i < 3; ++i) {
            Expression di = differentiate(e, i);
            EXPECT_NEAR(tensors[1].entry(0, {i}), eval(di, 0.4, x), 1e-11 * (1 + std::fabs(eval(di, 0.4, x))));
            for (int j = 0; j < 3; ++j) {
                Expression dij = differentiate(di, j);
                double v = eval(dij, 0.4, x);
                EXPECT_NEAR(tensors[2].entry(0, {i, j}), v, 1e-10 * (1 + std::fabs(v)));
                for (int l = 0; l < 3; ++l) {
                    double w = eval(differentiate(dij, l), 0.4, x);
                    EXPECT_NEAR(tensors[3].entry(0, {i, j, l}), w, 1e-9 * (1 + std::fabs(w)));
                }
            }
        }
    }
}

TEST(Derivative, SchwarzSymmetryOfSymbolicDerivatives) {
    RandomFields rf(17);
    Declarations d = decl_x(3);
    for (int k = 0; k < 100; ++k) {
        Expression e = parse(rf.tree(3, 4), d);
        Expression d12 = differentiate(differentiate(e, 0), 1);
        Expression d21 = differentiate(differentiate(e, 1), 0);
        for (int s = 0; s < 3; ++s) {
            Vec x = vec(rf.point(3));
            double a = eval(d12, 0.3, x), b = eval(d21, 0.3, x);
            EXPECT_NEAR(a, b, 1e-12 * (1 + std::fabs(a)));
        }
    }
}

TEST(Derivative, PackedStorageIsSymmetricByConstruction) {
    Declarations d = decl_x(3);
    std::vector<Expression> f{parse("x1*x2^2*sin(x3) + exp(x1*x3)", d)};
    Vec x = vec({0.3, -0.2, 0.9});
    SymTensor t3 = derivative_tensor(f, 0.0, x, 3);
    std::vector<int> idx{0, 1, 2};
    double ref = t3.entry(0, idx);
    do {
        EXPECT_EQ(t3.entry(0, idx), ref);
    } while (std::next_permutation(idx.begin(), idx.end()));
}

TEST(Derivative, Linearity) {
    RandomFields rf(23);
    Declarations d = decl_x(3);
    for (int k = 0; k < 20; ++k) {
        std::string F = rf.poly_trig(3), G = rf.poly_trig(3);
        double a = rf.uniform(-2, 2), b = rf.uniform(-2, 2);
        Expression ef = parse(F, d), eg = parse(G, d);
        Expression comb = parse(fmt::format("{:.17g}*({}) + {:.17g}*({})", a, F, b, G), d);
        Vec x = vec(rf.point(3));
        for (int L = 1; L <= 5; ++L) {
            SymTensor tf = derivative_tensor({ef}, 0.2, x, L), tg = derivative_tensor({eg}, 0.2, x, L),
                      tc = derivative_tensor({comb}, 0.2, x, L);
            double scale = 0;
            for (int s = 0; s < tc.packed_size(); ++s) scale = std::max(scale, std::fabs(tc.packed(0, s)));
            for (int s = 0; s < tc.packed_size(); ++s)
                EXPECT_NEAR(tc.packed(0, s), a * tf.packed(0, s) + b * tg.packed(0, s), 1e-12 * std::max(scale, 1.0));
        }
    }
}

TEST(Derivative, ActiveSubsetMatchesFullTensor) {
    Declarations d = decl_x(3);
    std::vector<Expression> f{parse("x1^2*x3 + sin(x2*x3)", d), parse("exp(x3)*x2", d)};
    Vec x = vec({0.5, 0.4, -0.3});
    auto full = derivative_tensors(f, 0.0, x.data(), nullptr, 2);
    auto sub = derivative_tensors(f, 0.0, x.data(), nullptr, 2, {2, 1});
    for (int c = 0; c < 2; ++c) {
        EXPECT_DOUBLE_EQ(sub[1].entry(c, {0}), full[1].entry(c, {2}));
        EXPECT_DOUBLE_EQ(sub[2].entry(c, {0, 1}), full[2].entry(c, {2, 1}));
        EXPECT_DOUBLE_EQ(sub[2].entry(c, {1, 1}), full[2].entry(c, {1, 1}));
    }
}

TEST(Derivative, SingularDerivativeIsDomainError) {
    Declarations d = decl_x(1);
    std::vector<Expression> f{parse("sqrt(x1)", d)};
    EXPECT_NO_THROW(derivative_tensor(f, 0.0, vec({0.0}), 0));
    EXPECT_THROW(derivative_tensor(f, 0.0, vec({0.0}), 1), DomainError);
    EXPECT_THROW(derivative_tensor({parse("1/x1", d)}, 0.0, vec({0.0}), 2), DomainError);
    EXPECT_THROW(derivative_tensor(f, 0.0, vec({1.0}), 6), RangeError);
}

TEST(Derivative, PowersAndQuotientsAgainstClosedForms) {
    Declarations d = decl_x(1);
    // d^k/dx^k x^(-1/2) at x = 2
    std::vector<Expression> f{parse("x1^(-1/2)", d)};
    auto ts = derivative_tensors(f, 0.0, vec({2.0}).data(), nullptr, 5);
    double c = 1.0, p = -0.5;
    for (int k = 0; k <= 5; ++k) {
        EXPECT_NEAR(ts[k].packed(0, 0), c * std::pow(2.0, p - k), 1e-13 * std::fabs(c * std::pow(2.0, p - k)));
        c *= (p - k);
    }
    std::vector<Expression> g{parse("tan(x1)", d)};
    auto tg = derivative_tensors(g, 0.0, vec({0.3}).data(), nullptr, 2);
    double sec2 = 1.0 / std::pow(std::cos(0.3), 2);
    EXPECT_NEAR(tg[1].packed(0, 0), sec2, 1e-14);
    EXPECT_NEAR(tg[2].packed(0, 0), 2 * sec2 * std::tan(0.3), 1e-13);
}
