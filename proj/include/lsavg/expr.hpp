#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "lsavg/error.hpp"
#include "lsavg/jet.hpp"
#include "lsavg/tensor.hpp"

namespace lsavg {

/// Names an expression may reference. State variables are x_0..x_{n-1} in
/// declaration order; parameters are bound positionally at evaluation.
struct Declarations {
    std::vector<std::string> states;
    std::string time = "t";
    std::vector<std::string> params;

    int state_index(std::string_view s) const { return find(states, s); }
    int param_index(std::string_view s) const { return find(params, s); }

private:
    static int find(const std::vector<std::string>& v, std::string_view s) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] == s) return static_cast<int>(i);
        return -1;
    }
};

enum class Op { Num, Pi, Var, Time, Param, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Tan, Exp, Log, Sqrt };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Num;
    double value = 0.0;  // Num
    int index = -1;      // Var, Param
    long pnum = 1;       // Pow exponent numerator
    long pden = 1;       // Pow exponent denominator (> 0)
    NodePtr a, b;
};

inline bool is_reserved(std::string_view s) {
    static const char* names[] = {"sin", "cos", "tan", "exp", "log", "sqrt", "pi"};
    for (const char* n : names)
        if (s == n) return true;
    return false;
}

inline bool is_identifier(std::string_view s) {
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

inline void validate(const Declarations& d) {
    std::vector<std::string> all = d.states;
    all.push_back(d.time);
    all.insert(all.end(), d.params.begin(), d.params.end());
    if (d.states.empty()) throw ValidationError("declarations need at least one state variable");
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!is_identifier(all[i])) throw ValidationError("invalid identifier '" + all[i] + "'");
        if (is_reserved(all[i])) throw ValidationError("reserved name '" + all[i] + "' cannot be declared");
        for (std::size_t j = 0; j < i; ++j)
            if (all[i] == all[j]) throw ValidationError("duplicate declaration '" + all[i] + "'");
    }
}

namespace detail {

inline NodePtr make_num(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Num;
    n->value = v;
    return n;
}
inline NodePtr make_leaf(Op op, int index = -1) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->index = index;
    return n;
}
inline NodePtr make_unary(Op op, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    return n;
}
inline NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}
inline NodePtr make_pow(NodePtr a, long p, long q) {
    auto n = std::make_shared<Node>();
    n->op = Op::Pow;
    n->a = std::move(a);
    n->pnum = p;
    n->pden = q;
    return n;
}

inline void measure(const Node* n, int depth, int& max_depth, int& count) {
    if (!n) return;
    ++count;
    if (depth > max_depth) max_depth = depth;
    measure(n->a.get(), depth + 1, max_depth, count);
    measure(n->b.get(), depth + 1, max_depth, count);
}

}  // namespace detail

class Expression {
public:
    Expression() = default;
    Expression(NodePtr root, std::shared_ptr<const Declarations> decl) : root_(std::move(root)), decl_(std::move(decl)) {
        detail::measure(root_.get(), 1, depth_, count_);
    }

    const Node* root() const { return root_.get(); }
    const NodePtr& root_ptr() const { return root_; }
    const Declarations& declarations() const { return *decl_; }
    const std::shared_ptr<const Declarations>& declarations_ptr() const { return decl_; }
    int depth() const { return depth_; }
    int node_count() const { return count_; }
    bool empty() const { return !root_; }

private:
    NodePtr root_;
    std::shared_ptr<const Declarations> decl_;
    int depth_ = 0;
    int count_ = 0;
};

// ---------------------------------------------------------------- printing

namespace detail {

inline int precedence(const Node* n) {
    switch (n->op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        case Op::Num: return n->value < 0 ? 0 : 5;
        default: return 5;
    }
}

inline const char* func_name(Op op) {
    switch (op) {
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Tan: return "tan";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sqrt: return "sqrt";
        default: return nullptr;
    }
}

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string print(const Node* n, const Declarations& d);

inline std::string wrap(const Node* child, int min_prec, const Declarations& d) {
    std::string s = print(child, d);
    return precedence(child) < min_prec ? "(" + s + ")" : s;
}

inline std::string print(const Node* n, const Declarations& d) {
    switch (n->op) {
        case Op::Num: return n->value < 0 ? "(" + format_number(n->value) + ")" : format_number(n->value);
        case Op::Pi: return "pi";
        case Op::Var: return d.states[n->index];
        case Op::Time: return d.time;
        case Op::Param: return d.params[n->index];
        case Op::Neg: return "-" + wrap(n->a.get(), 3, d);
        case Op::Add: return wrap(n->a.get(), 1, d) + " + " + wrap(n->b.get(), 1, d);
        case Op::Sub: return wrap(n->a.get(), 1, d) + " - " + wrap(n->b.get(), 2, d);
        case Op::Mul: return wrap(n->a.get(), 2, d) + "*" + wrap(n->b.get(), 2, d);
        case Op::Div: return wrap(n->a.get(), 2, d) + "/" + wrap(n->b.get(), 3, d);
        case Op::Pow: {
            std::string e = n->pden == 1 ? std::to_string(n->pnum) : std::to_string(n->pnum) + "/" + std::to_string(n->pden);
            if (n->pden != 1 || n->pnum < 0) e = "(" + e + ")";
            return wrap(n->a.get(), 5, d) + "^" + e;
        }
        default: return std::string(func_name(n->op)) + "(" + print(n->a.get(), d) + ")";
    }
}

}  // namespace detail

inline std::string to_string(const Expression& e) { return e.empty() ? "" : detail::print(e.root(), e.declarations()); }

// ---------------------------------------------------------------- parsing

namespace detail {

/// Continued-fraction match of v to p/q with q <= 1000.
inline bool as_rational(double v, long& p, long& q) {
    if (!std::isfinite(v)) return false;
    long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double x = v;
    for (int it = 0; it < 40; ++it) {
        double a = std::floor(x);
        long ai = static_cast<long>(a);
        long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
        if (k2 > 1000) break;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (std::fabs(static_cast<double>(h1) / static_cast<double>(k1) - v) <= 1e-12 * std::max(1.0, std::fabs(v))) {
            p = h1;
            q = k1;
            return true;
        }
        double frac = x - a;
        if (frac == 0.0) break;
        x = 1.0 / frac;
    }
    return false;
}

class Parser {
public:
    Parser(std::string_view text, const Declarations& d) : s_(text), d_(d) {}

    NodePtr parse() {
        if (s_.find_first_not_of(" \t\r\n") == std::string_view::npos) throw ParseError("empty expression", 0);
        NodePtr n = expr();
        skip();
        if (pos_ < s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
        return n;
    }

private:
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= s_.size()) throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    NodePtr expr() {
        NodePtr n = term();
        for (;;) {
            if (accept('+')) n = make_binary(Op::Add, n, term());
            else if (accept('-')) n = make_binary(Op::Sub, n, term());
            else return n;
        }
    }
    NodePtr term() {
        NodePtr n = unary();
        for (;;) {
            if (accept('*')) n = make_binary(Op::Mul, n, unary());
            else if (accept('/')) n = make_binary(Op::Div, n, unary());
            else return n;
        }
    }
    NodePtr unary() {
        if (accept('-')) return make_unary(Op::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }
    NodePtr power() {
        NodePtr base = primary();
        if (!accept('^')) return base;
        skip();
        std::size_t at = pos_;
        NodePtr ex = exponent();
        double v = 0.0;
        if (!constant_value(ex.get(), v)) throw ExponentError("exponent must be a constant integer or rational", at);
        long p = 0, q = 1;
        if (!as_rational(v, p, q)) throw ExponentError("non-integer non-rational exponent", at);
        return make_pow(base, p, q);
    }
    // right-associative: the exponent may itself carry a sign and a power
    NodePtr exponent() {
        if (accept('-')) return make_unary(Op::Neg, exponent());
        if (accept('+')) return exponent();
        return power();
    }

    static bool constant_value(const Node* n, double& v) {
        double x = 0, y = 0;
        switch (n->op) {
            case Op::Num: v = n->value; return true;
            case Op::Pi: v = std::numbers::pi; return true;
            case Op::Neg:
                if (!constant_value(n->a.get(), x)) return false;
                v = -x;
                return true;
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div:
                if (!constant_value(n->a.get(), x) || !constant_value(n->b.get(), y)) return false;
                if (n->op == Op::Add) v = x + y;
                else if (n->op == Op::Sub) v = x - y;
                else if (n->op == Op::Mul) v = x * y;
                else v = x / y;
                return true;
            case Op::Pow:
                if (!constant_value(n->a.get(), x)) return false;
                v = std::pow(x, static_cast<double>(n->pnum) / static_cast<double>(n->pden));
                return true;
            default: return false;
        }
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = expr();
            expect(')');
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    NodePtr number() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        double v = 0.0;
        auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != s_.data() + pos_) throw ParseError("malformed number", start);
        return make_num(v);
    }

    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        std::string_view name = s_.substr(start, pos_ - start);
        static const std::pair<const char*, Op> funcs[] = {{"sin", Op::Sin}, {"cos", Op::Cos}, {"tan", Op::Tan},
                                                           {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}};
        for (const auto& [fname, op] : funcs) {
            if (name == fname) {
                if (!accept('(')) throw ParseError("expected '(' after function name '" + std::string(name) + "'", pos_);
                NodePtr arg = expr();
                expect(')');
                return make_unary(op, arg);
            }
        }
        if (name == "pi") return make_leaf(Op::Pi);
        if (int i = d_.state_index(name); i >= 0) return make_leaf(Op::Var, i);
        if (name == d_.time) return make_leaf(Op::Time);
        if (int i = d_.param_index(name); i >= 0) return make_leaf(Op::Param, i);
        throw UndeclaredIdentifier(std::string(name), start);
    }

    std::string_view s_;
    const Declarations& d_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse(std::string_view text, std::shared_ptr<const Declarations> decl) {
    if (!decl) throw ValidationError("parse needs declarations");
    return Expression(detail::Parser(text, *decl).parse(), decl);
}

inline Expression parse(std::string_view text, const Declarations& decl) {
    return parse(text, std::make_shared<const Declarations>(decl));
}

// ---------------------------------------------------------------- evaluation

namespace detail {

inline double pow_rational(double a, long p, long q, const Node* n, const Declarations& d) {
    if (q == 1) {
        if (a == 0.0 && p < 0) throw DomainError("division by zero", print(n, d));
        return std::pow(a, static_cast<double>(p));
    }
    if (a == 0.0) {
        if (p < 0) throw DomainError("division by zero", print(n, d));
        return 0.0;
    }
    if (a < 0.0) {
        if (q % 2 == 0) throw DomainError("even root of a negative number", print(n, d));
        double m = std::pow(-a, static_cast<double>(p) / static_cast<double>(q));
        return (p % 2 != 0) ? -m : m;
    }
    return std::pow(a, static_cast<double>(p) / static_cast<double>(q));
}

inline double eval_node(const Node* n, double t, const double* x, const double* prm, const Declarations& d) {
    switch (n->op) {
        case Op::Num: return n->value;
        case Op::Pi: return std::numbers::pi;
        case Op::Var: return x[n->index];
        case Op::Time: return t;
        case Op::Param: return prm[n->index];
        case Op::Neg: return -eval_node(n->a.get(), t, x, prm, d);
        case Op::Add: return eval_node(n->a.get(), t, x, prm, d) + eval_node(n->b.get(), t, x, prm, d);
        case Op::Sub: return eval_node(n->a.get(), t, x, prm, d) - eval_node(n->b.get(), t, x, prm, d);
        case Op::Mul: return eval_node(n->a.get(), t, x, prm, d) * eval_node(n->b.get(), t, x, prm, d);
        case Op::Div: {
            double den = eval_node(n->b.get(), t, x, prm, d);
            if (den == 0.0) throw DomainError("division by zero", print(n, d));
            return eval_node(n->a.get(), t, x, prm, d) / den;
        }
        case Op::Pow: return pow_rational(eval_node(n->a.get(), t, x, prm, d), n->pnum, n->pden, n, d);
        case Op::Sin: return std::sin(eval_node(n->a.get(), t, x, prm, d));
        case Op::Cos: return std::cos(eval_node(n->a.get(), t, x, prm, d));
        case Op::Tan: {
            double a = eval_node(n->a.get(), t, x, prm, d);
            if (std::cos(a) == 0.0) throw DomainError("tan pole", print(n, d));
            return std::tan(a);
        }
        case Op::Exp: return std::exp(eval_node(n->a.get(), t, x, prm, d));
        case Op::Log: {
            double a = eval_node(n->a.get(), t, x, prm, d);
            if (a <= 0.0) throw DomainError("log of non-positive value", print(n, d));
            return std::log(a);
        }
        case Op::Sqrt: {
            double a = eval_node(n->a.get(), t, x, prm, d);
            if (a < 0.0) throw DomainError("sqrt of negative value", print(n, d));
            return std::sqrt(a);
        }
    }
    return 0.0;
}

}  // namespace detail

inline double eval(const Expression& e, double t, const double* x, const double* params) {
    return detail::eval_node(e.root(), t, x, params, e.declarations());
}

inline double eval(const Expression& e, double t, const Vec& x, const Vec& params = Vec()) {
    const Declarations& d = e.declarations();
    if (x.size() != static_cast<Eigen::Index>(d.states.size())) throw DimensionError("state vector length differs from declarations");
    if (params.size() != static_cast<Eigen::Index>(d.params.size())) throw DimensionError("parameter vector length differs from declarations");
    return eval(e, t, x.data(), params.data());
}

/// Named-binding convenience; unknown names are ignored, missing ones are an error.
inline Vec bind_params(const Declarations& d, const std::map<std::string, double>& values) {
    Vec p(static_cast<Eigen::Index>(d.params.size()));
    for (std::size_t i = 0; i < d.params.size(); ++i) {
        auto it = values.find(d.params[i]);
        if (it == values.end()) throw ValidationError("parameter '" + d.params[i] + "' is unbound");
        p[static_cast<Eigen::Index>(i)] = it->second;
    }
    return p;
}

// ---------------------------------------------------------------- symbolic derivative

namespace detail {

inline bool is_num(const NodePtr& n, double v) { return n->op == Op::Num && n->value == v; }

inline NodePtr s_add(NodePtr a, NodePtr b) {
    if (is_num(a, 0)) return b;
    if (is_num(b, 0)) return a;
    return make_binary(Op::Add, a, b);
}
inline NodePtr s_sub(NodePtr a, NodePtr b) {
    if (is_num(b, 0)) return a;
    if (is_num(a, 0)) return make_unary(Op::Neg, b);
    return make_binary(Op::Sub, a, b);
}
inline NodePtr s_mul(NodePtr a, NodePtr b) {
    if (is_num(a, 0) || is_num(b, 0)) return make_num(0);
    if (is_num(a, 1)) return b;
    if (is_num(b, 1)) return a;
    return make_binary(Op::Mul, a, b);
}
inline NodePtr s_div(NodePtr a, NodePtr b) {
    if (is_num(a, 0)) return make_num(0);
    if (is_num(b, 1)) return a;
    return make_binary(Op::Div, a, b);
}

inline NodePtr diff_node(const NodePtr& n, int var) {
    switch (n->op) {
        case Op::Num:
        case Op::Pi:
        case Op::Time:
        case Op::Param: return make_num(0);
        case Op::Var: return make_num(n->index == var ? 1 : 0);
        case Op::Neg: {
            NodePtr da = diff_node(n->a, var);
            return is_num(da, 0) ? da : make_unary(Op::Neg, da);
        }
        case Op::Add: return s_add(diff_node(n->a, var), diff_node(n->b, var));
        case Op::Sub: return s_sub(diff_node(n->a, var), diff_node(n->b, var));
        case Op::Mul: return s_add(s_mul(diff_node(n->a, var), n->b), s_mul(n->a, diff_node(n->b, var)));
        case Op::Div: {
            NodePtr num = s_sub(s_mul(diff_node(n->a, var), n->b), s_mul(n->a, diff_node(n->b, var)));
            return s_div(num, make_pow(n->b, 2, 1));
        }
        case Op::Pow: {
            NodePtr da = diff_node(n->a, var);
            if (is_num(da, 0) || n->pnum == 0) return make_num(0);
            NodePtr coef = make_num(static_cast<double>(n->pnum) / static_cast<double>(n->pden));
            NodePtr rest = (n->pnum == n->pden) ? make_num(1) : make_pow(n->a, n->pnum - n->pden, n->pden);
            if (n->pden != 1 && n->pnum % n->pden != 0) {
                // keep the coefficient exact as p/q
                coef = make_binary(Op::Div, make_num(static_cast<double>(n->pnum)), make_num(static_cast<double>(n->pden)));
            }
            return s_mul(s_mul(coef, rest), da);
        }
        case Op::Sin: return s_mul(make_unary(Op::Cos, n->a), diff_node(n->a, var));
        case Op::Cos: return s_mul(make_unary(Op::Neg, make_unary(Op::Sin, n->a)), diff_node(n->a, var));
        case Op::Tan: return s_div(diff_node(n->a, var), make_pow(make_unary(Op::Cos, n->a), 2, 1));
        case Op::Exp: return s_mul(n, diff_node(n->a, var));
        case Op::Log: return s_div(diff_node(n->a, var), n->a);
        case Op::Sqrt: return s_div(diff_node(n->a, var), s_mul(make_num(2), n));
    }
    return make_num(0);
}

}  // namespace detail

/// d/dx_var of an expression, as a new expression over the same declarations.
inline Expression differentiate(const Expression& e, int var) {
    if (var < 0 || var >= static_cast<int>(e.declarations().states.size())) throw RangeError("differentiation variable out of range");
    return Expression(detail::diff_node(e.root_ptr(), var), e.declarations_ptr());
}

// ---------------------------------------------------------------- Taylor jets

namespace detail {

inline Jet jet_node(const Node* n, double t, const std::vector<Jet>& vars, const double* prm, const JetSpace& sp,
                    const Declarations& d) {
    const int D = sp.degree();
    auto arg = [&]() { return jet_node(n->a.get(), t, vars, prm, sp, d); };
    switch (n->op) {
        case Op::Num: return Jet(sp, n->value);
        case Op::Pi: return Jet(sp, std::numbers::pi);
        case Op::Time: return Jet(sp, t);
        case Op::Param: return Jet(sp, prm[n->index]);
        case Op::Var: return vars[n->index];
        case Op::Neg: return -arg();
        case Op::Add: return arg() + jet_node(n->b.get(), t, vars, prm, sp, d);
        case Op::Sub: return arg() - jet_node(n->b.get(), t, vars, prm, sp, d);
        case Op::Mul: return arg() * jet_node(n->b.get(), t, vars, prm, sp, d);
        case Op::Div: {
            Jet den = jet_node(n->b.get(), t, vars, prm, sp, d);
            double b0 = den.value();
            if (b0 == 0.0) throw DomainError("division by zero", print(n, d));
            Jet num = arg();
            if (den.is_constant()) return num * (1.0 / b0);
            std::vector<double> c(D + 1);
            double r = 1.0 / b0;
            for (int k = 0; k <= D; ++k) {
                c[k] = (k % 2 ? -r : r);
                r /= b0;
            }
            return num * den.compose(c);
        }
        case Op::Pow: {
            Jet a = arg();
            const long p = n->pnum, q = n->pden;
            if (q == 1 && p >= 0) {
                Jet out(sp, 1.0);
                Jet base = a;
                long e = p;
                while (e > 0) {
                    if (e & 1) out = out * base;
                    e >>= 1;
                    if (e) base = base * base;
                }
                return out;
            }
            double a0 = a.value();
            double v = pow_rational(a0, p, q, n, d);
            if (a.is_constant()) return Jet(sp, v);
            if (a0 == 0.0) throw DomainError("derivative of a fractional or negative power at zero", print(n, d));
            const double pe = static_cast<double>(p) / static_cast<double>(q);
            std::vector<double> c(D + 1);
            double binom = 1.0, ak = 1.0;
            for (int k = 0; k <= D; ++k) {
                c[k] = binom * v / ak;
                binom *= (pe - k) / (k + 1);
                ak *= a0;
            }
            return a.compose(c);
        }
        case Op::Sin:
        case Op::Cos: {
            Jet a = arg();
            double s = std::sin(a.value()), co = std::cos(a.value());
            if (a.is_constant()) return Jet(sp, n->op == Op::Sin ? s : co);
            // derivative cycle starting at sin or cos
            double cyc[4];
            if (n->op == Op::Sin) {
                cyc[0] = s; cyc[1] = co; cyc[2] = -s; cyc[3] = -co;
            } else {
                cyc[0] = co; cyc[1] = -s; cyc[2] = -co; cyc[3] = s;
            }
            std::vector<double> c(D + 1);
            double fk = 1.0;
            for (int k = 0; k <= D; ++k) {
                if (k > 0) fk *= k;
                c[k] = cyc[k % 4] / fk;
            }
            return a.compose(c);
        }
        case Op::Tan: {
            Node sn{Op::Sin, 0, -1, 1, 1, n->a, nullptr};
            Node cn{Op::Cos, 0, -1, 1, 1, n->a, nullptr};
            Jet c = jet_node(&cn, t, vars, prm, sp, d);
            if (c.value() == 0.0) throw DomainError("tan pole", print(n, d));
            Jet s = jet_node(&sn, t, vars, prm, sp, d);
            if (c.is_constant()) return s * (1.0 / c.value());
            std::vector<double> r(D + 1);
            double inv = 1.0 / c.value(), rr = inv;
            for (int k = 0; k <= D; ++k) {
                r[k] = (k % 2 ? -rr : rr);
                rr *= inv;
            }
            return s * c.compose(r);
        }
        case Op::Exp: {
            Jet a = arg();
            double e0 = std::exp(a.value());
            if (a.is_constant()) return Jet(sp, e0);
            std::vector<double> c(D + 1);
            double fk = 1.0;
            for (int k = 0; k <= D; ++k) {
                if (k > 0) fk *= k;
                c[k] = e0 / fk;
            }
            return a.compose(c);
        }
        case Op::Log: {
            Jet a = arg();
            double a0 = a.value();
            if (a0 <= 0.0) throw DomainError("log of non-positive value", print(n, d));
            if (a.is_constant()) return Jet(sp, std::log(a0));
            std::vector<double> c(D + 1);
            c[0] = std::log(a0);
            double ak = a0;
            for (int k = 1; k <= D; ++k) {
                c[k] = (k % 2 ? 1.0 : -1.0) / (k * ak);
                ak *= a0;
            }
            return a.compose(c);
        }
        case Op::Sqrt: {
            Jet a = arg();
            double a0 = a.value();
            if (a0 < 0.0) throw DomainError("sqrt of negative value", print(n, d));
            if (a.is_constant()) return Jet(sp, std::sqrt(a0));
            if (a0 == 0.0) throw DomainError("derivative of sqrt at zero", print(n, d));
            double v = std::sqrt(a0);
            std::vector<double> c(D + 1);
            double binom = 1.0, ak = 1.0;
            for (int k = 0; k <= D; ++k) {
                c[k] = binom * v / ak;
                binom *= (0.5 - k) / (k + 1);
                ak *= a0;
            }
            return a.compose(c);
        }
    }
    return Jet(sp);
}

}  // namespace detail

/// Taylor jet of e in the state variables listed in `active` (all states if
/// empty), truncated at total degree `order`.
inline Jet eval_jet(const Expression& e, double t, const double* x, const double* params, int order,
                    const std::vector<int>& active = {}) {
    const Declarations& d = e.declarations();
    const int n = static_cast<int>(d.states.size());
    std::vector<int> slot(n, -1);
    int nv = 0;
    if (active.empty()) {
        for (int i = 0; i < n; ++i) slot[i] = nv++;
    } else {
        for (int v : active) {
            if (v < 0 || v >= n) throw RangeError("active variable out of range");
            slot[v] = nv++;
        }
    }
    const JetSpace& sp = JetSpace::get(nv, order);
    std::vector<Jet> vars;
    vars.reserve(n);
    for (int i = 0; i < n; ++i) vars.push_back(slot[i] >= 0 ? Jet::variable(sp, slot[i], x[i]) : Jet(sp, x[i]));
    return detail::jet_node(e.root(), t, vars, params, sp, d);
}

/// Jet of e with every state variable replaced by a given jet (composition).
inline Jet eval_jet_composed(const Expression& e, double t, const std::vector<Jet>& states, const double* params) {
    if (states.size() != e.declarations().states.size()) throw DimensionError("one jet per state variable required");
    return detail::jet_node(e.root(), t, states, params, states.front().space(), e.declarations());
}

/// Derivative tensors of orders 0..max_order of a field (one expression per
/// component) with respect to the active state variables.
inline std::vector<SymTensor> derivative_tensors(const std::vector<Expression>& field, double t, const double* x,
                                                 const double* params, int max_order, const std::vector<int>& active = {}) {
    if (max_order < 0 || max_order > 5) throw RangeError("derivative order must be in 0..5");
    if (field.empty()) throw DimensionError("empty field");
    const int nx = static_cast<int>(field[0].declarations().states.size());
    const int p = active.empty() ? nx : static_cast<int>(active.size());
    const int q = static_cast<int>(field.size());
    std::vector<SymTensor> out;
    for (int L = 0; L <= max_order; ++L) out.emplace_back(L, p, q);
    const JetSpace& sp = JetSpace::get(p, max_order);
    for (int c = 0; c < q; ++c) {
        Jet j = eval_jet(field[c], t, x, params, max_order, active);
        for (int L = 0; L <= max_order; ++L) {
            const int base = sp.block_start(L);
            for (int s = 0; s < out[L].packed_size(); ++s) out[L].packed(c, s) = j[base + s] * sp.factorial_weight(base + s);
        }
    }
    return out;
}

inline SymTensor derivative_tensor(const std::vector<Expression>& field, double t, const Vec& x, int order,
                                   const Vec& params = Vec()) {
    return derivative_tensors(field, t, x.data(), params.data(), order).back();
}

}  // namespace lsavg
