#pragma once

#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

// Random smooth expression text over state names x1..xn and time t.
// Denominators, logs and roots are kept away from their singular sets.
class RandomFields {
public:
    explicit RandomFields(unsigned long long seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    std::mt19937_64& engine() { return rng_; }

    std::string var(int n) { return fmt::format("x{}", integer(1, n)); }
    std::string coef() { return fmt::format("{:.6f}", uniform(-1.5, 1.5)); }

    // sum of monomials of total degree <= deg
    std::string polynomial(int n, int deg, int terms) {
        std::string s = coef();
        for (int k = 0; k < terms; ++k) {
            s += " + " + coef();
            int d = integer(1, deg);
            for (int j = 0; j < d;) {
                int e = integer(1, d - j);
                s += fmt::format("*{}^{}", var(n), e);
                j += e;
            }
        }
        return s;
    }

    // polynomial plus trig terms in the states and t
    std::string poly_trig(int n) {
        std::string s = polynomial(n, 4, integer(2, 5));
        int k = integer(1, 3);
        for (int i = 0; i < k; ++i) {
            const char* f = integer(0, 1) ? "sin" : "cos";
            s += fmt::format(" + {}*{}({}*{} + {}*t + {})", coef(), f, coef(), var(n), coef(), coef());
            if (integer(0, 1)) s += "*" + var(n);
        }
        return s;
    }

    // random tree with safe operations
    std::string tree(int n, int depth) {
        if (depth == 0 || integer(0, 3) == 0) {
            switch (integer(0, 3)) {
                case 0: return coef();
                case 1: return "t";
                default: return var(n);
            }
        }
        std::string a = tree(n, depth - 1);
        switch (integer(0, 10)) {
            case 0: return "(" + a + " + " + tree(n, depth - 1) + ")";
            case 1: return "(" + a + " - " + tree(n, depth - 1) + ")";
            case 2:
            case 3: return "(" + a + ")*(" + tree(n, depth - 1) + ")";
            case 4: return "(" + a + ")/(2 + (" + tree(n, depth - 1) + ")^2)";
            case 5: return "sin(" + a + ")";
            case 6: return "cos(" + a + ")";
            case 7: return "exp(0.3*sin(" + a + "))";
            case 8: return "log(1.5 + cos(" + a + "))";
            case 9: return "sqrt(1 + (" + a + ")^2)";
            default: return "(" + a + ")^" + std::to_string(integer(2, 3));
        }
    }

    std::vector<double> point(int n, double lo = -1.0, double hi = 1.0) {
        std::vector<double> x(n);
        for (double& v : x) v = uniform(lo, hi);
        return x;
    }

private:
    std::mt19937_64 rng_;
};
