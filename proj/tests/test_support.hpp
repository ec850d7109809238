// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Shared generators and independent oracles for the test suite. Nothing in
// here calls into the library's eigensolver, so the oracles stay independent
// of the code under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ashc/linalg.hpp"

namespace ashc::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    Vector vector(std::size_t n, double lo, double hi) {
        Vector v(n);
        for (double& x : v) x = uniform(lo, hi);
        return v;
    }

    Matrix matrix(std::size_t r, std::size_t c, double lo, double hi) {
        Matrix a(r, c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) a(i, j) = uniform(lo, hi);
        return a;
    }

    SymMatrix symmetric(std::size_t n, double scale = 1.0) { return SymMatrix(matrix(n, n, -scale, scale)); }

    /// Random orthogonal matrix by modified Gram-Schmidt on Gaussian columns.
    Matrix orthogonal(std::size_t n) {
        Matrix q(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            Vector c(n);
            for (double& x : c) x = normal();
            for (std::size_t k = 0; k < j; ++k) {
                double d = 0.0;
                for (std::size_t i = 0; i < n; ++i) d += q(i, k) * c[i];
                for (std::size_t i = 0; i < n; ++i) c[i] -= d * q(i, k);
            }
            double nn = 0.0;
            for (double x : c) nn += x * x;
            nn = std::sqrt(nn);
            for (std::size_t i = 0; i < n; ++i) q(i, j) = c[i] / nn;
        }
        return q;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// Coefficients c[0..n] of det(t I - A) = t^n + c[1] t^{n-1} + ... + c[n]
/// by the Faddeev-LeVerrier recursion.
inline std::vector<double> characteristic_polynomial(const Matrix& A) {
    const std::size_t n = A.rows();
    std::vector<double> c(n + 1, 0.0);
    c[0] = 1.0;
    Matrix Mk(n, n);  // M_0 = 0
    for (std::size_t k = 1; k <= n; ++k) {
        Matrix next = A * Mk;
        for (std::size_t i = 0; i < n; ++i) next(i, i) += c[k - 1];
        Mk = next;
        const Matrix AM = A * Mk;
        double tr = 0.0;
        for (std::size_t i = 0; i < n; ++i) tr += AM(i, i);
        c[k] = -tr / static_cast<double>(k);
    }
    return c;
}

inline double poly_eval(const std::vector<double>& c, double t) {
    double s = 0.0;
    for (double ci : c) s = s * t + ci;
    return s;
}

/// Real roots of a polynomial with only real, simple roots inside [lo, hi],
/// by sign-change bracketing on a fine mesh followed by bisection.
inline std::vector<double> real_roots(const std::vector<double>& c, double lo, double hi, int mesh = 200000) {
    std::vector<double> roots;
    double a = lo;
    double fa = poly_eval(c, a);
    for (int k = 1; k <= mesh; ++k) {
        const double b = lo + (hi - lo) * k / mesh;
        const double fb = poly_eval(c, b);
        if (fa == 0.0) {
            roots.push_back(a);
        } else if ((fa < 0.0) != (fb < 0.0) && fb != 0.0) {
            double l = a, r = b, fl = fa;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (l + r);
                const double fm = poly_eval(c, mid);
                if ((fm < 0.0) == (fl < 0.0)) {
                    l = mid;
                    fl = fm;
                } else {
                    r = mid;
                }
            }
            roots.push_back(0.5 * (l + r));
        }
        a = b;
        fa = fb;
    }
    return roots;
}

/// Relative difference with a floor of 1 on the denominator.
inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace ashc::testing
