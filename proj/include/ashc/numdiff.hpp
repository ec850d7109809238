// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "ashc/linalg.hpp"
#include "ashc/system.hpp"

namespace ashc {

/// Central-difference Jacobian of f at x with step h per coordinate.
inline Matrix central_difference_jacobian(const VectorField& f, const Vector& x, double h = 1e-6) {
    const Vector f0 = f(x);
    Matrix J(f0.size(), x.size());
    Vector xp = x;
    Vector xm = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        const Vector fp = f(xp);
        const Vector fm = f(xm);
        for (std::size_t i = 0; i < f0.size(); ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return J;
}

/// max_ij |A_ij - B_ij| / max(|B_ij|, floor).
inline double max_relative_difference(const Matrix& A, const Matrix& B, double floor = 1.0) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw ArgumentError("max_relative_difference: shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j)
            worst = std::max(worst, std::abs(A(i, j) - B(i, j)) / std::max(std::abs(B(i, j)), floor));
    return worst;
}

}  // namespace ashc
