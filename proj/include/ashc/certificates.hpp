// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Quadratic stabilisability certificates V(x, z) = (x - z)^T M (x - z) and
// their verification against a polytope of state matrices A_bar(u).

#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ashc/errors.hpp"
#include "ashc/linalg.hpp"
#include "ashc/system.hpp"

namespace ashc {

/// Feedback k(z, x, u) applied to the copy z of the plant that tracks x.
using FeedbackLaw = std::function<Vector(const Vector& z, const Vector& x, const Vector& u)>;

class QuadraticCertificate {
public:
    QuadraticCertificate(SymMatrix M, double lambda, FeedbackLaw k_base = {}, double tol = kDefaultTol)
        : M_(std::move(M)), lambda_(lambda), k_base_(std::move(k_base)) {
        if (!(lambda_ > 0.0)) throw ArgumentError("QuadraticCertificate: decay rate must be positive");
        const auto ev = sym_eigenvalues(M_, tol);
        if (!(ev.min() > tol)) {
            std::ostringstream os;
            os << "QuadraticCertificate: M is not positive definite (min eigenvalue " << ev.min() << ")";
            throw CertificateError(os.str());
        }
        sigma_min_ = ev.min();
        sigma_max_ = ev.max();
        sqrt_M_ = sqrt_factor(M_, tol);
    }

    const SymMatrix& M() const noexcept { return M_; }
    const Matrix& sqrt_M() const noexcept { return sqrt_M_; }
    std::size_t order() const noexcept { return M_.order(); }
    double lambda() const noexcept { return lambda_; }
    double sigma_min() const noexcept { return sigma_min_; }
    double sigma_max() const noexcept { return sigma_max_; }

    /// True when k(z, x, u) = u.
    bool identity_feedback() const noexcept { return !k_base_; }

    Vector k_base(const Vector& z, const Vector& x, const Vector& u) const {
        return k_base_ ? k_base_(z, x, u) : u;
    }

    // Class-K envelopes: sigma_min r^2 <= V <= sigma_max r^2 and
    // dV/dt <= -lambda sigma_min r^2.
    double alpha_lower(double r) const noexcept { return sigma_min_ * r * r; }
    double alpha_upper(double r) const noexcept { return sigma_max_ * r * r; }
    double alpha_decay(double r) const noexcept { return lambda_ * sigma_min_ * r * r; }

private:
    SymMatrix M_;
    double lambda_;
    FeedbackLaw k_base_;
    double sigma_min_ = 0.0;
    double sigma_max_ = 0.0;
    Matrix sqrt_M_;
};

struct LmiReport {
    std::vector<double> vertex_max_eigenvalue;  ///< of A_i^T M + M A_i + lambda M
    double m_min_eigenvalue = 0.0;
    double lambda = 0.0;
    double tolerance = 0.0;
    bool m_positive_definite = false;
    bool feasible = false;

    std::string to_text() const {
        std::ostringstream os;
        os << "# polytopic LMI check: A_i^T M + M A_i + lambda M <= tol I, M > 0\n";
        os << "lambda = " << std::setprecision(17) << lambda << "\n";
        os << "tolerance = " << tolerance << "\n";
        os << "M min eigenvalue = " << m_min_eigenvalue << (m_positive_definite ? "  (ok)" : "  (FAIL)") << "\n";
        os << "vertex  max_eigenvalue  status\n";
        for (std::size_t i = 0; i < vertex_max_eigenvalue.size(); ++i)
            os << i << "  " << vertex_max_eigenvalue[i] << "  "
               << (vertex_max_eigenvalue[i] <= tolerance ? "ok" : "FAIL") << "\n";
        os << "feasible = " << (feasible ? "true" : "false") << "\n";
        return os.str();
    }
};

/// Left-hand side A^T M + M A + lambda M.
inline SymMatrix lmi_lhs(const Matrix& A, const SymMatrix& M, double lambda) {
    if (!A.square() || A.rows() != M.order()) throw ArgumentError("lmi_lhs: vertex shape does not match M");
    const Matrix& Mm = M.matrix();
    return SymMatrix(A.transpose() * Mm + Mm * A + lambda * Mm);
}

inline LmiReport verify_polytopic_lmi(const std::vector<Matrix>& vertices, const SymMatrix& M, double lambda,
                                      double tol = kDefaultTol) {
    if (!(lambda > 0.0)) throw ArgumentError("verify_polytopic_lmi: lambda must be positive");
    if (vertices.empty()) throw ArgumentError("verify_polytopic_lmi: no vertices");
    LmiReport r;
    r.lambda = lambda;
    r.tolerance = tol;
    const double eig_tol = std::max(tol * 1e-3, 1e-14);
    r.m_min_eigenvalue = sym_eigenvalues(M, eig_tol).min();
    r.m_positive_definite = r.m_min_eigenvalue > 0.0;
    bool ok = r.m_positive_definite;
    for (const Matrix& A : vertices) {
        const double mx = sym_eigenvalues(lmi_lhs(A, M, lambda), eig_tol).max();
        r.vertex_max_eigenvalue.push_back(mx);
        ok = ok && mx <= tol;
    }
    r.feasible = ok;
    return r;
}

inline double lyapunov_value(const QuadraticCertificate& cert, const Vector& x, const Vector& z) {
    if (x.size() != cert.order() || z.size() != cert.order())
        throw ArgumentError("lyapunov_value: dimension mismatch");
    Vector e(x.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = x[i] - z[i];
    return weighted_norm_sq(e, cert.M());
}

/// M - c0 C^T C >= -tol I, i.e. V(x, z) >= c0 ||C (x - z)||^2.
inline bool check_output_lower_bound(const SymMatrix& M, const Matrix& C, double c0, double tol = kDefaultTol) {
    if (!(c0 > 0.0)) throw ArgumentError("check_output_lower_bound: c0 must be positive");
    if (C.cols() != M.order()) throw ArgumentError("check_output_lower_bound: C has wrong column count");
    const SymMatrix S(M.matrix() - c0 * (C.transpose() * C));
    return sym_eigenvalues(S, std::max(tol * 1e-3, 1e-14)).min() >= -tol;
}

/// 2 (x - z)^T M A_bar(u) (x - z): the time derivative of V along two copies
/// of the plant driven by the same input (k(z, x, u) = u).
inline double decrement_along_pair(const QuadraticCertificate& cert, const InputAffineSystem& sys, const Vector& x,
                                   const Vector& z, const Vector& u) {
    if (!sys.has_affine_state_form())
        throw UnsupportedError("decrement_along_pair: plant does not expose A_bar(u)");
    if (!cert.identity_feedback())
        throw UnsupportedError("decrement_along_pair: non-identity feedback needs a closed-loop evaluator");
    if (x.size() != cert.order() || z.size() != cert.order() || u.size() != sys.m)
        throw ArgumentError("decrement_along_pair: dimension mismatch");
    Vector e(x.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = x[i] - z[i];
    const Vector Ae = (*sys.A_bar)(u) * e;
    return 2.0 * dot(e, cert.M().matrix() * Ae);
}

namespace experimental {

struct LmiSearchOptions {
    int max_iterations = 20000;
    double step = 1e-3;
    double margin = 1e-6;  ///< target: every vertex max eigenvalue <= -margin
    double min_eigenvalue = 1e-3;
};

struct LmiSearchResult {
    bool found = false;
    int iterations = 0;
    SymMatrix M;
    double worst_vertex_eigenvalue = 0.0;
};

/// Naive certificate search: projected subgradient descent on
/// sum_i max(0, lambda_max(A_i^T M + M A_i + lambda M) + margin) with
/// M kept in {M >= min_eigenvalue I, trace M = n}. Not a substitute for an
/// SDP solver; a negative result proves nothing.
inline LmiSearchResult search_lmi_certificate(const std::vector<Matrix>& vertices, double lambda,
                                              const LmiSearchOptions& opt = {}) {
    if (vertices.empty()) throw ArgumentError("search_lmi_certificate: no vertices");
    const std::size_t n = vertices.front().rows();
    Matrix M = Matrix::identity(n);

    auto project = [&](const Matrix& X) {
        const auto dec = sym_eigen(SymMatrix(X), 1e-12);
        Vector ev = dec.report.eigenvalues;
        for (double& e : ev) e = std::max(e, opt.min_eigenvalue);
        Matrix P(n, n);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    P(i, j) += ev[k] * dec.eigenvectors(i, k) * dec.eigenvectors(j, k);
        double tr = 0.0;
        for (std::size_t i = 0; i < n; ++i) tr += P(i, i);
        return SymMatrix(P * (static_cast<double>(n) / tr)).matrix();
    };

    LmiSearchResult res;
    for (int it = 0; it <= opt.max_iterations; ++it) {
        const SymMatrix Ms(M);
        Matrix grad(n, n);
        double worst = -std::numeric_limits<double>::infinity();
        for (const Matrix& A : vertices) {
            const auto dec = sym_eigen(lmi_lhs(A, Ms, lambda), 1e-12);
            const double mx = dec.report.max();
            worst = std::max(worst, mx);
            if (mx + opt.margin <= 0.0) continue;
            const Vector v = dec.eigenvectors.col(n - 1);
            const Vector Av = A * v;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    grad(i, j) += Av[i] * v[j] + v[i] * Av[j] + lambda * v[i] * v[j];
        }
        res.iterations = it;
        res.worst_vertex_eigenvalue = worst;
        if (worst + opt.margin <= 0.0) {
            res.found = true;
            break;
        }
        const double gn = grad.frobenius_norm();
        if (gn == 0.0) break;
        M = project(M - (opt.step / gn) * grad);
    }
    res.M = SymMatrix(M);
    return res;
}

}  // namespace experimental

}  // namespace ashc
