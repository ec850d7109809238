// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Small dense linear algebra for the certificate checks: row-major matrices,
// symmetric matrices with a cyclic Jacobi eigensolver, weighted norms and
// symmetric square roots. Orders in this library stay below ~8, so nothing
// here is blocked or vectorised.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ashc/errors.hpp"

namespace ashc {

using Vector = std::vector<double>;

/// Default absolute tolerance for order-4 certificate matrices.
inline constexpr double kDefaultTol = 1e-10;

/// Maximum number of full Jacobi sweeps before giving up.
inline constexpr int kJacobiMaxSweeps = 100;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw ArgumentError("Matrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix I(n, n);
        for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
        return I;
    }

    static Matrix diagonal(std::span<const double> d) {
        Matrix D(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) D(i, i) = d[i];
        return D;
    }

    /// Single column matrix holding v.
    static Matrix column(std::span<const double> v) {
        Matrix c(v.size(), 1);
        std::copy(v.begin(), v.end(), c.data_.begin());
        return c;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    std::span<const double> data() const noexcept { return data_; }

    Vector col(std::size_t j) const {
        Vector c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    bool is_zero() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return v == 0.0; });
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    double frobenius_norm() const {
        return std::sqrt(std::inner_product(data_.begin(), data_.end(), data_.begin(), 0.0));
    }

    Matrix& operator+=(const Matrix& o) {
        check_same_shape(o, "operator+=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same_shape(o, "operator-=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw ArgumentError("Matrix product: inner dimensions differ");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend Vector operator*(const Matrix& a, std::span<const double> x) {
        if (a.cols_ != x.size()) throw ArgumentError("Matrix-vector product: dimension mismatch");
        Vector y(a.rows_, 0.0);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }
    friend Vector operator*(const Matrix& a, const Vector& x) {
        return a * std::span<const double>(x);
    }

private:
    void check_same_shape(const Matrix& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw ArgumentError(std::string("Matrix ") + op + ": shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Vector helpers ------------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ArgumentError("dot: dimension mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline Vector operator+(Vector a, const Vector& b) {
    if (a.size() != b.size()) throw ArgumentError("vector +: dimension mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vector operator-(Vector a, const Vector& b) {
    if (a.size() != b.size()) throw ArgumentError("vector -: dimension mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Vector operator*(double s, Vector a) {
    for (double& v : a) v *= s;
    return a;
}

/// y += s * x
inline void axpy(double s, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw ArgumentError("axpy: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Symmetric matrices ---------------------------------------------------------

/// Dense symmetric matrix. Construction symmetrises by averaging, so
/// S(i, j) == S(j, i) holds bit-exactly afterwards.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(const Matrix& m) : m_(m) {
        if (!m.square()) throw ArgumentError("SymMatrix: matrix is not square");
        if (m.rows() == 0) throw ArgumentError("SymMatrix: order must be >= 1");
        for (std::size_t i = 0; i < order(); ++i)
            for (std::size_t j = i + 1; j < order(); ++j) {
                const double avg = 0.5 * (m_(i, j) + m_(j, i));
                m_(i, j) = avg;
                m_(j, i) = avg;
            }
    }

    SymMatrix(std::initializer_list<std::initializer_list<double>> rows) : SymMatrix(Matrix(rows)) {}

    static SymMatrix identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }
    static SymMatrix zero(std::size_t n) { return SymMatrix(Matrix(n, n)); }

    std::size_t order() const noexcept { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const Matrix& matrix() const noexcept { return m_; }

private:
    Matrix m_;
};

struct EigenReport {
    Vector eigenvalues;                 ///< ascending
    double max_offdiag_residual = 0.0;  ///< largest |off-diagonal| at exit
    double tolerance = 0.0;             ///< convergence threshold actually applied
    int sweeps = 0;

    double min() const { return eigenvalues.front(); }
    double max() const { return eigenvalues.back(); }
};

struct EigenDecomposition {
    EigenReport report;
    Matrix eigenvectors;  ///< column k pairs with report.eigenvalues[k]
};

namespace detail {

inline double max_offdiag(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
    return m;
}

}  // namespace detail

/// Cyclic Jacobi with a threshold sweep. The requested tolerance is raised to
/// a few ulps of ||S||_F when it is below what double precision can resolve;
/// the threshold actually used is recorded in the report.
inline EigenDecomposition sym_eigen(const SymMatrix& S, double tol = kDefaultTol) {
    if (!(tol > 0.0)) throw ArgumentError("sym_eigen: tolerance must be positive");
    const std::size_t n = S.order();
    Matrix a = S.matrix();
    if (!a.all_finite()) throw EvaluationError("sym_eigen: matrix has non-finite entries");
    Matrix v = Matrix::identity(n);

    const double eff_tol =
        std::max(tol, 8.0 * std::numeric_limits<double>::epsilon() * a.frobenius_norm());

    int sweep = 0;
    double off = detail::max_offdiag(a);
    while (off > eff_tol) {
        if (sweep == kJacobiMaxSweeps) {
            std::ostringstream os;
            os << "sym_eigen: no convergence after " << kJacobiMaxSweeps
               << " sweeps (max off-diagonal " << off << ", tolerance " << eff_tol << ")";
            throw ConvergenceError(os.str());
        }
        // Skip small rotations during the first sweeps.
        const double threshold = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0 || std::abs(apq) <= threshold) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        ++sweep;
        off = detail::max_offdiag(a);
    }

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigenDecomposition out;
    out.report.eigenvalues.resize(n);
    out.report.max_offdiag_residual = off;
    out.report.tolerance = eff_tol;
    out.report.sweeps = sweep;
    out.eigenvectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.report.eigenvalues[k] = a(idx[k], idx[k]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, idx[k]);
    }
    return out;
}

inline EigenReport sym_eigenvalues(const SymMatrix& S, double tol = kDefaultTol) {
    return sym_eigen(S, tol).report;
}

/// Attempts a Cholesky factorisation. Used only as a fast rejection test
/// ahead of the eigenvalue check.
inline bool cholesky_succeeds(const SymMatrix& S) {
    const std::size_t n = S.order();
    Matrix L(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = S(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
        if (!(d > 0.0)) return false;
        L(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = S(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / L(j, j);
        }
    }
    return true;
}

/// True iff the largest eigenvalue is <= tol.
inline bool is_negative_semidefinite(const SymMatrix& S, double tol = kDefaultTol) {
    if (tol < 0.0) throw ArgumentError("is_negative_semidefinite: tolerance must be >= 0");
    return sym_eigenvalues(S, std::max(tol, kDefaultTol * 1e-2)).max() <= tol;
}

/// True iff the smallest eigenvalue is > tol.
inline bool is_positive_definite(const SymMatrix& S, double tol = kDefaultTol) {
    if (tol < 0.0) throw ArgumentError("is_positive_definite: tolerance must be >= 0");
    if (!cholesky_succeeds(S)) return false;
    return sym_eigenvalues(S, std::max(tol, kDefaultTol * 1e-2)).min() > tol;
}

/// x^T M x.
inline double weighted_norm_sq(std::span<const double> x, const SymMatrix& M) {
    const std::size_t n = M.order();
    if (x.size() != n) throw ArgumentError("weighted_norm_sq: dimension mismatch");
#ifndef NDEBUG
    for (std::size_t i = 0; i < n; ++i)
        if (M(i, i) < 0.0) throw ArgumentError("weighted_norm_sq: weight has a negative diagonal entry");
#endif
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += M(i, j) * x[j];
        s += x[i] * row;
    }
    return s;
}

/// Symmetric positive square root via eigendecomposition.
inline Matrix sqrt_factor(const SymMatrix& M, double tol = kDefaultTol) {
    const auto dec = sym_eigen(M, tol);
    if (!(dec.report.min() > tol)) {
        std::ostringstream os;
        os << "sqrt_factor: matrix is not positive definite (min eigenvalue " << dec.report.min() << ")";
        throw CertificateError(os.str());
    }
    const std::size_t n = M.order();
    Matrix R(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = std::sqrt(dec.report.eigenvalues[k]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                R(i, j) += s * dec.eigenvectors(i, k) * dec.eigenvectors(j, k);
    }
    return SymMatrix(R).matrix();
}

/// Moore-Penrose inverse of a symmetric PSD matrix; eigenvalues below
/// rel_tol * max eigenvalue are treated as zero.
inline Matrix sym_pseudo_inverse(const SymMatrix& S, double rel_tol = 1e-12) {
    const auto dec = sym_eigen(S, kDefaultTol * 1e-2);
    const std::size_t n = S.order();
    const double cutoff = rel_tol * std::max(std::abs(dec.report.max()), std::abs(dec.report.min()));
    Matrix P(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lam = dec.report.eigenvalues[k];
        if (std::abs(lam) <= cutoff || lam == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                P(i, j) += dec.eigenvectors(i, k) * dec.eigenvectors(j, k) / lam;
    }
    return P;
}

/// Largest singular value.
inline double spectral_norm(const Matrix& A) {
    if (A.rows() == 0 || A.cols() == 0) return 0.0;
    if (A.cols() == 1) return norm2(A.data());
    const auto ev = sym_eigenvalues(SymMatrix(A.transpose() * A), kDefaultTol * 1e-2);
    return std::sqrt(std::max(0.0, ev.max()));
}

}  // namespace ashc
