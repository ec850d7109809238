// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Simulation function W(xi, x) = V(p(xi), x), the interface law u_w, the
// cross-term bound d_bar, output-error bounds, and the residual checks that
// certify an abstraction/interface pair and its m-relation numerically.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ashc/certificates.hpp"
#include "ashc/errors.hpp"
#include "ashc/linalg.hpp"
#include "ashc/system.hpp"

namespace ashc {

/// The pair of maps tying the abstraction to the plant: the simulation
/// manifold x = p(xi) with steady input l(xi), and the left inverse m with
/// xi = m(x) on the output region.
struct AbstractionMaps {
    VectorField p;        ///< xi -> x
    MatrixField dp_dxi;   ///< n x n_hat
    VectorField l;        ///< xi -> u
    VectorField m;        ///< x -> xi
    MatrixField dm_dx;    ///< n_hat x n
    Box domain_V;         ///< where W is certified
    Box operating_Xy;     ///< {x : h(x) in Y}
};

using GainFunction = std::function<Matrix(const Vector& xi, const Vector& x)>;

struct InterfaceSpec {
    GainFunction gain_q;  ///< (xi, x) -> m x m_hat
    std::optional<std::vector<std::pair<double, double>>> saturation;
    double epsilon = 1.0;

    void validate(const QuadraticCertificate& cert) const {
        if (!gain_q) throw ArgumentError("InterfaceSpec: missing gain");
        if (!(epsilon > 0.0 && epsilon < cert.lambda()))
            throw ArgumentError("InterfaceSpec: epsilon must lie in (0, lambda)");
        if (saturation)
            for (const auto& [lo, hi] : *saturation)
                if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
                    throw ArgumentError("InterfaceSpec: saturation bounds must be finite with lo < hi");
    }
};

/// Constants of the quadratic bound: alpha_h(r) = c0 r^2,
/// eta(r) = (lambda - epsilon) r, gamma(r) = (d_bar^2 / epsilon) r^2.
struct BoundConstants {
    double c0 = 0.0;
    double lambda = 0.0;
    double epsilon = 0.0;
    double d_bar = 0.0;

    void validate() const {
        if (!(c0 > 0.0 && lambda > 0.0 && epsilon > 0.0 && d_bar > 0.0))
            throw ArgumentError("BoundConstants: all constants must be strictly positive");
        if (!(epsilon < lambda)) throw ArgumentError("BoundConstants: epsilon must be below lambda");
    }

    double alpha_h(double r) const { return c0 * r * r; }
    double eta(double r) const { return (lambda - epsilon) * r; }
    double gamma(double r) const { return d_bar * d_bar / epsilon * r * r; }
};

// ---------------------------------------------------------------------------
// Residual reports

struct ResidualSample {
    Vector location;
    double residual = 0.0;
};

struct ResidualReport {
    std::string name;
    std::vector<ResidualSample> samples;
    std::size_t worst_index = 0;
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool passed = true;

    void add(Vector location, double residual) {
        // NaN must never pass silently.
        const double r = std::isnan(residual) ? std::numeric_limits<double>::infinity() : residual;
        if (samples.empty() || r > max_residual) {
            max_residual = r;
            worst_index = samples.size();
        }
        samples.push_back({std::move(location), r});
        passed = max_residual <= tolerance;
    }

    const Vector& worst_location() const { return samples.at(worst_index).location; }

    std::string summary_line() const {
        std::ostringstream os;
        os << std::setprecision(6) << (passed ? "PASS " : "FAIL ") << name << ": max residual " << max_residual
           << " (tol " << tolerance << ", " << samples.size() << " samples)";
        if (!samples.empty()) os << " worst at " << format_vector(worst_location());
        return os.str();
    }

    std::string to_csv() const {
        std::ostringstream os;
        os << std::setprecision(17);
        const std::size_t d = samples.empty() ? 0 : samples.front().location.size();
        os << "sample_id";
        for (std::size_t i = 0; i < d; ++i) os << ",loc" << i;
        os << ",residual\n";
        for (std::size_t k = 0; k < samples.size(); ++k) {
            os << k;
            for (double v : samples[k].location) os << ',' << v;
            os << ',' << samples[k].residual << '\n';
        }
        return os.str();
    }
};

/// Evaluates fn at every point and collects the residuals.
template <class Fn>
ResidualReport residual_scan(std::string name, const std::vector<Vector>& points, Fn&& fn, double tol) {
    ResidualReport r;
    r.name = std::move(name);
    r.tolerance = tol;
    r.samples.reserve(points.size());
    for (const Vector& pt : points) r.add(pt, fn(pt));
    return r;
}

/// Uniform random points in a finite box, reproducible from seed.
inline std::vector<Vector> sample_box(const Box& box, std::size_t count, std::uint64_t seed) {
    for (std::size_t i = 0; i < box.dim(); ++i)
        if (!std::isfinite(box.lower[i]) || !std::isfinite(box.upper[i]))
            throw ArgumentError("sample_box: box must be finite");
    std::mt19937_64 rng(seed);
    std::vector<Vector> pts(count, Vector(box.dim()));
    for (auto& pt : pts)
        for (std::size_t i = 0; i < box.dim(); ++i)
            pt[i] = std::uniform_real_distribution<double>(box.lower[i], box.upper[i])(rng);
    return pts;
}

// ---------------------------------------------------------------------------
// Core operations

inline void require_in_domain(const AbstractionMaps& maps, const Vector& xi, const char* where) {
    if (!maps.domain_V.contains(xi))
        throw DomainError(std::string(where) + ": xi = " + format_vector(xi) + " outside the certified domain");
}

inline void require_in_operating_region(const AbstractionMaps& maps, const Vector& x, const char* where) {
    if (!maps.operating_Xy.contains(x))
        throw DomainError(std::string(where) + ": x = " + format_vector(x) + " outside the output region");
}

/// W(xi, x) = V(p(xi), x).
inline double simulation_fn_value(const AbstractionMaps& maps, const QuadraticCertificate& cert, const Vector& xi,
                                  const Vector& x) {
    require_in_domain(maps, xi, "simulation_fn_value");
    return lyapunov_value(cert, maps.p(xi), x);
}

struct InterfaceOutput {
    Vector u_raw;  ///< before saturation
    Vector u;      ///< after saturation (equals u_raw without limits)
    bool saturated = false;
};

/// u_w(xi, x, v) = k(x, p(xi), l(xi)) + q(xi, x) v, then per-channel clamping.
inline InterfaceOutput interface_eval(const AbstractionMaps& maps, const QuadraticCertificate& cert,
                                      const InterfaceSpec& spec, const Vector& xi, const Vector& x, const Vector& v) {
    require_in_domain(maps, xi, "interface_u");
    InterfaceOutput out;
    out.u_raw = cert.k_base(x, maps.p(xi), maps.l(xi));
    const Matrix q = spec.gain_q(xi, x);
    if (q.rows() != out.u_raw.size() || q.cols() != v.size())
        throw ArgumentError("interface_u: gain shape does not match input dimensions");
    axpy(1.0, q * v, out.u_raw);
    out.u = out.u_raw;
    if (spec.saturation) {
        if (spec.saturation->size() != out.u.size())
            throw ArgumentError("interface_u: saturation channel count mismatch");
        for (std::size_t i = 0; i < out.u.size(); ++i) {
            const auto [lo, hi] = (*spec.saturation)[i];
            const double c = std::max(lo, std::min(hi, out.u[i]));
            if (c != out.u[i]) out.saturated = true;
            out.u[i] = c;
        }
    }
    return out;
}

inline Vector interface_u(const AbstractionMaps& maps, const QuadraticCertificate& cert, const InterfaceSpec& spec,
                          const Vector& xi, const Vector& x, const Vector& v) {
    return interface_eval(maps, cert, spec, xi, x, v).u;
}

/// dp/dxi(xi) delta(xi): the direction the manifold point moves per unit v.
inline Matrix manifold_velocity_gain(const AbstractionMaps& maps, const AbstractSystem& absys, const Vector& xi) {
    return maps.dp_dxi(xi) * absys.delta(xi);
}

/// Weighted least-squares gain (g^T M g)^+ g^T M dp/dxi delta. Zero when g(x)
/// vanishes.
inline Matrix least_squares_gain(const AbstractionMaps& maps, const QuadraticCertificate& cert,
                                 const InputAffineSystem& sys, const AbstractSystem& absys, const Vector& xi,
                                 const Vector& x) {
    const Matrix G = sys.g(x);
    if (G.is_zero()) return Matrix(sys.m, absys.m_hat);
    const Matrix GtM = G.transpose() * cert.M().matrix();
    const Matrix normal = sym_pseudo_inverse(SymMatrix(GtM * G));
    return normal * (GtM * manifold_velocity_gain(maps, absys, xi));
}

inline GainFunction make_zero_gain(std::size_t m, std::size_t m_hat) {
    return [m, m_hat](const Vector&, const Vector&) { return Matrix(m, m_hat); };
}

/// Gain closure over copies of the inputs.
inline GainFunction make_least_squares_gain(AbstractionMaps maps, QuadraticCertificate cert, InputAffineSystem sys,
                                            AbstractSystem absys) {
    return [maps = std::move(maps), cert = std::move(cert), sys = std::move(sys), absys = std::move(absys)](
               const Vector& xi, const Vector& x) { return least_squares_gain(maps, cert, sys, absys, xi, x); };
}

/// sqrt(M) (dp/dxi delta - g q), an n x m_hat matrix.
inline Matrix vartheta(const AbstractionMaps& maps, const QuadraticCertificate& cert, const InputAffineSystem& sys,
                       const AbstractSystem& absys, const Vector& xi, const Vector& x, const Matrix& q) {
    Matrix inner = manifold_velocity_gain(maps, absys, xi);
    if (!q.is_zero()) inner -= sys.g(x) * q;
    return cert.sqrt_M() * inner;
}

inline double vartheta_norm(const AbstractionMaps& maps, const QuadraticCertificate& cert,
                            const InputAffineSystem& sys, const AbstractSystem& absys, const Vector& xi,
                            const Vector& x, const Matrix& q) {
    require_in_domain(maps, xi, "vartheta_norm");
    return spectral_norm(vartheta(maps, cert, sys, absys, xi, x, q));
}

enum class GainPolicy { zero, least_squares };

struct ScanResult {
    double d_bar = 0.0;
    Vector argmax;
    std::vector<std::pair<Vector, double>> values;  ///< grid point, ||vartheta||
};

/// Maximum of ||vartheta|| over a grid. With the zero gain vartheta does not
/// depend on x, so the grid spans xi only (n_hat axes). The least-squares
/// gain needs (xi, x) grids with n_hat + n axes. Ties keep the first point.
inline ScanResult scan_vartheta_bound(const AbstractionMaps& maps, const QuadraticCertificate& cert,
                                      const InputAffineSystem& sys, const AbstractSystem& absys, GainPolicy policy,
                                      const GridSpec& grid, std::uint64_t cap = kDefaultGridCap) {
    const std::size_t nh = absys.n_hat;
    const bool joint = grid.dim() == nh + sys.n;
    if (grid.dim() != nh && !joint)
        throw ArgumentError("scan_vartheta_bound: grid must span xi (n_hat axes) or (xi, x) (n_hat + n axes)");
    if (policy == GainPolicy::least_squares && !joint)
        throw ArgumentError("scan_vartheta_bound: least-squares gain depends on x; use an (xi, x) grid");
    for (std::size_t i = 0; i < nh; ++i)
        if (grid.lower[i] < maps.domain_V.lower[i] || grid.upper[i] > maps.domain_V.upper[i])
            throw DomainError("scan_vartheta_bound: grid leaves the certified domain");

    ScanResult res;
    res.d_bar = -1.0;
    const Matrix zero_q(sys.m, absys.m_hat);
    const Vector x_any(sys.n, 0.0);
    for_each_grid_point(
        grid,
        [&](const Vector& pt) {
            const Vector xi(pt.begin(), pt.begin() + static_cast<std::ptrdiff_t>(nh));
            const Vector x = joint ? Vector(pt.begin() + static_cast<std::ptrdiff_t>(nh), pt.end()) : x_any;
            const Matrix q = policy == GainPolicy::zero ? zero_q : least_squares_gain(maps, cert, sys, absys, xi, x);
            const double val = vartheta_norm(maps, cert, sys, absys, xi, x, q);
            if (val > res.d_bar) {
                res.d_bar = val;
                res.argmax = pt;
            }
            res.values.emplace_back(pt, val);
        },
        cap);
    return res;
}

/// Steady part of the output-error bound, alpha_h^-1(eta^-1(2 gamma(v_inf)))
/// = sqrt(2 / (c0 (lambda - epsilon) epsilon)) d_bar v_inf.
inline double asymptotic_error_bound(const BoundConstants& bc, double v_inf) {
    bc.validate();
    if (!(v_inf >= 0.0)) throw ArgumentError("asymptotic_error_bound: v_inf must be >= 0");
    return std::sqrt(2.0 / (bc.c0 * (bc.lambda - bc.epsilon) * bc.epsilon)) * bc.d_bar * v_inf;
}

/// Output-error bound from the comparison solution of
/// dW/dt <= -(lambda - epsilon) W + gamma(v_inf):
/// sqrt((W0 e^{-(lambda-epsilon) t} + gamma(v_inf) / (lambda - epsilon)) / c0).
/// Tends to asymptotic_error_bound / sqrt(2) as t grows.
inline double transient_error_bound(const BoundConstants& bc, double W0, double t, double v_inf = 0.0) {
    bc.validate();
    if (!(W0 >= 0.0)) throw ArgumentError("transient_error_bound: W0 must be >= 0");
    if (!(t >= 0.0)) throw ArgumentError("transient_error_bound: t must be >= 0");
    if (!(v_inf >= 0.0)) throw ArgumentError("transient_error_bound: v_inf must be >= 0");
    const double rate = bc.lambda - bc.epsilon;
    const double w = W0 * std::exp(-rate * t) + bc.gamma(v_inf) / rate;
    return std::sqrt(w / bc.c0);
}

struct DissipationTerms {
    double W = 0.0;
    double W_dot = 0.0;
    double vartheta_norm = 0.0;
    double rhs = 0.0;       ///< -(lambda - epsilon) W + ||vartheta||^2 ||v||^2 / epsilon
    double residual = 0.0;  ///< W_dot - rhs; <= 0 certifies the dissipation inequality
};

/// Pointwise dissipation check with the unsaturated interface.
inline DissipationTerms dissipation_terms(const AbstractionMaps& maps, const QuadraticCertificate& cert,
                                          const InterfaceSpec& spec, const InputAffineSystem& sys,
                                          const AbstractSystem& absys, const Vector& xi, const Vector& x,
                                          const Vector& v) {
    require_in_domain(maps, xi, "dissipation_residual");
    InterfaceSpec raw = spec;
    raw.saturation.reset();
    const Vector u = interface_u(maps, cert, raw, xi, x, v);
    const Vector px = maps.p(xi);
    Vector e(px.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = px[i] - x[i];

    Vector rate = maps.dp_dxi(xi) * absys.phi(xi, v);
    const Vector fx = evaluate_dynamics(sys, x, u);
    for (std::size_t i = 0; i < rate.size(); ++i) rate[i] -= fx[i];

    DissipationTerms d;
    d.W = weighted_norm_sq(e, cert.M());
    d.W_dot = 2.0 * dot(e, cert.M().matrix() * rate);
    d.vartheta_norm = spectral_norm(vartheta(maps, cert, sys, absys, xi, x, spec.gain_q(xi, x)));
    const double vn = norm2(v);
    d.rhs = -(cert.lambda() - spec.epsilon) * d.W + d.vartheta_norm * d.vartheta_norm * vn * vn / spec.epsilon;
    d.residual = d.W_dot - d.rhs;
    return d;
}

inline double dissipation_residual(const AbstractionMaps& maps, const QuadraticCertificate& cert,
                                   const InterfaceSpec& spec, const InputAffineSystem& sys,
                                   const AbstractSystem& absys, const Vector& xi, const Vector& x, const Vector& v) {
    return dissipation_terms(maps, cert, spec, sys, absys, xi, x, v).residual;
}

/// || dp/dxi phi_bar(xi) - f_bar(p(xi)) - g(p(xi)) l(xi) ||
inline double invariance_residual_p(const AbstractionMaps& maps, const InputAffineSystem& sys,
                                    const AbstractSystem& absys, const Vector& xi) {
    require_in_domain(maps, xi, "invariance_residual_p");
    Vector lhs = maps.dp_dxi(xi) * absys.phi_bar(xi);
    const Vector rhs = evaluate_dynamics(sys, maps.p(xi), maps.l(xi));
    for (std::size_t i = 0; i < lhs.size(); ++i) lhs[i] -= rhs[i];
    return norm2(lhs);
}

/// || kappa(xi) - h(p(xi)) ||
inline double output_consistency_residual(const AbstractionMaps& maps, const AbstractSystem& absys,
                                          const InputAffineSystem& sys, const Vector& xi) {
    require_in_domain(maps, xi, "output_consistency_residual");
    return norm2(absys.kappa(xi) - sys.h(maps.p(xi)));
}

/// || m(p(xi)) - xi ||
inline double left_inverse_residual(const AbstractionMaps& maps, const Vector& xi) {
    require_in_domain(maps, xi, "left_inverse_residual");
    return norm2(maps.m(maps.p(xi)) - xi);
}

/// || kappa(m(x)) - h(x) ||
inline double output_recovery_residual(const AbstractionMaps& maps, const AbstractSystem& absys,
                                       const InputAffineSystem& sys, const Vector& x) {
    require_in_operating_region(maps, x, "output_recovery_residual");
    return norm2(absys.kappa(maps.m(x)) - sys.h(x));
}

struct LinkCoefficients {
    Vector b;  ///< m_hat
    Matrix c;  ///< m_hat x m
};

namespace detail {

/// delta^T (delta delta^T)^-1 for a full-row-rank delta.
inline Matrix right_pseudo_inverse(const Matrix& delta, double rel_tol = 1e-12) {
    const SymMatrix DDt(delta * delta.transpose());
    const auto ev = sym_eigenvalues(DDt, 1e-14);
    const double scale = std::max(std::abs(ev.max()), std::numeric_limits<double>::min());
    if (!(ev.min() > rel_tol * scale) || !(ev.min() > 0.0)) {
        std::ostringstream os;
        os << "delta is not of full row rank (smallest eigenvalue of delta delta^T " << ev.min() << ")";
        throw CertificateError(os.str());
    }
    return delta.transpose() * sym_pseudo_inverse(DDt, 0.0);
}

}  // namespace detail

/// Links v = b(x) + c(x) u that keep xi = m(x) invariant:
/// b = delta^+(m(x)) (dm/dx f_bar(x) - phi_bar(m(x))), c = delta^+(m(x)) dm/dx g(x).
inline LinkCoefficients link_coefficients(const AbstractionMaps& maps, const InputAffineSystem& sys,
                                          const AbstractSystem& absys, const Vector& x) {
    require_in_operating_region(maps, x, "link_coefficients");
    const Vector xi = maps.m(x);
    Matrix dinv;
    try {
        dinv = detail::right_pseudo_inverse(absys.delta(xi));
    } catch (const CertificateError& e) {
        throw CertificateError(std::string("link_coefficients: ") + e.what() + " at xi = " + format_vector(xi));
    }
    const Matrix Dm = maps.dm_dx(x);
    const Vector drift = Dm * sys.f_bar(x) - absys.phi_bar(xi);
    return {dinv * drift, dinv * (Dm * sys.g(x))};
}

struct MRelationResiduals {
    double r_a = 0.0;  ///< || dm/dx f_bar - phi_bar(m) - delta(m) b ||
    double r_b = 0.0;  ///< || dm/dx g - delta(m) c ||
};

inline MRelationResiduals mrelation_residuals(const AbstractionMaps& maps, const InputAffineSystem& sys,
                                              const AbstractSystem& absys, const Vector& x) {
    const LinkCoefficients bc = link_coefficients(maps, sys, absys, x);
    const Vector xi = maps.m(x);
    const Matrix Dm = maps.dm_dx(x);
    const Matrix delta = absys.delta(xi);
    const Vector ra = Dm * sys.f_bar(x) - absys.phi_bar(xi) - delta * bc.b;
    const Matrix rb = Dm * sys.g(x) - delta * bc.c;
    return {norm2(ra), rb.frobenius_norm()};
}

/// || C (x - p(m(x))) || for a linear output h(x) = C x.
inline double kernel_condition_residual(const AbstractionMaps& maps, const InputAffineSystem& sys, const Vector& x) {
    if (!sys.output_matrix) throw UnsupportedError("kernel_condition_residual: output map is not linear");
    require_in_operating_region(maps, x, "kernel_condition_residual");
    return norm2(*sys.output_matrix * (x - maps.p(maps.m(x))));
}

/// Bounding box of p over a grid of the domain, widened by margin times the
/// span on each side (plus an absolute pad). Used as the sampling region
/// "around the manifold" for dissipation clouds.
inline Box manifold_sampling_box(const AbstractionMaps& maps, const GridSpec& grid, double margin = 0.25,
                                 double pad = 1.0) {
    Vector lo, hi;
    for_each_grid_point(grid, [&](const Vector& xi) {
        const Vector x = maps.p(xi);
        if (lo.empty()) {
            lo = x;
            hi = x;
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            lo[i] = std::min(lo[i], x[i]);
            hi[i] = std::max(hi[i], x[i]);
        }
    });
    for (std::size_t i = 0; i < lo.size(); ++i) {
        const double w = margin * (hi[i] - lo[i]) + pad;
        lo[i] -= w;
        hi[i] += w;
    }
    return Box(lo, hi);
}

}  // namespace ashc
