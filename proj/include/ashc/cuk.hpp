// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Averaged model of a DC-to-DC Cuk converter wired into the generic
// abstraction machinery: one-dimensional abstraction xi (the steady duty
// cycle), manifold p(xi) of constant-duty equilibria, left inverse m(x4),
// and a quadratic certificate valid for every duty cycle in [0, 1].
//
// State x = [i1, v2, i3, v4], input u = duty cycle, output y = v4.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ashc/certificates.hpp"
#include "ashc/engine.hpp"
#include "ashc/errors.hpp"
#include "ashc/linalg.hpp"
#include "ashc/numdiff.hpp"
#include "ashc/system.hpp"

namespace ashc::cuk {

struct CukParams {
    double R_i = 0.05;    ///< input resistance [ohm]
    double L1 = 0.010;    ///< [H]
    double C2 = 0.011;    ///< [F]
    double L3 = 0.010;    ///< [H]
    double C4 = 0.011;    ///< [F]
    double G_L = 0.0447;  ///< load admittance [S]
    double E = 12.0;      ///< source voltage [V]

    void validate() const {
        if (!(R_i > 0 && L1 > 0 && C2 > 0 && L3 > 0 && C4 > 0 && G_L > 0 && E > 0))
            throw ArgumentError("CukParams: every parameter must be strictly positive");
    }

    double a() const noexcept { return G_L * R_i; }

    /// E / (2 sqrt(R_i G_L)): largest |v4| reachable by a steady duty cycle.
    double output_limit() const noexcept { return E / (2.0 * std::sqrt(R_i * G_L)); }
};

enum class DeltaVariant { unit, redesigned };

enum class MRoot { principal, alternate };

inline DeltaVariant parse_delta_variant(const std::string& s) {
    if (s == "unit") return DeltaVariant::unit;
    if (s == "redesigned") return DeltaVariant::redesigned;
    throw ArgumentError("unknown delta variant '" + s + "' (expected unit or redesigned)");
}

inline const char* to_string(DeltaVariant v) { return v == DeltaVariant::unit ? "unit" : "redesigned"; }

/// The certificate matrix computed for the default parameters (decay rate 2).
inline SymMatrix default_certificate_matrix() {
    return SymMatrix{{0.4804, 0.0102, 0.0002, -0.0093},
                     {0.0102, 0.5304, 0.0081, 0.0001},
                     {0.0002, 0.0081, 0.4824, -0.0135},
                     {-0.0093, 0.0001, -0.0135, 0.5304}};
}

inline constexpr double kDefaultLambda = 2.0;
inline constexpr double kDefaultEpsilon = 1.0;
inline constexpr double kDomainLower = 0.0;
inline constexpr double kDomainUpper = 0.95;
inline constexpr double kOutputLower = -120.0;
inline constexpr double kOutputUpper = 0.0;

// ---------------------------------------------------------------------------
// Plant

inline Vector f_bar(const CukParams& P, const Vector& x) {
    return {(-P.R_i * x[0] - x[1] + P.E) / P.L1, x[0] / P.C2, -x[3] / P.L3, (x[2] - P.G_L * x[3]) / P.C4};
}

/// Input column. The third entry is -v2 / L3: the duty cycle couples v2 into
/// the i3 equation.
inline Matrix g(const CukParams& P, const Vector& x) {
    return Matrix{{x[1] / P.L1}, {(-x[0] + x[2]) / P.C2}, {-x[1] / P.L3}, {0.0}};
}

inline Matrix A_bar(const CukParams& P, double u) {
    return Matrix{{-P.R_i / P.L1, -(1.0 - u) / P.L1, 0.0, 0.0},
                  {(1.0 - u) / P.C2, 0.0, u / P.C2, 0.0},
                  {0.0, -u / P.L3, 0.0, -1.0 / P.L3},
                  {0.0, 0.0, 1.0 / P.C4, -P.G_L / P.C4}};
}

inline Vector b_bar(const CukParams& P) { return {P.E / P.L1, 0.0, 0.0, 0.0}; }

inline Matrix output_matrix() { return Matrix{{0.0, 0.0, 0.0, 1.0}}; }

// ---------------------------------------------------------------------------
// Abstraction maps

/// (xi - 1)^2 + G_L R_i xi^2; positive for every real xi.
inline double denom(const CukParams& P, double xi) { return (xi - 1.0) * (xi - 1.0) + P.a() * xi * xi; }

inline double denom_prime(const CukParams& P, double xi) { return 2.0 * (xi - 1.0) + 2.0 * P.a() * xi; }

/// Equilibrium of the plant under constant duty cycle xi.
inline Vector p_map(const CukParams& P, double xi) {
    const double D = denom(P, xi);
    return {P.E * P.G_L * xi * xi / D, -P.E * (xi - 1.0) / D, P.E * P.G_L * xi * (xi - 1.0) / D,
            P.E * xi * (xi - 1.0) / D};
}

/// d p / d xi by the quotient rule.
inline Vector dp_map(const CukParams& P, double xi) {
    const double D = denom(P, xi);
    const double Dp = denom_prime(P, xi);
    const double num[4] = {P.G_L * xi * xi, -(xi - 1.0), P.G_L * xi * (xi - 1.0), xi * (xi - 1.0)};
    const double dnum[4] = {2.0 * P.G_L * xi, -1.0, P.G_L * (2.0 * xi - 1.0), 2.0 * xi - 1.0};
    Vector out(4);
    for (int i = 0; i < 4; ++i) out[i] = P.E * (dnum[i] * D - num[i] * Dp) / (D * D);
    return out;
}

inline double kappa_map(const CukParams& P, double xi) { return P.E * xi * (xi - 1.0) / denom(P, xi); }

/// Residual of the quadratic satisfied by xi = m(x4):
/// [(a + 1) x4 - E] m^2 + (E - 2 x4) m + x4 with a = G_L R_i.
inline double quadratic_root_check(const CukParams& P, double x4, double m) {
    return std::abs(((P.a() + 1.0) * x4 - P.E) * m * m + (P.E - 2.0 * x4) * m + x4);
}

namespace detail {

inline double discriminant(const CukParams& P, double x4) { return P.E * P.E - 4.0 * P.a() * x4 * x4; }

inline void check_m_domain(const CukParams& P, double x4) {
    if (!(x4 <= 0.0) || !(discriminant(P, x4) >= 0.0)) {
        std::ostringstream os;
        os.precision(10);
        os << "m_map: x4 = " << x4 << " outside [" << -P.output_limit() << ", 0]";
        throw DomainError(os.str());
    }
}

}  // namespace detail

/// Left inverse of p on [0, 0.95] through the output: the root of the
/// quadratic above lying on the branch through m(0) = 0. The alternate root
/// exists for fault injection.
inline double m_map(const CukParams& P, double x4, MRoot root = MRoot::principal) {
    detail::check_m_domain(P, x4);
    const double s = root == MRoot::principal ? 1.0 : -1.0;
    const double num = -P.E + 2.0 * x4 + s * std::sqrt(detail::discriminant(P, x4));
    const double den = 2.0 * (P.a() + 1.0) * x4 - 2.0 * P.E;
    return num / den;
}

inline double dm_map(const CukParams& P, double x4, MRoot root = MRoot::principal) {
    detail::check_m_domain(P, x4);
    const double s = root == MRoot::principal ? 1.0 : -1.0;
    const double sq = std::sqrt(detail::discriminant(P, x4));
    const double num = -P.E + 2.0 * x4 + s * sq;
    const double den = 2.0 * (P.a() + 1.0) * x4 - 2.0 * P.E;
    if (sq == 0.0) throw DomainError("dm_map: derivative unbounded at the edge of the solvable interval");
    const double dnum = 2.0 - s * 4.0 * P.a() * x4 / sq;
    const double dden = 2.0 * (P.a() + 1.0);
    return (dnum * den - num * dden) / (den * den);
}

inline double delta_map(const CukParams& P, DeltaVariant variant, double xi) {
    if (variant == DeltaVariant::unit) return 1.0;
    const double D = denom(P, xi);
    return D * D;
}

enum class ChiReading { as_printed, square_root };

/// Hand-simplified closed form of the link coefficient b(x) for the
/// redesigned delta, with chi = E^2 - 4 G_L R_i x4^2. The chi factors admit
/// two readings (chi or sqrt(chi)); both are kept so they can be compared
/// against link_coefficients.
inline double closed_form_link_b(const CukParams& P, const Vector& x, ChiReading reading) {
    const double a = P.a();
    const double x3 = x[2];
    const double x4 = x[3];
    double chi = detail::discriminant(P, x4);
    if (reading == ChiReading::square_root) chi = std::sqrt(chi);
    const double t = x4 - P.E + a * x4;
    return -2.0 * (x3 - P.G_L * x4) * t * t /
           (P.C4 * P.E * chi * (P.E + chi - a * chi + P.E * a - 4.0 * a * x4));
}

// ---------------------------------------------------------------------------
// Assembly

struct CukOptions {
    DeltaVariant delta = DeltaVariant::redesigned;
    SymMatrix M = default_certificate_matrix();
    double lambda = kDefaultLambda;
    double epsilon = kDefaultEpsilon;
    bool saturate_interface = true;
    // Fault injection.
    double p4_shift = 0.0;
    MRoot m_root = MRoot::principal;
};

struct CukAbstraction {
    CukParams params;
    CukOptions options;
    InputAffineSystem plant;
    AbstractSystem abstraction;
    AbstractionMaps maps;
    QuadraticCertificate cert;
    InterfaceSpec interface;

    /// Vertices A_bar(0), A_bar(1) of the input polytope.
    std::vector<Matrix> lmi_vertices() const { return {A_bar(params, 0.0), A_bar(params, 1.0)}; }

    double kappa_inverse(double y) const { return m_map(params, y, options.m_root); }
};

namespace detail {

inline void require(bool ok, const std::string& identity) {
    if (!ok) throw CertificateError("build_cuk: invariant violated: " + identity);
}

}  // namespace detail

/// Wires the converter into the generic structures and checks the
/// construction invariants: positive parameters, delta > 0 on the domain,
/// kappa vanishing at 0 and 1 and staying inside the solvable output range,
/// f_bar + g u == A_bar(u) x + b_bar, and analytic Jacobians matching
/// central differences.
inline CukAbstraction build_cuk(const CukParams& params = {}, const CukOptions& opt = {}) {
    params.validate();
    const CukParams P = params;

    InputAffineSystem plant;
    plant.n = 4;
    plant.m = 1;
    plant.p_out = 1;
    plant.f_bar = [P](const Vector& x) { return f_bar(P, x); };
    plant.g = [P](const Vector& x) { return g(P, x); };
    plant.h = [](const Vector& x) { return Vector{x[3]}; };
    plant.A_bar = [P](const Vector& u) { return A_bar(P, u[0]); };
    plant.b_bar = b_bar(P);
    plant.output_matrix = output_matrix();
    const double inf = std::numeric_limits<double>::infinity();
    plant.operating_box = Box({-inf, -inf, -inf, kOutputLower}, {inf, inf, inf, kOutputUpper});
    plant.validate();

    const DeltaVariant dv = opt.delta;
    AbstractSystem abs;
    abs.n_hat = 1;
    abs.m_hat = 1;
    abs.phi_bar = [](const Vector&) { return Vector{0.0}; };
    abs.delta = [P, dv](const Vector& xi) { return Matrix{{delta_map(P, dv, xi[0])}}; };
    abs.kappa = [P](const Vector& xi) { return Vector{kappa_map(P, xi[0])}; };
    abs.validate();

    const double shift = opt.p4_shift;
    const MRoot root = opt.m_root;
    AbstractionMaps maps;
    maps.p = [P, shift](const Vector& xi) {
        Vector x = p_map(P, xi[0]);
        x[3] += shift;
        return x;
    };
    maps.dp_dxi = [P](const Vector& xi) { return Matrix::column(dp_map(P, xi[0])); };
    maps.l = [](const Vector& xi) { return Vector{xi[0]}; };
    maps.m = [P, root](const Vector& x) { return Vector{m_map(P, x[3], root)}; };
    maps.dm_dx = [P, root](const Vector& x) { return Matrix{{0.0, 0.0, 0.0, dm_map(P, x[3], root)}}; };
    maps.domain_V = Box({kDomainLower}, {kDomainUpper});
    maps.operating_Xy = plant.operating_box;

    QuadraticCertificate cert(opt.M, opt.lambda);

    // Construction invariants.
    const auto domain_grid = grid_points(GridSpec::uniform_1d(kDomainLower, kDomainUpper, 201));
    for (const Vector& xi : domain_grid) {
        detail::require(delta_map(P, dv, xi[0]) > 1e-7, "delta(xi) > 0 on the domain");
        const Matrix fd = central_difference_jacobian(maps.p, xi, 1e-6);
        detail::require(max_relative_difference(maps.dp_dxi(xi), fd, 1.0) <= 1e-5,
                        "dp/dxi matches central differences");
    }
    detail::require(kappa_map(P, 0.0) == 0.0 && kappa_map(P, 1.0) == 0.0, "kappa(0) = kappa(1) = 0");
    double kmin = 0.0;
    for (const Vector& s : grid_points(GridSpec::uniform_1d(0.0, 1.0, 2001))) kmin = std::min(kmin, kappa_map(P, s[0]));
    detail::require(kmin > -P.output_limit() - 1e-9, "min kappa on [0, 1] above -E / (2 sqrt(R_i G_L))");

    for (const Vector& y : grid_points(GridSpec::uniform_1d(kOutputLower, kOutputUpper - 1e-3, 101))) {
        const Vector x{0.0, 0.0, 0.0, y[0]};
        const double fd = central_difference_jacobian(maps.m, x, 1e-6)(0, 3);
        detail::require(std::abs(maps.dm_dx(x)(0, 3) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)),
                        "dm/dx4 matches central differences");
    }
    for (const Vector& s : sample_box(Box({-50, 0, -50, -120, 0}, {50, 150, 50, 0, 1}), 50, 7)) {
        const Vector x(s.begin(), s.begin() + 4);
        const Vector u{s[4]};
        const Vector lhs = evaluate_dynamics(plant, x, u);
        const Vector rhs = evaluate_affine_form(plant, x, u);
        detail::require(norm_inf(lhs - rhs) <= 1e-9 * std::max(1.0, norm_inf(rhs)),
                        "f_bar(x) + g(x) u == A_bar(u) x + b_bar");
    }

    InterfaceSpec iface;
    iface.epsilon = opt.epsilon;
    iface.gain_q = make_least_squares_gain(maps, cert, plant, abs);
    if (opt.saturate_interface) iface.saturation = std::vector<std::pair<double, double>>{{0.0, 1.0}};
    iface.validate(cert);

    return CukAbstraction{P, opt, std::move(plant), std::move(abs), std::move(maps), std::move(cert),
                          std::move(iface)};
}

/// Samples around the manifold for dissipation clouds.
inline Box sampling_box(const CukAbstraction& c) {
    return manifold_sampling_box(c.maps, GridSpec::uniform_1d(kDomainLower, kDomainUpper, 201));
}

}  // namespace ashc::cuk
