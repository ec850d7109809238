// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "ashc/cuk.hpp"
#include "test_support.hpp"

using namespace ashc;
using namespace ashc::cuk;
using ashc::testing::Gen;

TEST(CukParamsTest, DefaultsAndValidation) {
    const CukParams P;
    EXPECT_EQ(P.R_i, 0.05);
    EXPECT_EQ(P.L1, 0.010);
    EXPECT_EQ(P.L3, 0.010);
    EXPECT_EQ(P.C2, 0.011);
    EXPECT_EQ(P.C4, 0.011);
    EXPECT_EQ(P.G_L, 0.0447);
    EXPECT_EQ(P.E, 12.0);
    EXPECT_NO_THROW(P.validate());
    CukParams bad = P;
    bad.C2 = 0.0;
    EXPECT_THROW(bad.validate(), ArgumentError);
    EXPECT_THROW(build_cuk(bad), ArgumentError);
    EXPECT_NEAR(P.output_limit(), 126.9149, 1e-4);
}

TEST(PMap, PinnedValues) {
    const CukParams P;
    EXPECT_EQ(p_map(P, 0.0), (Vector{0.0, 12.0, 0.0, 0.0}));
    const Vector p = p_map(P, 0.6156);
    const Vector expect{1.3678, 31.0396, -0.8541, -19.1080};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], expect[i], 5e-4) << i;
    EXPECT_NEAR(p_map(P, 0.3677)[3], -6.9732, 1e-3);
}

TEST(PMap, IsTheConstantDutyEquilibriumFamily) {
    const CukParams P;
    for (const Vector& xi : grid_points(GridSpec::uniform_1d(0.0, 0.95, 1001))) {
        const Vector x = p_map(P, xi[0]);
        Vector f = f_bar(P, x);
        axpy(xi[0], g(P, x).col(0), f);
        ASSERT_LE(norm2(f), 1e-9) << xi[0];
    }
}

TEST(KappaMap, PinnedValuesAndExtremum) {
    const CukParams P;
    EXPECT_EQ(kappa_map(P, 0.0), 0.0);
    EXPECT_EQ(kappa_map(P, 1.0), 0.0);
    EXPECT_NEAR(kappa_map(P, 0.5), -11.973, 1e-3);
    // Extreme value by golden-section search on [0, 1].
    double a = 0.0, b = 1.0;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
        const double c1 = b - r * (b - a), c2 = a + r * (b - a);
        if (kappa_map(P, c1) < kappa_map(P, c2)) b = c2; else a = c1;
    }
    EXPECT_NEAR(kappa_map(P, 0.5 * (a + b)), -126.91, 0.05);
    EXPECT_NEAR(kappa_map(P, 0.5 * (a + b)), -P.output_limit(), 1e-9);
    // Over all reals the positive extremum is the mirror value.
    double best = 0.0;
    for (double s = 1.0; s < 50.0; s += 1e-4) best = std::max(best, kappa_map(P, s));
    EXPECT_NEAR(best, 126.91, 0.05);
}

TEST(MMap, PinnedValues) {
    const CukParams P;
    EXPECT_EQ(m_map(P, 0.0), 0.0);
    EXPECT_NEAR(m_map(P, -6.9732), 0.3677, 1e-4);
    EXPECT_NEAR(m_map(P, -19.1080), 0.6156, 1e-4);
    EXPECT_THROW(m_map(P, 1.0), DomainError);
    EXPECT_THROW(m_map(P, -200.0), DomainError);
}

TEST(MMap, DenominatorStaysNegativeOnOutputRegion) {
    const CukParams P;
    for (const Vector& y : grid_points(GridSpec::uniform_1d(-120.0, 0.0, 1001)))
        EXPECT_LE(2.0 * (P.a() + 1.0) * y[0] - 2.0 * P.E, -2.0 * P.E);
}

TEST(QuadraticRootCheck, RootsAndWrongRoot) {
    const CukParams P;
    for (double y : {-120.0, -60.0, -1.0}) EXPECT_LE(quadratic_root_check(P, y, m_map(P, y)), 1e-9);
    EXPECT_EQ(quadratic_root_check(P, 0.0, 0.0), 0.0);
    EXPECT_GT(quadratic_root_check(P, -6.9732, 0.9), 0.1);
    // The alternate root solves the same quadratic but is not the left inverse.
    EXPECT_LE(quadratic_root_check(P, -19.108, m_map(P, -19.108, MRoot::alternate)), 1e-9);
    EXPECT_GT(std::abs(m_map(P, -19.108, MRoot::alternate) - 0.6156), 0.1);
}

TEST(DeltaMap, Variants) {
    const CukParams P;
    EXPECT_EQ(delta_map(P, DeltaVariant::redesigned, 0.0), 1.0);
    EXPECT_NEAR(delta_map(P, DeltaVariant::redesigned, 1.0), 4.995e-6, 1e-9);
    EXPECT_DOUBLE_EQ(delta_map(P, DeltaVariant::redesigned, 1.0), P.a() * P.a());
    for (double s : {0.0, 0.3, 0.95, 7.0}) EXPECT_EQ(delta_map(P, DeltaVariant::unit, s), 1.0);
    double mn = 1e300;
    for (const Vector& xi : grid_points(GridSpec::uniform_1d(0.0, 0.95, 2001)))
        mn = std::min(mn, delta_map(P, DeltaVariant::redesigned, xi[0]));
    EXPECT_GT(mn, 1e-7);
    EXPECT_EQ(parse_delta_variant("unit"), DeltaVariant::unit);
    EXPECT_EQ(parse_delta_variant("redesigned"), DeltaVariant::redesigned);
    EXPECT_THROW(parse_delta_variant("Unit"), ArgumentError);
    EXPECT_STREQ(to_string(DeltaVariant::unit), "unit");
}

TEST(InputColumn, ThirdEntryCouplesCapacitorVoltage) {
    // The state-matrix form decides the third entry of g: d/du of
    // A_bar(u) x + b_bar is A_bar(1) x - A_bar(0) x.
    const CukParams P;
    Gen gen(61);
    for (int k = 0; k < 50; ++k) {
        const Vector x = gen.vector(4, -50, 50);
        const Vector slope = A_bar(P, 1.0) * x - A_bar(P, 0.0) * x;
        const Vector col = g(P, x).col(0);
        for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(col[i], slope[i], 1e-9 * std::max(1.0, std::abs(slope[i])));
        EXPECT_DOUBLE_EQ(col[2], -x[1] / P.L3);
    }
}

TEST(BuildCuk, DefaultsAreFeasibleAndWired) {
    const auto c = build_cuk();
    const auto r = verify_polytopic_lmi(c.lmi_vertices(), c.cert.M(), c.cert.lambda(), 1e-6);
    EXPECT_TRUE(r.feasible);
    EXPECT_EQ(c.plant.n, 4u);
    EXPECT_EQ(c.abstraction.n_hat, 1u);
    EXPECT_EQ(c.maps.domain_V.lower[0], 0.0);
    EXPECT_EQ(c.maps.domain_V.upper[0], 0.95);
    EXPECT_EQ(c.maps.operating_Xy.lower[3], -120.0);
    EXPECT_EQ(c.maps.operating_Xy.upper[3], 0.0);
    EXPECT_EQ(c.interface.epsilon, 1.0);
    ASSERT_TRUE(c.interface.saturation.has_value());
    EXPECT_EQ((*c.interface.saturation)[0], (std::pair<double, double>{0.0, 1.0}));
    EXPECT_EQ(c.maps.l(Vector{0.42})[0], 0.42);
    EXPECT_EQ(c.abstraction.phi_bar(Vector{0.42})[0], 0.0);
    EXPECT_NEAR(c.kappa_inverse(-19.11), 0.6156, 1e-2);
}

TEST(BuildCuk, ScannedBoundsForBothDeltas) {
    for (auto [variant, lo, hi] : {std::tuple{DeltaVariant::redesigned, 11.85, 12.85},
                                   std::tuple{DeltaVariant::unit, 1700.0, 1820.0}}) {
        CukOptions o;
        o.delta = variant;
        const auto c = build_cuk({}, o);
        const auto s = scan_vartheta_bound(c.maps, c.cert, c.plant, c.abstraction, GainPolicy::zero,
                                           GridSpec::uniform_1d(0.0, 0.95, 2001));
        EXPECT_GE(s.d_bar, lo);
        EXPECT_LE(s.d_bar, hi);
    }
}

TEST(BuildCuk, RejectsInvalidCertificateOptions) {
    CukOptions o;
    o.epsilon = 2.5;
    EXPECT_THROW(build_cuk({}, o), ArgumentError);
    o = CukOptions{};
    o.M = SymMatrix(Matrix{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, -1}});
    EXPECT_THROW(build_cuk({}, o), CertificateError);
}

TEST(BuildCuk, AlternateParametersStillWire) {
    CukParams P;
    P.E = 24.0;
    P.G_L = 0.1;
    const auto c = build_cuk(P);
    EXPECT_NEAR(c.params.output_limit(), 24.0 / (2.0 * std::sqrt(0.05 * 0.1)), 1e-12);
    EXPECT_LE(invariance_residual_p(c.maps, c.plant, c.abstraction, Vector{0.5}), 1e-9);
}

TEST(SamplingBox, CoversTheManifold) {
    const auto c = build_cuk();
    const Box b = sampling_box(c);
    for (const Vector& xi : grid_points(GridSpec::uniform_1d(0.0, 0.95, 101)))
        EXPECT_TRUE(b.contains(c.maps.p(xi)));
}
