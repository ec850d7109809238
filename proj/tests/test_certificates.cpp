// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "ashc/certificates.hpp"
#include "ashc/cuk.hpp"
#include "test_support.hpp"

using namespace ashc;
using ashc::testing::Gen;

namespace {

struct Fixture {
    cuk::CukAbstraction c = cuk::build_cuk();
    std::vector<Matrix> vertices = c.lmi_vertices();
};

const Fixture& fx() {
    static const Fixture f;
    return f;
}

/// Largest eigenvalue of a symmetric matrix by the characteristic-polynomial
/// oracle, independent of the Jacobi solver.
double oracle_max_eigenvalue(const SymMatrix& S, double bound) {
    const auto roots =
        ashc::testing::real_roots(ashc::testing::characteristic_polynomial(S.matrix()), -bound, bound, 400000);
    return roots.back();
}

}  // namespace

TEST(QuadraticCertificateTest, StoresExtremeEigenvalues) {
    const auto& cert = fx().c.cert;
    const auto ev = sym_eigenvalues(cert.M(), 1e-13);
    EXPECT_NEAR(cert.sigma_min(), ev.min(), 1e-9);
    EXPECT_NEAR(cert.sigma_max(), ev.max(), 1e-9);
    EXPECT_LE(cert.sigma_min(), cert.sigma_max());
    EXPECT_DOUBLE_EQ(cert.alpha_lower(2.0), 4.0 * cert.sigma_min());
    EXPECT_DOUBLE_EQ(cert.alpha_upper(2.0), 4.0 * cert.sigma_max());
    EXPECT_DOUBLE_EQ(cert.alpha_decay(2.0), 4.0 * cert.lambda() * cert.sigma_min());
}

TEST(QuadraticCertificateTest, DefaultFeedbackIsIdentityOnTheDiagonal) {
    const auto& cert = fx().c.cert;
    Gen gen(31);
    EXPECT_TRUE(cert.identity_feedback());
    for (int k = 0; k < 50; ++k) {
        const Vector x = gen.vector(4, -10, 10);
        const Vector u{gen.uniform(0, 1)};
        EXPECT_EQ(cert.k_base(x, x, u), u);
    }
}

TEST(QuadraticCertificateTest, RejectsBadConstruction) {
    EXPECT_THROW(QuadraticCertificate(SymMatrix::identity(2), 0.0), ArgumentError);
    EXPECT_THROW(QuadraticCertificate(SymMatrix(Matrix{{1.0, 0.0}, {0.0, -1.0}}), 1.0), CertificateError);
}

TEST(VerifyPolytopicLmi, ConverterCertificateFeasibleAtRateTwo) {
    const LmiReport r = verify_polytopic_lmi(fx().vertices, cuk::default_certificate_matrix(), 2.0, 1e-6);
    EXPECT_TRUE(r.feasible);
    EXPECT_TRUE(r.m_positive_definite);
    ASSERT_EQ(r.vertex_max_eigenvalue.size(), 2u);
    for (double e : r.vertex_max_eigenvalue) EXPECT_LE(e, 0.0);
    EXPECT_NE(r.to_text().find("feasible = true"), std::string::npos);
}

TEST(VerifyPolytopicLmi, IdentityWeightInfeasible) {
    const LmiReport r = verify_polytopic_lmi(fx().vertices, SymMatrix::identity(4), 2.0, 1e-6);
    EXPECT_FALSE(r.feasible);
}

TEST(VerifyPolytopicLmi, RateTenInfeasibleAgreesWithOracle) {
    const SymMatrix M = cuk::default_certificate_matrix();
    const LmiReport r = verify_polytopic_lmi(fx().vertices, M, 10.0, 1e-6);
    EXPECT_FALSE(r.feasible);
    for (std::size_t i = 0; i < 2; ++i) {
        const double oracle = oracle_max_eigenvalue(lmi_lhs(fx().vertices[i], M, 10.0), 200.0);
        EXPECT_GT(oracle, 0.0);
        EXPECT_NEAR(r.vertex_max_eigenvalue[i], oracle, 1e-6 * std::max(1.0, std::abs(oracle)));
    }
    EXPECT_NE(r.to_text().find("FAIL"), std::string::npos);
}

TEST(VerifyPolytopicLmi, VertexEigenvaluesAtRateTwoAgreeWithOracle) {
    const SymMatrix M = cuk::default_certificate_matrix();
    const LmiReport r = verify_polytopic_lmi(fx().vertices, M, 2.0, 1e-6);
    for (std::size_t i = 0; i < 2; ++i) {
        const double oracle = oracle_max_eigenvalue(lmi_lhs(fx().vertices[i], M, 2.0), 200.0);
        EXPECT_NEAR(r.vertex_max_eigenvalue[i], oracle, 1e-8);
    }
    EXPECT_NEAR(r.vertex_max_eigenvalue[0], -0.513, 1e-3);
    EXPECT_NEAR(r.vertex_max_eigenvalue[1], -1.85e-3, 1e-4);
}

TEST(VerifyPolytopicLmi, ArgumentChecks) {
    EXPECT_THROW(verify_polytopic_lmi({}, SymMatrix::identity(4), 2.0), ArgumentError);
    EXPECT_THROW(verify_polytopic_lmi(fx().vertices, SymMatrix::identity(4), -1.0), ArgumentError);
    EXPECT_THROW(verify_polytopic_lmi(fx().vertices, SymMatrix::identity(3), 2.0), ArgumentError);
}

TEST(LyapunovValue, TrivialAndPinnedCases) {
    const auto& cert = fx().c.cert;
    const Vector x{1.0, 2.0, 3.0, 4.0};
    EXPECT_EQ(lyapunov_value(cert, x, x), 0.0);
    EXPECT_DOUBLE_EQ(lyapunov_value(cert, Vector{1.0, 0.0, 0.0, 0.0}, Vector(4, 0.0)), 0.4804);
    EXPECT_THROW(lyapunov_value(cert, Vector{1.0}, Vector{0.0}), ArgumentError);
}

TEST(LyapunovValue, EnvelopesAndSymmetryOnRandomPairs) {
    const auto& cert = fx().c.cert;
    Gen gen(32);
    for (int k = 0; k < 200; ++k) {
        const Vector x = gen.vector(4, -100, 100);
        const Vector z = gen.vector(4, -100, 100);
        const double V = lyapunov_value(cert, x, z);
        const double r2 = dot(x - z, x - z);
        EXPECT_GE(V, cert.sigma_min() * r2 * (1 - 1e-12));
        EXPECT_LE(V, cert.sigma_max() * r2 * (1 + 1e-12));
        EXPECT_EQ(V, lyapunov_value(cert, z, x));
    }
}

TEST(OutputLowerBound, ConverterCases) {
    const SymMatrix M = cuk::default_certificate_matrix();
    const Matrix C = cuk::output_matrix();
    EXPECT_TRUE(check_output_lower_bound(M, C, 0.52));
    EXPECT_FALSE(check_output_lower_bound(M, C, 10.0));
    EXPECT_THROW(check_output_lower_bound(M, C, 0.0), ArgumentError);
    EXPECT_THROW(check_output_lower_bound(M, Matrix(1, 3), 0.5), ArgumentError);
    // Margin: smallest eigenvalue of M - 0.52 C^T C.
    const SymMatrix S(M.matrix() - 0.52 * (C.transpose() * C));
    EXPECT_NEAR(sym_eigenvalues(S).min(), 0.00983, 1e-5);
}

TEST(OutputLowerBound, ImpliesQuadraticLowerBoundOnSamples) {
    const auto& cert = fx().c.cert;
    const Matrix C = cuk::output_matrix();
    Gen gen(33);
    for (int k = 0; k < 500; ++k) {
        const Vector x = gen.vector(4, -100, 100);
        const Vector z = gen.vector(4, -100, 100);
        const double y = (x[3] - z[3]);
        EXPECT_GE(lyapunov_value(cert, x, z), 0.52 * y * y);
    }
}

TEST(DecrementAlongPair, TrivialCases) {
    const auto& c = fx().c;
    const Vector x{1.0, 2.0, 3.0, -4.0};
    EXPECT_EQ(decrement_along_pair(c.cert, c.plant, x, x, Vector{0.5}), 0.0);
    const Vector z{0.5, -1.0, 2.0, 1.0};
    const Vector z3 = x - 3.0 * (x - z);
    const double d1 = decrement_along_pair(c.cert, c.plant, x, z, Vector{0.3});
    const double d3 = decrement_along_pair(c.cert, c.plant, x, z3, Vector{0.3});
    EXPECT_NEAR(d3, 9.0 * d1, 1e-12 * std::abs(d3));
}

TEST(DecrementAlongPair, DecaysAtCertifiedRateOnRandomSamples) {
    const auto& c = fx().c;
    Gen gen(34);
    for (int k = 0; k < 500; ++k) {
        const Vector x = gen.vector(4, -100, 100);
        const Vector z = gen.vector(4, -100, 100);
        const Vector u{gen.uniform(0, 1)};
        EXPECT_LE(decrement_along_pair(c.cert, c.plant, x, z, u), -2.0 * lyapunov_value(c.cert, x, z) + 1e-8);
    }
}

TEST(DecrementAlongPair, DenseConvexCombinationsOfVertices) {
    // Feasibility at the vertices extends to every u in [0, 1] because A_bar
    // is affine in u.
    const auto& c = fx().c;
    Gen gen(35);
    for (int i = 0; i <= 1000; ++i) {
        const Vector u{i / 1000.0};
        const Vector x = gen.vector(4, -10, 10);
        const Vector z = gen.vector(4, -10, 10);
        EXPECT_LE(decrement_along_pair(c.cert, c.plant, x, z, u), -2.0 * lyapunov_value(c.cert, x, z) + 1e-8);
    }
}

TEST(DecrementAlongPair, UnsupportedStructure) {
    const auto& c = fx().c;
    InputAffineSystem plain = c.plant;
    plain.A_bar.reset();
    const Vector x(4, 1.0);
    EXPECT_THROW(decrement_along_pair(c.cert, plain, x, x, Vector{0.0}), UnsupportedError);
    const QuadraticCertificate custom(cuk::default_certificate_matrix(), 2.0,
                                      [](const Vector&, const Vector&, const Vector& u) { return u; });
    EXPECT_THROW(decrement_along_pair(custom, c.plant, x, x, Vector{0.0}), UnsupportedError);
}

TEST(ExperimentalSearch, FindsCertificateForStableDiagonalSystem) {
    const std::vector<Matrix> verts{Matrix{{-3.0, 0.0}, {0.0, -4.0}}, Matrix{{-3.0, 0.5}, {0.0, -4.0}}};
    const auto r = experimental::search_lmi_certificate(verts, 1.0);
    EXPECT_TRUE(r.found);
    EXPECT_TRUE(verify_polytopic_lmi(verts, r.M, 1.0, 0.0).feasible);
}

TEST(ExperimentalSearch, ReportsFailureForUnstableVertex) {
    const std::vector<Matrix> verts{Matrix{{1.0, 0.0}, {0.0, -1.0}}};
    experimental::LmiSearchOptions opt;
    opt.max_iterations = 200;
    const auto r = experimental::search_lmi_certificate(verts, 1.0, opt);
    EXPECT_FALSE(r.found);
    EXPECT_GT(r.worst_vertex_eigenvalue, 0.0);
}
