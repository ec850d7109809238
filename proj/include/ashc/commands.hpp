// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

// Commands behind the ashc_cli executable. Each command reads a flat config,
// writes its artifacts into an output directory and finishes with a
// manifest_<command>.json whose exit_code matches the process status:
//   0  every check passed
//   1  a check failed, or the computation itself failed (named in failures)
//   2  usage error: malformed config, bad option value, unwritable output

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ashc/certificates.hpp"
#include "ashc/config.hpp"
#include "ashc/cuk.hpp"
#include "ashc/engine.hpp"
#include "ashc/errors.hpp"
#include "ashc/integrator.hpp"
#include "ashc/numdiff.hpp"
#include "ashc/output.hpp"

namespace ashc::cli {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

/// Command-line flags that override config values.
struct Overrides {
    std::optional<long long> grid;      ///< scan.grid
    std::optional<std::string> delta;   ///< abstraction.delta
    std::optional<double> vinf;         ///< bound.v_inf
    bool full_resolution = false;       ///< write every step instead of every output.decimate-th
};

struct Tolerances {
    double lmi = 1e-6;
    double invariance = 1e-8;
    double output_consistency = 1e-10;
    double left_inverse = 1e-9;
    double output_recovery = 1e-9;
    double kernel = 1e-9;
    double mrelation = 1e-8;
    double dissipation = 1e-6;
    double jacobian = 1e-5;
};

struct HierScenario {
    double xi0 = 0.6156;
    std::optional<Vector> x0;  ///< defaults to p(xi0)
    ReferenceSchedule schedule;
    double t_end = 30.0;
    double step = 1e-4;
    bool zero_input = false;
    std::size_t dissipation_stride = 100;
    double error_tol = 1e-6;  ///< absolute slack on the error bound
};

struct MrelScenario {
    Vector x0{10.3256, 2.0561, -4.9785, -6.9732};
    std::optional<double> xi0;  ///< defaults to m(x0)
    double xi0_offset = 0.0;
    std::string input = "triangle";  ///< triangle | constant
    double u_const = 0.0;
    double t_end = 15.0;
    double step = 1e-4;
    double mismatch_tol = 1e-6;
    double manifold_tol = 1e-7;
};

/// Every value a command may use, after defaults and overrides.
struct Settings {
    cuk::CukParams params;
    cuk::CukOptions options;
    double c0 = 0.52;
    std::size_t scan_grid = 2001;
    std::size_t verify_grid = 1001;
    std::size_t verify_samples = 1000;
    std::size_t jacobian_samples = 200;
    std::uint64_t seed = 20260101;
    Tolerances tol;
    std::optional<double> d_bar;
    double v_inf = 60.0;
    std::optional<double> W0;
    std::vector<double> bound_times{0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
    HierScenario hier;
    MrelScenario mrel;
    std::size_t decimate = 10;
};

inline const std::set<std::string>& config_schema() {
    static const std::set<std::string> keys{
        "plant.R_i", "plant.L1", "plant.C2", "plant.L3", "plant.C4", "plant.G_L", "plant.E",
        "certificate.M", "certificate.lambda", "certificate.c0",
        "interface.epsilon", "interface.saturate",
        "abstraction.delta",
        "scan.grid",
        "verify.grid", "verify.samples", "verify.jacobian_samples", "verify.seed",
        "tol.lmi", "tol.invariance", "tol.output_consistency", "tol.left_inverse", "tol.output_recovery",
        "tol.kernel", "tol.mrelation", "tol.dissipation", "tol.jacobian",
        "bound.d_bar", "bound.v_inf", "bound.W0", "bound.times",
        "hier.xi0", "hier.x0", "hier.targets", "hier.dwell", "hier.kp", "hier.v_max", "hier.t_end", "hier.step",
        "hier.zero_input", "hier.dissipation_stride", "hier.error_tol",
        "mrel.x0", "mrel.xi0", "mrel.xi0_offset", "mrel.input", "mrel.u_const", "mrel.t_end", "mrel.step",
        "mrel.mismatch_tol", "mrel.manifold_tol",
        "output.decimate",
        "fault.p4_shift", "fault.m_root"};
    return keys;
}

namespace detail {

inline std::size_t positive_count(const Config& cfg, const std::string& key, std::size_t fallback,
                                  std::size_t minimum = 1) {
    const long long v = cfg.get_int(key, static_cast<long long>(fallback));
    if (v < static_cast<long long>(minimum))
        throw ConfigError(cfg.source() + ": '" + key + "' must be >= " + std::to_string(minimum));
    return static_cast<std::size_t>(v);
}

inline double positive(const Config& cfg, const std::string& key, double fallback) {
    const double v = cfg.get_double(key, fallback);
    if (!(v > 0.0)) throw ConfigError(cfg.source() + ": '" + key + "' must be positive");
    return v;
}

inline Vector fixed_list(const Config& cfg, const std::string& key, std::size_t n) {
    const auto v = cfg.get_list(key);
    if (v.size() != n)
        throw ConfigError(cfg.source() + ": '" + key + "' needs " + std::to_string(n) + " values, got " +
                          std::to_string(v.size()));
    return v;
}

}  // namespace detail

/// Resolves config values and overrides into Settings. Throws ConfigError on
/// unknown keys, malformed values or inconsistent combinations.
inline Settings resolve_settings(const Config& cfg, const Overrides& ov) {
    using detail::positive;
    using detail::positive_count;
    cfg.require_known(config_schema());
    Settings s;

    auto& P = s.params;
    P.R_i = positive(cfg, "plant.R_i", P.R_i);
    P.L1 = positive(cfg, "plant.L1", P.L1);
    P.C2 = positive(cfg, "plant.C2", P.C2);
    P.L3 = positive(cfg, "plant.L3", P.L3);
    P.C4 = positive(cfg, "plant.C4", P.C4);
    P.G_L = positive(cfg, "plant.G_L", P.G_L);
    P.E = positive(cfg, "plant.E", P.E);

    auto& O = s.options;
    if (cfg.has("certificate.M")) {
        const Vector m = detail::fixed_list(cfg, "certificate.M", 16);
        Matrix M(4, 4);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) M(i, j) = m[4 * i + j];
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i + 1; j < 4; ++j)
                if (std::abs(M(i, j) - M(j, i)) > 1e-12)
                    throw ConfigError(cfg.source() + ": 'certificate.M' is not symmetric");
        O.M = SymMatrix(M);
    }
    O.lambda = positive(cfg, "certificate.lambda", O.lambda);
    s.c0 = positive(cfg, "certificate.c0", s.c0);
    O.epsilon = positive(cfg, "interface.epsilon", O.epsilon);
    if (!(O.epsilon < O.lambda))
        throw ConfigError(cfg.source() + ": 'interface.epsilon' must be below 'certificate.lambda'");
    O.saturate_interface = cfg.get_bool("interface.saturate", true);
    const std::string delta = ov.delta.value_or(cfg.get_string("abstraction.delta", "redesigned"));
    try {
        O.delta = cuk::parse_delta_variant(delta);
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    O.p4_shift = cfg.get_double("fault.p4_shift", 0.0);
    const std::string root = cfg.get_string("fault.m_root", "principal");
    if (root == "principal")
        O.m_root = cuk::MRoot::principal;
    else if (root == "alternate")
        O.m_root = cuk::MRoot::alternate;
    else
        throw ConfigError(cfg.source() + ": 'fault.m_root' must be principal or alternate");

    s.scan_grid = positive_count(cfg, "scan.grid", s.scan_grid, 2);
    if (ov.grid) {
        if (*ov.grid < 2) throw ConfigError("--grid must be >= 2");
        s.scan_grid = static_cast<std::size_t>(*ov.grid);
    }
    s.verify_grid = positive_count(cfg, "verify.grid", s.verify_grid, 2);
    s.verify_samples = positive_count(cfg, "verify.samples", s.verify_samples);
    s.jacobian_samples = positive_count(cfg, "verify.jacobian_samples", s.jacobian_samples);
    s.seed = static_cast<std::uint64_t>(cfg.get_int("verify.seed", static_cast<long long>(s.seed)));

    auto& T = s.tol;
    T.lmi = cfg.get_double("tol.lmi", T.lmi);
    if (!(T.lmi >= 0.0)) throw ConfigError(cfg.source() + ": 'tol.lmi' must be >= 0");
    T.invariance = positive(cfg, "tol.invariance", T.invariance);
    T.output_consistency = positive(cfg, "tol.output_consistency", T.output_consistency);
    T.left_inverse = positive(cfg, "tol.left_inverse", T.left_inverse);
    T.output_recovery = positive(cfg, "tol.output_recovery", T.output_recovery);
    T.kernel = positive(cfg, "tol.kernel", T.kernel);
    T.mrelation = positive(cfg, "tol.mrelation", T.mrelation);
    T.dissipation = positive(cfg, "tol.dissipation", T.dissipation);
    T.jacobian = positive(cfg, "tol.jacobian", T.jacobian);

    if (cfg.has("bound.d_bar")) s.d_bar = positive(cfg, "bound.d_bar", 1.0);
    s.v_inf = ov.vinf.value_or(cfg.get_double("bound.v_inf", s.v_inf));
    if (!(s.v_inf >= 0.0)) throw ConfigError("bound v_inf must be >= 0");
    if (cfg.has("bound.W0")) {
        s.W0 = cfg.get_double("bound.W0");
        if (!(*s.W0 >= 0.0)) throw ConfigError(cfg.source() + ": 'bound.W0' must be >= 0");
    }
    s.bound_times = cfg.get_list("bound.times", s.bound_times);
    for (double t : s.bound_times)
        if (!(t >= 0.0)) throw ConfigError(cfg.source() + ": 'bound.times' must be >= 0");

    auto& H = s.hier;
    H.xi0 = cfg.get_double("hier.xi0", H.xi0);
    if (cfg.has("hier.x0")) H.x0 = detail::fixed_list(cfg, "hier.x0", 4);
    H.schedule.targets = cfg.get_list("hier.targets", {-19.11, -80.90, -44.27, -4.31, -12.48, -32.91});
    H.schedule.dwell = cfg.get_list("hier.dwell", {5.0});
    if (H.schedule.dwell.size() == 1) H.schedule.dwell.assign(H.schedule.targets.size(), H.schedule.dwell[0]);
    H.schedule.kp = positive(cfg, "hier.kp", H.schedule.kp);
    H.schedule.v_max = positive(cfg, "hier.v_max", H.schedule.v_max);
    try {
        H.schedule.validate(cuk::kOutputLower, cuk::kOutputUpper);
    } catch (const ArgumentError& e) {
        throw ConfigError(cfg.source() + ": " + e.what());
    }
    H.t_end = positive(cfg, "hier.t_end", H.t_end);
    H.step = positive(cfg, "hier.step", H.step);
    H.zero_input = cfg.get_bool("hier.zero_input", H.zero_input);
    H.dissipation_stride =
        static_cast<std::size_t>(positive_count(cfg, "hier.dissipation_stride", H.dissipation_stride, 0));
    H.error_tol = positive(cfg, "hier.error_tol", H.error_tol);

    auto& R = s.mrel;
    if (cfg.has("mrel.x0")) R.x0 = detail::fixed_list(cfg, "mrel.x0", 4);
    if (cfg.has("mrel.xi0")) R.xi0 = cfg.get_double("mrel.xi0");
    R.xi0_offset = cfg.get_double("mrel.xi0_offset", R.xi0_offset);
    R.input = cfg.get_string("mrel.input", R.input);
    if (R.input != "triangle" && R.input != "constant")
        throw ConfigError(cfg.source() + ": 'mrel.input' must be triangle or constant");
    R.u_const = cfg.get_double("mrel.u_const", R.u_const);
    if (!(R.u_const >= 0.0 && R.u_const <= 1.0)) throw ConfigError(cfg.source() + ": 'mrel.u_const' must be in [0, 1]");
    R.t_end = positive(cfg, "mrel.t_end", R.t_end);
    R.step = positive(cfg, "mrel.step", R.step);
    R.mismatch_tol = positive(cfg, "mrel.mismatch_tol", R.mismatch_tol);
    R.manifold_tol = positive(cfg, "mrel.manifold_tol", R.manifold_tol);

    s.decimate = positive_count(cfg, "output.decimate", s.decimate);
    if (ov.full_resolution) s.decimate = 1;
    return s;
}

/// Parameter snapshot for the manifest.
inline nlohmann::ordered_json settings_json(const Settings& s) {
    nlohmann::ordered_json j;
    const auto& P = s.params;
    j["plant"] = {{"R_i", P.R_i}, {"L1", P.L1}, {"C2", P.C2}, {"L3", P.L3}, {"C4", P.C4}, {"G_L", P.G_L}, {"E", P.E}};
    std::vector<double> M;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < 4; ++k) M.push_back(s.options.M(i, k));
    j["certificate"] = {{"M", M}, {"lambda", s.options.lambda}, {"c0", s.c0}};
    j["interface"] = {{"epsilon", s.options.epsilon}, {"saturate", s.options.saturate_interface}};
    j["abstraction"] = {{"delta", cuk::to_string(s.options.delta)}};
    j["scan"] = {{"grid", s.scan_grid}};
    j["verify"] = {{"grid", s.verify_grid},
                   {"samples", s.verify_samples},
                   {"jacobian_samples", s.jacobian_samples},
                   {"seed", s.seed}};
    const auto& T = s.tol;
    j["tol"] = {{"lmi", T.lmi},
                {"invariance", T.invariance},
                {"output_consistency", T.output_consistency},
                {"left_inverse", T.left_inverse},
                {"output_recovery", T.output_recovery},
                {"kernel", T.kernel},
                {"mrelation", T.mrelation},
                {"dissipation", T.dissipation},
                {"jacobian", T.jacobian}};
    j["bound"] = {{"d_bar", s.d_bar ? nlohmann::ordered_json(*s.d_bar) : nlohmann::ordered_json()},
                  {"v_inf", s.v_inf},
                  {"W0", s.W0 ? nlohmann::ordered_json(*s.W0) : nlohmann::ordered_json()},
                  {"times", s.bound_times}};
    const auto& H = s.hier;
    j["hier"] = {{"xi0", H.xi0},
                 {"x0", H.x0 ? nlohmann::ordered_json(*H.x0) : nlohmann::ordered_json()},
                 {"targets", H.schedule.targets},
                 {"dwell", H.schedule.dwell},
                 {"kp", H.schedule.kp},
                 {"v_max", H.schedule.v_max},
                 {"t_end", H.t_end},
                 {"step", H.step},
                 {"zero_input", H.zero_input},
                 {"dissipation_stride", H.dissipation_stride},
                 {"error_tol", H.error_tol}};
    const auto& R = s.mrel;
    j["mrel"] = {{"x0", R.x0},
                 {"xi0", R.xi0 ? nlohmann::ordered_json(*R.xi0) : nlohmann::ordered_json()},
                 {"xi0_offset", R.xi0_offset},
                 {"input", R.input},
                 {"u_const", R.u_const},
                 {"t_end", R.t_end},
                 {"step", R.step},
                 {"mismatch_tol", R.mismatch_tol},
                 {"manifold_tol", R.manifold_tol}};
    j["output"] = {{"decimate", s.decimate}};
    j["fault"] = {{"p4_shift", s.options.p4_shift},
                  {"m_root", s.options.m_root == cuk::MRoot::principal ? "principal" : "alternate"}};
    return j;
}

/// Shared state of one command invocation.
struct CommandContext {
    Settings settings;
    std::filesystem::path out_dir;
    RunManifest& manifest;
    std::ostream& out;

    void fail(const std::string& what) { manifest.failures.push_back(what); }
};

namespace detail {

inline std::string fmt(double v, int digits = 10) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

inline cuk::CukAbstraction build(const Settings& s) { return cuk::build_cuk(s.params, s.options); }

inline ScanResult scan_zero_gain(const cuk::CukAbstraction& c, std::size_t n) {
    return scan_vartheta_bound(c.maps, c.cert, c.plant, c.abstraction, GainPolicy::zero,
                               GridSpec::uniform_1d(cuk::kDomainLower, cuk::kDomainUpper, n));
}

inline BoundConstants bound_constants(const Settings& s, double d_bar) {
    return {s.c0, s.options.lambda, s.options.epsilon, d_bar};
}

/// d_bar from the config when pinned, else from a zero-gain scan.
inline double resolve_d_bar(const Settings& s, const cuk::CukAbstraction& c) {
    return s.d_bar ? *s.d_bar : scan_zero_gain(c, s.scan_grid).d_bar;
}

/// Outcome keys present in every manifest; commands fill what applies.
inline void init_outcome(RunManifest& m) {
    m.outcome["lmi_ok"] = nullptr;
    m.outcome["residuals_ok"] = nullptr;
    m.outcome["bound_value"] = nullptr;
    m.outcome["max_error"] = nullptr;
    m.outcome["saturation_count"] = nullptr;
    m.outcome["clamp_count"] = nullptr;
}

inline std::vector<Vector> domain_grid(std::size_t n) {
    return grid_points(GridSpec::uniform_1d(cuk::kDomainLower, cuk::kDomainUpper, n));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// verify

inline int cmd_verify(CommandContext& ctx) {
    const Settings& s = ctx.settings;
    const auto& T = s.tol;
    const cuk::CukAbstraction c = detail::build(s);
    std::ostringstream report;
    report << "# ashc verify\n";
    bool lmi_ok = true;
    bool residuals_ok = true;

    // Certificate.
    const LmiReport lmi = verify_polytopic_lmi(c.lmi_vertices(), s.options.M, s.options.lambda, T.lmi);
    report << lmi.to_text();
    if (!lmi.m_positive_definite) {
        lmi_ok = false;
        ctx.fail("M_positive_definite");
    }
    if (!lmi.feasible) {
        lmi_ok = false;
        ctx.fail("lmi");
    }
    {
        const Matrix C = cuk::output_matrix();
        const double margin =
            sym_eigenvalues(SymMatrix(s.options.M.matrix() - s.c0 * (C.transpose() * C))).min();
        const bool ok = check_output_lower_bound(s.options.M, C, s.c0);
        report << (ok ? "PASS " : "FAIL ") << "output_lower_bound: min eigenvalue of M - c0 C^T C = "
               << detail::fmt(margin) << " (c0 " << s.c0 << ")\n";
        if (!ok) {
            lmi_ok = false;
            ctx.fail("output_lower_bound");
        }
    }

    // Residual suites. A check that throws counts as failed and keeps the
    // message in the report.
    std::vector<ResidualReport> reports;
    auto run = [&](const std::string& name, const std::vector<Vector>& pts, double tol,
                   const std::function<double(const Vector&)>& fn) {
        ResidualReport r;
        r.name = name;
        r.tolerance = tol;
        try {
            for (const Vector& p : pts) r.add(p, fn(p));
            report << r.summary_line() << "\n";
        } catch (const Error& e) {
            r.passed = false;
            report << "FAIL " << name << ": " << e.what() << "\n";
        }
        if (!r.passed) {
            residuals_ok = false;
            ctx.fail(name);
        }
        reports.push_back(std::move(r));
    };

    const auto xi_grid = detail::domain_grid(s.verify_grid);
    run("invariance", xi_grid, T.invariance,
        [&](const Vector& xi) { return invariance_residual_p(c.maps, c.plant, c.abstraction, xi); });
    run("output_consistency", xi_grid, T.output_consistency,
        [&](const Vector& xi) { return output_consistency_residual(c.maps, c.abstraction, c.plant, xi); });
    run("left_inverse", xi_grid, T.left_inverse, [&](const Vector& xi) { return left_inverse_residual(c.maps, xi); });

    const auto y_grid = grid_points(GridSpec::uniform_1d(cuk::kOutputLower, cuk::kOutputUpper, s.verify_grid));
    run("output_recovery", y_grid, T.output_recovery, [&](const Vector& y) {
        return output_recovery_residual(c.maps, c.abstraction, c.plant, Vector{0.0, 0.0, 0.0, y[0]});
    });

    // States around the manifold with the output inside the region.
    const Box around = cuk::sampling_box(c);
    Box region = around;
    region.lower[3] = cuk::kOutputLower;
    region.upper[3] = cuk::kOutputUpper;
    const auto states = sample_box(region, s.verify_samples, s.seed);
    run("kernel", states, T.kernel, [&](const Vector& x) { return kernel_condition_residual(c.maps, c.plant, x); });
    run("mrelation", states, T.mrelation, [&](const Vector& x) {
        const auto r = mrelation_residuals(c.maps, c.plant, c.abstraction, x);
        return std::max(r.r_a, r.r_b);
    });

    // (xi, x, v) cloud for the dissipation inequality.
    Vector lo{cuk::kDomainLower}, hi{cuk::kDomainUpper};
    lo.insert(lo.end(), around.lower.begin(), around.lower.end());
    hi.insert(hi.end(), around.upper.begin(), around.upper.end());
    lo.push_back(-s.hier.schedule.v_max);
    hi.push_back(s.hier.schedule.v_max);
    const auto cloud = sample_box(Box(lo, hi), s.verify_samples, s.seed + 1);
    run("dissipation", cloud, T.dissipation, [&](const Vector& z) {
        const Vector xi{z[0]};
        const Vector x(z.begin() + 1, z.begin() + 5);
        const Vector v{z[5]};
        return dissipation_residual(c.maps, c.cert, c.interface, c.plant, c.abstraction, xi, x, v);
    });

    // Analytic Jacobians against central differences.
    const auto xi_samples = sample_box(c.maps.domain_V, s.jacobian_samples, s.seed + 2);
    run("jacobian_p", xi_samples, T.jacobian, [&](const Vector& xi) {
        return max_relative_difference(c.maps.dp_dxi(xi), central_difference_jacobian(c.maps.p, xi, 1e-6), 1.0);
    });
    // Keep the difference stencil inside the solvable output range.
    const auto y_samples = sample_box(Box({cuk::kOutputLower}, {cuk::kOutputUpper - 1e-3}), s.jacobian_samples,
                                      s.seed + 3);
    run("jacobian_m", y_samples, T.jacobian, [&](const Vector& y) {
        const Vector x{0.0, 0.0, 0.0, y[0]};
        return max_relative_difference(c.maps.dm_dx(x), central_difference_jacobian(c.maps.m, x, 1e-6), 1.0);
    });

    // The bound constant is reported, not checked.
    const ScanResult scan = detail::scan_zero_gain(c, s.scan_grid);
    const double bound = asymptotic_error_bound(detail::bound_constants(s, scan.d_bar), s.v_inf);
    report << "INFO d_bar (" << cuk::to_string(s.options.delta) << " delta, " << s.scan_grid
           << " points): " << detail::fmt(scan.d_bar, 15) << " at xi = " << detail::fmt(scan.argmax[0]) << "\n";
    report << "INFO asymptotic bound at v_inf = " << s.v_inf << ": " << detail::fmt(bound, 15) << "\n";

    ctx.out << report.str();
    ctx.manifest.files.push_back(write_file_atomic(ctx.out_dir / "verify_report.txt", report.str()));

    auto& o = ctx.manifest.outcome;
    o["lmi_ok"] = lmi_ok;
    o["residuals_ok"] = residuals_ok;
    o["bound_value"] = bound;
    o["d_bar"] = scan.d_bar;
    auto checks = nlohmann::ordered_json::object();
    checks["lmi_vertex_max_eigenvalue"] = lmi.vertex_max_eigenvalue;
    checks["M_min_eigenvalue"] = lmi.m_min_eigenvalue;
    for (const auto& r : reports) {
        nlohmann::ordered_json e;
        e["passed"] = r.passed;
        e["tolerance"] = r.tolerance;
        e["samples"] = r.samples.size();
        if (!r.samples.empty()) {
            e["max_residual"] = r.max_residual;
            e["worst_at"] = r.worst_location();
        }
        checks[r.name] = e;
    }
    o["checks"] = checks;
    return lmi_ok && residuals_ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// scan-bound

inline int cmd_scan_bound(CommandContext& ctx) {
    const Settings& s = ctx.settings;
    const cuk::CukAbstraction c = detail::build(s);
    const ScanResult scan = detail::scan_zero_gain(c, s.scan_grid);
    const std::string name = std::string("scan_bound_") + cuk::to_string(s.options.delta) + ".csv";
    CsvWriter csv(ctx.out_dir / name, {"xi", "vartheta_norm"});
    for (const auto& [pt, val] : scan.values) csv.row({pt[0], val});
    ctx.manifest.files.push_back(csv.commit());

    const double bound = asymptotic_error_bound(detail::bound_constants(s, scan.d_bar), s.v_inf);
    ctx.out << "delta = " << cuk::to_string(s.options.delta) << ", grid = " << s.scan_grid << "\n"
            << "d_bar = " << detail::fmt(scan.d_bar, 15) << "\n"
            << "argmax xi = " << detail::fmt(scan.argmax[0], 15) << "\n";
    auto& o = ctx.manifest.outcome;
    o["bound_value"] = bound;
    o["d_bar"] = scan.d_bar;
    o["argmax_xi"] = scan.argmax[0];
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bound

inline int cmd_bound(CommandContext& ctx) {
    const Settings& s = ctx.settings;
    double d_bar = 0.0;
    if (s.d_bar) {
        d_bar = *s.d_bar;
    } else {
        d_bar = detail::resolve_d_bar(s, detail::build(s));
    }
    const BoundConstants bc = detail::bound_constants(s, d_bar);
    const double bound = asymptotic_error_bound(bc, s.v_inf);
    std::ostringstream text;
    text << "d_bar = " << detail::fmt(d_bar, 15) << (s.d_bar ? " (config)" : " (scanned)") << "\n"
         << "c0 = " << s.c0 << ", lambda = " << s.options.lambda << ", epsilon = " << s.options.epsilon << "\n"
         << "v_inf = " << detail::fmt(s.v_inf, 15) << "\n"
         << "asymptotic bound = " << detail::fmt(bound, 15) << "\n";
    auto& o = ctx.manifest.outcome;
    o["bound_value"] = bound;
    o["d_bar"] = d_bar;
    if (s.W0) {
        CsvWriter csv(ctx.out_dir / "bound_transient.csv", {"t", "bound"});
        auto curve = nlohmann::ordered_json::array();
        text << "transient bound (W0 = " << *s.W0 << "):\n";
        for (double t : s.bound_times) {
            const double b = transient_error_bound(bc, *s.W0, t, s.v_inf);
            csv.row({t, b});
            curve.push_back({t, b});
            text << "  t = " << t << ": " << detail::fmt(b, 15) << "\n";
        }
        ctx.manifest.files.push_back(csv.commit());
        o["transient"] = curve;
    }
    ctx.out << text.str();
    ctx.manifest.files.push_back(write_file_atomic(ctx.out_dir / "bound_report.txt", text.str()));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sim-hier

inline int cmd_sim_hier(CommandContext& ctx) {
    const Settings& s = ctx.settings;
    const HierScenario& H = s.hier;
    const cuk::CukAbstraction c = detail::build(s);

    SimConfig cfg;
    cfg.t_end = H.t_end;
    cfg.step = H.step;
    cfg.xi0 = {H.xi0};
    if (!c.maps.domain_V.contains(cfg.xi0))
        throw ConfigError("hier.xi0 = " + detail::fmt(H.xi0) + " lies outside the abstraction domain");
    cfg.x0 = H.x0 ? *H.x0 : c.maps.p(cfg.xi0);
    cfg.record_stride = s.decimate;
    try {
        cfg.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("hier: ") + e.what());
    }

    const auto kinv = [&c](double y) { return c.kappa_inverse(y); };
    const auto delta = [&c](double xi) { return cuk::delta_map(c.params, c.options.delta, xi); };
    const AbstractInput input =
        H.zero_input ? zero_input(1) : make_reference_controller(H.schedule, kinv, delta, cfg.t0);
    HierarchicalOptions opt;
    opt.dissipation_stride = H.dissipation_stride;
    if (!H.zero_input) {
        opt.breakpoints = H.schedule.switch_times();
        opt.policy_kinks = reference_controller_kinks(H.schedule, kinv, delta, cfg.t0);
    }

    // Error bound for this start and input bound.
    const double d_bar = detail::resolve_d_bar(s, c);
    const BoundConstants bc = detail::bound_constants(s, d_bar);
    const double v_bound = H.zero_input ? 0.0 : H.schedule.v_max;
    const double W0 = simulation_fn_value(c.maps, c.cert, cfg.xi0, cfg.x0);
    const double bound = std::max(asymptotic_error_bound(bc, v_bound), transient_error_bound(bc, W0, 0.0, v_bound));

    const HierarchicalRun run =
        simulate_hierarchical(cfg, input, c.plant, c.abstraction, c.maps, c.cert, c.interface, opt);
    const auto& sum = run.summary;

    CsvWriter csv(ctx.out_dir / "sim_hier.csv",
                  {"t", "xi", "x1", "x2", "x3", "x4", "u", "v", "y", "psi", "e_y", "W", "sat_flag"});
    const auto& A = run.abstract_traj;
    const auto& X = run.concrete_traj;
    for (std::size_t k = 0; k < A.size(); ++k) {
        const Vector& x = X.states()[k];
        csv.row({A.times()[k], A.states()[k][0], x[0], x[1], x[2], x[3], X.inputs()[k][0], A.inputs()[k][0],
                 X.outputs()[k][0], A.outputs()[k][0], run.e_y[k][0], run.W[k], run.saturated[k] ? 1.0 : 0.0});
    }
    ctx.manifest.files.push_back(csv.commit());

    bool ok = true;
    auto check = [&](bool cond, const std::string& name) {
        if (!cond) {
            ok = false;
            ctx.fail(name);
        }
    };
    check(sum.certified, "xi_clamped");
    check(sum.max_abs_error <= bound + H.error_tol, "error_bound");
    check(sum.v_inf <= v_bound * (1.0 + 1e-12), "abstract_input_bound");
    check(sum.u_min >= 0.0 && sum.u_max <= 1.0, "duty_range");
    const bool diss_ok = sum.dissipation_checks == 0 || sum.max_dissipation_residual <= s.tol.dissipation;
    check(diss_ok, "dissipation");

    auto& o = ctx.manifest.outcome;
    o["residuals_ok"] = diss_ok;
    o["bound_value"] = bound;
    o["max_error"] = sum.max_abs_error;
    o["saturation_count"] = sum.saturation_count;
    o["clamp_count"] = sum.clamp_count;
    o["certified"] = sum.certified;
    o["d_bar"] = d_bar;
    o["W0"] = W0;
    o["steps"] = sum.steps;
    o["max_W"] = sum.max_W;
    o["v_inf"] = sum.v_inf;
    o["u_min"] = sum.u_min;
    o["u_max"] = sum.u_max;
    o["dissipation_checks"] = sum.dissipation_checks;
    o["max_dissipation_residual"] =
        sum.dissipation_checks ? nlohmann::ordered_json(sum.max_dissipation_residual) : nlohmann::ordered_json();

    ctx.out << "steps = " << sum.steps << ", rows = " << csv.rows() << "\n"
            << "max |e_y| = " << detail::fmt(sum.max_abs_error) << " (bound " << detail::fmt(bound) << ")\n"
            << "u in [" << detail::fmt(sum.u_min) << ", " << detail::fmt(sum.u_max) << "], saturations "
            << sum.saturation_count << ", clamps " << sum.clamp_count << "\n"
            << "max |v| = " << detail::fmt(sum.v_inf) << ", max W = " << detail::fmt(sum.max_W) << "\n";
    if (sum.dissipation_checks)
        ctx.out << "dissipation residual max = " << detail::fmt(sum.max_dissipation_residual) << " over "
                << sum.dissipation_checks << " checks\n";
    return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// sim-mrel

inline int cmd_sim_mrel(CommandContext& ctx) {
    const Settings& s = ctx.settings;
    const MrelScenario& R = s.mrel;
    const cuk::CukAbstraction c = detail::build(s);

    SimConfig cfg;
    cfg.t_end = R.t_end;
    cfg.step = R.step;
    cfg.x0 = R.x0;
    if (!c.maps.operating_Xy.contains(cfg.x0))
        throw ConfigError("mrel.x0 output " + detail::fmt(R.x0[3]) + " lies outside the output region");
    cfg.xi0 = {R.xi0 ? *R.xi0 : c.maps.m(cfg.x0)[0]};
    cfg.xi0[0] += R.xi0_offset;
    cfg.record_stride = s.decimate;
    try {
        cfg.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("mrel: ") + e.what());
    }

    InputSignal u;
    std::vector<double> breaks;
    if (R.input == "triangle") {
        u = [](double t) { return Vector{mrelation_input(t)}; };
        breaks = mrelation_input_breakpoints(cfg.t0, cfg.t_end);
    } else {
        u = [level = R.u_const](double) { return Vector{level}; };
    }

    const MRelationRun run = simulate_mrelation(cfg, c.plant, c.abstraction, c.maps, u, breaks);
    const auto& sum = run.summary;

    CsvWriter csv(ctx.out_dir / "sim_mrel.csv", {"t", "xi", "x1", "x2", "x3", "x4", "u", "v", "y", "psi", "e_y"});
    const auto& A = run.abstract_traj;
    const auto& X = run.concrete_traj;
    for (std::size_t k = 0; k < X.size(); ++k) {
        const Vector& x = X.states()[k];
        csv.row({X.times()[k], A.states()[k][0], x[0], x[1], x[2], x[3], X.inputs()[k][0], A.inputs()[k][0],
                 X.outputs()[k][0], A.outputs()[k][0], run.e_y[k][0]});
    }
    ctx.manifest.files.push_back(csv.commit());

    bool ok = true;
    auto check = [&](bool cond, const std::string& name) {
        if (!cond) {
            ok = false;
            ctx.fail(name);
        }
    };
    check(sum.max_output_mismatch <= R.mismatch_tol, "output_matching");
    check(sum.max_manifold_error <= R.manifold_tol, "manifold_invariance");
    check(sum.region_exits == 0, "output_region");

    auto& o = ctx.manifest.outcome;
    o["residuals_ok"] = ok;
    o["max_error"] = sum.max_output_mismatch;
    o["max_manifold_error"] = sum.max_manifold_error;
    o["initial_manifold_error"] = sum.initial_manifold_error;
    o["region_exits"] = sum.region_exits;
    o["matched"] = sum.max_output_mismatch <= R.mismatch_tol;
    o["steps"] = sum.steps;
    o["xi0"] = cfg.xi0[0];

    ctx.out << "steps = " << sum.steps << ", rows = " << csv.rows() << "\n"
            << "xi0 = " << detail::fmt(cfg.xi0[0]) << "\n"
            << "max |psi - y| = " << detail::fmt(sum.max_output_mismatch) << " (tol " << R.mismatch_tol << ")\n"
            << "max |xi - m(x)| = " << detail::fmt(sum.max_manifold_error) << " (tol " << R.manifold_tol << ")\n"
            << "region exits = " << sum.region_exits << "\n";
    return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// Dispatch

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"verify", "scan-bound", "bound", "sim-hier", "sim-mrel"};
    return names;
}

/// Runs one command end to end and returns the process exit code. The
/// manifest is written whenever the output directory is usable.
inline int run_command(const std::string& command, const std::string& config_path,
                       const std::filesystem::path& out_dir, const Overrides& ov, std::ostream& out,
                       std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    RunManifest manifest;
    manifest.command = command;
    manifest.config_path = config_path;
    detail::init_outcome(manifest);

    int code = kExitOk;
    bool dir_ok = false;
    try {
        const Config cfg = Config::load(config_path);
        manifest.config_digest = sha256_hex(cfg.text());
        Settings settings = resolve_settings(cfg, ov);
        manifest.parameters = settings_json(settings);
        std::filesystem::create_directories(out_dir);
        dir_ok = true;
        CommandContext ctx{std::move(settings), out_dir, manifest, out};
        if (command == "verify")
            code = cmd_verify(ctx);
        else if (command == "scan-bound")
            code = cmd_scan_bound(ctx);
        else if (command == "bound")
            code = cmd_bound(ctx);
        else if (command == "sim-hier")
            code = cmd_sim_hier(ctx);
        else if (command == "sim-mrel")
            code = cmd_sim_mrel(ctx);
        else
            throw ConfigError("unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << "\n";
        manifest.failures.push_back(std::string("usage: ") + e.what());
        code = kExitUsage;
    } catch (const ArgumentError& e) {
        err << "usage error: " << e.what() << "\n";
        manifest.failures.push_back(std::string("usage: ") + e.what());
        code = kExitUsage;
    } catch (const IntegrationError& e) {
        std::ostringstream os;
        os << "integration failed: " << e.what() << " (last good t = " << std::setprecision(17)
           << e.last_good_time() << ")";
        err << os.str() << "\n";
        manifest.failures.push_back(os.str());
        manifest.outcome["last_good_time"] = e.last_good_time();
        code = kExitCheckFailed;
    } catch (const Error& e) {
        err << "check failed: " << e.what() << "\n";
        manifest.failures.push_back(e.what());
        code = kExitCheckFailed;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "output error: " << e.what() << "\n";
        manifest.failures.push_back(std::string("output: ") + e.what());
        code = kExitUsage;
    }

    if (code == kExitCheckFailed)
        for (const auto& f : manifest.failures) err << "FAILED: " << f << "\n";

    manifest.exit_code = code;
    manifest.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!dir_ok) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        dir_ok = !ec;
    }
    if (dir_ok) {
        try {
            manifest.write(out_dir);
        } catch (const std::exception& e) {
            err << "cannot write manifest: " << e.what() << "\n";
            if (code == kExitOk) code = kExitUsage;
        }
    }
    out << "exit " << code << "\n";
    return code;
}

}  // namespace ashc::cli
