// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Fixed-step RK4 and the two interconnections: the hierarchical loop
// (abstraction driven by v, plant driven by the interface u_w) and the
// m-relation loop (plant driven by u, abstraction driven by the link
// v = b(x) + c(x) u).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ashc/certificates.hpp"
#include "ashc/engine.hpp"
#include "ashc/errors.hpp"
#include "ashc/linalg.hpp"
#include "ashc/system.hpp"

namespace ashc {

/// Classical fourth-order Runge-Kutta step.
template <class Field>
Vector rk4_step(Field&& field, double t, const Vector& x, double h) {
    if (!(h > 0.0)) throw ArgumentError("rk4_step: step must be positive");
    auto stage = [&](double ts, const Vector& xs) {
        Vector k = field(ts, xs);
        if (k.size() != x.size()) throw ArgumentError("rk4_step: field returned wrong dimension");
        if (!all_finite(k)) {
            std::ostringstream os;
            os.precision(17);
            os << "rk4_step: non-finite derivative at t = " << ts;
            throw IntegrationError(os.str(), t);
        }
        return k;
    };
    const std::size_t n = x.size();
    const Vector k1 = stage(t, x);
    Vector tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    const Vector k2 = stage(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    const Vector k3 = stage(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    const Vector k4 = stage(t + h, tmp);
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

/// (2/pi) * integral_0^t sign(sin s) ds - 1: period 2 pi, -1 at 0, +1 at pi.
inline double triangle_wave(double t) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double s = std::fmod(std::abs(t), two_pi);
    return s <= std::numbers::pi ? 2.0 / std::numbers::pi * s - 1.0 : 3.0 - 2.0 / std::numbers::pi * s;
}

/// Duty-cycle test signal 0.3 tri(t - 2) + 0.1 sin(2 pi (t - 2)) + 0.45.
inline double mrelation_input(double t) {
    return 0.3 * triangle_wave(t - 2.0) + 0.1 * std::sin(2.0 * std::numbers::pi * (t - 2.0)) + 0.45;
}

/// Times in (t0, t1) where mrelation_input has a kink (the triangle wave
/// turns at 2 + k pi).
inline std::vector<double> mrelation_input_breakpoints(double t0, double t1) {
    std::vector<double> out;
    const double pi = std::numbers::pi;
    for (double k = std::ceil((t0 - 2.0) / pi); 2.0 + k * pi < t1; k += 1.0) {
        const double b = 2.0 + k * pi;
        if (b > t0) out.push_back(b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reference controller for scalar abstractions

/// Piecewise-constant output targets for the abstraction, tracked by a
/// proportional law on xi.
struct ReferenceSchedule {
    std::vector<double> targets;  ///< output levels
    std::vector<double> dwell;    ///< seconds per level
    double kp = 5.0;              ///< 1/s
    double v_max = 60.0;

    /// Targets must lie in (lower_limit, upper_limit].
    void validate(double lower_limit, double upper_limit) const {
        if (targets.empty()) throw ArgumentError("ReferenceSchedule: no targets");
        if (dwell.size() != targets.size()) throw ArgumentError("ReferenceSchedule: one dwell time per target");
        for (double d : dwell)
            if (!(d > 0.0)) throw ArgumentError("ReferenceSchedule: dwell times must be positive");
        if (!(kp > 0.0)) throw ArgumentError("ReferenceSchedule: kp must be positive");
        if (!(v_max > 0.0)) throw ArgumentError("ReferenceSchedule: v_max must be positive");
        for (double y : targets)
            if (!(y > lower_limit && y <= upper_limit)) {
                std::ostringstream os;
                os << "ReferenceSchedule: target " << y << " outside (" << lower_limit << ", " << upper_limit << "]";
                throw ArgumentError(os.str());
            }
    }

    /// Index of the active target at time t (relative to t0); the last
    /// target stays active after the schedule ends.
    std::size_t active(double t) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            acc += dwell[i];
            if (t < acc) return i;
        }
        return targets.size() - 1;
    }

    double total_duration() const {
        double s = 0.0;
        for (double d : dwell) s += d;
        return s;
    }

    /// Switching instants relative to the schedule start.
    std::vector<double> switch_times() const {
        std::vector<double> out;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < dwell.size(); ++i) out.push_back(acc += dwell[i]);
        return out;
    }
};

using ScalarMap = std::function<double(double)>;

/// v = clamp(kp (xi* - xi) / delta(xi), +-v_max) with xi* the preimage of
/// the active target.
inline double reference_controller(const ReferenceSchedule& schedule, const ScalarMap& kappa_inverse,
                                   const ScalarMap& delta, double xi, double t) {
    const double xi_star = kappa_inverse(schedule.targets[schedule.active(t)]);
    const double v = schedule.kp * (xi_star - xi) / delta(xi);
    return std::clamp(v, -schedule.v_max, schedule.v_max);
}

/// Input policy of the abstraction, v = policy(t, segment, xi). t is the
/// exact stage time. segment is a time strictly inside the current
/// integration piece; piecewise-constant parts of a policy must be selected
/// from it so that a level switch never lands on a stage evaluation.
using AbstractInput = std::function<Vector(double t, double segment, const Vector& xi)>;

namespace detail {

/// Unclamped reference law kp (xi* - xi) / delta(xi) with the target
/// preimages precomputed.
struct ReferenceLaw {
    ReferenceSchedule schedule;
    std::vector<double> xi_star;
    ScalarMap delta;
    double t0 = 0.0;

    ReferenceLaw(ReferenceSchedule s, const ScalarMap& kappa_inverse, ScalarMap d, double start)
        : schedule(std::move(s)), delta(std::move(d)), t0(start) {
        xi_star.reserve(schedule.targets.size());
        for (double y : schedule.targets) xi_star.push_back(kappa_inverse(y));
    }

    double raw(double segment, double xi) const {
        return schedule.kp * (xi_star[schedule.active(segment - t0)] - xi) / delta(xi);
    }
};

}  // namespace detail

/// Reference controller with the target preimages precomputed.
inline AbstractInput make_reference_controller(ReferenceSchedule schedule, const ScalarMap& kappa_inverse,
                                               ScalarMap delta, double t0 = 0.0) {
    auto law = std::make_shared<const detail::ReferenceLaw>(std::move(schedule), kappa_inverse, std::move(delta), t0);
    return [law](double, double segment, const Vector& xi) {
        const double v_max = law->schedule.v_max;
        return Vector{std::clamp(law->raw(segment, xi[0]), -v_max, v_max)};
    };
}

/// Switching functions of the reference controller: the unclamped law
/// minus and plus v_max. Signature (t, segment, xi).
inline std::function<std::vector<double>(double, double, const Vector&)> reference_controller_kinks(
    ReferenceSchedule schedule, const ScalarMap& kappa_inverse, ScalarMap delta, double t0 = 0.0) {
    auto law = std::make_shared<const detail::ReferenceLaw>(std::move(schedule), kappa_inverse, std::move(delta), t0);
    return [law](double, double segment, const Vector& xi) {
        const double r = law->raw(segment, xi[0]);
        return std::vector<double>{r - law->schedule.v_max, r + law->schedule.v_max};
    };
}

inline AbstractInput zero_input(std::size_t m_hat) {
    return [m_hat](double, double, const Vector&) { return Vector(m_hat, 0.0); };
}

namespace detail {

/// Values of the switching functions at (t, segment, z). The right-hand side
/// is smooth on each side of every {s_i = 0} and only continuous across it.
using SurfaceValues = std::function<std::vector<double>(double t, double segment, const Vector& z)>;

inline constexpr int kMaxCrossingsPerStep = 4;

/// RK4 step on [t, t + h] that first locates the earliest sign change of a
/// switching function inside the step (bisection on the RK4 step length)
/// and restarts there, so no stage straddles a kink. Crossings within a
/// relative 1e-9 of either end are left alone.
template <class Stepper>
Vector located_rk4_step(Stepper&& step, const std::function<std::vector<double>(double, const Vector&)>& surf,
                        double t, const Vector& x, double h, int depth = 0) {
    const Vector y = step(t, x, h);
    if (!surf || depth >= kMaxCrossingsPerStep) return y;
    const std::vector<double> s0 = surf(t, x);
    const std::vector<double> s1 = surf(t + h, y);
    const double guard = 1e-9 * h;
    double tau = h;
    for (std::size_t i = 0; i < s0.size(); ++i) {
        if (!(s0[i] * s1[i] < 0.0)) continue;
        double lo = 0.0, hi = std::min(tau, h);
        // The bracket may already be tightened by an earlier surface.
        if (hi < h) {
            const double sh = surf(t + hi, step(t, x, hi))[i];
            if (!(s0[i] * sh < 0.0)) continue;
        }
        while (hi - lo > 1e-12 * h) {
            const double mid = 0.5 * (lo + hi);
            const double sm = surf(t + mid, step(t, x, mid))[i];
            (s0[i] * sm > 0.0 ? lo : hi) = mid;
        }
        tau = lo;
    }
    if (!(tau > guard && tau < h - guard)) return y;
    const Vector z = step(t, x, tau);
    return located_rk4_step(step, surf, t + tau, z, h - tau, depth + 1);
}

/// One output step [t, t + h] split at the breakpoints falling strictly
/// inside it. Breakpoints within a relative 1e-9 of either end count as
/// aligned with the grid and cause no split. field(t, segment, x). With
/// surfaces, each piece is further split where a switching function
/// changes sign.
template <class Field>
Vector piecewise_rk4_step(Field&& field, double t, const Vector& x, double h, const std::vector<double>& breakpoints,
                          const SurfaceValues& surfaces = {}) {
    const double t_end = t + h;
    const double guard = 1e-9 * h;
    auto piece = [&](double a, double b, const Vector& z) {
        const double seg = 0.5 * (a + b);
        auto step = [&](double ts, const Vector& zs, double hs) {
            return rk4_step([&](double tt, const Vector& zz) { return field(tt, seg, zz); }, ts, zs, hs);
        };
        if (!surfaces) return step(a, z, b - a);
        return located_rk4_step(
            step, [&](double ts, const Vector& zs) { return surfaces(ts, seg, zs); }, a, z, b - a);
    };
    auto first = std::upper_bound(breakpoints.begin(), breakpoints.end(), t + guard);
    double a = t;
    Vector z = x;
    for (auto it = first; it != breakpoints.end() && *it < t_end - guard; ++it) {
        z = piece(a, *it, z);
        a = *it;
    }
    return piece(a, t_end, z);
}

inline std::vector<double> sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Simulation configuration

inline constexpr std::uint64_t kDefaultStepCap = 100'000'000;

struct SimConfig {
    double t0 = 0.0;
    double t_end = 1.0;
    double step = 1e-4;
    Vector xi0;
    Vector x0;
    std::size_t record_stride = 1;  ///< keep every k-th step (first and last always kept)
    std::uint64_t step_cap = kDefaultStepCap;

    std::uint64_t steps() const {
        return static_cast<std::uint64_t>(std::llround((t_end - t0) / step));
    }

    void validate() const {
        if (!(step > 0.0)) throw ArgumentError("SimConfig: step must be positive");
        if (!(t_end > t0)) throw ArgumentError("SimConfig: t_end must exceed t0");
        if (record_stride == 0) throw ArgumentError("SimConfig: record_stride must be >= 1");
        const double n = (t_end - t0) / step;
        if (!(n <= static_cast<double>(step_cap))) {
            std::ostringstream os;
            os << "SimConfig: " << n << " steps exceeds the cap of " << step_cap;
            throw ArgumentError(os.str());
        }
        if (std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n))
            throw ArgumentError("SimConfig: horizon is not an integer number of steps");
    }
};

// ---------------------------------------------------------------------------
// Hierarchical interconnection

struct HierarchicalSummary {
    std::uint64_t steps = 0;
    double max_abs_error = 0.0;  ///< max over steps of ||psi - y||
    double max_W = 0.0;
    double v_inf = 0.0;          ///< max over steps of ||v||_inf
    double u_min = 0.0;
    double u_max = 0.0;
    std::uint64_t saturation_count = 0;
    std::uint64_t clamp_count = 0;
    std::uint64_t dissipation_checks = 0;
    double max_dissipation_residual = -std::numeric_limits<double>::infinity();
    bool certified = true;  ///< no clamping of xi
};

struct HierarchicalRun {
    Trajectory abstract_traj;  ///< states xi, inputs v, outputs psi
    Trajectory concrete_traj;  ///< states x, inputs u, outputs y
    std::vector<Vector> e_y;   ///< psi - y
    std::vector<double> W;
    std::vector<bool> saturated;
    HierarchicalSummary summary;
};

struct HierarchicalOptions {
    /// Evaluate the pointwise dissipation residual every k-th step (0 = never).
    std::size_t dissipation_stride = 0;
    /// Absolute times where the abstract input is discontinuous or kinked in
    /// time (e.g. schedule switches); steps are split there.
    std::vector<double> breakpoints;
    /// Switching functions of the abstract input policy in (t, segment, xi),
    /// e.g. where a clamp engages. Steps are split at their zero crossings.
    /// Saturation limits of the interface are added automatically.
    std::function<std::vector<double>(double, double, const Vector&)> policy_kinks;
};

/// Integrates xi' = phi(xi, v), x' = f(x, u_w(xi, x, v)) with v from the
/// abstract input policy. v and u_w are evaluated at every RK stage; xi is
/// clamped back into the certified domain after a step if it left it.
inline HierarchicalRun simulate_hierarchical(const SimConfig& cfg, const AbstractInput& input,
                                             const InputAffineSystem& plant, const AbstractSystem& absys,
                                             const AbstractionMaps& maps, const QuadraticCertificate& cert,
                                             const InterfaceSpec& spec, const HierarchicalOptions& opt = {}) {
    cfg.validate();
    plant.validate();
    absys.validate();
    spec.validate(cert);
    const std::size_t nh = absys.n_hat;
    const std::size_t n = plant.n;
    if (cfg.xi0.size() != nh || cfg.x0.size() != n) throw ArgumentError("simulate_hierarchical: initial state dims");
    require_in_domain(maps, cfg.xi0, "simulate_hierarchical");

    auto split = [&](const Vector& z) {
        return std::pair{Vector(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(nh)),
                         Vector(z.begin() + static_cast<std::ptrdiff_t>(nh), z.end())};
    };
    auto field = [&](double t, double segment, const Vector& z) {
        auto [xi, x] = split(z);
        const Vector xic = maps.domain_V.clamp(xi);
        const Vector v = input(t, segment, xic);
        const InterfaceOutput io = interface_eval(maps, cert, spec, xic, x, v);
        Vector dz = absys.phi(xi, v);
        const Vector dx = evaluate_dynamics(plant, x, io.u);
        dz.insert(dz.end(), dx.begin(), dx.end());
        return dz;
    };

    HierarchicalRun run{Trajectory(absys.kappa), Trajectory(plant.h), {}, {}, {}, {}};
    HierarchicalSummary& s = run.summary;
    s.u_min = std::numeric_limits<double>::infinity();
    s.u_max = -std::numeric_limits<double>::infinity();

    Vector z = cfg.xi0;
    z.insert(z.end(), cfg.x0.begin(), cfg.x0.end());
    const std::uint64_t N = cfg.steps();
    s.steps = N;

    detail::SurfaceValues surfaces;
    if (opt.policy_kinks || spec.saturation) {
        surfaces = [&](double t, double segment, const Vector& zs) {
            auto [xi, x] = split(zs);
            const Vector xic = maps.domain_V.clamp(xi);
            std::vector<double> out = opt.policy_kinks ? opt.policy_kinks(t, segment, xic) : std::vector<double>{};
            if (spec.saturation) {
                const InterfaceOutput io = interface_eval(maps, cert, spec, xic, x, input(t, segment, xic));
                for (std::size_t i = 0; i < io.u_raw.size(); ++i) {
                    out.push_back(io.u_raw[i] - (*spec.saturation)[i].first);
                    out.push_back(io.u_raw[i] - (*spec.saturation)[i].second);
                }
            }
            return out;
        };
    }

    const std::vector<double> breaks = detail::sorted(opt.breakpoints);
    auto observe = [&](std::uint64_t k, double t, const Vector& zk) {
        auto [xi, x] = split(zk);
        // Right-continuous reading of the policy at the sample instant.
        const Vector v = input(t, t + 0.5 * cfg.step, xi);
        const InterfaceOutput io = interface_eval(maps, cert, spec, xi, x, v);
        const Vector psi = absys.kappa(xi);
        const Vector y = plant.h(x);
        const Vector e = psi - y;
        const double W = simulation_fn_value(maps, cert, xi, x);
        s.max_abs_error = std::max(s.max_abs_error, norm2(e));
        s.max_W = std::max(s.max_W, W);
        s.v_inf = std::max(s.v_inf, norm_inf(v));
        for (double u : io.u) {
            s.u_min = std::min(s.u_min, u);
            s.u_max = std::max(s.u_max, u);
        }
        if (io.saturated) ++s.saturation_count;
        if (opt.dissipation_stride && k % opt.dissipation_stride == 0) {
            ++s.dissipation_checks;
            s.max_dissipation_residual = std::max(
                s.max_dissipation_residual, dissipation_residual(maps, cert, spec, plant, absys, xi, x, v));
        }
        if (k % cfg.record_stride == 0 || k == N) {
            run.abstract_traj.push(t, xi, v);
            run.concrete_traj.push(t, x, io.u);
            run.e_y.push_back(e);
            run.W.push_back(W);
            run.saturated.push_back(io.saturated);
        }
    };

    observe(0, cfg.t0, z);
    for (std::uint64_t k = 0; k < N; ++k) {
        const double t = cfg.t0 + static_cast<double>(k) * cfg.step;
        try {
            z = detail::piecewise_rk4_step(field, t, z, cfg.step, breaks, surfaces);
        } catch (const EvaluationError& e) {
            throw IntegrationError(e.what(), t);
        }
        auto [xi, x] = split(z);
        if (!maps.domain_V.contains(xi)) {
            const Vector c = maps.domain_V.clamp(xi);
            std::copy(c.begin(), c.end(), z.begin());
            ++s.clamp_count;
            s.certified = false;
        }
        observe(k + 1, cfg.t0 + static_cast<double>(k + 1) * cfg.step, z);
    }
    return run;
}

// ---------------------------------------------------------------------------
// m-relation interconnection

struct MRelationSummary {
    std::uint64_t steps = 0;
    double max_output_mismatch = 0.0;  ///< max ||psi - y||
    double max_manifold_error = 0.0;   ///< max ||xi - m(x)||
    double initial_manifold_error = 0.0;
    std::uint64_t region_exits = 0;    ///< steps with x outside the output region
    bool certified = true;
};

struct MRelationRun {
    Trajectory concrete_traj;  ///< states x, inputs u, outputs y
    Trajectory abstract_traj;  ///< states xi, inputs v, outputs psi
    std::vector<Vector> e_y;   ///< psi - y
    MRelationSummary summary;
};

using InputSignal = std::function<Vector(double t)>;

namespace detail {

/// Link coefficients without the output-region check; the simulator tracks
/// region exits itself.
inline LinkCoefficients link_unchecked(const AbstractionMaps& maps, const InputAffineSystem& sys,
                                       const AbstractSystem& absys, const Vector& x) {
    AbstractionMaps relaxed = maps;
    relaxed.operating_Xy = Box::unbounded(x.size());
    return link_coefficients(relaxed, sys, absys, x);
}

}  // namespace detail

/// Integrates x' = f(x, u(t)) and xi' = phi(xi, b(x) + c(x) u(t)) on a
/// shared time grid. Started on the manifold xi0 = m(x0) the outputs agree.
/// Steps are split at the given kinks of u so the method keeps its order.
inline MRelationRun simulate_mrelation(const SimConfig& cfg, const InputAffineSystem& plant,
                                       const AbstractSystem& absys, const AbstractionMaps& maps,
                                       const InputSignal& u_signal, std::vector<double> breakpoints = {}) {
    cfg.validate();
    plant.validate();
    absys.validate();
    const std::size_t n = plant.n;
    const std::size_t nh = absys.n_hat;
    if (cfg.xi0.size() != nh || cfg.x0.size() != n) throw ArgumentError("simulate_mrelation: initial state dims");

    AbstractionMaps relaxed = maps;
    relaxed.operating_Xy = Box::unbounded(n);

    auto split = [&](const Vector& z) {
        return std::pair{Vector(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n)),
                         Vector(z.begin() + static_cast<std::ptrdiff_t>(n), z.end())};
    };
    auto link_input = [&](const Vector& x, const Vector& u) {
        const LinkCoefficients lc = link_coefficients(relaxed, plant, absys, x);
        Vector v = lc.b;
        axpy(1.0, lc.c * u, v);
        return v;
    };
    const std::vector<double> breaks = detail::sorted(std::move(breakpoints));
    auto field = [&](double t, double, const Vector& z) {
        auto [x, xi] = split(z);
        const Vector u = u_signal(t);
        Vector dz = evaluate_dynamics(plant, x, u);
        const Vector dxi = absys.phi(xi, link_input(x, u));
        dz.insert(dz.end(), dxi.begin(), dxi.end());
        return dz;
    };

    MRelationRun run{Trajectory(plant.h), Trajectory(absys.kappa), {}, {}};
    MRelationSummary& s = run.summary;
    Vector z = cfg.x0;
    z.insert(z.end(), cfg.xi0.begin(), cfg.xi0.end());
    const std::uint64_t N = cfg.steps();
    s.steps = N;

    auto observe = [&](std::uint64_t k, double t, const Vector& zk) {
        auto [x, xi] = split(zk);
        const Vector u = u_signal(t);
        const Vector v = link_input(x, u);
        const Vector psi = absys.kappa(xi);
        const Vector y = plant.h(x);
        const Vector e = psi - y;
        const double manifold = norm2(xi - maps.m(x));
        if (k == 0) s.initial_manifold_error = manifold;
        s.max_output_mismatch = std::max(s.max_output_mismatch, norm2(e));
        s.max_manifold_error = std::max(s.max_manifold_error, manifold);
        if (!maps.operating_Xy.contains(x)) {
            ++s.region_exits;
            s.certified = false;
        }
        if (k % cfg.record_stride == 0 || k == N) {
            run.concrete_traj.push(t, x, u);
            run.abstract_traj.push(t, xi, v);
            run.e_y.push_back(e);
        }
    };

    observe(0, cfg.t0, z);
    for (std::uint64_t k = 0; k < N; ++k) {
        const double t = cfg.t0 + static_cast<double>(k) * cfg.step;
        try {
            z = detail::piecewise_rk4_step(field, t, z, cfg.step, breaks);
        } catch (const EvaluationError& e) {
            throw IntegrationError(e.what(), t);
        } catch (const DomainError& e) {
            throw IntegrationError(e.what(), t);
        }
        const double t_next = cfg.t0 + static_cast<double>(k + 1) * cfg.step;
        try {
            observe(k + 1, t_next, z);
        } catch (const DomainError& e) {
            throw IntegrationError(e.what(), t);
        }
    }
    return run;
}

}  // namespace ashc
