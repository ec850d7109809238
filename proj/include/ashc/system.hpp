// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ashc/errors.hpp"
#include "ashc/linalg.hpp"

namespace ashc {

using VectorField = std::function<Vector(const Vector&)>;
using MatrixField = std::function<Matrix(const Vector&)>;

/// Axis-aligned box. Infinite bounds are allowed for unconstrained axes.
struct Box {
    Vector lower;
    Vector upper;

    Box() = default;
    Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
        if (lower.size() != upper.size()) throw ArgumentError("Box: bound dimensions differ");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] <= upper[i])) throw ArgumentError("Box: lower bound exceeds upper bound");
    }

    static Box unbounded(std::size_t n) {
        const double inf = std::numeric_limits<double>::infinity();
        return Box(Vector(n, -inf), Vector(n, inf));
    }

    std::size_t dim() const noexcept { return lower.size(); }

    bool contains(std::span<const double> x, double slack = 0.0) const {
        if (x.size() != dim()) return false;
        for (std::size_t i = 0; i < dim(); ++i)
            if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
        return true;
    }

    Vector clamp(std::span<const double> x) const {
        Vector c(x.begin(), x.end());
        for (std::size_t i = 0; i < dim(); ++i) c[i] = std::min(std::max(c[i], lower[i]), upper[i]);
        return c;
    }
};

inline std::string format_vector(std::span<const double> v) {
    std::ostringstream os;
    os.precision(10);
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ']';
    return os.str();
}

/// Concrete plant with dynamics f(x, u) = f_bar(x) + g(x) u and output h(x).
/// Plants that are affine in the state for each fixed input may also provide
/// f(x, u) = A_bar(u) x + b_bar.
struct InputAffineSystem {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t p_out = 0;
    VectorField f_bar;
    MatrixField g;  ///< n x m
    VectorField h;
    std::optional<MatrixField> A_bar;  ///< input -> n x n
    std::optional<Vector> b_bar;
    std::optional<Matrix> output_matrix;  ///< set when h(x) = C x
    Box operating_box;                    ///< region the guarantees refer to

    bool has_affine_state_form() const { return A_bar.has_value() && b_bar.has_value(); }

    void validate() const {
        if (n == 0 || m == 0 || p_out == 0) throw ArgumentError("InputAffineSystem: zero dimension");
        if (!f_bar || !g || !h) throw ArgumentError("InputAffineSystem: missing callable");
        if (operating_box.dim() != n) throw ArgumentError("InputAffineSystem: operating box dimension != n");
        if (b_bar && b_bar->size() != n) throw ArgumentError("InputAffineSystem: b_bar dimension != n");
        if (output_matrix && (output_matrix->rows() != p_out || output_matrix->cols() != n))
            throw ArgumentError("InputAffineSystem: output matrix shape != p_out x n");
    }
};

/// Abstraction with dynamics phi(xi, v) = phi_bar(xi) + delta(xi) v and output kappa(xi).
struct AbstractSystem {
    std::size_t n_hat = 0;
    std::size_t m_hat = 0;
    VectorField phi_bar;
    MatrixField delta;  ///< n_hat x m_hat
    VectorField kappa;

    void validate() const {
        if (n_hat == 0 || m_hat == 0) throw ArgumentError("AbstractSystem: zero dimension");
        if (!phi_bar || !delta || !kappa) throw ArgumentError("AbstractSystem: missing callable");
    }

    Vector phi(const Vector& xi, const Vector& v) const {
        if (xi.size() != n_hat || v.size() != m_hat) throw ArgumentError("AbstractSystem::phi: dimension mismatch");
        Vector out = phi_bar(xi);
        const Vector dv = delta(xi) * v;
        axpy(1.0, dv, out);
        return out;
    }
};

/// f_bar(x) + g(x) u, with a non-finite result reported against the field
/// that produced it.
inline Vector evaluate_dynamics(const InputAffineSystem& sys, const Vector& x, const Vector& u) {
    if (x.size() != sys.n) throw ArgumentError("evaluate_dynamics: state dimension mismatch");
    if (u.size() != sys.m) throw ArgumentError("evaluate_dynamics: input dimension mismatch");
    Vector fx = sys.f_bar(x);
    if (fx.size() != sys.n) throw ArgumentError("evaluate_dynamics: f_bar returned wrong dimension");
    if (!all_finite(fx)) throw EvaluationError("evaluate_dynamics: f_bar non-finite at x = " + format_vector(x));
    const Matrix G = sys.g(x);
    if (G.rows() != sys.n || G.cols() != sys.m) throw ArgumentError("evaluate_dynamics: g returned wrong shape");
    if (!G.all_finite()) throw EvaluationError("evaluate_dynamics: g non-finite at x = " + format_vector(x));
    axpy(1.0, G * u, fx);
    if (!all_finite(fx))
        throw EvaluationError("evaluate_dynamics: g(x) u non-finite at x = " + format_vector(x) +
                              ", u = " + format_vector(u));
    return fx;
}

/// A_bar(u) x + b_bar; requires the affine-in-state form.
inline Vector evaluate_affine_form(const InputAffineSystem& sys, const Vector& x, const Vector& u) {
    if (!sys.has_affine_state_form()) throw UnsupportedError("plant does not expose the A_bar(u) x + b_bar form");
    Vector y = (*sys.A_bar)(u) * x;
    axpy(1.0, *sys.b_bar, y);
    return y;
}

/// Sampled state/input/output history. outputs[i] is always h(states[i]).
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(VectorField h) : h_(std::move(h)) {}

    void push(double t, Vector state, Vector input) {
        if (!times_.empty() && !(t > times_.back()))
            throw ArgumentError("Trajectory: times must be strictly increasing");
        if (!states_.empty() && (state.size() != states_.front().size() || input.size() != inputs_.front().size()))
            throw ArgumentError("Trajectory: inconsistent sample dimensions");
        Vector y = h_ ? h_(state) : Vector{};
        times_.push_back(t);
        states_.push_back(std::move(state));
        inputs_.push_back(std::move(input));
        outputs_.push_back(std::move(y));
    }

    std::size_t size() const noexcept { return times_.size(); }
    bool empty() const noexcept { return times_.empty(); }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<Vector>& states() const noexcept { return states_; }
    const std::vector<Vector>& inputs() const noexcept { return inputs_; }
    const std::vector<Vector>& outputs() const noexcept { return outputs_; }

private:
    VectorField h_;
    std::vector<double> times_;
    std::vector<Vector> states_;
    std::vector<Vector> inputs_;
    std::vector<Vector> outputs_;
};

/// Cartesian sampling grid including both endpoints on every axis.
struct GridSpec {
    Vector lower;
    Vector upper;
    std::vector<std::size_t> counts;

    GridSpec() = default;
    GridSpec(Vector lo, Vector hi, std::vector<std::size_t> n)
        : lower(std::move(lo)), upper(std::move(hi)), counts(std::move(n)) {
        validate();
    }

    static GridSpec uniform_1d(double lo, double hi, std::size_t n) { return GridSpec({lo}, {hi}, {n}); }

    std::size_t dim() const noexcept { return counts.size(); }

    void validate() const {
        if (counts.empty()) throw ArgumentError("GridSpec: no dimensions");
        if (lower.size() != counts.size() || upper.size() != counts.size())
            throw ArgumentError("GridSpec: bound and count dimensions differ");
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (counts[i] < 2) throw ArgumentError("GridSpec: every axis needs at least 2 points");
            if (!(lower[i] < upper[i])) throw ArgumentError("GridSpec: lower bound must be below upper bound");
        }
    }

    double coordinate(std::size_t axis, std::size_t k) const {
        if (k + 1 == counts[axis]) return upper[axis];
        return lower[axis] + (upper[axis] - lower[axis]) * static_cast<double>(k) /
                                 static_cast<double>(counts[axis] - 1);
    }

    /// Total number of points, or nullopt on overflow.
    std::optional<std::uint64_t> total() const {
        std::uint64_t t = 1;
        for (std::size_t c : counts) {
            if (c != 0 && t > std::numeric_limits<std::uint64_t>::max() / c) return std::nullopt;
            t *= c;
        }
        return t;
    }
};

inline constexpr std::uint64_t kDefaultGridCap = 50'000'000;

/// Visits every grid point in lexicographic order (last axis fastest).
/// Refuses grids whose point count exceeds cap.
template <class Visitor>
void for_each_grid_point(const GridSpec& spec, Visitor&& visit, std::uint64_t cap = kDefaultGridCap) {
    spec.validate();
    const auto total = spec.total();
    if (!total || *total > cap) {
        std::ostringstream os;
        os << "grid_points: grid has " << (total ? std::to_string(*total) : std::string("overflowing"))
           << " points, cap is " << cap;
        throw ArgumentError(os.str());
    }
    const std::size_t d = spec.dim();
    std::vector<std::size_t> idx(d, 0);
    Vector pt(d);
    for (std::uint64_t k = 0; k < *total; ++k) {
        for (std::size_t a = 0; a < d; ++a) pt[a] = spec.coordinate(a, idx[a]);
        visit(static_cast<const Vector&>(pt));
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < spec.counts[a]) break;
            idx[a] = 0;
        }
    }
}

inline std::vector<Vector> grid_points(const GridSpec& spec, std::uint64_t cap = kDefaultGridCap) {
    std::vector<Vector> pts;
    for_each_grid_point(spec, [&](const Vector& p) { pts.push_back(p); }, cap);
    return pts;
}

}  // namespace ashc
