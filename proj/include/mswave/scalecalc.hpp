#pragma once

// Scaling vector field S = t d_t + r d_r and null derivatives on traces.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "error.hpp"
#include "trace.hpp"
#include "waveop.hpp"

namespace mswave {

enum class SMethod { finite_difference, commuted_pde };

inline const char* to_string(SMethod m) {
    return m == SMethod::finite_difference ? "finite_difference" : "commuted_pde";
}

namespace limits {
inline constexpr int k_max_finite_difference = 3;
inline constexpr int k_max_commuted_pde = 7;
}  // namespace limits

inline int k_max(SMethod m) {
    return m == SMethod::finite_difference ? limits::k_max_finite_difference : limits::k_max_commuted_pde;
}

/// A trace produced by a word of operators applied to a base field.
struct DerivedTrace {
    SpaceTimeTrace trace;
    std::string base;
    std::vector<std::string> operator_word;
    SMethod method = SMethod::finite_difference;
};

inline Parity flip(Parity p) {
    if (p == Parity::odd) return Parity::even;
    if (p == Parity::even) return Parity::odd;
    return Parity::none;
}

inline void require_levels(const SpaceTimeTrace& tr, std::size_t n, const char* what) {
    if (tr.nt_stored < n) throw ValidationError(std::string(what) + ": too few stored time levels");
}

/// d_t by centred differences across stored levels, second-order one-sided
/// stencils at the first and last level.
inline SpaceTimeTrace time_derivative(const SpaceTimeTrace& tr) {
    require_levels(tr, 3, "time_derivative");
    SpaceTimeTrace out = SpaceTimeTrace::zeros_like(tr, tr.parity);
    const double h = tr.level_spacing();
    const std::size_t L = tr.nt_stored, n = tr.nx();
    for (std::size_t k = 0; k < L; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            double d;
            if (k == 0)
                d = (-3.0 * tr(0, i) + 4.0 * tr(1, i) - tr(2, i)) / (2.0 * h);
            else if (k + 1 == L)
                d = (3.0 * tr(k, i) - 4.0 * tr(k - 1, i) + tr(k - 2, i)) / (2.0 * h);
            else
                d = (tr(k + 1, i) - tr(k - 1, i)) / (2.0 * h);
            out(k, i) = d;
        }
    }
    return out;
}

/// d_x on one slice: centred in the interior, one-sided second order at the ends.
inline void slice_x_derivative(std::span<const double> v, double dx, std::span<double> out) {
    const std::size_t n = v.size();
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx);
}

inline SpaceTimeTrace space_derivative(const SpaceTimeTrace& tr) {
    if (tr.nx() < 3) throw ValidationError("space_derivative: need at least three nodes");
    SpaceTimeTrace out = SpaceTimeTrace::zeros_like(tr, flip(tr.parity));
    for (std::size_t k = 0; k < tr.nt_stored; ++k) slice_x_derivative(tr.level(k), tr.grid.dx, out.level(k));
    return out;
}

/// d_r = sign(x) d_x on the full line.
inline SpaceTimeTrace radial_derivative(const SpaceTimeTrace& tr) {
    SpaceTimeTrace out = space_derivative(tr);
    out.parity = tr.parity;
    const std::size_t n = tr.nx();
    for (std::size_t k = 0; k < out.nt_stored; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (tr.grid.x(i) < 0.0) out(k, i) = -out(k, i);
    return out;
}

/// (S V)(t, x) = t V_t + x V_x by finite differences.
inline SpaceTimeTrace scale_fd(const SpaceTimeTrace& tr) {
    SpaceTimeTrace vt = time_derivative(tr);
    SpaceTimeTrace vx = space_derivative(tr);
    SpaceTimeTrace out = SpaceTimeTrace::zeros_like(tr, tr.parity);
    const std::size_t n = tr.nx();
    for (std::size_t k = 0; k < tr.nt_stored; ++k) {
        const double t = tr.time(k);
        for (std::size_t i = 0; i < n; ++i) out(k, i) = t * vt(k, i) + tr.grid.x(i) * vx(k, i);
    }
    return out;
}

/// Initial data and forcing of a linear problem  V_tt - c^2 V_xx = F.
struct WaveProblem {
    Grid grid;
    double c = 1.0;
    InitialData data;
    const SpaceTimeTrace* forcing = nullptr;  // stride-1 trace, or null for a free wave
    std::size_t stride = 1;
};

namespace detail {

inline std::vector<double> x_derivative(const std::vector<double>& v, double dx) {
    std::vector<double> d(v.size());
    slice_x_derivative(v, dx, d);
    return d;
}

}  // namespace detail

/// S^0 ... S^k of the solution of `problem`, each obtained by solving the
/// commuted equation  box_c (S Y) = (S + 2) box_c Y  with data derived at t_start.
inline std::vector<SpaceTimeTrace> scale_power_commuted(const WaveProblem& problem, int k) {
    if (k < 0) throw ParameterError("apply_S_power: k must be non-negative");
    if (k > limits::k_max_commuted_pde) throw ParameterError("apply_S_power: k exceeds k_max for commuted_pde");
    const Grid& g = problem.grid;
    const double c = problem.c;
    const double t0 = g.t_start;
    LinearSolveOptions opt;
    opt.stride = problem.stride;
    opt.require_odd = false;

    std::vector<SpaceTimeTrace> out;
    InitialData data = problem.data;
    std::optional<SpaceTimeTrace> forcing;
    if (problem.forcing) forcing = *problem.forcing;

    for (int j = 0; j <= k; ++j) {
        ForcingFn fn;
        if (forcing) fn = forcing_from_trace(*forcing);
        SpaceTimeTrace y = solve_linear(data, fn, c, g, opt);
        y.parity = problem.data.value.empty() ? Parity::none : (is_odd(problem.data.value, 0.0) ? Parity::odd : Parity::none);
        out.push_back(std::move(y));
        if (j == k) break;

        // data for S Y at t0
        const std::size_t n = g.npoints();
        const auto y0x = detail::x_derivative(data.value, g.dx);
        const auto y1x = detail::x_derivative(data.velocity, g.dx);
        InitialData next{std::vector<double>(n), std::vector<double>(n)};
        for (std::size_t i = 0; i < n; ++i) {
            const double x = g.x(i);
            double ytt = c * c * second_difference(data.value, i) / (g.dx * g.dx);
            if (forcing) ytt += (*forcing)(0, i);
            next.value[i] = t0 * data.velocity[i] + x * y0x[i];
            next.velocity[i] = data.velocity[i] + t0 * ytt + x * y1x[i];
        }
        data = std::move(next);
        if (forcing) {
            SpaceTimeTrace sf = scale_fd(*forcing);
            for (std::size_t i = 0; i < sf.samples.size(); ++i) sf.samples[i] += 2.0 * forcing->samples[i];
            forcing = std::move(sf);
        }
    }
    return out;
}

/// S V by the requested method. commuted_pde needs the problem the trace solves.
inline DerivedTrace apply_S(const SpaceTimeTrace& tr, SMethod method, const WaveProblem* problem = nullptr) {
    require_levels(tr, 3, "apply_S");
    if (method == SMethod::finite_difference) return {scale_fd(tr), "", {"S"}, method};
    if (!problem) throw ValidationError("apply_S: commuted_pde needs the wave problem of the trace");
    auto powers = scale_power_commuted(*problem, 1);
    return {std::move(powers[1]), "", {"S"}, method};
}

/// S^0 ... S^k. Finite differencing amplifies grid noise with every power, so
/// k is capped per method.
inline std::vector<SpaceTimeTrace> apply_S_power(const SpaceTimeTrace& tr, int k, SMethod method,
                                                 const WaveProblem* problem = nullptr) {
    if (k < 0) throw ParameterError("apply_S_power: k must be non-negative");
    if (k > k_max(method)) throw ParameterError("apply_S_power: k exceeds k_max for this method");
    if (method == SMethod::commuted_pde) {
        if (!problem) throw ValidationError("apply_S_power: commuted_pde needs the wave problem of the trace");
        return scale_power_commuted(*problem, k);
    }
    std::vector<SpaceTimeTrace> out;
    out.push_back(tr);
    for (int j = 1; j <= k; ++j) {
        require_levels(out.back(), 3, "apply_S_power");
        out.push_back(scale_fd(out.back()));
    }
    return out;
}

enum class NullDirection { u, ubar, u_c, ubar_c };

/// d_u = (d_t - d_r)/2, d_ubar = (d_t + d_r)/2, d_{u_c} = (d_t - c d_r)/(2c),
/// d_{ubar_c} = (d_t + c d_r)/(2c), with d_r = sign(x) d_x.
inline SpaceTimeTrace null_derivative(const SpaceTimeTrace& tr, NullDirection which, double c = 1.0) {
    if (!(c > 0.0)) throw ParameterError("null_derivative: speed must be positive");
    SpaceTimeTrace vt = time_derivative(tr);
    SpaceTimeTrace vr = radial_derivative(tr);
    double a = 0.5, b = 0.5;
    switch (which) {
    case NullDirection::u: a = 0.5; b = -0.5; break;
    case NullDirection::ubar: a = 0.5; b = 0.5; break;
    case NullDirection::u_c: a = 0.5 / c; b = -0.5; break;
    case NullDirection::ubar_c: a = 0.5 / c; b = 0.5; break;
    default: throw ParameterError("null_derivative: unknown direction");
    }
    SpaceTimeTrace out = SpaceTimeTrace::zeros_like(tr, tr.parity);
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] = a * vt.samples[i] + b * vr.samples[i];
    return out;
}

/// box_c V = V_tt - c^2 V_xx by centred second differences. The first and
/// last level (and node) have no centred stencil; there the residual is
/// extrapolated from the three nearest interior values, which keeps it
/// exact for solver traces of forced problems with smooth forcing.
inline SpaceTimeTrace box_residual(const SpaceTimeTrace& tr, double c) {
    require_levels(tr, 5, "box_residual");
    if (tr.nx() < 5) throw ValidationError("box_residual: need at least five nodes");
    SpaceTimeTrace out = SpaceTimeTrace::zeros_like(tr, tr.parity);
    const double h2 = tr.level_spacing() * tr.level_spacing();
    const double dx2 = tr.grid.dx * tr.grid.dx;
    const std::size_t L = tr.nt_stored, n = tr.nx();
    for (std::size_t k = 1; k + 1 < L; ++k) {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double vtt = (tr(k + 1, i) - 2.0 * tr(k, i) + tr(k - 1, i)) / h2;
            const double vxx = (tr(k, i + 1) - 2.0 * tr(k, i) + tr(k, i - 1)) / dx2;
            out(k, i) = vtt - c * c * vxx;
        }
        out(k, 0) = 3.0 * out(k, 1) - 3.0 * out(k, 2) + out(k, 3);
        out(k, n - 1) = 3.0 * out(k, n - 2) - 3.0 * out(k, n - 3) + out(k, n - 4);
    }
    for (std::size_t i = 0; i < n; ++i) {
        out(0, i) = 3.0 * out(1, i) - 3.0 * out(2, i) + out(3, i);
        out(L - 1, i) = 3.0 * out(L - 2, i) - 3.0 * out(L - 3, i) + out(L - 4, i);
    }
    return out;
}

}  // namespace mswave
