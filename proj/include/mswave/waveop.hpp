#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "trace.hpp"

namespace mswave {

/// Two time levels of a leapfrog integration plus the node window [lo, hi)
/// outside of which both levels are exactly zero.
struct StepperState {
    std::vector<double> prev;
    std::vector<double> curr;
    std::size_t n = 0;  // index of `curr`
    double courant = 0.0;
    std::size_t lo = 0;
    std::size_t hi = 0;
};

enum class StepStatus { ok, blowup };

struct NodeWindow {
    std::size_t lo = 0;
    std::size_t hi = 0;
};

/// Smallest window holding every nonzero entry of `v` (empty window when v == 0).
inline NodeWindow nonzero_window(std::span<const double> v) {
    std::size_t lo = 0;
    while (lo < v.size() && v[lo] == 0.0) ++lo;
    if (lo == v.size()) return {0, 0};
    std::size_t hi = v.size();
    while (hi > lo && v[hi - 1] == 0.0) --hi;
    return {lo, hi};
}

inline double courant_number(double c, const Grid& g) { return c * g.dt / g.dx; }

/// Discrete d^2/dx^2 with homogeneous Dirichlet data at x = x_min, x_max
/// (antisymmetric ghost nodes on the staggered grid).
inline double second_difference(std::span<const double> v, std::size_t i) {
    const std::size_t n = v.size();
    const double left = i == 0 ? -v[0] : v[i - 1];
    const double right = i + 1 == n ? -v[n - 1] : v[i + 1];
    return left + right - 2.0 * v[i];
}

/// Prepares a stepper from two consecutive levels.
inline StepperState make_stepper(std::vector<double> prev, std::vector<double> curr, double c, const Grid& g,
                                 std::size_t n = 1) {
    StepperState s;
    s.courant = courant_number(c, g);
    auto wp = nonzero_window(prev);
    auto wc = nonzero_window(curr);
    if (wp.hi == wp.lo) wp = wc;
    if (wc.hi == wc.lo) wc = wp;
    s.lo = std::min(wp.lo, wc.lo);
    s.hi = std::max(wp.hi, wc.hi);
    s.prev = std::move(prev);
    s.curr = std::move(curr);
    s.n = n;
    return s;
}

/// One explicit leapfrog step of  V_tt - c^2 V_xx = F:
///   next = 2 curr - prev + lambda^2 (curr[i+1] + curr[i-1] - 2 curr[i]) + dt^2 F.
/// `forcing` is F at the level of `curr`; it must vanish outside
/// `forcing_window` when one is given (otherwise its support is scanned).
inline StepStatus leapfrog_step(StepperState& s, std::span<const double> forcing, double c, const Grid& g,
                                std::optional<NodeWindow> forcing_window = std::nullopt, double max_courant = 1.0) {
    const double lambda = courant_number(c, g);
    if (lambda > max_courant * (1.0 + 1e-12))
        throw ConfigurationError("leapfrog: Courant number " + std::to_string(lambda) + " exceeds " +
                                 std::to_string(max_courant));
    const std::size_t nx = g.npoints();
    if (s.curr.size() != nx || s.prev.size() != nx) throw ValidationError("leapfrog: state does not match grid");
    const bool forced = !forcing.empty();
    if (forced && forcing.size() != nx) throw ValidationError("leapfrog: forcing does not match grid");

    std::size_t lo = s.lo > 0 ? s.lo - 1 : 0;
    std::size_t hi = std::min(nx, s.hi + 1);
    if (forced) {
        NodeWindow fw = forcing_window ? *forcing_window : nonzero_window(forcing);
        if (fw.hi > fw.lo) {
            if (s.hi <= s.lo) {
                lo = fw.lo;
                hi = fw.hi;
            } else {
                lo = std::min(lo, fw.lo);
                hi = std::max(hi, fw.hi);
            }
        }
    }
    if (s.hi <= s.lo && !(forced && hi > lo)) {
        // identically zero and unforced: stays zero
        std::swap(s.prev, s.curr);
        ++s.n;
        return StepStatus::ok;
    }

    const double l2 = lambda * lambda;
    const double dt2 = g.dt * g.dt;
    std::span<const double> cur = s.curr;
    bool finite = true;
    for (std::size_t i = lo; i < hi; ++i) {
        double next = 2.0 * cur[i] - s.prev[i] + l2 * second_difference(cur, i);
        if (forced) next += dt2 * forcing[i];
        s.prev[i] = next;
        finite = finite && std::isfinite(next);
    }
    std::swap(s.prev, s.curr);
    s.lo = lo;
    s.hi = hi;
    ++s.n;
    return finite ? StepStatus::ok : StepStatus::blowup;
}

/// Initial data (V(4), V_t(4)) on the grid nodes.
struct InitialData {
    std::vector<double> value;
    std::vector<double> velocity;
};

/// Samples an odd profile pair on a symmetric staggered grid: the positive
/// half is evaluated and mirrored with a sign flip so oddness is exact.
template <class F0, class F1>
InitialData sample_odd_data(const Grid& g, F0&& v0, F1&& v1, double amplitude = 1.0) {
    const std::size_t n = g.npoints();
    InitialData d{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t i = n / 2; i < n; ++i) {
        const double x = g.x(i);
        d.value[i] = amplitude * v0(x);
        d.velocity[i] = amplitude * v1(x);
        d.value[n - 1 - i] = -d.value[i];
        d.velocity[n - 1 - i] = -d.velocity[i];
    }
    return d;
}

inline bool is_odd(std::span<const double> v, double tol = 0.0) {
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n / 2; ++i)
        if (std::abs(v[i] + v[n - 1 - i]) > tol) return false;
    return true;
}

/// Level-n forcing callback: fills F(t_n, x_i) for all nodes.
using ForcingFn = std::function<void(std::size_t n, double t, std::span<double> out)>;

struct LinearSolveOptions {
    std::size_t stride = 0;  // 0 = automatic storage policy
    double max_courant = 0.9;
    bool require_odd = true;
    double blowup_threshold = std::numeric_limits<double>::infinity();
};

/// Stride keeping at most 1e8 stored samples (1 whenever that already holds).
inline std::size_t default_stride(const Grid& g) {
    const double total = static_cast<double>(g.nt + 1) * static_cast<double>(g.npoints());
    if (total <= 1e8) return 1;
    return static_cast<std::size_t>(std::ceil(total / 1e8));
}

inline std::size_t stored_levels(const Grid& g, std::size_t stride) { return g.nt / stride + 1; }

/// Forcing callback reading level n of a stride-1 trace on the same grid.
inline ForcingFn forcing_from_trace(const SpaceTimeTrace& f) {
    if (f.stride != 1) throw ValidationError("forcing trace must store every time level");
    return [&f](std::size_t n, double, std::span<double> out) {
        if (n >= f.nt_stored) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        auto row = f.level(n);
        std::copy(row.begin(), row.end(), out.begin());
    };
}

/// Second-order Taylor start V(4 + dt) = V0 + dt V1 + dt^2/2 (c^2 V0'' + F(4)).
inline std::vector<double> taylor_start(const InitialData& ic, std::span<const double> forcing0, double c,
                                        const Grid& g) {
    const std::size_t n = g.npoints();
    std::vector<double> v(n);
    const double c2 = c * c / (g.dx * g.dx);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = c2 * second_difference(ic.value, i);
        if (!forcing0.empty()) acc += forcing0[i];
        v[i] = ic.value[i] + g.dt * ic.velocity[i] + 0.5 * g.dt * g.dt * acc;
    }
    return v;
}

/// Solves V_tt - c^2 V_xx = F on [4, T] with V(4) = ic.value, V_t(4) = ic.velocity.
inline SpaceTimeTrace solve_linear(const InitialData& ic, const ForcingFn& forcing, double c, const Grid& g,
                                   const LinearSolveOptions& opt = {}) {
    g.validate();
    if (!g.stagger) throw ConfigurationError("solve_linear: staggered grid required");
    const std::size_t nx = g.npoints();
    if (ic.value.size() != nx || ic.velocity.size() != nx) throw ValidationError("solve_linear: data do not match grid");
    if (opt.require_odd) {
        double scale = 0.0;
        for (double v : ic.value) scale = std::max(scale, std::abs(v));
        for (double v : ic.velocity) scale = std::max(scale, std::abs(v));
        if (!is_odd(ic.value, 1e-12 * scale) || !is_odd(ic.velocity, 1e-12 * scale))
            throw ValidationError("solve_linear: initial data must be odd");
    }
    if (courant_number(c, g) > opt.max_courant * (1.0 + 1e-12))
        throw ConfigurationError("solve_linear: Courant number exceeds limit");

    const std::size_t stride = opt.stride == 0 ? default_stride(g) : opt.stride;
    SpaceTimeTrace tr(g, c, stride, opt.require_odd ? Parity::odd : Parity::none, stored_levels(g, stride));
    std::vector<double> f(nx, 0.0);
    const bool forced = static_cast<bool>(forcing);

    auto store = [&](std::size_t n, std::span<const double> v) {
        if (n % stride != 0) return;
        auto row = tr.level(n / stride);
        std::copy(v.begin(), v.end(), row.begin());
    };
    auto bad = [&](std::span<const double> v) {
        for (double x : v)
            if (!std::isfinite(x) || std::abs(x) > opt.blowup_threshold) return true;
        return false;
    };
    auto truncate = [&](std::size_t n_bad) {
        tr.blowup_time = g.t(n_bad);
        const std::size_t keep = (n_bad - 1) / stride + 1;
        tr.nt_stored = keep;
        tr.samples.resize(keep * nx);
        return tr;
    };

    store(0, ic.value);
    if (forced) forcing(0, g.t(0), f);
    for (double x : f)
        if (!std::isfinite(x)) return truncate(1);
    auto first = taylor_start(ic, forced ? std::span<const double>(f) : std::span<const double>{}, c, g);
    if (bad(first)) return truncate(1);
    store(1, first);

    StepperState s = make_stepper(ic.value, std::move(first), c, g, 1);
    for (std::size_t n = 1; n < g.nt; ++n) {
        std::span<const double> fs;
        if (forced) {
            forcing(n, g.t(n), f);
            fs = f;
        }
        if (leapfrog_step(s, fs, c, g, std::nullopt, opt.max_courant) == StepStatus::blowup ||
            bad(std::span<const double>(s.curr).subspan(s.lo, s.hi - s.lo)))
            return truncate(n + 1);
        store(n + 1, s.curr);
    }
    return tr;
}

inline SpaceTimeTrace solve_homogeneous(const InitialData& ic, double c, const Grid& g,
                                        const LinearSolveOptions& opt = {}) {
    return solve_linear(ic, ForcingFn{}, c, g, opt);
}

namespace detail {

/// Conserved leapfrog energy between consecutive levels a (earlier) and b:
///   sum ((b - a)/h)^2 dx + c^2 sum_edges (da/dx)(db/dx) dx,
/// boundary edges to the antisymmetric ghosts carrying weight 1/2.
inline double half_level_energy(std::span<const double> a, std::span<const double> b, double c, double h, double dx) {
    const std::size_t n = a.size();
    double kin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (b[i] - a[i]) / h;
        kin += d * d;
    }
    double pot = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) pot += (a[i + 1] - a[i]) * (b[i + 1] - b[i]);
    pot += 0.5 * (2.0 * a[0]) * (2.0 * b[0]);
    pot += 0.5 * (2.0 * a[n - 1]) * (2.0 * b[n - 1]);
    return kin * dx + c * c * pot / dx;
}

}  // namespace detail

/// Discrete energy  int (V_t)^2 + c^2 (V_x)^2 dx  at a stored level, with both
/// differences centred on the half levels / half cells the leapfrog scheme
/// conserves (the two adjacent half-level values are averaged).
inline double discrete_energy(const SpaceTimeTrace& tr, double t) {
    if (std::isnan(tr.c)) throw ValidationError("discrete_energy: trace has no wave speed");
    auto k = tr.level_at(t);
    if (!k) throw DomainError("discrete_energy: t is not a stored time level");
    if (tr.nt_stored < 2) throw ValidationError("discrete_energy: need at least two stored levels");
    const double h = tr.level_spacing();
    const double dx = tr.grid.dx;
    double sum = 0.0;
    int terms = 0;
    if (*k > 0) {
        sum += detail::half_level_energy(tr.level(*k - 1), tr.level(*k), tr.c, h, dx);
        ++terms;
    }
    if (*k + 1 < tr.nt_stored) {
        sum += detail::half_level_energy(tr.level(*k), tr.level(*k + 1), tr.c, h, dx);
        ++terms;
    }
    return sum / terms;
}

// ---------------------------------------------------------------------------
// Manufactured solutions

enum class ManufacturedKind { dalembert_bump, standing_wave };

struct ManufacturedParams {
    double c = 1.0;
    double amplitude = 1.0;
    double center = 2.0;     // bump centre at t = 4 (x > 0 copy)
    double width = 1.0;      // bump half-width
    double direction = 1.0;  // +1 outgoing, -1 incoming
    double wavenumber = 1.0;
    std::size_t stride = 1;
};

/// C-infinity bump exp(-1/(1 - (y/w)^2)) on |y| < w.
inline double smooth_bump(double y, double w) {
    const double s = y / w;
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

inline double smooth_bump_derivative(double y, double w) {
    const double s = y / w;
    if (std::abs(s) >= 1.0) return 0.0;
    const double q = 1.0 - s * s;
    return smooth_bump(y, w) * (-2.0 * s / (w * q * q));
}

/// Exact solution with its exact t and x derivatives, sampled on a grid.
struct ManufacturedSolution {
    SpaceTimeTrace value;
    SpaceTimeTrace dt;
    SpaceTimeTrace dx;
    InitialData initial;
};

inline ManufacturedSolution manufactured_solution(ManufacturedKind kind, const ManufacturedParams& p,
                                                  const Grid& g) {
    g.validate();
    const double c = p.c;
    std::function<void(double, double, double&, double&, double&)> eval;
    switch (kind) {
    case ManufacturedKind::dalembert_bump:
        // b(x - x0 - d c s) - b(-x - x0 - d c s): a travelling bump and its odd image
        eval = [p, c](double t, double x, double& v, double& vt, double& vx) {
            const double s = p.direction * c * (t - 4.0);
            const double y1 = x - p.center - s;
            const double y2 = -x - p.center - s;
            v = p.amplitude * (smooth_bump(y1, p.width) - smooth_bump(y2, p.width));
            const double d1 = smooth_bump_derivative(y1, p.width);
            const double d2 = smooth_bump_derivative(y2, p.width);
            vt = p.amplitude * (-p.direction * c * d1 + p.direction * c * d2);
            vx = p.amplitude * (d1 + d2);
        };
        break;
    case ManufacturedKind::standing_wave:
        eval = [p, c](double t, double x, double& v, double& vt, double& vx) {
            const double k = p.wavenumber;
            v = p.amplitude * std::sin(k * x) * std::cos(c * k * t);
            vt = -p.amplitude * c * k * std::sin(k * x) * std::sin(c * k * t);
            vx = p.amplitude * k * std::cos(k * x) * std::cos(c * k * t);
        };
        break;
    default: throw ParameterError("manufactured_solution: unsupported kind");
    }
    const std::size_t stride = std::max<std::size_t>(1, p.stride);
    const std::size_t levels = stored_levels(g, stride);
    ManufacturedSolution m{SpaceTimeTrace(g, c, stride, Parity::odd, levels),
                           SpaceTimeTrace(g, std::nan(""), stride, Parity::odd, levels),
                           SpaceTimeTrace(g, std::nan(""), stride, Parity::even, levels),
                           {}};
    const std::size_t n = g.npoints();
    for (std::size_t k = 0; k < levels; ++k) {
        const double t = m.value.time(k);
        for (std::size_t i = n / 2; i < n; ++i) {
            double v, vt, vx;
            eval(t, g.x(i), v, vt, vx);
            m.value(k, i) = v;
            m.value(k, n - 1 - i) = -v;
            m.dt(k, i) = vt;
            m.dt(k, n - 1 - i) = -vt;
            m.dx(k, i) = vx;
            m.dx(k, n - 1 - i) = vx;
        }
    }
    auto row_v = m.value.level(0);
    auto row_t = m.dt.level(0);
    m.initial.value.assign(row_v.begin(), row_v.end());
    m.initial.velocity.assign(row_t.begin(), row_t.end());
    return m;
}

/// Samples an arbitrary function f(t, x) on a grid (test and oracle helper).
template <class F>
SpaceTimeTrace sample_function(const Grid& g, std::size_t stride, F&& f, double c = std::nan(""),
                               Parity parity = Parity::none) {
    SpaceTimeTrace tr(g, c, stride, parity, stored_levels(g, stride));
    for (std::size_t k = 0; k < tr.nt_stored; ++k)
        for (std::size_t i = 0; i < tr.nx(); ++i) tr(k, i) = f(tr.time(k), g.x(i));
    return tr;
}

}  // namespace mswave
