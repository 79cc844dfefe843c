#pragma once

// The coupled system  box V = x^-1 W V_t,  box_c W = x^-1 (V_t)^2  on the line
// with odd data: direct integration, the Picard iteration, blowup detection,
// data families and the radial reconstruction v = V/r, w = W/r.

#include <cmath>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "geometry.hpp"
#include "norms.hpp"
#include "scalecalc.hpp"
#include "trace.hpp"
#include "trace_io.hpp"
#include "waveop.hpp"

namespace mswave {

using Profile = std::function<double(double)>;

/// Odd data profiles (evaluated for x >= 0 and mirrored) supported in |x| <= 1.
struct DataFamily {
    std::string name;
    Profile V0, V1, W0, W1;
};

/// x exp(-1/(1 - (x/w)^2)) on |x| < w, zero elsewhere.
inline double bump_profile(double x, double w = 1.0) {
    if (!(w > 0.0) || w > 1.0) throw ParameterError("bump profile: width must lie in (0, 1]");
    return x * smooth_bump(x, w);
}

/// "paper-bump": the profile x exp(-1/(1-x^2)) for all four data; "pessimal":
/// the same with V_1 four times larger, which drives (V_t)^2 harder;
/// "bump-w<width>": paper-bump with the support shrunk to |x| < width.
inline DataFamily data_family(const std::string& name) {
    if (name == "paper-bump") {
        Profile b = [](double x) { return bump_profile(x); };
        return {name, b, b, b, b};
    }
    if (name == "pessimal") {
        Profile b = [](double x) { return bump_profile(x); };
        Profile big = [](double x) { return 4.0 * bump_profile(x); };
        return {name, b, big, b, b};
    }
    if (name.rfind("bump-w", 0) == 0) {
        double w = 0.0;
        try {
            w = std::stod(name.substr(6));
        } catch (const std::exception&) {
            throw ParameterError("unknown data family: " + name);
        }
        if (!(w > 0.0) || w > 1.0) throw ParameterError("bump width must lie in (0, 1]: " + name);
        Profile b = [w](double x) { return bump_profile(x, w); };
        return {name, b, b, b, b};
    }
    throw ParameterError("unknown data family: " + name);
}

inline std::pair<InitialData, InitialData> sample_family(const DataFamily& f, const Grid& g, double epsilon) {
    return {sample_odd_data(g, f.V0, f.V1, epsilon), sample_odd_data(g, f.W0, f.W1, epsilon)};
}

/// Node coordinates with x_{n-1-i} = -x_i bit for bit.
inline std::vector<double> odd_coordinates(const Grid& g) {
    const std::size_t n = g.npoints();
    std::vector<double> x(n);
    for (std::size_t i = n / 2; i < n; ++i) {
        x[i] = g.x(i);
        x[n - 1 - i] = -x[i];
    }
    return x;
}

// ---------------------------------------------------------------------------
// Blowup monitor

/// max(|V|, |W|, sqrt(V_t^2 + V_x^2), sqrt(W_t^2 + c^2 W_x^2)) over one pair of
/// consecutive levels, derivatives by one-sided differences.
inline double monitor_levels(std::span<const double> v0, std::span<const double> v1, std::span<const double> w0,
                             std::span<const double> w1, double c, double dt, double dx, std::size_t lo = 0,
                             std::size_t hi = std::size_t(-1)) {
    const std::size_t n = v1.size();
    hi = std::min(hi, n);
    double m = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double vx = i + 1 < n ? (v1[i + 1] - v1[i]) / dx : 0.0;
        const double wx = i + 1 < n ? (w1[i + 1] - w1[i]) / dx : 0.0;
        const double vt = (v1[i] - v0[i]) / dt;
        const double wt = (w1[i] - w0[i]) / dt;
        m = std::max({m, std::abs(v1[i]), std::abs(w1[i]), std::sqrt(vt * vt + vx * vx),
                      std::sqrt(wt * wt + c * c * wx * wx)});
    }
    return m;
}

/// Monitor at t = 4 from the data.
inline double initial_monitor(const InitialData& v, const InitialData& w, double c, double dx) {
    const std::size_t n = v.value.size();
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double vx = i + 1 < n ? (v.value[i + 1] - v.value[i]) / dx : 0.0;
        const double wx = i + 1 < n ? (w.value[i + 1] - w.value[i]) / dx : 0.0;
        m = std::max({m, std::abs(v.value[i]), std::abs(w.value[i]), std::hypot(v.velocity[i], vx),
                      std::sqrt(w.velocity[i] * w.velocity[i] + c * c * wx * wx)});
    }
    return m;
}

struct BlowupResult {
    std::optional<double> time;  // nullopt = survived
    double horizon = 4.0;
};

/// First stored level where the monitor exceeds `threshold`, else survived.
inline BlowupResult blowup_time(const SpaceTimeTrace& V, const SpaceTimeTrace& W, double threshold) {
    require_same_layout(V, W, "blowup_time");
    if (!(threshold > 0.0)) throw ParameterError("blowup_time: threshold must be positive");
    BlowupResult res;
    res.horizon = V.last_time();
    const double c = std::isnan(W.c) ? 1.0 : W.c;
    for (std::size_t k = 0; k < V.nt_stored; ++k) {
        const std::size_t a = k == 0 ? 0 : k - 1, b = k == 0 ? 1 : k;
        if (V.nt_stored < 2) break;
        const double m = monitor_levels(V.level(a), V.level(b), W.level(a), W.level(b), c, V.level_spacing(), V.grid.dx);
        if (!std::isfinite(m) || m > threshold) {
            res.time = V.time(k);
            return res;
        }
    }
    if (V.blowup_time || W.blowup_time) {
        res.time = std::min(V.blowup_time.value_or(INFINITY), W.blowup_time.value_or(INFINITY));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Direct integration

struct CoupledOptions {
    std::size_t stride = 0;             // 0 = automatic storage policy
    double max_courant = 0.9;
    double blowup_factor = 1e3;         // threshold = factor x initial monitor
    std::optional<double> blowup_threshold;  // absolute override
    bool nonlinear = true;
    bool corrector = false;
    bool record_forcing = false;
};

struct CoupledSolution {
    SpaceTimeTrace V;
    SpaceTimeTrace W;
    std::optional<SpaceTimeTrace> FV;  // recorded forcing of V (and W), on the storage stride
    std::optional<SpaceTimeTrace> FW;
    double threshold = INFINITY;
    double initial_monitor = 0.0;
    std::optional<double> blowup_time;
};

namespace detail {

inline void check_coupled_grid(double c, const Grid& g, double max_courant, bool nonlinear = true) {
    if (nonlinear && !(c > 1.0)) throw ParameterError("coupled system: speed c must exceed 1");
    if (!(c > 0.0)) throw ParameterError("coupled system: speed c must be positive");
    g.validate();
    if (courant_number(c, g) > max_courant * (1.0 + 1e-12))
        throw ConfigurationError("coupled system: grid violates the CFL limit for speed c");
}

/// Forcings x^-1 W V_t and x^-1 (V_t)^2 on [lo, hi).
inline void coupled_forcing(std::span<const double> w, std::span<const double> vt, const std::vector<double>& x,
                            std::span<double> fv, std::span<double> fw, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
        fv[i] = w[i] * vt[i] / x[i];
        fw[i] = vt[i] * vt[i] / x[i];
    }
}

}  // namespace detail

/// Co-evolves V (speed 1) and W (speed c) by leapfrog. The forcing at level n
/// uses V_t = (V^n - V^{n-1})/dt (the data V_1 at n = 0).
inline CoupledSolution solve_coupled(const DataFamily& data, double epsilon, double c, const Grid& g,
                                     const CoupledOptions& opt = {}) {
    detail::check_coupled_grid(c, g, opt.max_courant, opt.nonlinear);
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ParameterError("solve_coupled: epsilon must be >= 0");
    const std::size_t nx = g.npoints();
    const std::size_t stride = opt.stride == 0 ? default_stride(g) : opt.stride;
    auto [icV, icW] = sample_family(data, g, epsilon);
    const auto x = odd_coordinates(g);

    CoupledSolution sol;
    sol.initial_monitor = initial_monitor(icV, icW, c, g.dx);
    sol.threshold = opt.blowup_threshold ? *opt.blowup_threshold
                                         : (sol.initial_monitor > 0.0 ? opt.blowup_factor * sol.initial_monitor : INFINITY);
    const std::size_t levels = stored_levels(g, stride);
    sol.V = SpaceTimeTrace(g, 1.0, stride, Parity::odd, levels);
    sol.W = SpaceTimeTrace(g, c, stride, Parity::odd, levels);
    if (opt.record_forcing) {
        sol.FV = SpaceTimeTrace(g, std::nan(""), stride, Parity::odd, levels);
        sol.FW = SpaceTimeTrace(g, std::nan(""), stride, Parity::odd, levels);
    }

    std::vector<double> fv(nx, 0.0), fw(nx, 0.0), vt(nx, 0.0);
    auto store = [&](std::size_t n, std::span<const double> v, std::span<const double> w) {
        if (n % stride != 0) return;
        std::ranges::copy(v, sol.V.level(n / stride).begin());
        std::ranges::copy(w, sol.W.level(n / stride).begin());
    };
    auto store_forcing = [&](std::size_t n) {
        if (!opt.record_forcing || n % stride != 0) return;
        std::ranges::copy(fv, sol.FV->level(n / stride).begin());
        std::ranges::copy(fw, sol.FW->level(n / stride).begin());
    };
    auto truncate = [&](std::size_t n_bad) {
        sol.blowup_time = g.t(n_bad);
        const std::size_t keep = (n_bad - 1) / stride + 1;
        for (SpaceTimeTrace* tr : {&sol.V, &sol.W}) {
            tr->nt_stored = keep;
            tr->samples.resize(keep * nx);
            tr->blowup_time = sol.blowup_time;
        }
        if (opt.record_forcing)
            for (SpaceTimeTrace* tr : {&*sol.FV, &*sol.FW}) {
                tr->nt_stored = keep;
                tr->samples.resize(keep * nx);
            }
        return sol;
    };

    if (opt.nonlinear) detail::coupled_forcing(icW.value, icV.velocity, x, fv, fw, 0, nx);
    store(0, icV.value, icW.value);
    store_forcing(0);
    auto v1 = taylor_start(icV, fv, 1.0, g);
    auto w1 = taylor_start(icW, fw, c, g);
    StepperState sv = make_stepper(icV.value, std::move(v1), 1.0, g, 1);
    StepperState sw = make_stepper(icW.value, std::move(w1), c, g, 1);
    if (monitor_levels(sv.prev, sv.curr, sw.prev, sw.curr, c, g.dt, g.dx) > sol.threshold) return truncate(1);
    store(1, sv.curr, sw.curr);

    for (std::size_t n = 1; n < g.nt; ++n) {
        std::span<const double> fvs, fws;
        std::optional<NodeWindow> win;
        if (opt.nonlinear && sv.hi > sv.lo) {
            const std::size_t lo = sv.lo, hi = sv.hi;
            for (std::size_t i = lo; i < hi; ++i) vt[i] = (sv.curr[i] - sv.prev[i]) / g.dt;
            std::fill(fv.begin(), fv.end(), 0.0);
            std::fill(fw.begin(), fw.end(), 0.0);
            detail::coupled_forcing(sw.curr, vt, x, fv, fw, lo, hi);
            for (std::size_t i = lo; i < hi; ++i) vt[i] = 0.0;
            fvs = fv;
            fws = fw;
            win = NodeWindow{lo, hi};
        } else if (opt.record_forcing) {
            std::fill(fv.begin(), fv.end(), 0.0);
            std::fill(fw.begin(), fw.end(), 0.0);
        }
        store_forcing(n);
        const bool bad_v = leapfrog_step(sv, fvs, 1.0, g, win, opt.max_courant) == StepStatus::blowup;
        const bool bad_w = leapfrog_step(sw, fws, c, g, win, opt.max_courant) == StepStatus::blowup;
        if (bad_v || bad_w) return truncate(n + 1);
        const std::size_t lo = std::min(sv.lo, sw.lo), hi = std::max(sv.hi, sw.hi);
        const double m = monitor_levels(sv.prev, sv.curr, sw.prev, sw.curr, c, g.dt, g.dx, lo > 0 ? lo - 1 : 0, hi);
        if (!std::isfinite(m) || m > sol.threshold) return truncate(n + 1);
        store(n + 1, sv.curr, sw.curr);
    }
    if (opt.record_forcing && g.nt % stride == 0) {
        // forcing at the final level, for completeness of the record
        std::fill(fv.begin(), fv.end(), 0.0);
        std::fill(fw.begin(), fw.end(), 0.0);
        if (opt.nonlinear) {
            for (std::size_t i = 0; i < nx; ++i) vt[i] = (sv.curr[i] - sv.prev[i]) / g.dt;
            detail::coupled_forcing(sw.curr, vt, x, fv, fw, 0, nx);
        }
        store_forcing(g.nt);
    }

    if (opt.corrector && opt.nonlinear) {
        // second pass: forcing rebuilt from the predictor with centred V_t
        CoupledOptions pre = opt;
        pre.corrector = false;
        pre.stride = 1;
        pre.record_forcing = false;
        CoupledSolution p = solve_coupled(data, epsilon, c, g, pre);
        if (p.blowup_time) return sol;
        SpaceTimeTrace vtc = time_derivative(p.V);
        SpaceTimeTrace FV = SpaceTimeTrace::zeros_like(p.V, Parity::odd), FW = FV;
        for (std::size_t k = 0; k < p.V.nt_stored; ++k)
            detail::coupled_forcing(p.W.level(k), vtc.level(k), x, FV.level(k), FW.level(k), 0, nx);
        LinearSolveOptions lo;
        lo.stride = stride;
        lo.max_courant = opt.max_courant;
        CoupledSolution out;
        out.V = solve_linear(icV, forcing_from_trace(FV), 1.0, g, lo);
        out.W = solve_linear(icW, forcing_from_trace(FW), c, g, lo);
        out.W.c = c;
        out.threshold = sol.threshold;
        out.initial_monitor = sol.initial_monitor;
        return out;
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Picard iteration

struct PicardOptions {
    int j_max = 8;
    int k_used = 2;
    std::size_t norm_stride = 1;  // subsampling of stored levels for the norms
    double max_courant = 0.9;
    double blowup_factor = 1e3;
    bool compute_norms = true;
    bool keep_regions = false;
    std::optional<std::filesystem::path> spill_dir;  // older iterates are written here
};

struct IterateRow {
    int j = 0;
    std::optional<NormReport> M;
    std::optional<double> A;
    std::optional<double> contraction_ratio;
    std::optional<double> blowup;
};

struct IteratePair {
    int j = 0;
    SpaceTimeTrace V;
    SpaceTimeTrace W;
};

struct IterationLedger {
    double epsilon = 0.0;
    double c = 2.0;
    std::vector<IterateRow> rows;
    std::deque<IteratePair> retained;  // newest first: j, j-1, j-2
    bool truncated = false;

    const IteratePair& latest() const { return retained.front(); }
};

/// Every `s`-th stored level of a trace.
inline SpaceTimeTrace subsample(const SpaceTimeTrace& tr, std::size_t s) {
    if (s <= 1) return tr;
    const std::size_t levels = (tr.nt_stored - 1) / s + 1;
    SpaceTimeTrace out(tr.grid, tr.c, tr.stride * s, tr.parity, levels);
    for (std::size_t k = 0; k < levels; ++k) std::ranges::copy(tr.level(k * s), out.level(k).begin());
    out.blowup_time = tr.blowup_time;
    return out;
}

/// (V_j, W_j) solve the linear problems forced by iterate j-1, starting from
/// V_0 = W_0 = 0; V_t in the forcing uses the same lagged difference as
/// solve_coupled, so the direct solution is the fixed point of the scheme.
inline IterationLedger picard_iterate(const DataFamily& data, double epsilon, double c, const Grid& g,
                                      const PicardOptions& opt = {}) {
    if (opt.j_max < 1) throw ParameterError("picard_iterate: j_max must be >= 1");
    detail::check_coupled_grid(c, g, opt.max_courant);
    auto [icV, icW] = sample_family(data, g, epsilon);
    const auto x = odd_coordinates(g);
    const std::size_t nx = g.npoints();
    const double m0 = initial_monitor(icV, icW, c, g.dx);

    LinearSolveOptions lo;
    lo.stride = 1;
    lo.max_courant = opt.max_courant;
    lo.blowup_threshold = m0 > 0.0 ? opt.blowup_factor * m0 : INFINITY;

    IterationLedger ledger;
    ledger.epsilon = epsilon;
    ledger.c = c;
    std::optional<NormContext> ctx;

    const std::size_t levels = stored_levels(g, 1);
    IteratePair prev{0, SpaceTimeTrace(g, 1.0, 1, Parity::odd, levels), SpaceTimeTrace(g, c, 1, Parity::odd, levels)};

    for (int j = 1; j <= opt.j_max; ++j) {
        ForcingFn fv_fn, fw_fn;
        std::vector<double> vt(nx);
        if (j > 1) {
            const SpaceTimeTrace* pv = &prev.V;
            const SpaceTimeTrace* pw = &prev.W;
            auto lagged = [pv, &icV, dt = g.dt](std::size_t n, std::vector<double>& out) {
                if (n == 0) {
                    out = icV.velocity;
                    return;
                }
                auto a = pv->level(n), b = pv->level(n - 1);
                for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a[i] - b[i]) / dt;
            };
            fv_fn = [=, &x](std::size_t n, double, std::span<double> out) mutable {
                lagged(n, vt);
                auto w = pw->level(n);
                for (std::size_t i = 0; i < out.size(); ++i) out[i] = w[i] * vt[i] / x[i];
            };
            fw_fn = [=, &x](std::size_t n, double, std::span<double> out) mutable {
                lagged(n, vt);
                for (std::size_t i = 0; i < out.size(); ++i) out[i] = vt[i] * vt[i] / x[i];
            };
        }
        IteratePair cur{j, solve_linear(icV, fv_fn, 1.0, g, lo), solve_linear(icW, fw_fn, c, g, lo)};
        cur.W.c = c;
        IterateRow row;
        row.j = j;
        if (cur.V.blowup_time || cur.W.blowup_time) {
            row.blowup = std::min(cur.V.blowup_time.value_or(INFINITY), cur.W.blowup_time.value_or(INFINITY));
            ledger.rows.push_back(row);
            ledger.truncated = true;
            ledger.retained.push_front(std::move(cur));
            break;
        }
        if (opt.compute_norms) {
            SpaceTimeTrace sv = subsample(cur.V, opt.norm_stride), sw = subsample(cur.W, opt.norm_stride);
            if (!ctx) ctx = NormContext::build(sv, c);
            NormReport M = assemble_from_fields(scaled_fields(sv, sw, c, opt.k_used), *ctx, opt.keep_regions);
            M.j = j;
            SpaceTimeTrace dv = difference(sv, subsample(prev.V, opt.norm_stride));
            SpaceTimeTrace dw = difference(sw, subsample(prev.W, opt.norm_stride));
            NormReport A = assemble_from_fields(scaled_fields(dv, dw, c, opt.k_used), *ctx, false);
            row.M = std::move(M);
            row.A = A.M;
            if (j >= 2 && !ledger.rows.empty() && ledger.rows.back().A && *ledger.rows.back().A > 0.0)
                row.contraction_ratio = *row.A / *ledger.rows.back().A;
        }
        ledger.rows.push_back(row);
        ledger.retained.push_front(cur);
        if (ledger.retained.size() > 3) {
            if (opt.spill_dir) {
                const auto& old = ledger.retained.back();
                std::filesystem::create_directories(*opt.spill_dir);
                write_trace(*opt.spill_dir / ("V_" + std::to_string(old.j) + ".mswl"), old.V, {{"iterate", old.j}});
                write_trace(*opt.spill_dir / ("W_" + std::to_string(old.j) + ".mswl"), old.W, {{"iterate", old.j}});
            }
            ledger.retained.pop_back();
        }
        prev = std::move(cur);
    }
    return ledger;
}

/// Every ratio A_j / A_{j-1} with j >= j_from is at most `bound`, no iterate
/// blew up and the ledger reached `j_max`.
inline bool contracts(const IterationLedger& l, int j_max, double bound = 0.6, int j_from = 3) {
    if (l.truncated || static_cast<int>(l.rows.size()) < j_max) return false;
    for (const auto& r : l.rows) {
        if (r.j < j_from) continue;
        if (!r.A) return false;
        if (r.contraction_ratio && !(*r.contraction_ratio <= bound)) return false;
    }
    return true;
}

struct ContractionThreshold {
    double eps0 = 0.0;     // largest epsilon seen to contract
    double failed = 0.0;   // smallest epsilon seen not to
    int solves = 0;
};

/// Bisection for the edge of the contracting range in [lo, hi]; `lo` must
/// contract. If `hi` contracts too, eps0 = hi and `failed` stays 0.
inline ContractionThreshold bisect_contraction(const DataFamily& data, double c, const Grid& g, double lo, double hi,
                                               int steps = 8, PicardOptions opt = {}, double bound = 0.6) {
    if (!(lo > 0.0) || !(hi > lo)) throw ParameterError("bisect_contraction: need 0 < lo < hi");
    opt.keep_regions = false;
    opt.compute_norms = true;
    ContractionThreshold out;
    auto ok = [&](double e) {
        ++out.solves;
        return contracts(picard_iterate(data, e, c, g, opt), opt.j_max, bound);
    };
    if (!ok(lo)) throw ValidationError("bisect_contraction: lower end does not contract");
    if (ok(hi)) {
        out.eps0 = hi;
        return out;
    }
    for (int s = 0; s < steps; ++s) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    out.eps0 = lo;
    out.failed = hi;
    return out;
}

inline nlohmann::json to_json(const IterationLedger& l) {
    nlohmann::json rows = nlohmann::json::array();
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    for (const auto& r : l.rows) {
        nlohmann::json terms = nlohmann::json::array();
        if (r.M)
            for (double v : r.M->terms) terms.push_back(v);
        rows.push_back({{"j", r.j},
                        {"M_terms", terms},
                        {"M", r.M ? nlohmann::json(r.M->M) : nlohmann::json(nullptr)},
                        {"k_used", r.M ? nlohmann::json(r.M->k_used) : nlohmann::json(nullptr)},
                        {"A", opt(r.A)},
                        {"contraction_ratio", opt(r.contraction_ratio)},
                        {"blowup", opt(r.blowup)}});
    }
    return {{"epsilon", l.epsilon}, {"c", l.c}, {"truncated", l.truncated}, {"rows", rows}};
}

/// Space-time L^2 norm over the whole grid (trapezoid in t, dx in x).
inline double spacetime_l2(const SpaceTimeTrace& tr) {
    double s = 0.0;
    for (std::size_t k = 0; k < tr.nt_stored; ++k) {
        double row = 0.0;
        for (double v : tr.level(k)) row += v * v;
        s += level_weight(tr, k) * row * tr.grid.dx;
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Radial reconstruction

struct RadialFields {
    SpaceTimeTrace v;  // V / x, even in x
    SpaceTimeTrace w;
};

inline RadialFields reconstruct_3d(const SpaceTimeTrace& V, const SpaceTimeTrace& W) {
    require_same_layout(V, W, "reconstruct_3d");
    for (const SpaceTimeTrace* tr : {&V, &W}) {
        if (tr->parity == Parity::even) throw ValidationError("reconstruct_3d: fields must be odd");
        const double tol = 1e-12 * std::max(1.0, tr->max_abs());
        if (tr->parity_defect(Parity::odd) > tol) throw ValidationError("reconstruct_3d: fields must be odd");
    }
    const auto x = odd_coordinates(V.grid);
    RadialFields out{SpaceTimeTrace::zeros_like(V, Parity::even), SpaceTimeTrace::zeros_like(W, Parity::even)};
    out.v.c = V.c;
    out.w.c = W.c;
    for (std::size_t k = 0; k < V.nt_stored; ++k)
        for (std::size_t i = 0; i < V.nx(); ++i) {
            out.v(k, i) = V(k, i) / x[i];
            out.w(k, i) = W(k, i) / x[i];
        }
    return out;
}

}  // namespace mswave
