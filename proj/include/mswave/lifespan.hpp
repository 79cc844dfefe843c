#pragma once

// Epsilon sweeps of the blowup time and fits of the lifespan law.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "geometry.hpp"
#include "system.hpp"

namespace mswave {

struct LifespanRecord {
    double epsilon = 0.0;
    std::optional<double> T_star;  // nullopt = survived the horizon
    double horizon = 0.0;
    double threshold_factor = 1e3;
    std::size_t nx = 0;
    double dx = 0.0;
    double dt = 0.0;
    std::optional<double> T_star_refined;
    bool refinement_confirmed = false;  // |T*(dx/2) - T*| <= 10% T*
    bool immediate = false;             // blowup within the first ten steps
};

struct SweepPolicy {
    double dx = 1.0 / 32.0;     // 64 cells across the data support [-1, 1]
    double cfl = 0.8;
    double margin = 1.0;
    double blowup_factor = 1e3;
    bool confirm = true;
    bool nonlinear = true;
    bool early_exit = true;     // stop after two consecutive survivors
    unsigned threads = 1;
};

inline std::optional<double> measure_blowup(const DataFamily& data, double epsilon, double c, double horizon,
                                            double dx, const SweepPolicy& pol, Grid* grid_out = nullptr) {
    const Grid g = Grid::for_cone(dx, horizon, c, pol.cfl, pol.margin);
    if (grid_out) *grid_out = g;
    CoupledOptions o;
    o.stride = g.nt;  // only the end levels are kept
    o.blowup_factor = pol.blowup_factor;
    o.nonlinear = pol.nonlinear;
    return solve_coupled(data, epsilon, c, g, o).blowup_time;
}

inline LifespanRecord lifespan_run(const DataFamily& data, double epsilon, double c, double horizon,
                                   const SweepPolicy& pol) {
    LifespanRecord rec;
    rec.epsilon = epsilon;
    rec.horizon = horizon;
    rec.threshold_factor = pol.blowup_factor;
    Grid g;
    rec.T_star = measure_blowup(data, epsilon, c, horizon, pol.dx, pol, &g);
    rec.nx = g.nx;
    rec.dx = g.dx;
    rec.dt = g.dt;
    if (rec.T_star) {
        rec.immediate = *rec.T_star <= g.t_start + 10.0 * g.dt;
        if (pol.confirm) {
            rec.T_star_refined = measure_blowup(data, epsilon, c, horizon, pol.dx / 2.0, pol);
            rec.refinement_confirmed =
                rec.T_star_refined && std::abs(*rec.T_star_refined - *rec.T_star) <= 0.1 * *rec.T_star;
        }
    } else {
        rec.refinement_confirmed = true;  // survival is not re-checked
    }
    return rec;
}

/// One record per epsilon (descending), stopping after two consecutive
/// survivors when `early_exit` is set: smaller epsilon is assumed to survive
/// too (a monotonicity heuristic, not a theorem).
inline std::vector<LifespanRecord> sweep(const DataFamily& data, double c, const std::vector<double>& epsilons,
                                         double horizon, const SweepPolicy& pol = {}) {
    if (epsilons.empty()) throw ParameterError("sweep: no epsilon values");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0)) throw ParameterError("sweep: epsilons must be positive");
        if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw ParameterError("sweep: epsilons must be sorted descending");
    }
    if (!(horizon > 4.0)) throw ParameterError("sweep: horizon must exceed 4");
    std::vector<LifespanRecord> out;
    const std::size_t batch = std::max(1u, pol.threads);
    int survivors_in_a_row = 0;
    for (std::size_t start = 0; start < epsilons.size(); start += batch) {
        std::vector<std::future<LifespanRecord>> jobs;
        for (std::size_t i = start; i < std::min(epsilons.size(), start + batch); ++i) {
            const double e = epsilons[i];
            jobs.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred,
                                      [&data, e, c, horizon, &pol] { return lifespan_run(data, e, c, horizon, pol); }));
        }
        for (auto& j : jobs) {
            LifespanRecord r = j.get();
            if (survivors_in_a_row >= 2 && pol.early_exit) continue;
            survivors_in_a_row = r.T_star ? 0 : survivors_in_a_row + 1;
            out.push_back(std::move(r));
        }
        if (pol.early_exit && survivors_in_a_row >= 2) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fits

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n = 0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    f.n = x.size();
    if (f.n < 2) return f;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(f.n);
    my /= static_cast<double>(f.n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    f.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
    return f;
}

struct FitResult {
    double c_tilde = 0.0;  // slope of log T* against eps^-2
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;
    std::size_t censored_count = 0;
    bool insufficient = true;
};

/// Least-squares line through (eps^-2, log T*) over the finite records;
/// survivors only count as censored.
inline FitResult fit_exp_law(const std::vector<LifespanRecord>& records) {
    FitResult fr;
    std::vector<double> x, y;
    for (const auto& r : records) {
        if (!r.T_star) {
            ++fr.censored_count;
            continue;
        }
        x.push_back(1.0 / (r.epsilon * r.epsilon));
        y.push_back(std::log(*r.T_star));
    }
    fr.n_points = x.size();
    if (fr.n_points < 3) return fr;
    const LineFit f = least_squares(x, y);
    fr.c_tilde = f.slope;
    fr.intercept = f.intercept;
    fr.r_squared = f.r_squared;
    fr.insufficient = false;
    return fr;
}

enum class LifespanLaw { exp_inv_eps2, exp_inv_eps, power };

inline const char* to_string(LifespanLaw l) {
    switch (l) {
    case LifespanLaw::exp_inv_eps2: return "log T ~ eps^-2";
    case LifespanLaw::exp_inv_eps: return "log T ~ eps^-1";
    case LifespanLaw::power: return "T ~ eps^-a";
    }
    return "?";
}

struct LawComparison {
    bool insufficient = true;
    std::size_t n_points = 0;
    LineFit exp_inv_eps2;  // log T* = a + b / eps^2
    LineFit exp_inv_eps;   // log T* = a + b / eps
    LineFit power;         // log T* = a + b log(1/eps)
    LifespanLaw winner = LifespanLaw::exp_inv_eps2;
};

inline LawComparison competing_law_test(const std::vector<LifespanRecord>& records) {
    LawComparison out;
    std::vector<double> x2, x1, xl, y;
    for (const auto& r : records) {
        if (!r.T_star) continue;
        x2.push_back(1.0 / (r.epsilon * r.epsilon));
        x1.push_back(1.0 / r.epsilon);
        xl.push_back(-std::log(r.epsilon));
        y.push_back(std::log(*r.T_star));
    }
    out.n_points = y.size();
    if (out.n_points < 4) return out;
    out.insufficient = false;
    out.exp_inv_eps2 = least_squares(x2, y);
    out.exp_inv_eps = least_squares(x1, y);
    out.power = least_squares(xl, y);
    out.winner = LifespanLaw::exp_inv_eps2;
    double best = out.exp_inv_eps2.r_squared;
    if (out.exp_inv_eps.r_squared > best) {
        best = out.exp_inv_eps.r_squared;
        out.winner = LifespanLaw::exp_inv_eps;
    }
    if (out.power.r_squared > best) out.winner = LifespanLaw::power;
    return out;
}

/// T* unchanged up to less than the dyadic time block it falls in.
inline bool within_one_block(double a, double b) {
    const double tau = time_block(std::max(4.0, std::min(a, b)), INFINITY);
    return std::abs(a - b) < tau;
}

// ---------------------------------------------------------------------------
// Output

inline std::string sweep_csv(const std::vector<LifespanRecord>& recs) {
    std::string s = "epsilon,T_star,censored,threshold,nx,dt,confirmed\n";
    char buf[256];
    for (const auto& r : recs) {
        char tstar[32] = "";
        if (r.T_star) std::snprintf(tstar, sizeof tstar, "%.17g", *r.T_star);
        std::snprintf(buf, sizeof buf, "%.17g,%s,%d,%.17g,%zu,%.17g,%d\n", r.epsilon, tstar, r.T_star ? 0 : 1,
                      r.threshold_factor, r.nx, r.dt, r.refinement_confirmed ? 1 : 0);
        s += buf;
    }
    return s;
}

/// Records from a sweep CSV (replay mode).
inline std::vector<LifespanRecord> parse_sweep_csv(const std::string& text) {
    std::vector<LifespanRecord> out;
    std::size_t pos = text.find('\n');
    if (pos == std::string::npos) return out;
    ++pos;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t a = 0;
        while (true) {
            std::size_t b = line.find(',', a);
            f.push_back(line.substr(a, b == std::string::npos ? std::string::npos : b - a));
            if (b == std::string::npos) break;
            a = b + 1;
        }
        if (f.size() < 7) throw ValidationError("sweep CSV: expected 7 columns");
        LifespanRecord r;
        try {
            r.epsilon = std::stod(f[0]);
            if (!f[1].empty()) r.T_star = std::stod(f[1]);
            r.threshold_factor = std::stod(f[3]);
            r.nx = static_cast<std::size_t>(std::stoull(f[4]));
            r.dt = std::stod(f[5]);
            r.refinement_confirmed = f[6] == "1";
        } catch (const std::exception&) {
            throw ValidationError("sweep CSV: malformed row: " + line);
        }
        out.push_back(r);
    }
    return out;
}

inline nlohmann::json to_json(const FitResult& f) {
    return {{"c_tilde", f.c_tilde},     {"intercept", f.intercept},           {"r_squared", f.r_squared},
            {"n_points", f.n_points},   {"censored_count", f.censored_count}, {"insufficient", f.insufficient}};
}

inline nlohmann::json to_json(const LawComparison& c) {
    auto fit = [](const LineFit& f) {
        return nlohmann::json{{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
    };
    return {{"insufficient", c.insufficient}, {"n_points", c.n_points},        {"exp_inv_eps2", fit(c.exp_inv_eps2)},
            {"exp_inv_eps", fit(c.exp_inv_eps)}, {"power", fit(c.power)}, {"winner", to_string(c.winner)}};
}

inline nlohmann::json to_json(const LifespanRecord& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"epsilon", r.epsilon},
            {"T_star", r.T_star ? nlohmann::json(*r.T_star) : nlohmann::json("survived")},
            {"horizon", r.horizon},
            {"threshold_factor", r.threshold_factor},
            {"nx", r.nx},
            {"dx", r.dx},
            {"dt", r.dt},
            {"T_star_refined", opt(r.T_star_refined)},
            {"refinement_confirmed", r.refinement_confirmed},
            {"immediate", r.immediate}};
}

/// "eps^-2 log(T*)" pairs, one per finite record.
inline std::string plot_pairs(const std::vector<LifespanRecord>& recs) {
    std::string s = "inv_eps2,log_T_star\n";
    char buf[96];
    for (const auto& r : recs)
        if (r.T_star) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", 1.0 / (r.epsilon * r.epsilon), std::log(*r.T_star));
            s += buf;
        }
    return s;
}

}  // namespace mswave
