#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace mswave {

/// Japanese bracket <y> = (1 + y^2)^(1/2).
inline double bracket(double y) { return std::sqrt(1.0 + y * y); }

/// Uniform (t, x) grid over [t_start, t_end] x [x_min, x_max].
///
/// With `stagger` set the nodes sit at cell centres x_i = x_min + (i + 1/2) dx,
/// so a symmetric grid never has a node at x = 0 and x_{nx-1-i} = -x_i.
struct Grid {
    double x_min = -1.0;
    double x_max = 1.0;
    std::size_t nx = 0;
    double dx = 0.0;
    double t_start = 4.0;
    double t_end = 5.0;
    double dt = 0.0;
    std::size_t nt = 0;  // number of time steps, t_end = t_start + nt * dt
    bool stagger = true;

    std::size_t npoints() const { return stagger ? nx : nx + 1; }
    double x(std::size_t i) const {
        return stagger ? x_min + (static_cast<double>(i) + 0.5) * dx : x_min + static_cast<double>(i) * dx;
    }
    double t(std::size_t n) const { return t_start + static_cast<double>(n) * dt; }
    bool symmetric() const { return x_min == -x_max; }

    void validate() const {
        if (nx == 0 || !(dx > 0.0) || std::abs((x_max - x_min) / static_cast<double>(nx) - dx) > 1e-12 * dx)
            throw ConfigurationError("grid: dx must equal (x_max - x_min)/nx > 0");
        if (!(dt > 0.0)) throw ConfigurationError("grid: dt must be positive");
        if (!(t_end > t_start)) throw ConfigurationError("grid: t_end must exceed t_start");
        if (!symmetric()) throw ConfigurationError("grid: domain must be symmetric (x_min = -x_max)");
    }

    /// Symmetric staggered grid on [-half_width, half_width] with nx cells and
    /// dt <= cfl * dx / c_max, shrunk so that (t_end - t_start) / dt is an integer.
    static Grid symmetric_staggered(double half_width, std::size_t nx, double t_end, double cfl, double c_max,
                                    double t_start = 4.0) {
        if (!(half_width > 0.0) || nx == 0 || nx % 2 != 0)
            throw ConfigurationError("grid: need half_width > 0 and an even, positive nx");
        if (!(cfl > 0.0) || !(c_max > 0.0)) throw ConfigurationError("grid: cfl and c_max must be positive");
        Grid g;
        g.x_min = -half_width;
        g.x_max = half_width;
        g.nx = nx;
        g.dx = 2.0 * half_width / static_cast<double>(nx);
        g.t_start = t_start;
        g.t_end = t_end;
        const double dt_max = cfl * g.dx / c_max;
        g.nt = static_cast<std::size_t>(std::ceil((t_end - t_start) / dt_max - 1e-9));
        if (g.nt == 0) g.nt = 1;
        g.dt = (t_end - t_start) / static_cast<double>(g.nt);
        g.stagger = true;
        g.validate();
        return g;
    }

    /// Grid with the given spacing that contains the speed-c support cone of
    /// data supported in |x| <= 1 up to t_end, plus `margin` of empty space.
    static Grid for_cone(double dx, double t_end, double c_max, double cfl = 0.8, double margin = 1.0,
                         double t_start = 4.0) {
        const double need = c_max * (t_end - t_start) + 1.0 + margin;
        auto half_cells = static_cast<std::size_t>(std::ceil(need / dx - 1e-9));
        return symmetric_staggered(static_cast<double>(half_cells) * dx, 2 * half_cells, t_end, cfl, c_max,
                                   t_start);
    }
};

/// Null coordinates of a point (t, r) at speed c.
struct NullCoords {
    double u = 0.0;       // t - r
    double ubar = 0.0;    // t + r
    double u_c = 0.0;     // c t - r
    double ubar_c = 0.0;  // c t + r
    double c = 1.0;

    static NullCoords at(double t, double r, double c) { return {t - r, t + r, c * t - r, c * t + r, c}; }
};

// ---------------------------------------------------------------------------
// Weights

inline void check_theta(double theta) {
    if (!(theta >= 1.0)) throw ParameterError("sigma weight: theta must be >= 1");
}

/// sigma_theta(y) = y / (|y| + theta); odd, increasing, |sigma| < 1.
inline double sigma_weight(double y, double theta) {
    check_theta(theta);
    return y / (std::abs(y) + theta);
}

/// sigma'_theta(y) = theta / (|y| + theta)^2.
inline double sigma_weight_derivative(double y, double theta) {
    check_theta(theta);
    const double d = std::abs(y) + theta;
    return theta / (d * d);
}

enum class WeightKind { sigma, sigma_prime, sqrt_sigma_derivative };

struct WeightSpec {
    double theta = 1.0;
    WeightKind kind = WeightKind::sigma;
};

namespace constants {
/// Lower-bound constant k in  d/dr sigma_R(r)^(1/2) >= k r^(-1/2) R^(-1/2)
/// for r in [R/64, 4R]; minimum of the ratio over a dense scan of that band
/// (attained at r = 4R, independent of R).
inline constexpr double sqrt_sigma_band_lower = 0.044721359549995794;
inline constexpr double sqrt_sigma_band_lo = 1.0 / 64.0;  // band, in units of R
inline constexpr double sqrt_sigma_band_hi = 4.0;
}  // namespace constants

/// d/dr (sigma_R(r))^(1/2) for r > 0. Inside the band r in [R/64, 4R] the
/// bound against k r^(-1/2) R^(-1/2) is checked and a logic_error raised if it
/// ever fails.
inline double sqrt_sigma_r_derivative_lower_bound(double r, double R) {
    if (!(r > 0.0)) throw DomainError("sqrt sigma derivative: r must be positive");
    const double s = sigma_weight(r, R);
    const double value = sigma_weight_derivative(r, R) / (2.0 * std::sqrt(s));
    if (r >= constants::sqrt_sigma_band_lo * R && r <= constants::sqrt_sigma_band_hi * R) {
        const double bound = constants::sqrt_sigma_band_lower / std::sqrt(r * R);
        if (value < bound * (1.0 - 1e-12)) throw std::logic_error("sqrt sigma derivative below band constant");
    }
    return value;
}

inline double evaluate_weight(const WeightSpec& spec, double y) {
    switch (spec.kind) {
    case WeightKind::sigma: return sigma_weight(y, spec.theta);
    case WeightKind::sigma_prime: return sigma_weight_derivative(y, spec.theta);
    case WeightKind::sqrt_sigma_derivative: return sqrt_sigma_r_derivative_lower_bound(y, spec.theta);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Dyadic decomposition of the support cone {t in [4,T], r <= c t - (4c - 1)}

/// Largest power of two <= y (y >= 1).
inline double dyadic_floor(double y) {
    if (!(y >= 1.0)) return 1.0;
    int e = 0;
    std::frexp(y, &e);  // y = m 2^e, m in [1/2, 1)
    double d = std::ldexp(1.0, e - 1);
    if (d > y) d *= 0.5;
    return d;
}

/// Time block tau >= 4 containing t. Blocks are [tau, 2 tau) except the last
/// one, which is closed at T; so t = T never opens a block of zero measure.
inline double time_block(double t, double T) {
    double tau = std::max(4.0, dyadic_floor(t));
    if (tau >= T && tau > 4.0) tau *= 0.5;
    return tau;
}

inline bool in_support(double t, double r, double c) { return r <= c * t - (4.0 * c - 1.0); }

enum class RegionKind { RBand, UcBand, Outer };

inline const char* to_string(RegionKind k) {
    switch (k) {
    case RegionKind::RBand: return "RBand";
    case RegionKind::UcBand: return "UcBand";
    case RegionKind::Outer: return "Outer";
    }
    return "?";
}

/// One cell C^{c,R}_tau, C^{c,U_c}_tau or C^{c,c tau/2}_tau of the
/// decomposition, optionally enlarged by `enlargement` in every interval.
struct DyadicRegion {
    double c = 1.0;
    double tau = 4.0;
    RegionKind kind = RegionKind::RBand;
    double value = 1.0;        // R, U_c, or c tau / 2 for the outer cell
    double enlargement = 1.0;  // 1 = plain
    double horizon = 8.0;      // T
    double q_lo = 0.0;         // r (RBand) or u_c (UcBand) interval, half-open
    double q_hi = 0.0;

    double top() const { return c * tau / 4.0; }
    bool last_block() const { return 2.0 * tau >= horizon; }
    double t_lo() const { return std::max(4.0, tau / enlargement); }
    double t_hi() const { return std::min(horizon, 2.0 * tau * enlargement); }

    /// Index used by l^p_R / l^p_U aggregations (the outer cell counts as
    /// R = U_c = c tau / 2).
    double index() const { return value; }

    bool same_cell(const DyadicRegion& o) const {
        return c == o.c && tau == o.tau && kind == o.kind && value == o.value && enlargement == o.enlargement;
    }

    bool contains(double t, double r) const {
        if (r < 0.0 || t < 4.0 || t > horizon) return false;
        if (!in_support(t, r, c)) return false;
        const double f = enlargement;
        if (f == 1.0) {
            if (t < tau) return false;
            if (!(t < 2.0 * tau || (last_block() && t <= horizon))) return false;
        } else if (t < tau / f || t > 2.0 * tau * f) {
            return false;
        }
        const double uc = c * t - r;
        switch (kind) {
        case RegionKind::RBand: return r >= q_lo / f && r < q_hi * f;
        case RegionKind::UcBand: return uc >= q_lo / f && uc < q_hi * f;
        case RegionKind::Outer: {
            const double edge = c * tau / (2.0 * f);
            return r >= edge && uc >= edge;
        }
        }
        return false;
    }

    /// Region with the same cell and a different enlargement factor.
    DyadicRegion enlarged(double factor) const {
        DyadicRegion e = *this;
        e.enlargement = factor;
        return e;
    }
};

inline void check_speed(double c) {
    if (!(c >= 0.75)) throw ParameterError("dyadic regions need c >= 3/4 so that c t - r >= 2 in the cone");
}

/// Builds a region; `value` must be a dyadic in range for the kind.
inline DyadicRegion make_region(double c, double tau, RegionKind kind, double value, double T,
                                double enlargement = 1.0) {
    check_speed(c);
    if (!(enlargement >= 1.0)) throw ParameterError("region enlargement must be >= 1");
    DyadicRegion g;
    g.c = c;
    g.tau = tau;
    g.kind = kind;
    g.value = value;
    g.enlargement = enlargement;
    g.horizon = T;
    const double top = dyadic_floor(c * tau / 4.0);
    switch (kind) {
    case RegionKind::RBand:
        if (value < 1.0 || value > top) throw ParameterError("RBand value outside [1, c tau/4]");
        g.q_lo = value == 1.0 ? 0.0 : value;
        g.q_hi = value == top ? c * tau / 2.0 : 2.0 * value;
        break;
    case RegionKind::UcBand:
        if (value < 2.0 || value > top) throw ParameterError("UcBand value outside [2, c tau/4]");
        g.q_lo = value;
        g.q_hi = value == top ? c * tau / 2.0 : 2.0 * value;
        break;
    case RegionKind::Outer:
        g.value = c * tau / 2.0;
        g.q_lo = c * tau / 2.0;
        g.q_hi = std::numeric_limits<double>::infinity();
        break;
    }
    return g;
}

/// Plain region containing (t, r), or nullopt outside the support cone.
inline std::optional<DyadicRegion> classify_point(double t, double r, double c, double T) {
    check_speed(c);
    if (t < 4.0 || t > T) throw DomainError("classify_point: t outside [4, T]");
    if (r < 0.0) throw DomainError("classify_point: r must be non-negative");
    if (!in_support(t, r, c)) return std::nullopt;
    const double tau = time_block(t, T);
    const double uc = c * t - r;
    if (uc < 2.0) throw DomainError("classify_point: c t - r < 2 inside the cone");
    const double half = c * tau / 2.0;
    const double top = dyadic_floor(c * tau / 4.0);
    if (uc < half) return make_region(c, tau, RegionKind::UcBand, std::clamp(dyadic_floor(uc), 2.0, top), T);
    if (r < half) return make_region(c, tau, RegionKind::RBand, std::clamp(dyadic_floor(std::max(r, 1.0)), 1.0, top), T);
    return make_region(c, tau, RegionKind::Outer, half, T);
}

/// Every region of the decomposition up to horizon T, block by block.
inline std::vector<DyadicRegion> enumerate_regions(double c, double T, double enlargement = 1.0) {
    check_speed(c);
    if (!(T > 4.0)) throw ParameterError("enumerate_regions: T must exceed 4");
    std::vector<DyadicRegion> out;
    for (double tau = 4.0; tau < T || tau == 4.0; tau *= 2.0) {
        const double top = dyadic_floor(c * tau / 4.0);
        for (double R = 1.0; R <= top; R *= 2.0) out.push_back(make_region(c, tau, RegionKind::RBand, R, T, enlargement));
        for (double U = 2.0; U <= top; U *= 2.0)
            out.push_back(make_region(c, tau, RegionKind::UcBand, U, T, enlargement));
        out.push_back(make_region(c, tau, RegionKind::Outer, c * tau / 2.0, T, enlargement));
    }
    return out;
}

inline nlohmann::json to_json(const DyadicRegion& g) {
    auto bound = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    const double f = g.enlargement;
    nlohmann::json q = nlohmann::json::array({bound(g.q_lo / f), bound(g.q_hi * f)});
    return {{"c", g.c},
            {"tau", g.tau},
            {"kind", to_string(g.kind)},
            {"value", g.value},
            {"enlargement", g.enlargement},
            {"bounds", {{"t", {g.t_lo(), g.t_hi()}}, {"r_or_uc", q}}}};
}

inline nlohmann::json regions_to_json(const std::vector<DyadicRegion>& regions) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& g : regions) arr.push_back(to_json(g));
    return arr;
}

}  // namespace mswave
