#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace mswave {

enum class Parity { none = 0, odd = 1, even = 2 };

inline const char* to_string(Parity p) {
    switch (p) {
    case Parity::odd: return "odd";
    case Parity::even: return "even";
    case Parity::none: return "none";
    }
    return "?";
}

/// Samples of one field on the (t, x) grid, t-major, every `stride`-th step kept.
///
/// `c` is the speed of the equation the field solves, NaN for derived fields.
/// A trace that hit a blowup is truncated: `blowup_time` holds the time of the
/// first bad step and only the finite levels before it are stored.
struct SpaceTimeTrace {
    Grid grid;
    double c = std::numeric_limits<double>::quiet_NaN();
    std::size_t stride = 1;
    Parity parity = Parity::none;
    std::size_t nt_stored = 0;
    std::vector<double> samples;
    std::optional<double> blowup_time;

    SpaceTimeTrace() = default;
    SpaceTimeTrace(const Grid& g, double speed, std::size_t store_stride, Parity p, std::size_t levels)
        : grid(g), c(speed), stride(store_stride), parity(p), nt_stored(levels), samples(levels * g.npoints(), 0.0) {}

    /// Empty trace with the same layout as `like`.
    static SpaceTimeTrace zeros_like(const SpaceTimeTrace& like, Parity p = Parity::none) {
        SpaceTimeTrace out(like.grid, std::numeric_limits<double>::quiet_NaN(), like.stride, p, like.nt_stored);
        return out;
    }

    std::size_t nx() const { return grid.npoints(); }
    double level_spacing() const { return static_cast<double>(stride) * grid.dt; }
    double time(std::size_t k) const { return grid.t_start + static_cast<double>(k) * level_spacing(); }
    double last_time() const { return nt_stored == 0 ? grid.t_start : time(nt_stored - 1); }

    std::span<const double> level(std::size_t k) const { return {samples.data() + k * nx(), nx()}; }
    std::span<double> level(std::size_t k) { return {samples.data() + k * nx(), nx()}; }
    double operator()(std::size_t k, std::size_t i) const { return samples[k * nx() + i]; }
    double& operator()(std::size_t k, std::size_t i) { return samples[k * nx() + i]; }

    /// Stored level index at exactly time t, or nullopt.
    std::optional<std::size_t> level_at(double t) const {
        const double h = level_spacing();
        const double q = (t - grid.t_start) / h;
        const double k = std::round(q);
        if (k < 0.0 || std::abs(q - k) > 1e-9 || static_cast<std::size_t>(k) >= nt_stored) return std::nullopt;
        return static_cast<std::size_t>(k);
    }

    /// Index of the first node with x > 0 (symmetric staggered grids).
    std::size_t first_positive() const { return nx() / 2; }

    bool same_layout(const SpaceTimeTrace& o) const {
        return grid.nx == o.grid.nx && grid.dx == o.grid.dx && grid.dt == o.grid.dt && grid.x_min == o.grid.x_min &&
               grid.t_start == o.grid.t_start && stride == o.stride && nt_stored == o.nt_stored;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : samples) m = std::max(m, std::abs(v));
        return m;
    }

    /// max over stored levels of |f(t, x) - s f(t, -x)|, s = +1 for even, -1 for odd.
    double parity_defect(Parity p) const {
        const double s = p == Parity::even ? 1.0 : -1.0;
        double m = 0.0;
        const std::size_t n = nx();
        for (std::size_t k = 0; k < nt_stored; ++k) {
            auto row = level(k);
            for (std::size_t i = 0; i < n / 2; ++i) m = std::max(m, std::abs(row[i] - s * row[n - 1 - i]));
        }
        return m;
    }
};

inline void require_same_layout(const SpaceTimeTrace& a, const SpaceTimeTrace& b, const char* what) {
    if (!a.same_layout(b)) throw ValidationError(std::string(what) + ": traces are on different grids");
}

/// a - b, sample by sample.
inline SpaceTimeTrace difference(const SpaceTimeTrace& a, const SpaceTimeTrace& b) {
    require_same_layout(a, b, "difference");
    SpaceTimeTrace out = a;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] = a.samples[i] - b.samples[i];
    out.parity = a.parity == b.parity ? a.parity : Parity::none;
    out.blowup_time.reset();
    return out;
}

inline SpaceTimeTrace scaled(const SpaceTimeTrace& a, double alpha) {
    SpaceTimeTrace out = a;
    for (double& v : out.samples) v *= alpha;
    return out;
}

}  // namespace mswave
