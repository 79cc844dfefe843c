#pragma once

// Weighted space-time L^2 norms over dyadic regions, their l^2 / l^inf
// aggregations, and the twelve-term iteration norm with its difference analog.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "geometry.hpp"
#include "scalecalc.hpp"
#include "trace.hpp"

namespace mswave {

/// r^a <r>^b <u>^d <ubar>^e <u_c>^f evaluated at (t, r) for a speed c.
struct WeightExpr {
    double r = 0.0;
    double br = 0.0;
    double bu = 0.0;
    double bubar = 0.0;
    double buc = 0.0;

    double operator()(double t, double rad, double c) const {
        double w = 1.0;
        if (r != 0.0) w *= std::pow(rad, r);
        if (br != 0.0) w *= std::pow(bracket(rad), br);
        if (bu != 0.0) w *= std::pow(bracket(t - rad), bu);
        if (bubar != 0.0) w *= std::pow(bracket(t + rad), bubar);
        if (buc != 0.0) w *= std::pow(bracket(c * t - rad), buc);
        return w;
    }
};

/// Trapezoid weight of stored level k (half weight on the first and last level).
inline double level_weight(const SpaceTimeTrace& tr, std::size_t k) {
    const double h = tr.level_spacing();
    return (k == 0 || k + 1 == tr.nt_stored) ? 0.5 * h : h;
}

struct RegionNorm {
    double value = 0.0;
    bool empty = true;
};

/// ( int int_region weight^2 f^2 dr dt )^(1/2) over the positive-x nodes whose
/// (t, r) lies in the region. Boundary cells are included by node membership.
template <class Weight>
RegionNorm region_weighted_l2(const SpaceTimeTrace& tr, const DyadicRegion& region, Weight&& weight) {
    const double h = tr.level_spacing();
    const double dx = tr.grid.dx;
    const double t_extent = region.t_hi() - region.t_lo();
    const double q_extent = region.kind == RegionKind::Outer ? INFINITY
                                                               : (region.q_hi - region.q_lo) * region.enlargement;
    if (t_extent > 0.0 && (t_extent < 2.0 * h || q_extent < 2.0 * dx))
        throw ValidationError("region_weighted_l2: region not resolved by the grid (< 2 cells)");
    RegionNorm out;
    double sum = 0.0;
    const std::size_t i0 = tr.first_positive();
    const double r_max = region.c * region.t_hi() - (4.0 * region.c - 1.0);
    for (std::size_t k = 0; k < tr.nt_stored; ++k) {
        const double t = tr.time(k);
        if (t < region.t_lo() - 1e-12 || t > region.t_hi() + 1e-12) continue;
        const double wt = level_weight(tr, k);
        for (std::size_t i = i0; i < tr.nx(); ++i) {
            const double r = tr.grid.x(i);
            if (r > r_max) break;
            if (!region.contains(t, r)) continue;
            out.empty = false;
            const double w = weight(t, r);
            const double f = tr(k, i);
            sum += w * w * f * f * wt * dx;
        }
    }
    out.value = std::sqrt(sum);
    return out;
}

// ---------------------------------------------------------------------------
// Region maps: plain-region index of every positive node of a trace

struct RegionMap {
    double c = 1.0;
    double horizon = 8.0;
    std::vector<DyadicRegion> regions;
    std::vector<int> id;  // [k * half + (i - i0)], -1 outside the cone
    std::size_t half = 0;
    std::size_t i0 = 0;

    int at(std::size_t k, std::size_t i) const { return id[k * half + (i - i0)]; }
};

inline RegionMap build_region_map(const SpaceTimeTrace& tr, double c) {
    RegionMap m;
    m.c = c;
    m.horizon = tr.last_time();
    m.regions = enumerate_regions(c, m.horizon);
    m.i0 = tr.first_positive();
    m.half = tr.nx() - m.i0;
    m.id.assign(tr.nt_stored * m.half, -1);
    std::map<std::tuple<double, int, double>, int> lookup;
    for (std::size_t j = 0; j < m.regions.size(); ++j)
        lookup[{m.regions[j].tau, static_cast<int>(m.regions[j].kind), m.regions[j].value}] = static_cast<int>(j);
    for (std::size_t k = 0; k < tr.nt_stored; ++k) {
        const double t = std::min(tr.time(k), m.horizon);
        for (std::size_t i = m.i0; i < tr.nx(); ++i) {
            const double r = tr.grid.x(i);
            if (!in_support(t, r, c)) break;
            auto g = classify_point(t, r, c, m.horizon);
            m.id[k * m.half + (i - m.i0)] = lookup.at({g->tau, static_cast<int>(g->kind), g->value});
        }
    }
    return m;
}

/// Squared weighted integrals per plain region for one field, in one pass.
template <class Weight>
std::vector<double> region_squares(const SpaceTimeTrace& field, const RegionMap& map, Weight&& weight) {
    std::vector<double> acc(map.regions.size(), 0.0);
    const double dx = field.grid.dx;
    for (std::size_t k = 0; k < field.nt_stored; ++k) {
        const double t = field.time(k);
        const double wt = level_weight(field, k) * dx;
        for (std::size_t i = map.i0; i < field.nx(); ++i) {
            const int id = map.at(k, i);
            if (id < 0) break;
            const double w = weight(t, field.grid.x(i));
            const double f = field(k, i);
            acc[static_cast<std::size_t>(id)] += w * w * f * f * wt;
        }
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Aggregation over dyadic indices

enum class IndexKind { tau, R, U, U_c };
enum class SeqNorm { l2, linf };

struct AggregationStep {
    IndexKind index = IndexKind::tau;
    SeqNorm norm = SeqNorm::l2;
};

/// Outer step first, e.g. {linf_R, l2_tau} for l^inf_R l^2_tau; the inner
/// (rightmost) index is aggregated first.
struct AggregationSpec {
    AggregationStep outer;
    AggregationStep inner;

    std::string str() const {
        auto s = [](AggregationStep a) {
            std::string n = a.norm == SeqNorm::l2 ? "l2_" : "linf_";
            switch (a.index) {
            case IndexKind::tau: return n + "tau";
            case IndexKind::R: return n + "R";
            case IndexKind::U: return n + "U";
            case IndexKind::U_c: return n + "U_c";
            }
            return n;
        };
        return s(outer) + " " + s(inner);
    }
};

inline AggregationSpec linf_over(IndexKind idx) { return {{idx, SeqNorm::linf}, {IndexKind::tau, SeqNorm::l2}}; }
inline AggregationSpec l2_over(IndexKind idx) { return {{idx, SeqNorm::l2}, {IndexKind::tau, SeqNorm::l2}}; }

struct RegionValue {
    DyadicRegion region;
    double value = 0.0;
};

namespace detail {

inline bool index_matches(IndexKind idx, const DyadicRegion& g) {
    switch (idx) {
    case IndexKind::tau: return true;
    case IndexKind::R: return g.kind == RegionKind::RBand || g.kind == RegionKind::Outer;
    case IndexKind::U: return (g.kind == RegionKind::UcBand || g.kind == RegionKind::Outer) && g.c == 1.0;
    case IndexKind::U_c: return g.kind == RegionKind::UcBand || g.kind == RegionKind::Outer;
    }
    return false;
}

inline double index_key(IndexKind idx, const DyadicRegion& g) { return idx == IndexKind::tau ? g.tau : g.index(); }

inline double combine(SeqNorm n, const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc = n == SeqNorm::l2 ? acc + x * x : std::max(acc, std::abs(x));
    return n == SeqNorm::l2 ? std::sqrt(acc) : acc;
}

}  // namespace detail

/// Sequence-norm aggregation of per-region values.
inline double aggregate(const std::vector<RegionValue>& values, const AggregationSpec& spec) {
    if (spec.outer.index == spec.inner.index) throw ValidationError("aggregate: outer and inner index coincide");
    std::map<double, std::map<double, double>> table;
    for (const auto& rv : values) {
        if (!detail::index_matches(spec.outer.index, rv.region) || !detail::index_matches(spec.inner.index, rv.region))
            throw ValidationError(std::string("aggregate: region ") + to_string(rv.region.kind) +
                                  " does not carry the indices of " + spec.str());
        if (rv.region.kind != RegionKind::Outer && (spec.outer.index == IndexKind::U_c || spec.inner.index == IndexKind::U_c ||
                                                   spec.outer.index == IndexKind::U || spec.inner.index == IndexKind::U)) {
            if (rv.region.value > rv.region.top() + 1e-12) throw ValidationError("aggregate: U_c above c tau / 4");
        }
        auto& slot = table[detail::index_key(spec.outer.index, rv.region)][detail::index_key(spec.inner.index, rv.region)];
        slot = spec.inner.norm == SeqNorm::l2 ? std::sqrt(slot * slot + rv.value * rv.value) : std::max(slot, rv.value);
    }
    std::vector<double> outer;
    for (const auto& [key, inner] : table) {
        std::vector<double> v;
        for (const auto& [k2, x] : inner) v.push_back(x);
        outer.push_back(detail::combine(spec.inner.norm, v));
    }
    return detail::combine(spec.outer.norm, outer);
}

// ---------------------------------------------------------------------------
// The twelve-term iteration norm

enum class FieldExpr { dU_V, dUbar_V, grad_V, dUbarC_W, W };

inline const char* to_string(FieldExpr f) {
    switch (f) {
    case FieldExpr::dU_V: return "d_u V";
    case FieldExpr::dUbar_V: return "d_ubar V";
    case FieldExpr::grad_V: return "dV";
    case FieldExpr::dUbarC_W: return "d_ubar_c W";
    case FieldExpr::W: return "W";
    }
    return "?";
}

enum class FamilySpeed { one, c };
enum class FamilyKind { R, U };

struct NormTerm {
    const char* id;
    FieldExpr field;
    WeightExpr weight;
    FamilySpeed speed;
    FamilyKind family;
    AggregationSpec aggregation;
};

inline constexpr int norm_term_count = 12;

/// Terms (I)-(XII). R families are the R bands plus the outer cell (as R = s tau / 2);
/// U families are the U_s bands plus the outer cell (as U_s = s tau / 2).
/// Term (XI) integrates the speed-c field over speed-1 R regions while (XII)
/// uses speed-c R regions; both are implemented exactly as displayed.
inline const std::array<NormTerm, norm_term_count>& norm_terms() {
    static const std::array<NormTerm, norm_term_count> table{{
        {"I", FieldExpr::dU_V, {-0.25, -0.25, 0.5, 0.0, 0.0}, FamilySpeed::one, FamilyKind::R, linf_over(IndexKind::R)},
        {"II", FieldExpr::dU_V, {0.0, 0.0, 0.5, 0.0, -0.5}, FamilySpeed::c, FamilyKind::U, linf_over(IndexKind::U_c)},
        {"III", FieldExpr::dUbar_V, {-0.25, -0.25, 0.0, 0.5, 0.0}, FamilySpeed::one, FamilyKind::R, linf_over(IndexKind::R)},
        {"IV", FieldExpr::dUbar_V, {0.0, 0.0, 0.0, 0.5, -0.5}, FamilySpeed::c, FamilyKind::U, linf_over(IndexKind::U_c)},
        {"V", FieldExpr::dUbar_V, {0.0, 0.0, -0.5, 0.5, 0.0}, FamilySpeed::one, FamilyKind::U, linf_over(IndexKind::U)},
        {"VI", FieldExpr::grad_V, {-0.25, -0.25, 0.0, 0.0, 0.0}, FamilySpeed::one, FamilyKind::R, linf_over(IndexKind::R)},
        {"VII", FieldExpr::grad_V, {0.0, 0.0, 0.0, 0.0, -0.5}, FamilySpeed::c, FamilyKind::U, linf_over(IndexKind::U_c)},
        {"VIII", FieldExpr::dUbar_V, {0.0, 0.0, -0.5, 0.0, 0.0}, FamilySpeed::one, FamilyKind::U, linf_over(IndexKind::U)},
        {"IX", FieldExpr::dUbarC_W, {0.5, 0.0, -0.5, 0.0, 0.0}, FamilySpeed::one, FamilyKind::U, linf_over(IndexKind::U)},
        {"X", FieldExpr::W, {-0.5, 0.0, -0.5, 0.0, 0.0}, FamilySpeed::one, FamilyKind::U, linf_over(IndexKind::U)},
        {"XI", FieldExpr::dUbarC_W, {}, FamilySpeed::one, FamilyKind::R, l2_over(IndexKind::R)},
        {"XII", FieldExpr::W, {-1.0, 0.0, 0.0, 0.0, 0.0}, FamilySpeed::c, FamilyKind::R, l2_over(IndexKind::R)},
    }};
    return table;
}

inline bool in_family(const DyadicRegion& g, FamilyKind f) {
    if (g.kind == RegionKind::Outer) return true;
    return f == FamilyKind::R ? g.kind == RegionKind::RBand : g.kind == RegionKind::UcBand;
}

struct TermRegionValue {
    int term = 0;
    DyadicRegion region;
    double value = 0.0;
};

struct NormReport {
    std::optional<int> j;
    int k_used = 0;
    std::array<double, norm_term_count> terms{};
    double M = 0.0;
    std::optional<double> A;
    std::vector<TermRegionValue> per_region;
    bool valid = true;
};

/// S^{<=k} f = sum_j |S^j f| for the fields the terms need.
struct ScaledFields {
    int k = 0;
    std::map<FieldExpr, SpaceTimeTrace> fields;
};

namespace detail {

inline SpaceTimeTrace abs_sum_of_powers(const SpaceTimeTrace& base, int k) {
    SpaceTimeTrace sum = SpaceTimeTrace::zeros_like(base);
    SpaceTimeTrace cur = base;
    for (int j = 0; j <= k; ++j) {
        if (j > 0) cur = scale_fd(cur);
        for (std::size_t i = 0; i < sum.samples.size(); ++i) sum.samples[i] += std::abs(cur.samples[i]);
    }
    return sum;
}

inline SpaceTimeTrace grad_sum_of_powers(const SpaceTimeTrace& vt, const SpaceTimeTrace& vr, int k) {
    SpaceTimeTrace sum = SpaceTimeTrace::zeros_like(vt);
    SpaceTimeTrace a = vt, b = vr;
    for (int j = 0; j <= k; ++j) {
        if (j > 0) {
            a = scale_fd(a);
            b = scale_fd(b);
        }
        for (std::size_t i = 0; i < sum.samples.size(); ++i) sum.samples[i] += std::hypot(a.samples[i], b.samples[i]);
    }
    return sum;
}

}  // namespace detail

inline ScaledFields scaled_fields(const SpaceTimeTrace& V, const SpaceTimeTrace& W, double c, int k_used) {
    if (k_used < 0 || k_used > limits::k_max_finite_difference)
        throw ParameterError("norms: k_used must lie in [0, k_max]");
    require_same_layout(V, W, "norms");
    ScaledFields out;
    out.k = k_used;
    out.fields[FieldExpr::dU_V] = detail::abs_sum_of_powers(null_derivative(V, NullDirection::u), k_used);
    out.fields[FieldExpr::dUbar_V] = detail::abs_sum_of_powers(null_derivative(V, NullDirection::ubar), k_used);
    out.fields[FieldExpr::grad_V] = detail::grad_sum_of_powers(time_derivative(V), radial_derivative(V), k_used);
    out.fields[FieldExpr::dUbarC_W] = detail::abs_sum_of_powers(null_derivative(W, NullDirection::ubar_c, c), k_used);
    out.fields[FieldExpr::W] = detail::abs_sum_of_powers(W, k_used);
    return out;
}

/// Per-speed region maps shared by all terms.
struct NormContext {
    double c = 2.0;
    RegionMap speed_one;
    RegionMap speed_c;

    static NormContext build(const SpaceTimeTrace& like, double c) {
        NormContext ctx;
        ctx.c = c;
        ctx.speed_one = build_region_map(like, 1.0);
        ctx.speed_c = build_region_map(like, c);
        return ctx;
    }
    const RegionMap& map(FamilySpeed s) const { return s == FamilySpeed::one ? speed_one : speed_c; }
};

inline NormReport assemble_from_fields(const ScaledFields& f, const NormContext& ctx, bool keep_regions = true) {
    NormReport rep;
    rep.k_used = f.k;
    const auto& terms = norm_terms();
    for (int t = 0; t < norm_term_count; ++t) {
        const NormTerm& term = terms[static_cast<std::size_t>(t)];
        const RegionMap& map = ctx.map(term.speed);
        auto it = f.fields.find(term.field);
        if (it == f.fields.end()) {
            rep.valid = false;
            rep.terms[static_cast<std::size_t>(t)] = std::nan("");
            continue;
        }
        const double c = ctx.c;
        auto sq = region_squares(it->second, map, [&](double tt, double r) { return term.weight(tt, r, c); });
        std::vector<RegionValue> values;
        for (std::size_t g = 0; g < map.regions.size(); ++g) {
            if (!in_family(map.regions[g], term.family)) continue;
            values.push_back({map.regions[g], std::sqrt(sq[g])});
            if (keep_regions) rep.per_region.push_back({t, map.regions[g], std::sqrt(sq[g])});
        }
        rep.terms[static_cast<std::size_t>(t)] = aggregate(values, term.aggregation);
    }
    rep.M = 0.0;
    for (double v : rep.terms) rep.M += v;
    return rep;
}

/// All twelve terms for the pair (V, W) at S-order k_used.
inline NormReport assemble_M(const SpaceTimeTrace& V, const SpaceTimeTrace& W, double c, int k_used,
                             bool keep_regions = true) {
    const NormContext ctx = NormContext::build(V, c);
    return assemble_from_fields(scaled_fields(V, W, c, k_used), ctx, keep_regions);
}

/// The twelve terms applied to (V_j - V_{j-1}, W_j - W_{j-1}); returns the report, with A = its total.
inline NormReport assemble_A(const SpaceTimeTrace& Vj, const SpaceTimeTrace& Wj, const SpaceTimeTrace& Vprev,
                             const SpaceTimeTrace& Wprev, double c, int k_used, bool keep_regions = false) {
    require_same_layout(Vj, Vprev, "assemble_A");
    require_same_layout(Wj, Wprev, "assemble_A");
    NormReport rep = assemble_M(difference(Vj, Vprev), difference(Wj, Wprev), c, k_used, keep_regions);
    rep.A = rep.M;
    return rep;
}

/// Reports computed at different S-orders are not comparable.
inline void require_comparable(const NormReport& a, const NormReport& b) {
    if (a.k_used != b.k_used)
        throw ValidationError("norm reports use different k_used (" + std::to_string(a.k_used) + " vs " +
                              std::to_string(b.k_used) + ")");
}

inline const char* roman(int t) { return norm_terms()[static_cast<std::size_t>(t)].id; }

inline nlohmann::json to_json(const NormReport& r, bool with_regions = true) {
    nlohmann::json terms = nlohmann::json::object();
    for (int t = 0; t < norm_term_count; ++t) terms[roman(t)] = r.terms[static_cast<std::size_t>(t)];
    nlohmann::json j{{"j", r.j ? nlohmann::json(*r.j) : nlohmann::json(nullptr)},
                     {"k_used", r.k_used},
                     {"terms", terms},
                     {"M", r.M},
                     {"A", r.A ? nlohmann::json(*r.A) : nlohmann::json(nullptr)},
                     {"valid", r.valid}};
    nlohmann::json regions = nlohmann::json::array();
    if (with_regions)
        for (const auto& rv : r.per_region)
            regions.push_back({{"term", roman(rv.term)}, {"region", to_json(rv.region)}, {"value", rv.value}});
    j["per_region"] = regions;
    return j;
}

/// One CSV row per term: j,k_used,term,value
inline std::string to_csv(const NormReport& r) {
    std::string s;
    for (int t = 0; t < norm_term_count; ++t) {
        s += (r.j ? std::to_string(*r.j) : std::string("")) + "," + std::to_string(r.k_used) + "," + roman(t) + ",";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", r.terms[static_cast<std::size_t>(t)]);
        s += buf;
        s += "\n";
    }
    return s;
}

}  // namespace mswave
