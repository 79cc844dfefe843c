#include <gtest/gtest.h>

#include <cmath>

#include "mswave/scalecalc.hpp"

using namespace mswave;

namespace {

double rel_l2(const SpaceTimeTrace& a, const SpaceTimeTrace& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const double d = a.samples[i] - ref.samples[i];
        num += d * d;
        den += ref.samples[i] * ref.samples[i];
    }
    return std::sqrt(num / den);
}

WaveProblem free_wave(std::size_t nx, double c = 2.0) {
    WaveProblem p;
    p.grid = Grid::symmetric_staggered(12.0, nx, 8.0, 0.8, c);
    p.c = c;
    p.data = sample_odd_data(
        p.grid, [](double x) { return x * smooth_bump(x, 1.0); },
        [](double x) { return 0.5 * x * smooth_bump(x, 1.0); });
    p.stride = 1;
    return p;
}

SpaceTimeTrace smooth_field(std::size_t nx, double c) {
    const Grid g = Grid::symmetric_staggered(4.0, nx, 6.0, 0.8, c);
    return sample_function(g, 1, [](double t, double x) { return std::sin(t + 0.3 * x) * std::exp(-0.2 * x * x) * x; }, c);
}

// max |residual| over nodes two cells away from every edge, x > x_lo
template <class F>
double interior_max(const SpaceTimeTrace& like, double x_lo, F&& residual) {
    double m = 0.0;
    for (std::size_t k = 2; k + 2 < like.nt_stored; ++k)
        for (std::size_t i = 2; i + 2 < like.nx(); ++i)
            if (like.grid.x(i) > x_lo) m = std::max(m, std::abs(residual(k, i)));
    return m;
}

}  // namespace

TEST(ScaleFD, ExactOnQuadratics) {
    // f = t^2 + 3 t x - x^2 is homogeneous of degree 2, so S f = 2 f
    const Grid g = Grid::symmetric_staggered(3.0, 60, 5.0, 0.8, 1.0);
    const auto f = sample_function(g, 1, [](double t, double x) { return t * t + 3.0 * t * x - x * x; });
    const auto s = scale_fd(f);
    for (std::size_t i = 0; i < f.samples.size(); ++i) EXPECT_NEAR(s.samples[i], 2.0 * f.samples[i], 1e-9);
}

TEST(ScaleFD, StrideAware) {
    const Grid g = Grid::symmetric_staggered(3.0, 60, 6.0, 0.8, 1.0);
    const auto f = sample_function(g, 4, [](double t, double x) { return t * x; });
    const auto s = scale_fd(f);
    for (std::size_t i = 0; i < f.samples.size(); ++i) EXPECT_NEAR(s.samples[i], 2.0 * f.samples[i], 1e-9);
}

TEST(ApplyS, Limits) {
    const auto f = smooth_field(64, 1.0);
    EXPECT_THROW(apply_S_power(f, limits::k_max_finite_difference + 1, SMethod::finite_difference), ParameterError);
    EXPECT_THROW(apply_S_power(f, -1, SMethod::finite_difference), ParameterError);
    EXPECT_THROW(apply_S(f, SMethod::commuted_pde), ValidationError);
    EXPECT_EQ(apply_S_power(f, 3, SMethod::finite_difference).size(), 4u);
    const auto p = free_wave(128);
    EXPECT_THROW(scale_power_commuted(p, limits::k_max_commuted_pde + 1), ParameterError);
}

TEST(Commutator, BoxAndScalingOrderTwo) {
    // box(S f) - S(box f) - 2 box f -> 0 for smooth f, any speed
    for (double c : {1.0, 2.0}) {
        std::vector<double> res;
        for (std::size_t nx : {128, 256, 512}) {
            const auto f = smooth_field(nx, c);
            const auto box = box_residual(f, c);
            const auto box_s = box_residual(scale_fd(f), c);
            const auto s_box = scale_fd(box);
            res.push_back(interior_max(f, -1e9, [&](std::size_t k, std::size_t i) {
                return box_s(k, i) - s_box(k, i) - 2.0 * box(k, i);
            }));
        }
        for (std::size_t j = 1; j < res.size(); ++j) EXPECT_GE(std::log2(res[j - 1] / res[j]), 1.8) << "c=" << c;
    }
}

TEST(Commutator, NullDerivativeAndScalingOrderTwo) {
    // d_{u_c} S f - S d_{u_c} f - d_{u_c} f -> 0 on x > 0
    const double c = 2.0;
    std::vector<double> res;
    for (std::size_t nx : {128, 256, 512}) {
        const auto f = smooth_field(nx, c);
        const auto du = null_derivative(f, NullDirection::u_c, c);
        const auto du_s = null_derivative(scale_fd(f), NullDirection::u_c, c);
        const auto s_du = scale_fd(du);
        res.push_back(interior_max(f, 0.1, [&](std::size_t k, std::size_t i) {
            return du_s(k, i) - s_du(k, i) - du(k, i);
        }));
    }
    for (std::size_t j = 1; j < res.size(); ++j) EXPECT_GE(std::log2(res[j - 1] / res[j]), 1.8);
}

TEST(NullDerivative, Definitions) {
    const Grid g = Grid::symmetric_staggered(3.0, 60, 5.0, 0.8, 1.0);
    // f = t + 2 x on x > 0: f_t = 1, f_r = 2
    const auto f = sample_function(g, 1, [](double t, double x) { return t + 2.0 * x; });
    const double c = 3.0;
    const auto u = null_derivative(f, NullDirection::u);
    const auto ub = null_derivative(f, NullDirection::ubar);
    const auto uc = null_derivative(f, NullDirection::u_c, c);
    const auto ubc = null_derivative(f, NullDirection::ubar_c, c);
    const std::size_t i = 45;
    ASSERT_GT(g.x(i), 0.0);
    EXPECT_NEAR(u(3, i), -0.5, 1e-9);
    EXPECT_NEAR(ub(3, i), 1.5, 1e-9);
    EXPECT_NEAR(uc(3, i), 1.0 / (2.0 * c) - 1.0, 1e-9);
    EXPECT_NEAR(ubc(3, i), 1.0 / (2.0 * c) + 1.0, 1e-9);
    EXPECT_THROW(null_derivative(f, NullDirection::u, 0.0), ParameterError);
}

TEST(CrossMethod, FirstAndSecondPowersAgree) {
    double prev1 = INFINITY, prev2 = INFINITY;
    for (std::size_t nx : {2048, 4096}) {
        const auto p = free_wave(nx);
        const auto com = scale_power_commuted(p, 2);
        const auto fd = apply_S_power(com[0], 2, SMethod::finite_difference);
        const double e1 = rel_l2(fd[1], com[1]), e2 = rel_l2(fd[2], com[2]);
        EXPECT_LT(e1, 5e-2) << "nx=" << nx;
        EXPECT_LT(e2, 1e-1) << "nx=" << nx;
        EXPECT_LT(e1, prev1);
        EXPECT_LT(e2, prev2);
        prev1 = e1;
        prev2 = e2;
    }
}

TEST(CrossMethod, ApplySDispatch) {
    const auto p = free_wave(512);
    const auto base = solve_homogeneous(p.data, p.c, p.grid, {1, 0.9, true});
    const auto a = apply_S(base, SMethod::commuted_pde, &p);
    const auto b = apply_S(base, SMethod::finite_difference);
    EXPECT_EQ(a.method, SMethod::commuted_pde);
    EXPECT_LT(rel_l2(b.trace, a.trace), 5e-2);
}

TEST(BoxResidual, ExactForSolverTraces) {
    // a forced solve: the residual recovers the forcing, end levels included
    const double c = 2.0;
    const Grid g = Grid::symmetric_staggered(6.0, 256, 6.0, 0.8, c);
    const auto F = sample_function(g, 1, [](double t, double x) { return std::cos(t) * x * std::exp(-x * x); });
    const InitialData z{std::vector<double>(g.npoints(), 0.0), std::vector<double>(g.npoints(), 0.0)};
    LinearSolveOptions o;
    o.stride = 1;
    const auto v = solve_linear(z, forcing_from_trace(F), c, g, o);
    const auto r = box_residual(v, c);
    double m = 0.0, scale = F.max_abs();
    for (std::size_t k = 1; k + 1 < v.nt_stored; ++k)
        for (std::size_t i = 1; i + 1 < v.nx(); ++i) m = std::max(m, std::abs(r(k, i) - F(k, i)));
    EXPECT_LT(m, 1e-8 * scale);
    double ends = 0.0;
    for (std::size_t i = 0; i < v.nx(); ++i) ends = std::max(ends, std::abs(r(v.nt_stored - 1, i) - F(v.nt_stored - 1, i)));
    EXPECT_LT(ends, 1e-3 * scale);
    EXPECT_THROW(box_residual(sample_function(g, g.nt / 2, [](double, double) { return 0.0; }), c), ValidationError);
}

TEST(Derivatives, TimeAndSpaceSecondOrder) {
    auto err = [](std::size_t nx) {
        const Grid g = Grid::symmetric_staggered(2.0, nx, 5.0, 0.8, 1.0);
        const auto f = sample_function(g, 1, [](double t, double x) { return std::sin(2.0 * t) * std::cos(x); });
        const auto ft = time_derivative(f), fx = space_derivative(f);
        double m = 0.0;
        for (std::size_t k = 0; k < f.nt_stored; ++k)
            for (std::size_t i = 0; i < f.nx(); ++i) {
                const double t = f.time(k), x = g.x(i);
                m = std::max(m, std::abs(ft(k, i) - 2.0 * std::cos(2.0 * t) * std::cos(x)));
                m = std::max(m, std::abs(fx(k, i) + std::sin(2.0 * t) * std::sin(x)));
            }
        return m;
    };
    EXPECT_GT(err(64) / err(128), 3.5);
}
