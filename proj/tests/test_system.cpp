#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "mswave/system.hpp"

using namespace mswave;

namespace {

const DataFamily bump = data_family("paper-bump");

Grid small_grid(double dx = 1.0 / 16.0, double T = 12.0, double c = 2.0) { return Grid::for_cone(dx, T, c, 0.8, 2.0); }

CoupledSolution direct(double eps, const Grid& g, double c = 2.0, bool nonlinear = true) {
    CoupledOptions o;
    o.stride = 1;
    o.nonlinear = nonlinear;
    o.record_forcing = true;
    return solve_coupled(bump, eps, c, g, o);
}

double l2_diff(const SpaceTimeTrace& a, const SpaceTimeTrace& b) { return spacetime_l2(difference(a, b)); }

}  // namespace

TEST(DataFamilies, NamesAndErrors) {
    EXPECT_EQ(data_family("pessimal").V1(0.5), 4.0 * bump.V1(0.5));
    EXPECT_EQ(data_family("bump-w0.5").V0(0.6), 0.0);
    EXPECT_GT(data_family("bump-w0.5").V0(0.3), 0.0);
    EXPECT_THROW(data_family("bump-w2"), ParameterError);
    EXPECT_THROW(data_family("bump-wx"), ParameterError);
    EXPECT_THROW(data_family("gaussian"), ParameterError);
}

TEST(Coupled, SpeedRules) {
    const Grid g = small_grid(1.0 / 8.0, 8.0, 2.0);
    EXPECT_THROW(solve_coupled(bump, 0.1, 1.0, g), ParameterError);
    CoupledOptions lin;
    lin.nonlinear = false;
    EXPECT_NO_THROW(solve_coupled(bump, 0.1, 1.0, g, lin));
    EXPECT_THROW(solve_coupled(bump, -0.1, 2.0, g), ParameterError);
}

TEST(Coupled, ZeroDataStaysZero) {
    const auto s = direct(0.0, small_grid(1.0 / 8.0, 8.0));
    EXPECT_EQ(s.V.max_abs(), 0.0);
    EXPECT_EQ(s.W.max_abs(), 0.0);
    EXPECT_FALSE(s.blowup_time);
}

TEST(Coupled, FieldsAndForcingAreOdd) {
    const auto s = direct(0.3, small_grid());
    ASSERT_TRUE(s.FV && s.FW);
    for (const SpaceTimeTrace* tr : {&s.V, &s.W, &*s.FV, &*s.FW}) {
        ASSERT_GT(tr->max_abs(), 0.0);
        EXPECT_LE(tr->parity_defect(Parity::odd), 1e-12 * tr->max_abs());
    }
}

TEST(Coupled, Deterministic) {
    const Grid g = small_grid();
    const auto a = direct(0.3, g), b = direct(0.3, g);
    ASSERT_EQ(a.V.samples.size(), b.V.samples.size());
    EXPECT_EQ(std::memcmp(a.V.samples.data(), b.V.samples.data(), a.V.samples.size() * sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(a.W.samples.data(), b.W.samples.data(), a.W.samples.size() * sizeof(double)), 0);
}

TEST(Blowup, SmallAndLinearSolutionsSurvive) {
    const Grid g = small_grid(1.0 / 16.0, 16.0);
    EXPECT_FALSE(direct(0.0, g).blowup_time);
    EXPECT_FALSE(direct(0.2, g).blowup_time);
    EXPECT_FALSE(direct(8.0, g, 2.0, false).blowup_time);
}

TEST(Blowup, LargerDataBlowsUpSooner) {
    const Grid g = small_grid(1.0 / 16.0, 24.0);
    const auto a = direct(8.0, g), b = direct(16.0, g);
    ASSERT_TRUE(a.blowup_time && b.blowup_time);
    EXPECT_LT(*b.blowup_time, *a.blowup_time);
    EXPECT_GT(*b.blowup_time, 4.0);
    // the stored trace ends at the last finite level
    EXPECT_TRUE(std::isfinite(a.V.max_abs()));
    const auto m = blowup_time(a.V, a.W, a.threshold);
    EXPECT_TRUE(m.time.has_value() || m.horizon <= *a.blowup_time);
}

TEST(Picard, FirstIterateIsTheFreeSolution) {
    const Grid g = small_grid();
    PicardOptions o;
    o.j_max = 1;
    o.compute_norms = false;
    const auto l = picard_iterate(bump, 0.2, 2.0, g, o);
    const auto lin = direct(0.2, g, 2.0, false);
    EXPECT_LE(l2_diff(l.latest().V, lin.V), 1e-13 * spacetime_l2(lin.V));
    EXPECT_LE(l2_diff(l.latest().W, lin.W), 1e-13 * spacetime_l2(lin.W));
    o.j_max = 0;
    EXPECT_THROW(picard_iterate(bump, 0.2, 2.0, g, o), ParameterError);
}

class PicardSmall : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        grid_ = new Grid(small_grid());
        PicardOptions o;
        o.j_max = 8;
        o.k_used = 1;
        ledger_ = new IterationLedger(picard_iterate(bump, 0.2, 2.0, *grid_, o));
        sol_ = new CoupledSolution(direct(0.2, *grid_));
    }
    static void TearDownTestSuite() {
        delete grid_;
        delete ledger_;
        delete sol_;
    }
    static Grid* grid_;
    static IterationLedger* ledger_;
    static CoupledSolution* sol_;
};
Grid* PicardSmall::grid_ = nullptr;
IterationLedger* PicardSmall::ledger_ = nullptr;
CoupledSolution* PicardSmall::sol_ = nullptr;

TEST_F(PicardSmall, DifferencesShrink) {
    const auto& rows = ledger_->rows;
    ASSERT_EQ(rows.size(), 8u);
    EXPECT_FALSE(ledger_->truncated);
    for (std::size_t j = 3; j < rows.size(); ++j) EXPECT_LT(*rows[j].A, *rows[j - 1].A) << "j=" << j + 1;
    EXPECT_TRUE(contracts(*ledger_, 8));
    EXPECT_FALSE(contracts(*ledger_, 9));
    // M_1 is the free-solution norm, later iterates stay close to it
    for (const auto& r : rows) EXPECT_LE(r.M->M, 2.0 * rows.front().M->M);
}

TEST_F(PicardSmall, ConvergesToTheDirectSolve) {
    const auto& it = ledger_->latest();
    const double dv = l2_diff(it.V, sol_->V), dw = l2_diff(it.W, sol_->W);
    EXPECT_LE(dv, 1e-6 * spacetime_l2(sol_->V));
    EXPECT_LE(dw, 1e-6 * spacetime_l2(sol_->W));
    // the iterate sequence gets closer every step
    EXPECT_LE(dv + dw, 10.0 * *ledger_->rows.back().A);
}

TEST_F(PicardSmall, RetainsThreeIteratesAndSerialises) {
    EXPECT_EQ(ledger_->retained.size(), 3u);
    EXPECT_EQ(ledger_->latest().j, 8);
    const auto j = to_json(*ledger_);
    EXPECT_EQ(j["rows"].size(), 8u);
    EXPECT_TRUE(j["rows"][0]["contraction_ratio"].is_null());
    EXPECT_EQ(j["rows"][7]["k_used"], 1);
}

TEST(Picard, SpillsOlderIterates) {
    const auto dir = std::filesystem::temp_directory_path() / "mswave_spill";
    std::filesystem::remove_all(dir);
    PicardOptions o;
    o.j_max = 5;
    o.compute_norms = false;
    o.spill_dir = dir;
    picard_iterate(bump, 0.1, 2.0, small_grid(1.0 / 8.0, 8.0), o);
    EXPECT_TRUE(std::filesystem::exists(dir / "V_1.mswl"));
    EXPECT_TRUE(std::filesystem::exists(dir / "W_2.mswl"));
    EXPECT_FALSE(std::filesystem::exists(dir / "V_3.mswl"));
}

TEST(Picard, BisectionBracketsTheContractingRange) {
    const Grid g = small_grid(1.0 / 8.0, 12.0);
    PicardOptions o;
    o.j_max = 6;
    o.k_used = 1;
    const auto th = bisect_contraction(bump, 2.0, g, 0.05, 4.0, 5, o);
    EXPECT_EQ(th.solves, 7);
    EXPECT_GT(th.eps0, 0.05);
    EXPECT_GT(th.failed, th.eps0);
    EXPECT_LE(th.failed - th.eps0, (4.0 - 0.05) / 32.0 + 1e-12);
    EXPECT_TRUE(contracts(picard_iterate(bump, th.eps0, 2.0, g, o), 6));
    EXPECT_FALSE(contracts(picard_iterate(bump, th.failed, 2.0, g, o), 6));
    EXPECT_THROW(bisect_contraction(bump, 2.0, g, th.failed, 8.0, 2, o), ValidationError);
    EXPECT_EQ(bisect_contraction(bump, 2.0, g, 0.01, 0.02, 3, o).eps0, 0.02);
}

TEST(Subsample, KeepsEverySthLevel) {
    const Grid g = Grid::symmetric_staggered(2.0, 32, 8.0, 0.8, 1.0);
    const auto f = sample_function(g, 1, [](double t, double x) { return t * x; });
    const auto s = subsample(f, 3);
    EXPECT_EQ(s.stride, 3u);
    for (std::size_t k = 0; k < s.nt_stored; ++k) EXPECT_EQ(s(k, 5), f(3 * k, 5));
}

TEST(SpacetimeL2, ConstantIsRootArea) {
    const Grid g = Grid::symmetric_staggered(2.0, 64, 8.0, 0.8, 1.0);
    const auto one = sample_function(g, 1, [](double, double) { return 1.0; });
    EXPECT_NEAR(spacetime_l2(one), std::sqrt(4.0 * 4.0), 1e-12);
}

TEST(Reconstruct, DividesByRadius) {
    const Grid g = Grid::symmetric_staggered(3.0, 96, 6.0, 0.8, 1.0);
    auto gfun = [](double t, double x) { return std::cos(t) * std::exp(-x * x); };
    const auto V = sample_function(g, 1, [&](double t, double x) { return x * gfun(t, x); }, 1.0, Parity::odd);
    const auto rf = reconstruct_3d(V, V);
    EXPECT_EQ(rf.v.parity, Parity::even);
    double m = 0.0;
    for (std::size_t k = 0; k < V.nt_stored; ++k)
        for (std::size_t i = 0; i < V.nx(); ++i) m = std::max(m, std::abs(rf.v(k, i) - gfun(V.time(k), g.x(i))));
    EXPECT_LT(m, 1e-14);
    EXPECT_LE(rf.v.parity_defect(Parity::even), 1e-14);
    const auto even = sample_function(g, 1, gfun);
    EXPECT_THROW(reconstruct_3d(even, even), ValidationError);
}

TEST(Reconstruct, MatchesExactRadialWave) {
    // exact V by d'Alembert from t = 4; v = V / r is then the exact 3D radial wave
    auto integral = [](double a, double b) {
        a = std::max(a, -1.0);
        b = std::min(b, 1.0);
        if (b <= a) return 0.0;
        const int n = 4000;  // Simpson
        const double h = (b - a) / n;
        double s = bump_profile(a) + bump_profile(b);
        for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * bump_profile(a + k * h);
        return s * h / 3.0;
    };
    auto exact = [&](double t, double x) {
        const double s = t - 4.0;
        return 0.5 * (bump_profile(x + s) + bump_profile(x - s)) + 0.5 * integral(x - s, x + s);
    };
    auto error = [&](std::size_t nx) {
        const Grid g = Grid::symmetric_staggered(6.0, nx, 8.0, 0.8, 2.0);
        CoupledOptions o;
        o.stride = 8;
        o.nonlinear = false;
        const auto s = solve_coupled(bump, 1.0, 2.0, g, o);
        const auto rf = reconstruct_3d(s.V, s.W);
        double m = 0.0;
        for (std::size_t k = 0; k < rf.v.nt_stored; k += 4)
            for (std::size_t i = 0; i < rf.v.nx(); ++i) {
                const double r = g.x(i);
                if (r < 0.5) continue;
                m = std::max(m, std::abs(rf.v(k, i) - exact(rf.v.time(k), r) / r));
            }
        return m;
    };
    const double a = error(512), b = error(1024), c = error(2048);
    // the steep bump is still pre-asymptotic on the coarsest grid
    EXPECT_GT(std::log2(a / b), 1.5);
    EXPECT_GT(std::log2(b / c), 1.8);
    EXPECT_LT(c, 1e-3);
}
