#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <optional>
#include <tuple>

#include "mswave/geometry.hpp"

using namespace mswave;

namespace {

// Reference classifier: the priority rules written out with explicit loops
// over powers of two, sharing no helpers with the library.
struct RefCell {
    double tau;
    int kind;  // 0 R, 1 U_c, 2 outer
    double value;
};

double ref_pow2_floor(double y) {
    double d = 1.0;
    while (d * 2.0 <= y) d *= 2.0;
    return d;
}

std::optional<RefCell> ref_classify(double t, double r, double c, double T) {
    if (r > c * t - (4.0 * c - 1.0)) return std::nullopt;
    double tau = 4.0;
    while (2.0 * tau <= t && 2.0 * tau < T) tau *= 2.0;
    const double half = c * tau / 2.0, cap = ref_pow2_floor(c * tau / 4.0);
    const double uc = c * t - r;
    if (uc < half) return RefCell{tau, 1, std::min(std::max(ref_pow2_floor(uc), 2.0), cap)};
    if (r < half) return RefCell{tau, 0, std::min(std::max(ref_pow2_floor(std::max(r, 1.0)), 1.0), cap)};
    return RefCell{tau, 2, half};
}

int kind_code(RegionKind k) { return k == RegionKind::RBand ? 0 : (k == RegionKind::UcBand ? 1 : 2); }

}  // namespace

TEST(Bracket, Values) {
    EXPECT_DOUBLE_EQ(bracket(0.0), 1.0);
    EXPECT_DOUBLE_EQ(bracket(3.0), std::sqrt(10.0));
    EXPECT_DOUBLE_EQ(bracket(-3.0), bracket(3.0));
}

TEST(NullCoordinates, Definitions) {
    const auto n = NullCoords::at(10.0, 3.0, 2.0);
    EXPECT_DOUBLE_EQ(n.u, 7.0);
    EXPECT_DOUBLE_EQ(n.ubar, 13.0);
    EXPECT_DOUBLE_EQ(n.u_c, 17.0);
    EXPECT_DOUBLE_EQ(n.ubar_c, 23.0);
}

TEST(Sigma, Examples) {
    EXPECT_DOUBLE_EQ(sigma_weight(0.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(sigma_weight(1.0, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(sigma_weight(-3.0, 2.0), -0.6);
    EXPECT_THROW(sigma_weight(1.0, 0.5), ParameterError);
    EXPECT_THROW(sigma_weight_derivative(1.0, 0.99), ParameterError);
}

TEST(Sigma, OddBoundedIncreasing) {
    for (double theta : {1.0, 2.0, 16.0, 1024.0}) {
        double last = -2.0;
        for (int i = -4000; i <= 4000; ++i) {
            const double y = i * 0.37;
            const double s = sigma_weight(y, theta);
            EXPECT_EQ(sigma_weight(-y, theta), -s);
            EXPECT_LT(std::abs(s), 1.0);
            EXPECT_GT(s, last);
            last = s;
        }
    }
}

TEST(SigmaDerivative, Examples) {
    EXPECT_DOUBLE_EQ(sigma_weight_derivative(0.0, 1.0), 1.0);
    for (double theta : {1.0, 3.0, 64.0}) EXPECT_DOUBLE_EQ(sigma_weight_derivative(theta, theta), 1.0 / (4.0 * theta));
}

TEST(SigmaDerivative, MatchesCentredDifference) {
    const double h = 1e-5;
    for (double theta : {1.0, 2.5, 40.0})
        for (double y : {-7.0, -1.3, -0.2, 0.4, 2.0, 9.5, 100.0}) {
            const double fd = (sigma_weight(y + h, theta) - sigma_weight(y - h, theta)) / (2.0 * h);
            EXPECT_NEAR(sigma_weight_derivative(y, theta), fd, 1e-8) << "theta=" << theta << " y=" << y;
        }
}

TEST(SigmaDerivative, BandProperty) {
    // theta sigma'(y) in [1/9, 1] for |y| <= 2 theta
    for (double theta : {1.0, 8.0, 512.0})
        for (int i = -200; i <= 200; ++i) {
            const double y = 2.0 * theta * i / 200.0;
            const double v = theta * sigma_weight_derivative(y, theta);
            EXPECT_GE(v, 1.0 / 9.0 - 1e-15);
            EXPECT_LE(v, 1.0);
        }
}

TEST(SqrtSigma, ClosedForm) {
    EXPECT_NEAR(sqrt_sigma_r_derivative_lower_bound(1.0, 1.0), 0.25 / (2.0 * std::sqrt(0.5)), 1e-15);
    EXPECT_THROW(sqrt_sigma_r_derivative_lower_bound(0.0, 1.0), DomainError);
    for (double r : {1e-6, 0.3, 5.0, 1e4}) EXPECT_GT(sqrt_sigma_r_derivative_lower_bound(r, 4.0), 0.0);
}

TEST(SqrtSigma, BandConstantFromDenseScan) {
    // independent scan of d/dr sqrt(r/(r+R)) * sqrt(r R) over the band
    double kmin = INFINITY;
    for (int e = 0; e <= 10; ++e) {
        const double R = std::ldexp(1.0, e);
        for (int i = 0; i <= 20000; ++i) {
            const double r = R / 64.0 * std::pow(256.0, i / 20000.0);
            const double d = 0.5 * std::sqrt((r + R) / r) * R / ((r + R) * (r + R));
            kmin = std::min(kmin, d * std::sqrt(r * R));
        }
    }
    EXPECT_NEAR(constants::sqrt_sigma_band_lower, kmin, 1e-12);
    EXPECT_NEAR(kmin, 1.0 / std::sqrt(500.0), 1e-12);  // attained at r = 4R
}

TEST(WeightSpec, Dispatch) {
    EXPECT_DOUBLE_EQ(evaluate_weight({2.0, WeightKind::sigma}, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(evaluate_weight({2.0, WeightKind::sigma_prime}, 2.0), 0.125);
    EXPECT_GT(evaluate_weight({2.0, WeightKind::sqrt_sigma_derivative}, 2.0), 0.0);
}

TEST(Dyadic, FloorAndBlocks) {
    EXPECT_EQ(dyadic_floor(1.0), 1.0);
    EXPECT_EQ(dyadic_floor(7.5), 4.0);
    EXPECT_EQ(dyadic_floor(8.0), 8.0);
    EXPECT_EQ(time_block(4.0, 100.0), 4.0);
    EXPECT_EQ(time_block(7.99, 100.0), 4.0);
    EXPECT_EQ(time_block(10.0, 100.0), 8.0);
    EXPECT_EQ(time_block(64.0, 64.0), 32.0);  // last block closed at T
}

TEST(Classify, Examples) {
    EXPECT_FALSE(classify_point(10.0, 20.0, 2.0, 100.0).has_value());
    auto a = classify_point(10.0, 1.0, 2.0, 100.0);
    ASSERT_TRUE(a);
    EXPECT_EQ(a->kind, RegionKind::RBand);
    EXPECT_EQ(a->tau, 8.0);
    EXPECT_EQ(a->value, 1.0);
    auto b = classify_point(10.0, 12.5, 2.0, 100.0);
    ASSERT_TRUE(b);
    EXPECT_EQ(b->kind, RegionKind::UcBand);
    EXPECT_EQ(b->value, 4.0);
    EXPECT_THROW(classify_point(3.0, 0.0, 2.0, 100.0), DomainError);
    EXPECT_THROW(classify_point(101.0, 0.0, 2.0, 100.0), DomainError);
    EXPECT_THROW(classify_point(5.0, 0.0, 0.5, 100.0), ParameterError);
}

TEST(Classify, AgreesWithReferenceClassifier) {
    for (double c : {1.0, 2.0, 3.5}) {
        const double T = 200.0;
        for (int a = 0; a <= 300; ++a)
            for (int b = 0; b <= 300; ++b) {
                const double t = 4.0 + (T - 4.0) * a / 300.0;
                const double r = (c * T) * b / 300.0;
                const auto lib = classify_point(t, r, c, T);
                const auto ref = ref_classify(t, r, c, T);
                ASSERT_EQ(lib.has_value(), ref.has_value()) << t << " " << r;
                if (!lib) continue;
                EXPECT_EQ(lib->tau, ref->tau);
                EXPECT_EQ(kind_code(lib->kind), ref->kind);
                EXPECT_EQ(lib->value, ref->value);
                EXPECT_TRUE(lib->contains(t, r));
            }
    }
}

TEST(Enumerate, HandCountAtT8) {
    const auto regs = enumerate_regions(2.0, 8.0);
    std::map<std::tuple<double, int, double>, int> seen;
    for (const auto& g : regs) ++seen[{g.tau, kind_code(g.kind), g.value}];
    EXPECT_EQ(regs.size(), 4u);
    EXPECT_EQ((seen[{4.0, 0, 1.0}]), 1);
    EXPECT_EQ((seen[{4.0, 0, 2.0}]), 1);
    EXPECT_EQ((seen[{4.0, 1, 2.0}]), 1);
    EXPECT_EQ((seen[{4.0, 2, 4.0}]), 1);
    EXPECT_THROW(enumerate_regions(2.0, 4.0), ParameterError);
}

TEST(Enumerate, PlainRegionsPartitionTheCone) {
    const double c = 2.0, T = 256.0;
    const auto regs = enumerate_regions(c, T);
    int outside = 0;
    for (int a = 0; a < 256; ++a)
        for (int b = 0; b < 256; ++b) {
            const double t = 4.0 + (T - 4.0) * (a + 0.5) / 256.0;
            const double r = c * T * (b + 0.5) / 256.0;
            int hits = 0;
            for (const auto& g : regs) hits += g.contains(t, r) ? 1 : 0;
            if (in_support(t, r, c))
                ASSERT_EQ(hits, 1) << t << " " << r;
            else {
                ASSERT_EQ(hits, 0);
                ++outside;
            }
        }
    EXPECT_GT(outside, 0);
}

TEST(Enumerate, EnlargedRegionsContainPlainOnes) {
    const auto plain = enumerate_regions(2.0, 64.0);
    const auto big = enumerate_regions(2.0, 64.0, 1.5);
    ASSERT_EQ(plain.size(), big.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
        EXPECT_TRUE(plain[i].same_cell(big[i].enlarged(1.0)));
        for (int a = 0; a < 64; ++a)
            for (int b = 0; b < 64; ++b) {
                const double t = 4.0 + 60.0 * a / 63.0, r = 128.0 * b / 63.0;
                if (plain[i].contains(t, r)) EXPECT_TRUE(big[i].contains(t, r));
            }
    }
}

TEST(Regions, Json) {
    const auto j = to_json(make_region(2.0, 8.0, RegionKind::UcBand, 2.0, 64.0));
    EXPECT_EQ(j["kind"], "UcBand");
    EXPECT_EQ(j["tau"], 8.0);
    EXPECT_EQ(regions_to_json(enumerate_regions(2.0, 8.0)).size(), 4u);
}

TEST(GridSpec, StaggeredSymmetric) {
    const Grid g = Grid::symmetric_staggered(10.0, 1024, 8.0, 0.8, 2.0);
    EXPECT_EQ(g.npoints(), 1024u);
    for (std::size_t i = 0; i < 512; ++i) EXPECT_DOUBLE_EQ(g.x(1023 - i), -g.x(i));
    EXPECT_LE(2.0 * g.dt / g.dx, 0.8 + 1e-12);
    EXPECT_NEAR(g.t(g.nt), 8.0, 1e-12);
    EXPECT_THROW(Grid::symmetric_staggered(10.0, 1023, 8.0, 0.8, 2.0), ConfigurationError);
    const Grid h = Grid::for_cone(0.125, 16.0, 2.0);
    EXPECT_GE(h.x_max, 2.0 * 12.0 + 1.0);
}
