#include <gtest/gtest.h>

#include <cmath>

#include "gmclab/decomp.hpp"
#include "gmclab/rng.hpp"

using namespace gmclab;

namespace {

// eta delta int_0^inf e^{-eta t} kappa0(e^t r) dt integrated directly in t.
double delta_part_oracle(const ScaleKernel& k0, double delta, double eta, double r) {
    if (r >= 1.0) return 0.0;
    auto f = [&](double t) { return std::exp(-eta * t) * k0(std::exp(t) * r); };
    const double T = std::log(1.0 / r);
    return eta * delta * quad::gk(f, 0.0, T, 1e-12);
}

std::vector<Point> random_points(std::size_t n, int d, double side, std::uint64_t seed) {
    CounterStream cs(seed, 0, 0, StreamTag::Sampling);
    std::vector<double> u(2 * n);
    cs.fill_uniform(u);
    std::vector<Point> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = Point{side * u[2 * i], d == 2 ? side * u[2 * i + 1] : 0.0};
    return p;
}

}  // namespace

TEST(DeltaPart, DiagonalEqualsDeltaExactly) {
    const auto K1 = LogKernel::from_spec(KernelSpec{});
    KernelSpec s2;
    s2.d = 2;
    s2.kappa = ScaleKernel::ball_self_convolution(2);
    const auto K2 = LogKernel::from_spec(s2);
    for (double delta : {1e-3, 0.1, 2.5}) {
        EXPECT_EQ(build_K_delta(K1, ScaleKernel::triangle(), delta, 2.0).delta_part(0.0), delta);
        EXPECT_EQ(build_K_delta(K2, ScaleKernel::ball_self_convolution(2), delta, 3.0).delta_part(0.0), delta);
    }
}

TEST(DeltaPart, VanishesBeyondUnitDistance) {
    const auto kd = build_K_delta(LogKernel::from_spec(KernelSpec{}), ScaleKernel::triangle(), 0.3, 2.0);
    for (double r : {1.0, 1.5, 10.0}) EXPECT_EQ(kd.delta_part(r), 0.0);
}

TEST(DeltaPart, ClosedFormMatchesTimeQuadrature) {
    const auto K = LogKernel::from_spec(KernelSpec{});
    for (double s : {1.5, 2.0, 3.0, 4.0}) {  // eta = 0.25, 0.5, 1, 1.5
        const auto kd = build_K_delta(K, ScaleKernel::triangle(), 0.7, s);
        for (double r : {1e-4, 0.01, 0.2, 0.5, 0.9, 0.999}) {
            EXPECT_NEAR(kd.delta_part(r), delta_part_oracle(ScaleKernel::triangle(), 0.7, kd.eta(), r), 1e-11)
                << "s=" << s << " r=" << r;
        }
    }
}

TEST(DeltaPart, GeneralKernelPathMatchesTimeQuadrature) {
    KernelSpec s2;
    s2.d = 2;
    s2.kappa = ScaleKernel::ball_self_convolution(2);
    const auto kd = build_K_delta(LogKernel::from_spec(s2), s2.kappa, 0.4, 3.0);
    for (double r : {0.001, 0.1, 0.5, 0.95}) {
        EXPECT_NEAR(kd.delta_part(r), delta_part_oracle(s2.kappa, 0.4, kd.eta(), r), 1e-9) << r;
    }
}

TEST(DeltaPart, NonincreasingForTriangle) {
    const auto kd = build_K_delta(LogKernel::from_spec(KernelSpec{}), ScaleKernel::triangle(), 1.0, 2.0);
    double prev = kd.delta_part(0.0);
    for (int i = 1; i <= 1100; ++i) {
        const double v = kd.delta_part(i * 1e-3);
        EXPECT_LE(v, prev + 1e-15) << i;
        prev = v;
    }
}

TEST(DeltaPart, RequiresSAboveD) {
    const auto K = LogKernel::from_spec(KernelSpec{});
    EXPECT_THROW(build_K_delta(K, ScaleKernel::triangle(), 0.1, 1.0), DomainError);
    EXPECT_THROW(build_K_delta(K, ScaleKernel::triangle(), 0.0, 2.0), DomainError);
}

// --------------------------------------------------------- verify_conditions

TEST(VerifyConditions, SupDiffIsDeltaOnTheDiagonal) {
    const auto pts = random_points(200, 1, 3.0, 1);
    const auto kd = build_K_delta(LogKernel::from_spec(KernelSpec{}), ScaleKernel::triangle(), 0.25, 2.0);
    const auto rep = verify_conditions(kd, pts);
    EXPECT_LE(rep.sup_diff, 0.25 + 1e-9);
    EXPECT_NEAR(rep.sup_diff, 0.25, 1e-12);
    EXPECT_GT(rep.eta, 0.0);
}

TEST(VerifyConditions, LinearInDelta) {
    const auto pts = random_points(100, 1, 3.0, 2);
    const auto K = LogKernel::from_spec(KernelSpec{});
    for (double delta : {0.4, 0.2, 0.1, 0.05}) {
        EXPECT_NEAR(verify_conditions(build_K_delta(K, ScaleKernel::triangle(), delta, 2.0), pts).sup_diff, delta,
                    1e-12);
    }
}

TEST(VerifyConditions, DeltaPartPositiveSemidefinite) {
    const auto kd1 = build_K_delta(LogKernel::from_spec(KernelSpec{}), ScaleKernel::triangle(), 1.0, 2.0);
    const auto r1 = verify_conditions(kd1, random_points(512, 1, 3.0, 3));
    EXPECT_GE(r1.min_eig_delta_part, -1e-8 * r1.max_eig_delta_part);
    EXPECT_TRUE(r1.delta_part_psd());

    KernelSpec s2;
    s2.d = 2;
    s2.kappa = ScaleKernel::ball_self_convolution(2);
    const auto kd2 = build_K_delta(LogKernel::from_spec(s2), s2.kappa, 1.0, 3.0);
    const auto r2 = verify_conditions(kd2, random_points(256, 2, 3.0, 4));
    EXPECT_GE(r2.min_eig_delta_part, -1e-8 * r2.max_eig_delta_part);
}

TEST(VerifyConditions, RejectsRepeatedPoints) {
    const auto kd = build_K_delta(LogKernel::from_spec(KernelSpec{}), ScaleKernel::triangle(), 1.0, 2.0);
    EXPECT_THROW(verify_conditions(kd, {Point{0.5, 0.0}, Point{0.5, 0.0}}), DomainError);
}

// ----------------------------------------------------------------- find_t0

TEST(FindT0, StarKernelNeedsNoCutoff) {
    // K = int_0^inf kappa0(e^t r) dt: the remainder at t0 = 0 is Delta^delta, which is PSD.
    const auto kd = build_K_delta(LogKernel::from_spec(KernelSpec{}), ScaleKernel::triangle(), 2.0, 2.0);
    const auto rep = find_t0(kd, line_points(256, 0.0, 3.0));
    ASSERT_TRUE(rep.t0_found.has_value());
    EXPECT_EQ(*rep.t0_found, 0.0);
}

TEST(FindT0, SyntheticInstanceThresholdGrowsAsDeltaShrinks) {
    const auto pts = line_points(256, 0.0, 3.0);
    const auto K = synthetic_instance();
    std::vector<double> t0s;
    for (double delta : {0.5, 0.1, 0.01}) {
        const auto rep = find_t0(build_K_delta(K, ScaleKernel::triangle(), delta, 2.0), pts);
        ASSERT_TRUE(rep.t0_found.has_value()) << delta;
        EXPECT_LE(*rep.t0_found, 30.0);
        t0s.push_back(*rep.t0_found);
    }
    EXPECT_GT(t0s[0], 0.0);
    EXPECT_LE(t0s[0], t0s[1]);
    EXPECT_LE(t0s[1], t0s[2]);
    EXPECT_LT(t0s[0], t0s[2]);
}

TEST(FindT0, MinEigenvalueNondecreasingInT0) {
    const auto pts = line_points(200, 0.0, 3.0);
    const auto kd = build_K_delta(synthetic_instance(), ScaleKernel::triangle(), 0.1, 2.0);
    double prev = -1e300;
    for (double t0 = 0.0; t0 <= 6.0; t0 += 0.5) {
        const double lo = remainder_eig_range(kd, pts, t0).first;
        EXPECT_GE(lo, prev - 1e-10) << t0;
        prev = lo;
    }
}

TEST(FindT0, SplittingIdentityPointwise) {
    const auto kd = build_K_delta(synthetic_instance(), ScaleKernel::triangle(), 0.1, 2.0);
    const auto pts = random_points(40, 1, 3.0, 5);
    for (double t0 : {0.0, 1.5, 4.0}) {
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = 0; j < i; ++j) {
                const double r = dist(pts[i], pts[j], 1);
                // tail by direct quadrature in t, independent of the Phi-based closed form
                const double T = std::log(1.0 / r);
                const double tail =
                    T > t0 ? quad::gk([&](double t) { return 1.0 - r * std::exp(t); }, t0, T, 1e-13) : 0.0;
                EXPECT_NEAR(kd.remainder(pts[i], pts[j], t0) + tail, kd(pts[i], pts[j]), 1e-10);
                EXPECT_NEAR(kd.star_tail(r, t0), tail, 1e-10);
            }
    }
}

TEST(FindT0, ReportJson) {
    const auto kd = build_K_delta(synthetic_instance(), ScaleKernel::triangle(), 0.1, 2.0);
    const auto j = find_t0(kd, line_points(64, 0.0, 3.0)).to_json();
    EXPECT_TRUE(j.contains("t0_found"));
    EXPECT_EQ(j["eta"].get<double>(), 0.5);
}
