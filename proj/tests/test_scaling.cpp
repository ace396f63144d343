#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "gmclab/rng.hpp"
#include "gmclab/scaling.hpp"

using namespace gmclab;

// ------------------------------------------------------------ classify_phase

TEST(ClassifyPhase, Examples) {
    EXPECT_EQ(classify_phase(0.5, 1.5, 2), PhaseRegion::PhaseIII);
    EXPECT_EQ(classify_phase(0.1, 0.1, 2), PhaseRegion::Subcritical);
    for (int d : {1, 2, 3}) EXPECT_EQ(classify_phase(0.0, std::sqrt(double(d)), d), PhaseRegion::PhaseIIIClosure);
    EXPECT_EQ(classify_phase(0.5, std::sqrt(1.75), 1), PhaseRegion::PhaseIII);
    EXPECT_EQ(classify_phase(0.5, std::sqrt(0.75), 1), PhaseRegion::PhaseIIIClosure);
    EXPECT_EQ(classify_phase(std::sqrt(0.5), 2.0, 1), PhaseRegion::Boundary);
    EXPECT_EQ(classify_phase(1.0, 0.0, 1), PhaseRegion::Boundary);
    EXPECT_EQ(classify_phase(2.0, 0.0, 1), PhaseRegion::RealSupercritical);
    EXPECT_EQ(classify_phase(1.0, 1.0, 1), PhaseRegion::PhaseII);
    EXPECT_EQ(classify_phase(1.2, 0.1, 1), PhaseRegion::Subcritical);
    EXPECT_EQ(classify_phase(0.4, 0.0, 1), PhaseRegion::Subcritical);
    EXPECT_TRUE(in_phase_iii_prime(0.0, 1.0, 1));
    EXPECT_FALSE(in_phase_iii_prime(0.4, 0.0, 1));
}

TEST(ClassifyPhase, TotalAwayFromBoundaries) {
    CounterStream cs(5, 0, 0, StreamTag::Sampling);
    std::vector<double> u(4000);
    cs.fill_uniform(u);
    for (std::size_t i = 0; i < u.size(); i += 2) {
        const double a = 6.0 * u[i] - 3.0, b = 6.0 * u[i + 1] - 3.0;
        for (int d : {1, 2}) EXPECT_NE(classify_phase(a, b, d), PhaseRegion::Other) << a << "," << b;
    }
}

// --------------------------------------------------------------------- v_eps

TEST(VEps, CircleCasePlanar) {
    const auto c = v_eps(std::exp(-1.0), Mollifier::standard_bump(2), 2.0);
    EXPECT_EQ(c.regime, NormRegime::Circle);
    EXPECT_NEAR(c.value, 1.0 / std::sqrt(std::numbers::pi), 1e-12);
    EXPECT_NEAR(c.value, 0.564190, 1e-6);
    EXPECT_EQ(c.gamma_half_d, 1.0);
}

TEST(VEps, HalvingRatioExact) {
    const auto m = Mollifier::standard_bump(1);
    const double r = v_eps(0.01, m, 2.5).value / v_eps(0.02, m, 2.5).value;
    EXPECT_NEAR(r, std::pow(2.0, -0.75), 1e-14);
}

TEST(VEps, RegimeSelectionAndPhaseGate) {
    const auto m = Mollifier::standard_bump(1);
    EXPECT_EQ(v_eps(0.1, m, 1.0 + 1e-13).regime, NormRegime::Circle);
    EXPECT_EQ(v_eps(0.1, m, 1.0 - 1e-13).regime, NormRegime::Circle);
    EXPECT_THROW(v_eps(0.1, m, 0.9), OutOfPhaseError);
    EXPECT_GT(v_eps(0.1, m, 1.5).value, 0.0);
}

TEST(VEps, IntegralMatchesImportanceSampling) {
    // z ~ p(z) = (1/2)(1+|z|)^{-2}; weight e^{2 ell_theta(z)} / p(z) has finite variance.
    const auto m = Mollifier::standard_bump(1);
    const double quad_value = ell_theta_exp_integral(m, 2.0);
    CounterStream cs(17, 0, 0, StreamTag::Sampling);
    const std::size_t n = 20000;
    std::vector<double> u(2 * n);
    cs.fill_uniform(u);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = 1.0 / (1.0 - u[2 * i]) - 1.0;  // |z| with density (1+r)^{-2}
        const double z = u[2 * i + 1] < 0.5 ? -r : r;
        w[i] = std::exp(2.0 * ell_theta(m, Point{z, 0.0})) / (0.5 / ((1.0 + r) * (1.0 + r)));
    }
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : w) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / (n - 1) / n);
    EXPECT_LT(std::abs(mean - quad_value), 3.0 * se) << mean << " +- " << se << " vs " << quad_value;
}

// --------------------------------------------------------------------- v_bar

TEST(VBar, TriangleIntegralClosedForm) {
    const double i = ell_kappa_exp_integral(ScaleKernel::triangle(), 1, 2.0);
    EXPECT_NEAR(i, std::exp(2.0) + 1.0, 1e-6);
    const auto c = v_bar(3.0, ScaleKernel::triangle(), 2.0, 1);
    EXPECT_NEAR(c.integral, 8.389056, 1e-6);
}

TEST(VBar, TimeRatioAndCircle) {
    const auto k = ScaleKernel::triangle();
    EXPECT_NEAR(v_bar(5.0, k, 2.0, 1).value / v_bar(4.0, k, 2.0, 1).value, std::exp(-0.5), 1e-14);
    const auto c = v_bar(4.0, k, 1.0, 1);
    EXPECT_EQ(c.regime, NormRegime::Circle);
    EXPECT_NEAR(c.value, 0.5, 1e-12);
    EXPECT_THROW(v_bar(4.0, k, 0.5, 1), OutOfPhaseError);
}

TEST(VBar, LatticeVersionApproachesContinuum) {
    const Grid g = Grid::make(1, 4096, 3.0);
    const auto sched = LayerSchedule::uniform(3.0, 0.125).extended_to(std::log(1.0 / g.h()));
    FieldEnsemble e(KernelSpec{}, g, sched, 1, 1);
    const double lat = v_bar_lattice(e, sched.index_of(3.0), 2.0);
    EXPECT_NEAR(lat / v_bar(3.0, ScaleKernel::triangle(), 2.0, 1).value, 1.0, 0.02);
}

// ------------------------------------------------------------------- a_const

TEST(AConst, ZeroTimeIsKappaMass) {
    EXPECT_NEAR(a_const(0.0, ScaleKernel::triangle(), 2.0, 1), 1.0, 1e-12);
    // Ball kernel in the plane: mass of the normalised self-convolution is the unit-ball area.
    EXPECT_NEAR(a_const(0.0, ScaleKernel::ball_self_convolution(2), 3.0, 2), std::numbers::pi / 4.0, 1e-9);
}

TEST(AConst, ExponentialGrowthRate) {
    // log a(t) ~ log C + (|g|^2 - d) t on [4, 8].
    std::vector<double> ts, ys;
    for (double t = 4.0; t <= 8.0; t += 0.5) {
        ts.push_back(t);
        ys.push_back(std::log(a_const(t, ScaleKernel::triangle(), 2.0, 1)));
    }
    const double n = ts.size();
    const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sxy += (ts[i] - mt) * (ys[i] - my);
        sxx += (ts[i] - mt) * (ts[i] - mt);
    }
    EXPECT_NEAR(sxy / sxx, 1.0, 0.02);
}

TEST(AConst, MartingaleLimitIdentity) {
    const auto k = ScaleKernel::triangle();
    const double target = 2.0 * std::exp(-2.0 * j_kappa(k));
    EXPECT_NEAR(martingale_limit_value(k, 2.0, 1), target, 1e-9);
    EXPECT_LT(std::abs(martingale_limit_check(12.0, k, 2.0, 1) - target), 1e-2);
    const auto b = ScaleKernel::ball_self_convolution(2);
    EXPECT_NEAR(martingale_limit_value(b, 3.0, 2), 2.0 * std::exp(-3.0 * j_kappa(b)), 1e-8);
}

TEST(AConst, ConvolutionLimitIdentity) {
    KernelSpec spec;
    const double target = 2.0 * std::exp(-2.0);
    const double v = convolution_limit_check(3.0 / 512.0, spec, Mollifier::standard_bump(1), 2.0);
    EXPECT_LT(std::abs(v - target), 1e-2) << v << " vs " << target;
}

TEST(AConst, MollifiedVersionTendsToPlain) {
    // Small eps relative to e^{-t}: the mollified a(t, eps) is close to a(t).
    KernelSpec spec;
    const double plain = a_const(2.0, spec.kappa, 2.0, 1);
    const double moll = a_const_eps(2.0, spec, Mollifier::standard_bump(1), 1e-4, 2.0);
    EXPECT_NEAR(moll / plain, 1.0, 1e-2);
}
