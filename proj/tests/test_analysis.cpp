#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gmclab/analysis.hpp"
#include "gmclab/quadrature.hpp"

using namespace gmclab;

namespace {

const ComplexParam kP3{0.5, 1.3228756555322951};  // |gamma|^2 = 2

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
    CounterStream cs(seed, 0, 0, StreamTag::Sampling);
    std::vector<double> z(n);
    cs.fill_normal(z);
    return z;
}

std::vector<double> exponentials(std::size_t n, std::uint64_t seed) {
    CounterStream cs(seed, 0, 1, StreamTag::Sampling);
    std::vector<double> u(n);
    cs.fill_uniform(u);
    for (auto& v : u) v = -std::log(v);
    return u;
}

}  // namespace

// ---------------------------------------------------------------- cf_estimate

TEST(CfEstimate, ZeroSamplesGiveOne) {
    const std::vector<double> s(200, 0.0), xi{0.0, 0.5, 1.0, 3.0};
    const auto cf = cf_estimate(s, xi);
    for (std::size_t k = 0; k < xi.size(); ++k) {
        EXPECT_EQ(cf.phi_hat[k], cplx(1.0, 0.0));
        EXPECT_EQ(cf.stderr[k], 0.0);
    }
}

TEST(CfEstimate, GaussianCharacteristicFunction) {
    const auto z = normals(10000, 3);
    const std::vector<double> xi{0.0, 0.5, 1.0, 2.0};
    const auto cf = cf_estimate(z, xi, 7);
    EXPECT_EQ(cf.phi_hat[0], cplx(1.0, 0.0));
    for (std::size_t k = 1; k < xi.size(); ++k) {
        EXPECT_LT(std::abs(cf.phi_hat[k] - std::exp(-0.5 * xi[k] * xi[k])), 3.0 * cf.stderr[k]) << xi[k];
        EXPECT_LE(std::abs(cf.phi_hat[k]), 1.0 + 3.0 * cf.stderr[k]);
        // bootstrap sd tracks the binomial-type formula sqrt((1 - |phi|^2)/R) roughly
        EXPECT_NEAR(cf.stderr[k], std::sqrt((1.0 - std::exp(-xi[k] * xi[k])) / 1e4), 0.3 * cf.stderr[k]);
    }
}

TEST(CfEstimate, AntisymmetricSamplesHaveRealCf) {
    const auto z = normals(512, 4);
    std::vector<double> s;
    for (double v : z) {
        s.push_back(v);
        s.push_back(-v);
    }
    const auto cf = cf_estimate(s, std::vector<double>{0.3, 1.0, 2.5});
    for (auto v : cf.phi_hat) EXPECT_EQ(v.imag(), 0.0);
}

TEST(CfEstimate, TooFewReplicas) {
    const std::vector<double> s(99, 0.0);
    EXPECT_THROW(cf_estimate(s, std::vector<double>{1.0}), DataError);
}

TEST(CfEstimate, BootstrapIsDeterministic) {
    const auto z = normals(500, 5);
    const std::vector<double> xi{1.0};
    EXPECT_EQ(cf_estimate(z, xi, 9).stderr, cf_estimate(z, xi, 9).stderr);
    EXPECT_NE(cf_estimate(z, xi, 9).stderr, cf_estimate(z, xi, 10).stderr);
}

// ------------------------------------------------------------------- limit_cf

TEST(LimitCf, DeterministicIntensities) {
    const std::vector<double> zero(150, 0.0), two(150, 2.0);
    const std::vector<double> xi{0.5, 1.0, 2.0};
    for (auto v : limit_cf(zero, xi).phi_hat) EXPECT_EQ(v, cplx(1.0, 0.0));
    EXPECT_NEAR(limit_cf(two, std::vector<double>{1.0}).phi_hat[0].real(), 0.367879, 1e-6);
}

TEST(LimitCf, ExponentialLaplaceTransform) {
    const auto z = exponentials(10000, 6);
    const std::vector<double> xi{0.5, 1.0, 2.0};
    const auto cf = limit_cf(z, xi, 1);
    for (std::size_t k = 0; k < xi.size(); ++k) {
        EXPECT_LT(std::abs(cf.phi_hat[k].real() - 1.0 / (1.0 + 0.5 * xi[k] * xi[k])), 3.0 * cf.stderr[k]);
    }
}

TEST(LimitCf, NegativeIntensityRejected) {
    std::vector<double> z(200, 1.0);
    z[17] = -1e-3;
    EXPECT_THROW(limit_cf(z, std::vector<double>{1.0}), DataError);
}

// ------------------------------------------------------------------ paired_cf

TEST(PairedCf, GaussianMixtureMatchesItsIntensity) {
    // s = sqrt(Z) N with N independent of Z has E[e^{i xi s} | Z] = e^{-xi^2 Z / 2}.
    const auto z = exponentials(5000, 8);
    const auto n = normals(5000, 9);
    const auto p = normals(5000, 10);
    std::vector<double> s(z.size());
    for (std::size_t r = 0; r < s.size(); ++r) s[r] = std::sqrt(z[r]) * n[r];
    const std::vector<double> xi{0.25, 0.5, 1.0, 2.0};
    const auto pc = paired_cf(s, z, p, xi, 2);
    EXPECT_LE(pc.max_excess(0.0), 0.0);
    std::vector<double> z4(z);
    for (auto& v : z4) v *= 4.0;
    EXPECT_GT(paired_cf(s, z4, p, xi, 2).max_abs(), 5.0 * pc.max_abs());
}

TEST(PairedCf, PairingShrinksTheBand) {
    const auto z = exponentials(3000, 11);
    const auto n = normals(3000, 12);
    std::vector<double> s(z.size());
    for (std::size_t r = 0; r < s.size(); ++r) s[r] = std::sqrt(z[r]) * n[r];
    const std::vector<double> xi{1.0};
    const auto pc = paired_cf(s, z, {}, xi, 3);
    EXPECT_LT(pc.diff.stderr[0], std::hypot(pc.lhs.stderr[0], pc.rhs.stderr[0]));
}

// ---------------------------------------------------------- second moments

TEST(SecondMomentFit, SyntheticPowerLaw) {
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025, 0.0125};
    std::vector<std::vector<double>> sq;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        auto z = exponentials(2000, 20 + k);
        for (auto& v : z) v /= eps[k];
        sq.push_back(z);
    }
    const auto fit = second_moment_fit(eps, sq);
    EXPECT_NEAR(fit.slope, -1.0, 0.05);
    EXPECT_LT(fit.ci_lo, fit.slope);
    EXPECT_GT(fit.ci_hi, fit.slope);
    EXPECT_THROW(second_moment_fit({0.2, 0.1, 0.05}, {sq[0], sq[1], sq[2]}), DomainError);
    EXPECT_THROW(second_moment_fit({0.2, 0.1, 0.04, 0.02}, {sq[0], sq[1], sq[2], sq[3]}), DomainError);
}

class ChaosLadder : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        grid_ = new Grid(Grid::make(1, 4096, 3.0));
        ens_ = new FieldEnsemble(KernelSpec{}, *grid_, LayerSchedule::for_grid(*grid_), 400, 41);
    }
    static void TearDownTestSuite() {
        delete ens_;
        delete grid_;
    }
    static std::vector<double> ladder() { return {3.0 / 16, 3.0 / 32, 3.0 / 64, 3.0 / 128}; }
    static Grid* grid_;
    static FieldEnsemble* ens_;
};
Grid* ChaosLadder::grid_ = nullptr;
FieldEnsemble* ChaosLadder::ens_ = nullptr;

TEST_F(ChaosLadder, StrictPhaseExponent) {
    const auto f = TestFunction::bump(*grid_, 1.0, 2.0);
    const auto sq = second_moment_samples(*ens_, kP3, f, Mollifier::standard_bump(1), ladder());
    const auto fit = second_moment_fit(ladder(), sq, MomentFitMode::LogLog, 1);
    EXPECT_NEAR(fit.slope, -1.0, 0.15) << fit.to_json().dump();
}

TEST_F(ChaosLadder, CircleCaseGrowsLinearlyInLog) {
    const auto f = TestFunction::bump(*grid_, 1.0, 2.0);
    const ComplexParam g{0.5, std::sqrt(0.75)};
    const auto sq = second_moment_samples(*ens_, g, f, Mollifier::standard_bump(1), ladder());
    const auto fit = second_moment_fit(ladder(), sq, MomentFitMode::LogLinear, 1);
    EXPECT_GT(fit.slope, 0.0);
    EXPECT_GE(fit.r2, 0.95) << fit.to_json().dump();
}

TEST_F(ChaosLadder, SubcriticalMomentBounded) {
    const auto f = TestFunction::bump(*grid_, 1.0, 2.0);
    const auto sq = second_moment_samples(*ens_, ComplexParam{0.3, 0.0}, f, Mollifier::standard_bump(1), ladder());
    const auto fit = second_moment_fit(ladder(), sq, MomentFitMode::LogLog, 1);
    EXPECT_NEAR(fit.slope, 0.0, 0.05) << fit.to_json().dump();
}

// ---------------------------------------------------------- stable limit test

TEST_F(ChaosLadder, StableLimitSkipsOutOfPhase) {
    const auto f = TestFunction::bump(*grid_, 1.0, 2.0);
    const auto rep = stable_limit_test(*ens_, ComplexParam{0.3, 0.0}, f, 0.0, {}, Mollifier::standard_bump(1), ladder());
    EXPECT_EQ(rep.status, "skipped");
    EXPECT_TRUE(rep.levels.empty());
}

TEST_F(ChaosLadder, StableLimitSmallFrequencyCurvature) {
    // alpha = 0, beta large: 1 - Re E[e^{i xi v N}] ~ xi^2 E[(vN)^2] / 2 and E[(vN)^2] ~ E[Z].
    const auto f = TestFunction::bump(*grid_, 1.0, 2.0);
    const ComplexParam g{0.0, std::sqrt(2.0)};
    StableLimitOptions opt;
    opt.xi_base = {0.05};
    const auto rep = stable_limit_test(*ens_, g, f, 0.3, {}, Mollifier::standard_bump(1), ladder(), opt);
    ASSERT_EQ(rep.status, "ok");
    const auto& lv = rep.levels.back();
    const double xi = lv.xi[0];
    const double curvature = 2.0 * (1.0 - lv.by_measure[0].lhs.phi_hat[0].real()) / (xi * xi);
    std::vector<double> paired(lv.normalised.size());
    for (std::size_t r = 0; r < paired.size(); ++r) paired[r] = lv.normalised[r] * lv.normalised[r] - lv.intensity[r];
    const double mz = stats::mean(lv.intensity);
    EXPECT_NEAR(curvature, mz, 3.0 * stats::stderr_of_mean(paired) + 0.1 * mz);
}

TEST_F(ChaosLadder, StableLimitReportShape) {
    const auto f = TestFunction::bump(*grid_, 1.0, 2.0);
    const std::vector<DiscreteMeasure> mus{DiscreteMeasure{{Point{1.5, 0.0}}, {0.5}},
                                           DiscreteMeasure{{Point{1.2, 0.0}, Point{1.8, 0.0}}, {0.3, -0.3}}};
    const auto rep = stable_limit_test(*ens_, kP3, f, 0.0, mus, Mollifier::standard_bump(1), ladder());
    ASSERT_EQ(rep.status, "ok");
    ASSERT_EQ(rep.levels.size(), 4u);
    EXPECT_GT(rep.levels[0].eps, rep.levels[3].eps);
    for (const auto& lv : rep.levels) {
        EXPECT_EQ(lv.by_measure.size(), 3u);
        EXPECT_GT(lv.v, 0.0);
        EXPECT_NEAR(lv.v / lv.v_continuum, 1.0, 0.1);
    }
    EXPECT_TRUE(rep.companion_worse);
    EXPECT_NO_THROW(rep.to_json().dump());
}

// ----------------------------------------------------------------- qv tests

TEST(QvLln, OutOfPhaseIsSkipped) {
    const Grid g = Grid::make(1, 256, 3.0);
    FieldEnsemble e(KernelSpec{}, g, LayerSchedule::for_grid(g), 2, 1);
    const auto rep = qv_lln_test(e, ComplexParam{0.3, 0.0}, TestFunction::bump(g, 1.0, 2.0), 0.0, QvMode::Martingale);
    EXPECT_EQ(rep.status, "skipped");
}

TEST(QvLln, MartingaleModeSmallRun) {
    const Grid g = Grid::make(1, 1024, 3.0);
    const auto sched = LayerSchedule::uniform(10.0, 1.0 / 12.0);
    FieldEnsemble e(KernelSpec{}, g, sched, 200, 51);
    QvOptions opt;
    opt.b_times = {2.0, 3.5, 5.0};  // within the grid resolution log(1/h) = 5.8
    const auto rep = qv_lln_test(e, kP3, TestFunction::bump(g, 1.0, 2.0), 0.4, QvMode::Martingale, nullptr, opt);
    ASSERT_EQ(rep.status, "ok");
    EXPECT_GT(rep.correlation, 0.9) << rep.to_json().dump();
    EXPECT_NEAR(rep.mean_ratio, 1.0, 0.2) << rep.to_json().dump();
    // realised quadratic variation against the compensator: within 10% on the ensemble average
    EXPECT_NEAR(rep.realised_over_compensator, 1.0, 0.1);
    EXPECT_GT(rep.b_share[0], rep.b_share[2]);
}

TEST(QvLln, ConvolutionModeSmallRun) {
    const Grid g = Grid::make(1, 2048, 3.0);
    FieldEnsemble e(KernelSpec{}, g, LayerSchedule::for_grid(g), 200, 52);
    MollifierFilter filt(g, Mollifier::standard_bump(1), 3.0 / 64);
    const auto rep = qv_lln_test(e, kP3, TestFunction::bump(g, 1.0, 2.0), 0.0, QvMode::Convolution, &filt);
    ASSERT_EQ(rep.status, "ok");
    // coarse eps and few replicas; the acceptance run uses eps = 3 / 512
    EXPECT_GT(rep.correlation, 0.85) << rep.to_json().dump();
    EXPECT_NEAR(rep.mean_ratio, 1.0, 0.2) << rep.to_json().dump();
    EXPECT_NEAR(rep.realised_over_compensator, 1.0, 0.1);
}

TEST(QvLln, BatchedWalkMatchesSingleReplicaPaths) {
    const Grid g = Grid::make(1, 512, 3.0);
    FieldEnsemble e(KernelSpec{}, g, LayerSchedule::for_grid(g), 5, 53);
    const auto f = TestFunction::bump(g, 1.0, 2.0);
    const auto diag = diag_profile(e, nullptr);
    const BracketTables tables(e, kP3, nullptr, BracketForm::Compensator);
    const auto batch = chaos_paths_batched(e, 1, 4, kP3, f, nullptr, diag, BracketForm::Compensator);
    for (std::size_t r = 1; r < 4; ++r) {
        const auto p = chaos_path(e, r, kP3, f, nullptr, diag, &tables);
        EXPECT_EQ(p.M, batch[r - 1].M);
        EXPECT_EQ(p.A, batch[r - 1].A);
        EXPECT_EQ(p.B, batch[r - 1].B);
    }
}

// ------------------------------------------------------------------ sobolev

TEST(Sobolev, ConstantTransformAgainstQuadrature) {
    const Grid g = Grid::make(1, 4096, 32.0);
    const double u = 0.75, c = 1.7;
    const std::vector<cplx> mh(g.size(), cplx(c, 0.0));
    const double lattice = hminus_norm_sq(g, mh, u);
    const double w = 2.0 * std::numbers::pi / g.side;
    const double top = w * (g.n / 2 + 0.5);  // midpoint-rule cells cover [-top, top]
    auto fn = [&](double x) { return std::pow(1.0 + x * x, -u); };
    double cont = 2.0 * quad::gk(fn, 0.0, 1.0, 1e-12);
    for (double lo = 1.0; lo < top; lo *= 2.0) cont += 2.0 * quad::gk(fn, lo, std::min(2.0 * lo, top), 1e-12);
    EXPECT_NEAR(lattice / (c * c * cont), 1.0, 0.01);
    EXPECT_THROW(hminus_norm_sq(g, mh, 0.5), DomainError);
}

TEST(Sobolev, ParsevalIdentity) {
    for (int d : {1, 2}) {
        const Grid g = Grid::make(d, d == 1 ? 1024 : 64, 3.0);
        const auto z = normals(2 * g.size(), 60 + d);
        std::vector<cplx> G(g.size());
        for (std::size_t i = 0; i < G.size(); ++i) G[i] = cplx(z[2 * i], z[2 * i + 1]);
        const auto Mh = chaos_transform(g, G);
        double lhs = 0.0, rhs = 0.0;
        for (auto v : G) lhs += std::norm(v) * g.cell();
        for (auto v : Mh) rhs += std::norm(v) * frequency_cell(g) / std::pow(2.0 * std::numbers::pi, d);
        EXPECT_NEAR(rhs / lhs, 1.0, 1e-10);
    }
}

TEST(Sobolev, ShiftedTransformIsModulation) {
    const Grid g = Grid::make(1, 256, 3.0);
    const auto z = normals(g.size(), 70);
    std::vector<cplx> G(z.begin(), z.end());
    const double w = 2.0 * std::numbers::pi / g.side;
    const auto a = chaos_transform(g, G);
    const auto b = chaos_transform(g, G, {w});
    for (std::size_t k = 0; k + 1 < g.size(); ++k) EXPECT_NEAR(std::abs(b[k] - a[k + 1]), 0.0, 1e-12);
}

TEST_F(ChaosLadder, TightnessDiagnosticsBounded) {
    const auto rho = TestFunction::bump(*grid_, 1.0, 2.0);
    const auto prof = sobolev_diagnostics(*ens_, kP3, rho, Mollifier::standard_bump(1), ladder());
    EXPECT_DOUBLE_EQ(prof.u, 0.75);
    for (double n : prof.norm_sq) EXPECT_TRUE(std::isfinite(n) && n > 0.0);
    EXPECT_LE(prof.moment_spread(), 3.0) << prof.to_json().dump();
    for (const auto& row : prof.increment_ratio)
        for (double v : row) EXPECT_TRUE(std::isfinite(v));
    // tail mass is nonincreasing in the radius
    for (const auto& t : prof.tail_mass)
        for (std::size_t j = 1; j < t.size(); ++j) EXPECT_LE(t[j], t[j - 1]);
}

// ----------------------------------------------------------- energy distance

TEST(EnergyDistance, SameLawAndShiftedLaw) {
    const auto a = normals(300 * 4, 80), b = normals(300 * 4, 81);
    Eigen::MatrixXd X(300, 4), Y(300, 4), Ys(300, 4);
    for (int i = 0; i < 300; ++i)
        for (int j = 0; j < 4; ++j) {
            X(i, j) = a[4 * i + j];
            Y(i, j) = b[4 * i + j];
            Ys(i, j) = b[4 * i + j] + 0.5;
        }
    EXPECT_GT(energy_distance_test(X, Y, 199, 1).p_value, 0.01);
    EXPECT_LE(energy_distance_test(X, Ys, 199, 1).p_value, 0.01);
}

TEST(EnergyDistance, SpectralSynthesisMatchesCholeskyOracle) {
    const Grid g = Grid::make(1, 4096, 3.0);
    const auto sched = LayerSchedule::for_grid(g);
    FieldEnsemble e(KernelSpec{}, g, sched, 600, 90);
    const Mollifier m = Mollifier::standard_bump(1);
    const double eps = 64 * g.h();
    MollifierFilter f(g, m, eps);
    const std::vector<std::size_t> sites{1000, 1040, 1200, 2000, 3000, 3010};
    std::vector<Point> pts;
    for (auto s : sites) pts.push_back(g.point(s));
    const auto chol = cholesky_oracle(e.spec(), m, eps, pts, 600, 91);
    Eigen::MatrixXd spec(600, sites.size());
    for (std::size_t r = 0; r < 600; ++r) {
        auto w = e.walker(r);
        w.run_to(sched.layers());
        const auto y = w.mollified(f);
        for (std::size_t j = 0; j < sites.size(); ++j) spec(r, j) = y[sites[j]];
    }
    EXPECT_GT(energy_distance_test(spec, chol, 199, 2).p_value, 0.01);
}
