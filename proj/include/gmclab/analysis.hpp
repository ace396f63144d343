#pragma once
// Statistical verification: characteristic-function estimators with bootstrap bands,
// the paired stable-limit test, second-moment fits, bracket laws of large numbers,
// Fourier-side tightness diagnostics and an energy-distance two-sample test.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "gmclab/chaos.hpp"
#include "gmclab/error.hpp"
#include "gmclab/fft.hpp"
#include "gmclab/rng.hpp"
#include "gmclab/scaling.hpp"
#include "gmclab/synth.hpp"

namespace gmclab {

constexpr std::size_t kMinReplicas = 100;
constexpr std::size_t kBootstrapResamples = 500;

// ---------------------------------------------------------------------------
// small statistics

namespace stats {

inline double mean(std::span<const double> x) {
    require(!x.empty(), "mean of an empty sample");
    return pairwise_sum(x.data(), x.size()) / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
    const double m = mean(x);
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = (x[i] - m) * (x[i] - m);
    return pairwise_sum(d) / std::max<double>(1.0, static_cast<double>(x.size()) - 1.0);
}

inline double stderr_of_mean(std::span<const double> x) {
    return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() > 2, "pearson needs paired samples");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LineFit line_fit(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "line fit needs at least two points");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

inline double quantile(std::vector<double> v, double p) {
    require(!v.empty(), "quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace stats

/// Resample b draws R indices from its own Bootstrap stream, so resamples are order independent.
inline std::vector<std::uint32_t> bootstrap_indices(std::size_t R, std::uint64_t seed, std::uint32_t b) {
    CounterStream cs(seed, b, 0, StreamTag::Bootstrap);
    std::vector<std::uint64_t> bits(R);
    cs.fill_bits(bits);
    std::vector<std::uint32_t> idx(R);
    for (std::size_t i = 0; i < R; ++i) {
        idx[i] = static_cast<std::uint32_t>((static_cast<unsigned __int128>(bits[i]) * R) >> 64);
    }
    return idx;
}

// ---------------------------------------------------------------------------
// characteristic functions

struct CFEstimate {
    std::vector<double> xi;
    std::vector<cplx> phi_hat;
    std::vector<double> stderr;  // bootstrap sd of the complex estimate
    std::size_t R = 0;

    nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t k = 0; k < xi.size(); ++k) {
            rows.push_back({{"xi", xi[k]}, {"re", phi_hat[k].real()}, {"im", phi_hat[k].imag()}, {"stderr", stderr[k]}});
        }
        return {{"replicas", R}, {"points", rows}};
    }

    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw Error("cannot write " + path);
        os.precision(17);
        os << "xi,re,im,stderr\n";
        for (std::size_t k = 0; k < xi.size(); ++k) {
            os << xi[k] << ',' << phi_hat[k].real() << ',' << phi_hat[k].imag() << ',' << stderr[k] << '\n';
        }
    }
};

namespace detail {

/// Mean of per-replica complex terms at each xi, with bootstrap sd over B resamples.
template <class Term>
CFEstimate cf_from_terms(std::size_t R, std::span<const double> xi, Term term, std::uint64_t seed, std::size_t B) {
    if (R < kMinReplicas) throw DataError("need at least " + std::to_string(kMinReplicas) + " replicas, got " +
                                          std::to_string(R));
    CFEstimate out;
    out.xi.assign(xi.begin(), xi.end());
    out.R = R;
    const std::size_t K = xi.size();
    std::vector<std::vector<cplx>> t(K, std::vector<cplx>(R));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t r = 0; r < R; ++r) t[k][r] = term(k, r);
    for (std::size_t k = 0; k < K; ++k) out.phi_hat.push_back(pairwise_sum(t[k]) / static_cast<double>(R));

    std::vector<std::vector<cplx>> boot(K, std::vector<cplx>(B));
    for (std::size_t b = 0; b < B; ++b) {
        const auto idx = bootstrap_indices(R, seed, static_cast<std::uint32_t>(b));
        for (std::size_t k = 0; k < K; ++k) {
            cplx s = 0.0;
            for (auto i : idx) s += t[k][i];
            boot[k][b] = s / static_cast<double>(R);
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        cplx m = 0.0;
        for (auto v : boot[k]) m += v;
        m /= static_cast<double>(B);
        double ss = 0.0;
        for (auto v : boot[k]) ss += std::norm(v - m);
        out.stderr.push_back(std::sqrt(ss / std::max<double>(1.0, B - 1.0)));
    }
    return out;
}

}  // namespace detail

/// phi_hat(xi) = (1/R) sum_r exp(i xi s_r).
inline CFEstimate cf_estimate(std::span<const double> samples, std::span<const double> xi, std::uint64_t seed = 0,
                              std::size_t B = kBootstrapResamples) {
    auto out = detail::cf_from_terms(
        samples.size(), xi, [&](std::size_t k, std::size_t r) { return std::exp(cplx(0.0, xi[k] * samples[r])); },
        seed, B);
    for (std::size_t k = 0; k < xi.size(); ++k) {
        if (xi[k] == 0.0) out.phi_hat[k] = 1.0;
    }
    return out;
}

/// (1/R) sum_r exp(-xi^2 Z_r / 2) for nonnegative intensities Z_r.
inline CFEstimate limit_cf(std::span<const double> Z, std::span<const double> xi, std::uint64_t seed = 0,
                           std::size_t B = kBootstrapResamples) {
    for (std::size_t r = 0; r < Z.size(); ++r) {
        if (!(Z[r] >= 0.0)) throw DataError("intensity sample " + std::to_string(r) + " is negative or NaN");
    }
    return detail::cf_from_terms(
        Z.size(), xi, [&](std::size_t k, std::size_t r) { return cplx(std::exp(-0.5 * xi[k] * xi[k] * Z[r]), 0.0); },
        seed, B);
}

/// Same-replica comparison of E[e^{i p + i xi s}] with E[e^{i p - xi^2 Z / 2}]; the
/// bootstrap resamples replicas jointly so the band is that of the paired difference.
struct PairedCF {
    CFEstimate lhs, rhs, diff;

    double max_excess(double bias) const {
        double m = -1e300;
        for (std::size_t k = 0; k < diff.xi.size(); ++k) {
            m = std::max(m, std::abs(diff.phi_hat[k]) - 3.0 * diff.stderr[k] - bias);
        }
        return m;
    }
    double max_abs() const {
        double m = 0.0;
        for (auto v : diff.phi_hat) m = std::max(m, std::abs(v));
        return m;
    }
};

inline PairedCF paired_cf(std::span<const double> s, std::span<const double> Z, std::span<const double> pairing,
                          std::span<const double> xi, std::uint64_t seed = 0, std::size_t B = kBootstrapResamples) {
    require(s.size() == Z.size(), "paired samples differ in length");
    require(pairing.empty() || pairing.size() == s.size(), "pairing values differ in length");
    for (std::size_t r = 0; r < Z.size(); ++r) {
        if (!(Z[r] >= 0.0)) throw DataError("intensity sample " + std::to_string(r) + " is negative or NaN");
    }
    auto p = [&](std::size_t r) { return pairing.empty() ? 0.0 : pairing[r]; };
    auto lhs = [&](std::size_t k, std::size_t r) { return std::exp(cplx(0.0, p(r) + xi[k] * s[r])); };
    auto rhs = [&](std::size_t k, std::size_t r) {
        return std::exp(cplx(-0.5 * xi[k] * xi[k] * Z[r], p(r)));
    };
    PairedCF out;
    out.lhs = detail::cf_from_terms(s.size(), xi, lhs, seed, B);
    out.rhs = detail::cf_from_terms(s.size(), xi, rhs, seed, B);
    out.diff = detail::cf_from_terms(
        s.size(), xi, [&](std::size_t k, std::size_t r) { return lhs(k, r) - rhs(k, r); }, seed, B);
    return out;
}

// ---------------------------------------------------------------------------
// stable-convergence test

struct StableLimitOptions {
    std::vector<double> xi_base{0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> xi_fixed;  // used as given at every eps when nonempty (no sd scaling)
    double bias_allowance = 0.05;
    std::uint64_t boot_seed = 0;
    std::size_t B = kBootstrapResamples;
    bool lattice_normalisation = true;  // v from the grid kernel rather than the continuum formula
};

struct StableLimitLevel {
    double eps = 0.0;
    double v = 0.0;            // normalisation actually used
    double v_continuum = 0.0;  // continuum formula, reported for comparison
    std::vector<double> xi;
    std::vector<PairedCF> by_measure;  // index 0 is mu = 0
    std::vector<PairedCF> companion;   // intensity weighted with e^{-|g|^2 L}
    double max_excess = 0.0;           // max |D| - 3 se - bias over xi and measures
    double max_discrepancy = 0.0;
    double companion_max_discrepancy = 0.0;
    double marginal_max_discrepancy = 0.0;
    std::vector<double> normalised;  // v * M(f, omega) per replica
    std::vector<double> intensity;
};

struct StableLimitReport {
    std::string status;  // "ok" or "skipped"
    std::string reason;
    std::vector<StableLimitLevel> levels;
    bool pass = false;
    bool companion_worse = false;

    nlohmann::json to_json() const {
        nlohmann::json lv = nlohmann::json::array();
        for (const auto& l : levels) {
            nlohmann::json ms = nlohmann::json::array();
            for (std::size_t j = 0; j < l.by_measure.size(); ++j) {
                ms.push_back({{"measure", j},
                              {"max_abs_discrepancy", l.by_measure[j].max_abs()},
                              {"companion_max_abs_discrepancy", l.companion[j].max_abs()},
                              {"diff", l.by_measure[j].diff.to_json()}});
            }
            lv.push_back({{"eps", l.eps},
                          {"v", l.v},
                          {"v_continuum", l.v_continuum},
                          {"xi", l.xi},
                          {"max_excess", l.max_excess},
                          {"max_discrepancy", l.max_discrepancy},
                          {"marginal_max_discrepancy", l.marginal_max_discrepancy},
                          {"companion_max_discrepancy", l.companion_max_discrepancy},
                          {"measures", ms}});
        }
        return {{"status", status}, {"reason", reason}, {"pass", pass}, {"companion_worse", companion_worse},
                {"levels", lv}};
    }
};

/// Joint CF test of (<X, mu>, v M_eps(f, omega)) against (<X, mu>, e^{-xi^2 Z / 2}) on the
/// same replicas, for every eps in the ladder; pass is judged at the finest eps.
inline StableLimitReport stable_limit_test(const FieldEnsemble& e, ComplexParam g, const TestFunction& f,
                                           double omega, const std::vector<DiscreteMeasure>& measures,
                                           const Mollifier& m, std::vector<double> eps_ladder,
                                           const StableLimitOptions& opt = {}) {
    StableLimitReport rep;
    const int d = e.grid().d;
    if (!in_phase_iii_prime(g.alpha, g.beta, d)) {
        rep.status = "skipped";
        rep.reason = "out of phase: gamma = " + std::to_string(g.alpha) + " + " + std::to_string(g.beta) +
                     "i is " + to_string(classify_phase(g.alpha, g.beta, d));
        return rep;
    }
    require(!eps_ladder.empty(), "empty eps ladder");
    std::sort(eps_ladder.begin(), eps_ladder.end(), std::greater<>());
    f.check_support(e.grid(), eps_ladder.front());
    require(e.spec().k0.is_stationary(), "stable_limit_test expects a stationary K0");

    const std::size_t L = e.schedule().layers();
    const std::size_t R = e.replicas();
    const double cell = e.grid().cell();
    const auto ld = l_diagonal(e);
    std::vector<MollifierFilter> filters;
    std::vector<double> kd, vs;
    for (double eps : eps_ladder) {
        filters.emplace_back(e.grid(), m, eps);
        kd.push_back(e.mollified_variance(L, filters.back()));
        vs.push_back(opt.lattice_normalisation && e.spec().k0.is_zero() ? v_eps_lattice(e, filters.back(), g.abs_sq())
                                                                        : v_eps(eps, m, g.abs_sq()).value);
    }
    std::vector<ResolvedMeasure> rms;
    for (const auto& mu : measures) rms.push_back(resolve(e.grid(), mu));

    const std::size_t E = eps_ladder.size();
    std::vector<std::vector<double>> s(E, std::vector<double>(R)), Z(E, std::vector<double>(R)),
        Zopp(E, std::vector<double>(R));
    std::vector<std::vector<double>> pairs(rms.size(), std::vector<double>(R));
    for (std::size_t r = 0; r < R; ++r) {
        auto w = e.walker(r);
        w.run_to(L);
        for (std::size_t j = 0; j < rms.size(); ++j) pairs[j][r] = pair(w.field(), rms[j]);
        for (std::size_t k = 0; k < E; ++k) {
            const auto x = w.mollified(filters[k]);
            const std::vector<double> kdk{kd[k]};
            s[k][r] = vs[k] * m_omega(gmc(x, kdk, g, f, cell), omega);
            Z[k][r] = intensity_functional(x, kdk, g.alpha, ld, g.abs_sq(), f, cell, d);
            Zopp[k][r] = intensity_functional(x, kdk, g.alpha, ld, g.abs_sq(), f, cell, d, -1.0);
        }
    }

    for (std::size_t k = 0; k < E; ++k) {
        StableLimitLevel lv;
        lv.eps = eps_ladder[k];
        lv.v = vs[k];
        lv.v_continuum = v_eps(eps_ladder[k], m, g.abs_sq()).value;
        const double sd = std::sqrt(stats::variance(s[k]));
        if (!opt.xi_fixed.empty()) lv.xi = opt.xi_fixed;
        else
            for (double b : opt.xi_base) lv.xi.push_back(sd > 0.0 ? b / sd : b);
        lv.by_measure.push_back(paired_cf(s[k], Z[k], {}, lv.xi, opt.boot_seed, opt.B));
        lv.companion.push_back(paired_cf(s[k], Zopp[k], {}, lv.xi, opt.boot_seed, opt.B));
        for (std::size_t j = 0; j < rms.size(); ++j) {
            lv.by_measure.push_back(paired_cf(s[k], Z[k], pairs[j], lv.xi, opt.boot_seed, opt.B));
            lv.companion.push_back(paired_cf(s[k], Zopp[k], pairs[j], lv.xi, opt.boot_seed, opt.B));
        }
        lv.max_excess = -1e300;
        for (std::size_t j = 0; j < lv.by_measure.size(); ++j) {
            lv.max_excess = std::max(lv.max_excess, lv.by_measure[j].max_excess(opt.bias_allowance));
            lv.max_discrepancy = std::max(lv.max_discrepancy, lv.by_measure[j].max_abs());
            lv.companion_max_discrepancy = std::max(lv.companion_max_discrepancy, lv.companion[j].max_abs());
        }
        lv.marginal_max_discrepancy = lv.by_measure[0].max_abs();
        lv.normalised = std::move(s[k]);
        lv.intensity = std::move(Z[k]);
        rep.levels.push_back(std::move(lv));
    }
    const auto& fin = rep.levels.back();
    rep.status = "ok";
    rep.pass = fin.max_excess <= 0.0;
    rep.companion_worse = fin.companion_max_discrepancy > fin.max_discrepancy;
    return rep;
}

// ---------------------------------------------------------------------------
// second moments

/// |M_eps(f)|^2 per replica for each eps, all from the same walked fields.
inline std::vector<std::vector<double>> second_moment_samples(const FieldEnsemble& e, ComplexParam g,
                                                              const TestFunction& f, const Mollifier& m,
                                                              const std::vector<double>& eps_ladder) {
    require(e.spec().k0.is_stationary(), "second_moment_samples expects a stationary K0");
    for (double eps : eps_ladder) f.check_support(e.grid(), eps);
    const std::size_t L = e.schedule().layers();
    std::vector<MollifierFilter> filters;
    std::vector<std::vector<double>> kd;
    for (double eps : eps_ladder) {
        filters.emplace_back(e.grid(), m, eps);
        kd.push_back({e.mollified_variance(L, filters.back())});
    }
    std::vector<std::vector<double>> out(eps_ladder.size(), std::vector<double>(e.replicas()));
    for (std::size_t r = 0; r < e.replicas(); ++r) {
        auto w = e.walker(r);
        w.run_to(L);
        for (std::size_t k = 0; k < filters.size(); ++k) {
            out[k][r] = std::norm(gmc(w.mollified(filters[k]), kd[k], g, f, e.grid().cell()));
        }
    }
    return out;
}

enum class MomentFitMode {
    LogLog,     ///< log E|M|^2 against log eps; slope is the exponent
    LogLinear,  ///< E|M|^2 against log(1/eps); the circle case
};

struct MomentFit {
    MomentFitMode mode = MomentFitMode::LogLog;
    std::vector<double> eps, moment, moment_stderr;
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // 95% percentile bootstrap interval of the slope

    double half_width() const { return 0.5 * (ci_hi - ci_lo); }

    nlohmann::json to_json() const {
        return {{"mode", mode == MomentFitMode::LogLog ? "loglog" : "loglinear"},
                {"eps", eps},
                {"moment", moment},
                {"moment_stderr", moment_stderr},
                {"slope", slope},
                {"intercept", intercept},
                {"r2", r2},
                {"ci", {ci_lo, ci_hi}}};
    }

    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw Error("cannot write " + path);
        os.precision(17);
        os << "eps,log_inv_eps,moment,moment_stderr\n";
        for (std::size_t k = 0; k < eps.size(); ++k) {
            os << eps[k] << ',' << std::log(1.0 / eps[k]) << ',' << moment[k] << ',' << moment_stderr[k] << '\n';
        }
    }
};

/// Least-squares fit of the ensemble second moment over a geometric eps ladder.
/// sq[k][r] = |M_{eps_k}(f)|^2 on replica r; replicas are resampled jointly across eps.
inline MomentFit second_moment_fit(const std::vector<double>& eps, const std::vector<std::vector<double>>& sq,
                                   MomentFitMode mode = MomentFitMode::LogLog, std::uint64_t seed = 0,
                                   std::size_t B = kBootstrapResamples) {
    require(eps.size() >= 4, "second_moment_fit needs at least four eps values");
    require(sq.size() == eps.size(), "one sample per eps is required");
    for (std::size_t k = 1; k < eps.size(); ++k) {
        require(std::abs(eps[k] / eps[k - 1] - eps[1] / eps[0]) < 1e-9 * eps[1] / eps[0], "eps ladder must be geometric");
    }
    const std::size_t R = sq.front().size();
    auto fit = [&](const std::vector<double>& mom) {
        std::vector<double> x(eps.size()), y(eps.size());
        for (std::size_t k = 0; k < eps.size(); ++k) {
            if (!(mom[k] > 0.0) && mode == MomentFitMode::LogLog) throw DataError("nonpositive second moment estimate");
            x[k] = mode == MomentFitMode::LogLog ? std::log(eps[k]) : std::log(1.0 / eps[k]);
            y[k] = mode == MomentFitMode::LogLog ? std::log(mom[k]) : mom[k];
        }
        return stats::line_fit(x, y);
    };
    MomentFit out;
    out.mode = mode;
    out.eps = eps;
    for (const auto& s : sq) {
        require(s.size() == R, "samples differ in replica count");
        out.moment.push_back(stats::mean(s));
        out.moment_stderr.push_back(stats::stderr_of_mean(s));
    }
    const auto f0 = fit(out.moment);
    out.slope = f0.slope;
    out.intercept = f0.intercept;
    out.r2 = f0.r2;
    std::vector<double> slopes;
    for (std::size_t b = 0; b < B; ++b) {
        const auto idx = bootstrap_indices(R, seed, static_cast<std::uint32_t>(b));
        std::vector<double> mom(eps.size(), 0.0);
        for (std::size_t k = 0; k < eps.size(); ++k) {
            for (auto i : idx) mom[k] += sq[k][i];
            mom[k] /= static_cast<double>(R);
        }
        slopes.push_back(fit(mom).slope);
    }
    out.ci_lo = stats::quantile(slopes, 0.025);
    out.ci_hi = stats::quantile(slopes, 0.975);
    return out;
}

// ---------------------------------------------------------------------------
// bracket laws of large numbers

enum class QvMode { Martingale, Convolution };

struct QvReport {
    std::string status;
    std::string reason;
    QvMode mode = QvMode::Martingale;
    double t_max = 0.0;
    double eps = 0.0;
    double norm = 0.0;            // vbar(t_max) or v(eps) as used (grid version)
    double norm_continuum = 0.0;  // continuum formula for comparison
    std::vector<double> normalised_bracket;  // norm^2 <N> per replica
    std::vector<double> intensity;
    double correlation = 0.0;
    double mean_ratio = 0.0;
    double mean_ratio_stderr = 0.0;
    double realised_over_compensator = 0.0;  // ensemble mean of sum (dN)^2 over mean <N>
    std::vector<double> b_times, b_share;
    bool pass = false;

    nlohmann::json to_json() const {
        return {{"status", status},
                {"reason", reason},
                {"mode", mode == QvMode::Martingale ? "martingale" : "convolution"},
                {"t_max", t_max},
                {"eps", eps},
                {"norm", norm},
                {"norm_continuum", norm_continuum},
                {"correlation", correlation},
                {"mean_ratio", mean_ratio},
                {"mean_ratio_stderr", mean_ratio_stderr},
                {"realised_over_compensator", realised_over_compensator},
                {"b_times", b_times},
                {"b_share", b_share},
                {"pass", pass}};
    }

    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw Error("cannot write " + path);
        os.precision(17);
        os << "replica,normalised_bracket,intensity\n";
        for (std::size_t r = 0; r < intensity.size(); ++r) {
            os << r << ',' << normalised_bracket[r] << ',' << intensity[r] << '\n';
        }
    }
};

struct QvOptions {
    std::vector<double> b_times;  // times at which the B-share is reported; t_max when empty
    BracketForm form = BracketForm::Compensator;
    double min_correlation = 0.95;
    double ratio_lo = 0.85, ratio_hi = 1.15;
    std::size_t walker_memory_bytes = std::size_t{1} << 30;
};

/// norm^2 <N>_t (martingale mode, unmollified) or norm^2 <N^(eps)> over the whole schedule
/// (convolution mode, `filt` required) against the intensity on the same replica.
inline QvReport qv_lln_test(const FieldEnsemble& e, ComplexParam g, const TestFunction& f, double omega, QvMode mode,
                            const MollifierFilter* filt = nullptr, const QvOptions& opt = {}) {
    QvReport rep;
    rep.mode = mode;
    const int d = e.grid().d;
    if (!in_phase_iii_prime(g.alpha, g.beta, d)) {
        rep.status = "skipped";
        rep.reason = "out of phase: " + to_string(classify_phase(g.alpha, g.beta, d));
        return rep;
    }
    require(e.spec().k0.is_zero(), "qv_lln_test uses the grid normalisation, which assumes K0 = 0");
    if (mode == QvMode::Convolution) require(filt != nullptr, "convolution mode needs a mollifier filter");
    if (mode == QvMode::Martingale) filt = nullptr;

    const auto& sch = e.schedule();
    const std::size_t L = sch.layers();
    rep.t_max = sch.t_max();
    if (mode == QvMode::Martingale) {
        rep.norm = v_bar_lattice(e, L, g.abs_sq());
        rep.norm_continuum = v_bar(rep.t_max, e.spec().kappa, g.abs_sq(), d).value;
    } else {
        rep.eps = filt->eps();
        rep.norm = v_eps_lattice(e, *filt, g.abs_sq());
        rep.norm_continuum = v_eps(rep.eps, filt->mollifier(), g.abs_sq()).value;
    }
    rep.b_times = opt.b_times.empty() ? std::vector<double>{rep.t_max} : opt.b_times;
    std::vector<std::size_t> b_idx;
    for (double t : rep.b_times) b_idx.push_back(sch.index_of(t));

    const auto diag = diag_profile(e, filt);
    const auto ld = l_diagonal(e);
    const double n2 = rep.norm * rep.norm;
    std::vector<std::vector<double>> shares(b_idx.size());
    double realised = 0.0, comp = 0.0;
    // Walkers are advanced in batches that fit the memory budget; each batch rebuilds the layer weights.
    const std::size_t per_walker = 48 * e.generation_grid().size();
    const std::size_t batch = std::clamp<std::size_t>(opt.walker_memory_bytes / per_walker, 1, e.replicas());
    for (std::size_t r0 = 0; r0 < e.replicas(); r0 += batch) {
        const std::size_t r1 = std::min(e.replicas(), r0 + batch);
        std::vector<std::vector<double>> finals;
        const auto paths = chaos_paths_batched(e, r0, r1, g, f, filt, diag, opt.form, &finals);
        for (std::size_t j = 0; j < paths.size(); ++j) {
            const auto& p = paths[j];
            const double br = p.bracket(L, g, omega);
            rep.normalised_bracket.push_back(n2 * br);
            rep.intensity.push_back(
                intensity_functional(finals[j], diag[L], g.alpha, ld, g.abs_sq(), f, e.grid().cell(), d));
            realised += p.sum_sq_increments(L, omega);
            comp += br;
            for (std::size_t k = 0; k < b_idx.size(); ++k) {
                const double num =
                    std::abs(std::real(std::exp(cplx(0.0, -2.0 * omega)) * g.gamma_sq() * p.int_B(b_idx[k])));
                shares[k].push_back(num / (g.abs_sq() * p.int_A(b_idx[k])));
            }
        }
    }
    for (auto& s : shares) rep.b_share.push_back(stats::mean(s));
    rep.correlation = stats::pearson(rep.normalised_bracket, rep.intensity);
    const double mz = stats::mean(rep.intensity);
    rep.mean_ratio = stats::mean(rep.normalised_bracket) / mz;
    // delta-method stderr of a ratio of means
    std::vector<double> lin(rep.intensity.size());
    for (std::size_t r = 0; r < lin.size(); ++r) lin[r] = (rep.normalised_bracket[r] - rep.mean_ratio * rep.intensity[r]) / mz;
    rep.mean_ratio_stderr = stats::stderr_of_mean(lin);
    rep.realised_over_compensator = realised / comp;
    rep.status = "ok";
    rep.pass = rep.correlation >= opt.min_correlation && rep.mean_ratio >= opt.ratio_lo && rep.mean_ratio <= opt.ratio_hi;
    return rep;
}

// ---------------------------------------------------------------------------
// Fourier-side tightness diagnostics

/// Mhat(xi) = h^d sum_x G(x) e^{-i xi . x} at xi = 2 pi k / side, FFT ordering, after
/// modulating by e^{-i a . x} with a = shift (so the result is Mhat(xi + a)).
inline std::vector<cplx> chaos_transform(const Grid& g, std::vector<cplx> G, const std::vector<double>& shift = {}) {
    require(G.size() == g.size(), "field size does not match the grid");
    if (!shift.empty()) {
        require(static_cast<int>(shift.size()) == g.d, "shift dimension mismatch");
        for (std::size_t i = 0; i < G.size(); ++i) {
            const Point x = g.point(i);
            double ph = 0.0;
            for (int c = 0; c < g.d; ++c) ph += shift[c] * x[c];
            G[i] *= std::exp(cplx(0.0, -ph));
        }
    }
    fft_c2c(g.shape(), G.data(), -1);
    for (auto& v : G) v *= g.cell();
    return G;
}

/// |xi|^2 for each FFT index of the grid.
inline std::vector<double> frequency_sq(const Grid& g) {
    std::vector<double> out(g.size());
    const double w = 2.0 * std::numbers::pi / g.side;
    const std::size_t n = g.n;
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::size_t rem = i;
        double s = 0.0;
        for (int c = 0; c < g.d; ++c) {
            const std::size_t k = rem % n;
            rem /= n;
            const double kk = k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
            s += (w * kk) * (w * kk);
        }
        out[i] = s;
    }
    return out;
}

inline double frequency_cell(const Grid& g) { return std::pow(2.0 * std::numbers::pi / g.side, g.d); }

inline double hminus_norm_sq(const Grid& g, const std::vector<cplx>& Mhat, double u) {
    if (!(u > 0.5 * g.d)) throw DomainError("Sobolev exponent u must exceed d/2");
    const auto xi2 = frequency_sq(g);
    std::vector<double> t(Mhat.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::pow(1.0 + xi2[i], -u) * std::norm(Mhat[i]);
    return pairwise_sum(t) * frequency_cell(g);
}

struct SobolevProfile {
    double u = 0.0;
    int d = 1;
    std::vector<double> eps;
    std::vector<double> v;
    std::vector<double> norm_sq;             // E[v^2 ||M||^2_{H^-u}] per eps
    std::vector<std::vector<double>> moment; // E[v^2 |Mhat(xi)|^2] per eps, FFT ordering
    std::vector<double> moment_sup;          // sup over xi per eps
    std::vector<double> a;                   // translation offsets
    std::vector<std::vector<double>> increment_ratio;  // [eps][a] sup_xi E[v^2 |Mhat(xi+a) - Mhat(xi)|^2] / |a|^2
    std::vector<double> tail_radius;
    std::vector<std::vector<double>> tail_mass;  // [eps][radius]

    double moment_spread() const {
        const auto [lo, hi] = std::minmax_element(moment_sup.begin(), moment_sup.end());
        return *hi / *lo;
    }

    nlohmann::json to_json() const {
        return {{"u", u},
                {"d", d},
                {"eps", eps},
                {"v", v},
                {"norm_sq", norm_sq},
                {"moment_sup", moment_sup},
                {"moment_spread", moment_spread()},
                {"a", a},
                {"increment_ratio", increment_ratio},
                {"tail_radius", tail_radius},
                {"tail_mass", tail_mass}};
    }

    /// xi, |xi| and one moment column per eps (d = 1 writes the nonnegative frequencies).
    void write_csv(const std::string& path, const Grid& g) const {
        std::ofstream os(path);
        if (!os) throw Error("cannot write " + path);
        os.precision(12);
        os << "index,abs_xi";
        for (double e : eps) os << ",moment_eps_" << e;
        os << '\n';
        const auto xi2 = frequency_sq(g);
        const std::size_t rows = g.d == 1 ? g.n / 2 + 1 : g.size();
        for (std::size_t i = 0; i < rows; ++i) {
            os << i << ',' << std::sqrt(xi2[i]);
            for (const auto& m : moment) os << ',' << m[i];
            os << '\n';
        }
    }
};

struct SobolevOptions {
    double u = 0.0;                          // defaults to d/2 + 0.25
    std::vector<double> a_fractions{1.0, 0.5, 0.25};  // offsets in units of 2 pi / side along axis 0
    std::vector<double> tail_radius;         // defaults to a geometric set up to the Nyquist frequency
    bool lattice_normalisation = true;
};

/// Fourier moments, H^{-u} norms, translation increments and tail masses of v M_eps(rho .).
inline SobolevProfile sobolev_diagnostics(const FieldEnsemble& e, ComplexParam g, const TestFunction& rho,
                                          const Mollifier& m, std::vector<double> eps_ladder,
                                          const SobolevOptions& opt = {}) {
    const Grid& grid = e.grid();
    SobolevProfile out;
    out.d = grid.d;
    out.u = opt.u > 0.0 ? opt.u : 0.5 * grid.d + 0.25;
    if (!(out.u > 0.5 * grid.d)) throw DomainError("Sobolev exponent u must exceed d/2");
    require(e.spec().k0.is_stationary(), "sobolev_diagnostics expects a stationary K0");
    std::sort(eps_ladder.begin(), eps_ladder.end(), std::greater<>());
    rho.check_support(grid, eps_ladder.front());
    out.eps = eps_ladder;
    const double w = 2.0 * std::numbers::pi / grid.side;
    for (double fr : opt.a_fractions) out.a.push_back(fr * w);
    if (opt.tail_radius.empty()) {
        for (double r = w; r < std::numbers::pi / grid.h(); r *= 4.0) out.tail_radius.push_back(r);
    } else {
        out.tail_radius = opt.tail_radius;
    }

    const std::size_t L = e.schedule().layers();
    const std::size_t E = eps_ladder.size(), A = out.a.size(), T = out.tail_radius.size();
    std::vector<MollifierFilter> filters;
    std::vector<std::vector<double>> kd;
    for (double eps : eps_ladder) {
        filters.emplace_back(grid, m, eps);
        kd.push_back({e.mollified_variance(L, filters.back())});
        out.v.push_back(opt.lattice_normalisation && e.spec().k0.is_zero() ? v_eps_lattice(e, filters.back(), g.abs_sq())
                                                                           : v_eps(eps, m, g.abs_sq()).value);
    }
    const auto xi2 = frequency_sq(grid);
    const double fcell = frequency_cell(grid);
    std::vector<double> weight(xi2.size());
    for (std::size_t i = 0; i < xi2.size(); ++i) weight[i] = std::pow(1.0 + xi2[i], -out.u);

    out.moment.assign(E, std::vector<double>(grid.size(), 0.0));
    std::vector<std::vector<std::vector<double>>> inc(E, std::vector<std::vector<double>>(A, std::vector<double>(grid.size(), 0.0)));
    out.norm_sq.assign(E, 0.0);
    out.tail_mass.assign(E, std::vector<double>(T, 0.0));
    const double R = static_cast<double>(e.replicas());
    for (std::size_t r = 0; r < e.replicas(); ++r) {
        auto walker = e.walker(r);
        walker.run_to(L);
        for (std::size_t k = 0; k < E; ++k) {
            const auto x = walker.mollified(filters[k]);
            const auto G = gmc_density(x, kd[k], g, rho);
            const auto Mh = chaos_transform(grid, G);
            const double v2 = out.v[k] * out.v[k];
            for (std::size_t i = 0; i < Mh.size(); ++i) out.moment[k][i] += v2 * std::norm(Mh[i]) / R;
            std::vector<double> t(Mh.size());
            for (std::size_t i = 0; i < Mh.size(); ++i) t[i] = weight[i] * std::norm(Mh[i]);
            out.norm_sq[k] += v2 * pairwise_sum(t) * fcell / R;
            for (std::size_t j = 0; j < T; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < Mh.size(); ++i) {
                    if (xi2[i] > out.tail_radius[j] * out.tail_radius[j]) s += t[i];
                }
                out.tail_mass[k][j] += v2 * s * fcell / R;
            }
            for (std::size_t ai = 0; ai < A; ++ai) {
                std::vector<double> shift(grid.d, 0.0);
                shift[0] = out.a[ai];
                const auto Ms = chaos_transform(grid, G, shift);
                for (std::size_t i = 0; i < Ms.size(); ++i) inc[k][ai][i] += v2 * std::norm(Ms[i] - Mh[i]) / R;
            }
        }
    }
    for (std::size_t k = 0; k < E; ++k) {
        out.moment_sup.push_back(*std::max_element(out.moment[k].begin(), out.moment[k].end()));
        std::vector<double> row;
        for (std::size_t ai = 0; ai < A; ++ai) {
            row.push_back(*std::max_element(inc[k][ai].begin(), inc[k][ai].end()) / (out.a[ai] * out.a[ai]));
        }
        out.increment_ratio.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// energy-distance two-sample test

struct EnergyTest {
    double statistic = 0.0;
    double p_value = 0.0;
    std::size_t permutations = 0;

    nlohmann::json to_json() const {
        return {{"statistic", statistic}, {"p_value", p_value}, {"permutations", permutations}};
    }
};

/// Permutation energy-distance test of equal laws for the rows of X and Y.
inline EnergyTest energy_distance_test(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                       std::size_t permutations = 199, std::uint64_t seed = 0) {
    require(X.cols() == Y.cols(), "samples differ in dimension");
    const std::size_t n1 = X.rows(), n2 = Y.rows(), n = n1 + n2;
    require(n1 >= 2 && n2 >= 2, "energy test needs at least two rows per sample");
    Eigen::MatrixXd Z(n, X.cols());
    Z << X, Y;
    // Pairwise distances in single precision keep the n x n table within memory at n = 10^4.
    std::vector<float> D(n * n);
    const Eigen::VectorXd sq = Z.rowwise().squaredNorm();
    for (std::size_t i = 0; i < n; ++i) {
        D[i * n + i] = 0.0f;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d2 = sq[i] + sq[j] - 2.0 * Z.row(i).dot(Z.row(j));
            const auto v = static_cast<float>(std::sqrt(std::max(0.0, d2)));
            D[i * n + j] = v;
            D[j * n + i] = v;
        }
    }
    std::vector<double> rowsum(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += D[i * n + j];
        rowsum[i] = s;
        total += s;
    }
    // With S11, S22 the within-group sums, S12 = (total - S11 - S22) / 2.
    auto statistic = [&](const std::vector<std::uint8_t>& lab) {
        double s11 = 0.0, s22 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const float* row = &D[i * n];
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (lab[j] == lab[i]) s += row[j];
            }
            (lab[i] == 0 ? s11 : s22) += s;
        }
        const double s12 = 0.5 * (total - s11 - s22);
        const double a = static_cast<double>(n1), b = static_cast<double>(n2);
        const double e = 2.0 * s12 / (a * b) - s11 / (a * a) - s22 / (b * b);
        return a * b / (a + b) * e;
    };
    std::vector<std::uint8_t> lab(n, 0);
    for (std::size_t i = n1; i < n; ++i) lab[i] = 1;
    EnergyTest out;
    out.statistic = statistic(lab);
    out.permutations = permutations;
    std::size_t exceed = 0;
    std::vector<std::size_t> perm(n);
    for (std::size_t b = 0; b < permutations; ++b) {
        std::iota(perm.begin(), perm.end(), 0);
        CounterStream cs(seed, static_cast<std::uint32_t>(b), 0, StreamTag::Permutation);
        std::vector<std::uint64_t> bits(n);
        cs.fill_bits(bits);
        for (std::size_t i = n - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>((static_cast<unsigned __int128>(bits[i]) * (i + 1)) >> 64);
            std::swap(perm[i], perm[j]);
        }
        std::vector<std::uint8_t> pl(n);
        for (std::size_t i = 0; i < n; ++i) pl[perm[i]] = lab[i];
        if (statistic(pl) >= out.statistic) ++exceed;
    }
    out.p_value = static_cast<double>(exceed + 1) / static_cast<double>(permutations + 1);
    return out;
}

}  // namespace gmclab
