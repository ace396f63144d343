#pragma once
// Drivers shared by the gmclab tool and the acceptance binary: the result record,
// one runner per subcommand and one per acceptance criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gmclab/analysis.hpp"
#include "gmclab/chaos.hpp"
#include "gmclab/config.hpp"
#include "gmclab/decomp.hpp"
#include "gmclab/io.hpp"
#include "gmclab/kernels.hpp"
#include "gmclab/scaling.hpp"
#include "gmclab/synth.hpp"

#ifndef GMCLAB_BUILD_ID
#define GMCLAB_BUILD_ID "unknown"
#endif

namespace gmclab {

namespace fs = std::filesystem;

inline std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

inline std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json environment_metadata() {
    return {{"generator", generator_algorithm()}, {"build_id", GMCLAB_BUILD_ID}, {"compiler", __VERSION__}};
}

// ---------------------------------------------------------------------------
// result record

/// Everything a subcommand writes to <out>/<subcommand>.json.  Wall-clock data live
/// under "timestamps" only, so the rest is a function of (config, overrides, seed, build).
struct ResultRecord {
    std::string subcommand;
    std::string config_hash;
    std::string config_text;
    json config_json;
    json overrides = json::object();
    json constants = json::object();
    json reports = json::object();
    json criteria = json::object();  // name -> pass
    json timestamps = json::object();
    fs::path output_dir;  // not serialised

    bool pass() const {
        for (const auto& [k, v] : criteria.items())
            if (!v.get<bool>()) return false;
        return true;
    }

    json to_json() const {
        return {{"subcommand", subcommand},
                {"config_hash", config_hash},
                {"config", config_text},
                {"config_parsed", config_json},
                {"overrides", overrides},
                {"constants", constants},
                {"reports", reports},
                {"criteria", criteria},
                {"pass", pass()},
                {"environment", environment_metadata()},
                {"timestamps", timestamps}};
    }

    /// The record without wall-clock fields.
    json numeric_payload() const {
        auto j = to_json();
        j.erase("timestamps");
        return j;
    }
};

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// constant breakdowns

/// j_kappa, L(x,x), and per gamma the phase, v(eps) over the ladder, vbar(t_max) and the
/// a-limits.  `full` adds the finite-t and convolution chain values (slower).
inline json constants_json(const ExperimentConfig& c, bool full = false) {
    const auto& k = c.kernel.kappa;
    const int d = c.kernel.d;
    const double jk = j_kappa(k);
    json out{{"kernel", to_json(c.kernel)},
             {"mollifier", to_json(c.mollifier)},
             {"j_kappa", jk},
             {"L_diag", L_diag(c.kernel, Point{0.5 * c.grid.side, 0.5 * c.grid.side})}};
    const double t_max = c.schedule().t_max();
    json per = json::array();
    for (const auto& g : c.gamma) {
        const double a = g.abs_sq();
        json row{{"alpha", g.alpha}, {"beta", g.beta}, {"abs_sq", a}, {"phase", to_string(classify_phase(g.alpha, g.beta, d))}};
        if (a < d * (1.0 - kPhaseTol)) {
            row["reason"] = "|gamma|^2 < d: no white-noise normalisation";
            per.push_back(row);
            continue;
        }
        json ve = json::array();
        for (double e : c.eps) {
            auto v = v_eps(e, c.mollifier, a).to_json();
            v["eps"] = e;
            ve.push_back(v);
        }
        row["v_eps"] = ve;
        auto vb = v_bar(t_max, k, a, d).to_json();
        vb["t"] = t_max;
        row["v_bar"] = vb;
        row["limit_target"] = 2.0 * std::exp(-a * jk);
        if (a > d * (1.0 + kPhaseTol)) {
            row["martingale_limit_value"] = martingale_limit_value(k, a, d);
            if (full) row["martingale_limit_check"] = {{"t", t_max}, {"value", martingale_limit_check(t_max, k, a, d)}};
        }
        if (full && d == 1 && c.kernel.k0.is_zero()) {
            row["convolution_limit_check"] = {{"eps", c.eps.back()},
                                              {"value", convolution_limit_check(c.eps.back(), c.kernel, c.mollifier, a)}};
        }
        per.push_back(row);
    }
    out["gamma"] = per;
    return out;
}

// ---------------------------------------------------------------------------
// CSV helpers for reports without their own writer

inline void write_stable_limit_csv(const StableLimitReport& rep, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os.precision(17);
    os << "eps,measure,xi,lhs_re,lhs_im,rhs_re,rhs_im,diff_abs,diff_stderr,companion_diff_abs\n";
    for (const auto& lv : rep.levels) {
        for (std::size_t j = 0; j < lv.by_measure.size(); ++j) {
            const auto& p = lv.by_measure[j];
            const auto& q = lv.companion[j];
            for (std::size_t k = 0; k < lv.xi.size(); ++k) {
                os << lv.eps << ',' << j << ',' << lv.xi[k] << ',' << p.lhs.phi_hat[k].real() << ','
                   << p.lhs.phi_hat[k].imag() << ',' << p.rhs.phi_hat[k].real() << ',' << p.rhs.phi_hat[k].imag()
                   << ',' << std::abs(p.diff.phi_hat[k]) << ',' << p.diff.stderr[k] << ','
                   << std::abs(q.diff.phi_hat[k]) << '\n';
            }
        }
    }
}

/// Bootstrap standard deviation of a statistic of paired replica samples.
inline double bootstrap_stderr(const std::vector<double>& x, const std::vector<double>& y,
                               const std::function<double(const std::vector<double>&, const std::vector<double>&)>& stat,
                               std::uint64_t seed, std::size_t B = kBootstrapResamples) {
    std::vector<double> vals;
    std::vector<double> xb(x.size()), yb(y.size());
    for (std::size_t b = 0; b < B; ++b) {
        const auto idx = bootstrap_indices(x.size(), seed, static_cast<std::uint32_t>(b));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            xb[i] = x[idx[i]];
            yb[i] = y[idx[i]];
        }
        vals.push_back(stat(xb, yb));
    }
    return std::sqrt(stats::variance(vals));
}

// ---------------------------------------------------------------------------
// acceptance criteria

struct CriterionResult {
    std::string id;
    std::string title;
    bool enabled = true;
    bool pass = false;
    std::string summary;
    json details = json::object();
    double seconds = 0.0;
};

inline CriterionResult criterion(std::string id, std::string title) {
    CriterionResult r;
    r.id = std::move(id);
    r.title = std::move(title);
    return r;
}

/// Problem sizes of the acceptance suite.  "full" is the documented suite; "smoke" runs
/// the same code paths at toy sizes and its verdicts carry no statistical weight.
struct AcceptanceProfile {
    std::string name = "full";
    int ac1_n = 4096;
    std::size_t ac1_R = 2000, ac1_pairs = 50;
    double ac1_eps_cells = 32.0;
    int ac1_c_lo = 4, ac1_c_hi = 12;
    int ladder_n = 1 << 14;
    int ladder_lo = 4, ladder_hi = 9;
    std::size_t ac2_R = 2000, ac3_R = 2000, ac6_R = 500;
    // the martingale form needs a grid resolving e^{-t_max}: 2^19 sites on a side of 2.5
    int ac4_mart_n = 1 << 19;
    double ac4_mart_side = 2.5;
    double ac4_t_max = 12.0, ac4_dt = 1.0 / 12.0;
    std::size_t ac4_mart_R = 240;
    int ac4_conv_n = 1 << 14;
    double ac4_conv_eps = 3.0 / 512.0;
    std::size_t ac4_conv_R = 2000;
    int ac5_n = 1 << 19;
    double ac5_side = 2.5;
    std::size_t ac5_R = 48;
    std::vector<double> ac5_times{6.0, 9.0, 12.0};
    std::size_t ac8_points = 512;
    int ac9_n = 4096;
    std::size_t ac9_R = 5000, ac9_points = 16, ac9_perms = 199;
    double ac9_eps_cells = 64.0;
    int ac10_n = 4096;
    int ac10_ladder_hi = 6;
    std::size_t ac10_R3 = 1000, ac10_R4 = 500;

    static AcceptanceProfile full() { return {}; }

    static AcceptanceProfile smoke() {
        AcceptanceProfile p;
        p.name = "smoke";
        p.ac1_n = 1024;
        p.ac1_R = 100;
        p.ac1_pairs = 20;
        p.ac1_eps_cells = 8.0;
        p.ac1_c_hi = 7;
        p.ladder_n = 1024;
        p.ladder_hi = 7;
        p.ac2_R = p.ac3_R = p.ac6_R = 100;
        p.ac4_mart_n = 1024;
        p.ac4_mart_side = 3.0;
        p.ac4_t_max = 5.5;
        p.ac4_mart_R = 100;
        p.ac4_conv_n = 1024;
        p.ac4_conv_eps = 3.0 / 64.0;
        p.ac4_conv_R = 100;
        p.ac5_n = 1024;
        p.ac5_side = 3.0;
        p.ac5_R = 20;
        p.ac5_times = {3.0, 4.0, 5.5};
        p.ac8_points = 64;
        p.ac9_n = 1024;
        p.ac9_R = 200;
        p.ac9_eps_cells = 16.0;
        p.ac9_perms = 49;
        p.ac10_n = 1024;
        p.ac10_ladder_hi = 5;
        p.ac10_R3 = 100;
        p.ac10_R4 = 100;
        return p;
    }

    static AcceptanceProfile named(const std::string& n) {
        if (n == "full") return full();
        if (n == "smoke") return smoke();
        throw ConfigError("unknown acceptance profile '" + n + "'");
    }
};

namespace accept {

// gamma = 0.5 + 1.3229i (|gamma|^2 = 2) and the circle point 0.5 + 0.866i (|gamma|^2 = 1), d = 1
inline ComplexParam strict_gamma() { return {0.5, std::sqrt(1.75)}; }
inline ComplexParam circle_gamma() { return {0.5, std::sqrt(0.75)}; }
constexpr double kOmega = 0.4;

inline std::vector<double> ladder(double side, int lo, int hi) {
    std::vector<double> e;
    for (int k = lo; k <= hi; ++k) e.push_back(side * std::ldexp(1.0, -k));
    return e;
}

inline std::vector<DiscreteMeasure> measures() {
    return {DiscreteMeasure{{Point{1.5, 0.0}}, {1.0}},
            DiscreteMeasure{{Point{1.25, 0.0}, Point{1.75, 0.0}}, {0.6, -0.4}}};
}

inline std::uint64_t seed_for(std::uint64_t base, int criterion) {
    return base + 1000003ull * static_cast<std::uint64_t>(criterion);
}

inline double max_over_min(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
}

}  // namespace accept

/// AC-1: empirical covariance of X_eps against K_eps on sampled site pairs, and a
/// uniform constant in |K_eps - log(1/(r v eps))| across an eps ladder.
inline CriterionResult ac1_kernel_fidelity(const AcceptanceProfile& p, std::uint64_t seed, const fs::path* out) {
    CriterionResult res = criterion("AC-1", "kernel fidelity");
    const KernelSpec spec;
    const Mollifier m = Mollifier::standard_bump(1);
    const Grid g = Grid::make(1, p.ac1_n, 3.0);
    const auto sched = LayerSchedule::for_grid(g);
    FieldEnsemble e(spec, g, sched, p.ac1_R, seed);
    const double eps = p.ac1_eps_cells * g.h();
    const MollifierFilter filt(g, m, eps);

    // A few variance pairs, the rest log-uniform in distance between h and 1.4.
    CounterStream cs(seed, 0, 0, StreamTag::Sampling);
    std::vector<double> u(2 * p.ac1_pairs);
    cs.fill_uniform(u);
    std::vector<std::size_t> site(p.ac1_pairs), lag(p.ac1_pairs);
    for (std::size_t q = 0; q < p.ac1_pairs; ++q) {
        site[q] = static_cast<std::size_t>(u[2 * q] * g.n) % g.n;
        if (q < 5) {
            lag[q] = 0;
        } else {
            const double r = std::exp(std::log(g.h()) + u[2 * q + 1] * (std::log(1.4) - std::log(g.h())));
            lag[q] = static_cast<std::size_t>(std::lround(r / g.h()));
        }
    }
    std::vector<std::vector<double>> prod(p.ac1_pairs, std::vector<double>(p.ac1_R));
    for (std::size_t r = 0; r < p.ac1_R; ++r) {
        auto w = e.walker(r);
        w.run_to(sched.layers());
        const auto x = w.mollified(filt);
        for (std::size_t q = 0; q < p.ac1_pairs; ++q) prod[q][r] = x[site[q]] * x[(site[q] + lag[q]) % g.n];
    }
    const Point o{1.0, 0.0};
    double max_z = 0.0;
    json rows = json::array();
    for (std::size_t q = 0; q < p.ac1_pairs; ++q) {
        const double dist_q = lag[q] * g.h();
        const double emp = stats::mean(prod[q]);
        const double se = stats::stderr_of_mean(prod[q]);
        const double K = kernel_K_eps(spec, m, o, Point{o[0] + dist_q, 0.0}, eps, sched.t_max());
        const double z = std::abs(emp - K) / se;
        max_z = std::max(max_z, z);
        rows.push_back({{"r", dist_q}, {"empirical", emp}, {"stderr", se}, {"K_eps", K}, {"z", z}});
    }
    std::vector<double> C;
    json cl = json::array();
    for (double ek : accept::ladder(3.0, p.ac1_c_lo, p.ac1_c_hi)) {
        double c = 0.0;
        for (std::size_t q = 0; q < p.ac1_pairs; ++q) {
            const double r = lag[q] * g.h();
            c = std::max(c, std::abs(kernel_K_eps(spec, m, o, Point{o[0] + r, 0.0}, ek) - std::log(1.0 / std::max(r, ek))));
        }
        C.push_back(c);
        cl.push_back({{"eps", ek}, {"C", c}});
    }
    // A log-divergent discrepancy would grow with slope 1 in log(1/eps); a uniform C levels off.
    const std::size_t half = C.size() / 2;
    std::vector<double> lx, ly;
    for (std::size_t k = half; k < C.size(); ++k) {
        lx.push_back(std::log(1.0 / cl[k]["eps"].get<double>()));
        ly.push_back(C[k]);
    }
    const double mx = stats::mean(lx), my = stats::mean(ly);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    const double c_slope = sxy / sxx;
    const double c_fit = *std::max_element(C.begin(), C.end());
    const bool cov_ok = max_z <= 3.0;
    const bool c_ok = c_slope <= 0.1;
    res.pass = cov_ok && c_ok;
    res.details = {{"eps", eps}, {"replicas", p.ac1_R}, {"max_z", max_z}, {"pairs", rows}, {"C_ladder", cl},
                   {"C_fitted", c_fit}, {"C_slope_fine_half", c_slope}, {"covariance_pass", cov_ok},
                   {"uniform_C_pass", c_ok}};
    res.summary = "max |emp - K_eps| / se = " + fmt("%.2f", max_z) + " over " + std::to_string(p.ac1_pairs) +
                  " pairs (<= 3); fitted C = " + fmt("%.3f", c_fit) + ", slope of C in log(1/eps) over the finer half = " +
                  fmt("%.4f", c_slope) + " (<= 0.1)";
    if (out) {
        std::ofstream os(*out / "ac1_pairs.csv");
        os.precision(17);
        os << "r,empirical,stderr,K_eps,z\n";
        for (const auto& r : rows) os << r["r"] << ',' << r["empirical"] << ',' << r["stderr"] << ',' << r["K_eps"] << ',' << r["z"] << '\n';
    }
    return res;
}

/// AC-2: second-moment exponent for |gamma|^2 = 2 and the log-linear circle case.
inline CriterionResult ac2_second_moment(const AcceptanceProfile& p, std::uint64_t seed, const fs::path* out) {
    CriterionResult res = criterion("AC-2", "second-moment scaling");
    const Grid g = Grid::make(1, p.ladder_n, 3.0);
    FieldEnsemble e(KernelSpec{}, g, LayerSchedule::for_grid(g), p.ac2_R, seed);
    const Mollifier m = Mollifier::standard_bump(1);
    const auto eps = accept::ladder(3.0, p.ladder_lo, p.ladder_hi);
    const auto f = TestFunction::bump(g, 1.0, 2.0);
    const auto strict = second_moment_fit(eps, second_moment_samples(e, accept::strict_gamma(), f, m, eps),
                                          MomentFitMode::LogLog, seed);
    const auto circle = second_moment_fit(eps, second_moment_samples(e, accept::circle_gamma(), f, m, eps),
                                          MomentFitMode::LogLinear, seed);
    const double target = 1.0 - accept::strict_gamma().abs_sq();
    const bool s_ok = std::abs(strict.slope - target) <= 0.15;
    const bool c_ok = circle.r2 >= 0.95;
    res.pass = s_ok && c_ok;
    res.details = {{"strict", strict.to_json()}, {"circle", circle.to_json()}, {"target_exponent", target},
                   {"strict_pass", s_ok}, {"circle_pass", c_ok}};
    res.summary = "exponent " + fmt("%.3f", strict.slope) + " (target " + fmt("%.0f", target) + " +- 0.15, CI [" +
                  fmt("%.3f", strict.ci_lo) + ", " + fmt("%.3f", strict.ci_hi) + "]); circle R^2 = " +
                  fmt("%.4f", circle.r2) + " (>= 0.95)";
    if (out) {
        strict.write_csv((*out / "ac2_strict.csv").string());
        circle.write_csv((*out / "ac2_circle.csv").string());
    }
    return res;
}

/// AC-3: joint CF test against the random-intensity white noise, with the sign companion.
inline CriterionResult ac3_stable_limit(const AcceptanceProfile& p, std::uint64_t seed, const fs::path* out) {
    CriterionResult res = criterion("AC-3", "stable-convergence CF test");
    const Grid g = Grid::make(1, p.ladder_n, 3.0);
    FieldEnsemble e(KernelSpec{}, g, LayerSchedule::for_grid(g), p.ac3_R, seed);
    StableLimitOptions opt;
    opt.boot_seed = seed;
    const auto rep = stable_limit_test(e, accept::strict_gamma(), TestFunction::bump(g, 1.0, 2.0), accept::kOmega,
                                       accept::measures(), Mollifier::standard_bump(1),
                                       accept::ladder(3.0, p.ladder_lo, p.ladder_hi), opt);
    const auto& fin = rep.levels.back();
    res.pass = rep.pass && rep.companion_worse;
    res.details = rep.to_json();
    res.summary = "finest eps " + fmt("%.5f", fin.eps) + ": max(|D| - 3 se - 0.05) = " + fmt("%.4f", fin.max_excess) +
                  " (<= 0); max |D| " + fmt("%.4f", fin.max_discrepancy) + " vs companion " +
                  fmt("%.4f", fin.companion_max_discrepancy) + " (companion must be worse)";
    if (out) write_stable_limit_csv(rep, *out / "ac3_cf.csv");
    return res;
}

/// AC-4: bracket law of large numbers in martingale and convolution form.
inline CriterionResult ac4_qv_lln(const AcceptanceProfile& p, std::uint64_t seed, const fs::path* out) {
    CriterionResult res = criterion("AC-4", "QV law of large numbers");
    const auto gam = accept::strict_gamma();
    const Grid gm = Grid::make(1, p.ac4_mart_n, p.ac4_mart_side);
    require(p.ac4_t_max <= std::log(1.0 / gm.h()), "AC-4 grid does not resolve e^{-t_max}");
    auto sm = LayerSchedule::uniform(p.ac4_t_max, p.ac4_dt);
    sm = sm.extended_to(std::log(1.0 / gm.h()));
    FieldEnsemble em(KernelSpec{}, gm, sm, p.ac4_mart_R, seed);
    const double mid = 0.5 * p.ac4_mart_side;
    const auto mart = qv_lln_test(em, gam, TestFunction::bump(gm, mid - 0.5, mid + 0.5), accept::kOmega,
                                  QvMode::Martingale);

    const Grid gc = Grid::make(1, p.ac4_conv_n, 3.0);
    FieldEnsemble ec(KernelSpec{}, gc, LayerSchedule::for_grid(gc), p.ac4_conv_R, seed + 1);
    const MollifierFilter filt(gc, Mollifier::standard_bump(1), p.ac4_conv_eps);
    const auto conv = qv_lln_test(ec, gam, TestFunction::bump(gc, 1.0, 2.0), accept::kOmega, QvMode::Convolution, &filt);

    res.pass = mart.pass && conv.pass;
    res.details = {{"martingale", mart.to_json()}, {"convolution", conv.to_json()}};
    res.details["martingale"]["grid"] = to_json(gm);
    res.details["martingale"]["replicas"] = p.ac4_mart_R;
    res.summary = "martingale t=" + fmt("%.2f", mart.t_max) + ": corr " + fmt("%.4f", mart.correlation) + ", ratio " +
                  fmt("%.4f", mart.mean_ratio) + "; convolution eps=" + fmt("%.5f", conv.eps) + ": corr " +
                  fmt("%.4f", conv.correlation) + ", ratio " + fmt("%.4f", conv.mean_ratio) +
                  " (corr >= 0.95, ratio in [0.85, 1.15])";
    if (out) {
        mart.write_csv((*out / "ac4_martingale.csv").string());
        conv.write_csv((*out / "ac4_convolution.csv").string());
    }
    return res;
}

/// AC-5: B-share of the bracket at t = 6, 9, 12 on a grid resolving e^{-12}.
inline CriterionResult ac5_b_negligibility(const AcceptanceProfile& p, std::uint64_t seed, const fs::path*) {
    CriterionResult res = criterion("AC-5", "B-negligibility");
    const Grid g = Grid::make(1, p.ac5_n, p.ac5_side);
    const double t_last = p.ac5_times.back();
    auto sched = LayerSchedule::uniform(t_last, 1.0 / 12.0).extended_to(std::log(1.0 / g.h()));
    FieldEnsemble e(KernelSpec{}, g, sched, p.ac5_R, seed);
    QvOptions opt;
    opt.b_times = p.ac5_times;
    const double lo = 0.5 * p.ac5_side - 0.5, hi = 0.5 * p.ac5_side + 0.5;
    const auto rep = qv_lln_test(e, accept::strict_gamma(), TestFunction::bump(g, lo, hi), accept::kOmega,
                                 QvMode::Martingale, nullptr, opt);
    bool decreasing = true;
    for (std::size_t k = 1; k < rep.b_share.size(); ++k) decreasing = decreasing && rep.b_share[k] < rep.b_share[k - 1];
    const bool small = rep.b_share.back() < 0.2;
    res.pass = decreasing && small;
    res.details = rep.to_json();
    res.details["grid"] = to_json(g);
    res.details["decreasing"] = decreasing;
    std::string shares;
    for (std::size_t k = 0; k < rep.b_share.size(); ++k) {
        shares += (k ? ", " : "") + fmt("%.4f", rep.b_share[k]) + " (t=" + fmt("%g", rep.b_times[k]) + ")";
    }
    res.summary = "B-share " + shares + "; final < 0.2 and decreasing";
    return res;
}

/// AC-6: Fourier second moments, translation increments and H^{-u} norms across the eps ladder.
inline CriterionResult ac6_tightness(const AcceptanceProfile& p, std::uint64_t seed, const fs::path* out) {
    CriterionResult res = criterion("AC-6", "tightness bounds");
    const Grid g = Grid::make(1, p.ladder_n, 3.0);
    FieldEnsemble e(KernelSpec{}, g, LayerSchedule::for_grid(g), p.ac6_R, seed);
    SobolevOptions opt;
    opt.u = 0.75;
    const auto prof = sobolev_diagnostics(e, accept::strict_gamma(), TestFunction::bump(g, 1.0, 2.0),
                                          Mollifier::standard_bump(1), accept::ladder(3.0, p.ladder_lo, p.ladder_hi), opt);
    // increment ratios: spread across eps at each a, and across the three a at each eps
    double inc_eps = 0.0, inc_a = 0.0;
    for (std::size_t j = 0; j < prof.a.size(); ++j) {
        std::vector<double> col;
        for (const auto& row : prof.increment_ratio) col.push_back(row[j]);
        inc_eps = std::max(inc_eps, accept::max_over_min(col));
    }
    for (const auto& row : prof.increment_ratio) inc_a = std::max(inc_a, accept::max_over_min(row));
    const double spread = prof.moment_spread();
    const double norm_spread = accept::max_over_min(prof.norm_sq);
    res.pass = spread <= 3.0 && inc_eps <= 3.0 && inc_a <= 3.0 && norm_spread <= 3.0;
    res.details = prof.to_json();
    res.details["increment_spread_over_eps"] = inc_eps;
    res.details["increment_spread_over_a"] = inc_a;
    res.details["norm_spread"] = norm_spread;
    res.summary = "max/min across eps: sup-moment " + fmt("%.3f", spread) + ", increment ratio " + fmt("%.3f", inc_eps) +
                  " (worst a), H^-0.75 norm " + fmt("%.3f", norm_spread) + "; increment ratio across a " +
                  fmt("%.3f", inc_a) + " (worst eps); each <= 3";
    if (out) prof.write_csv((*out / "ac6_moments.csv").string(), g);
    return res;
}

/// AC-7: deterministic normalisation constants and the two limit identities.
inline CriterionResult ac7_constants(const AcceptanceProfile&, std::uint64_t, const fs::path*) {
    CriterionResult res = criterion("AC-7", "normalization constants");
    const auto k = ScaleKernel::triangle();
    const double a = 2.0;
    const double integral = ell_kappa_exp_integral(k, 1, a);
    const double jk = j_kappa(k);
    const double target = 2.0 * std::exp(-a * jk);
    const double mart = martingale_limit_check(12.0, k, a, 1);
    const double conv = convolution_limit_check(3.0 / 512.0, KernelSpec{}, Mollifier::standard_bump(1), a);
    const double e1 = std::abs(integral - (std::exp(2.0) + 1.0));
    const double e2 = std::abs(jk - 1.0);
    const double e3 = std::abs(mart - target);
    const double e4 = std::abs(conv - target);
    res.pass = e1 <= 1e-6 && e2 <= 1e-9 && e3 <= 1e-2 && e4 <= 1e-2;
    res.details = {{"vbar_integral", integral}, {"vbar_integral_error", e1}, {"j_kappa", jk}, {"j_kappa_error", e2},
                   {"limit_target", target}, {"martingale_chain_t12", mart}, {"martingale_error", e3},
                   {"convolution_chain_eps", 3.0 / 512.0}, {"convolution_chain", conv}, {"convolution_error", e4}};
    res.summary = "|int - (e^2+1)| = " + fmt("%.2e", e1) + ", |j - 1| = " + fmt("%.2e", e2) + ", chain errors " +
                  fmt("%.2e", e3) + " (t=12), " + fmt("%.2e", e4) + " (eps=3/512)";
    return res;
}

/// AC-8: the K^delta construction and the t0 search on the shipped instance.
inline CriterionResult ac8_decomposition(const AcceptanceProfile& p, std::uint64_t seed, const fs::path*) {
    CriterionResult res = criterion("AC-8", "kernel decomposition");
    const auto K = LogKernel::from_spec(KernelSpec{});
    bool diag_exact = true;
    for (double delta : {1e-3, 0.1, 2.5}) diag_exact = diag_exact && build_K_delta(K, ScaleKernel::triangle(), delta, 2.0).delta_part(0.0) == delta;

    CounterStream cs(seed, 0, 0, StreamTag::Sampling);
    std::vector<double> u(p.ac8_points);
    cs.fill_uniform(u);
    std::vector<Point> pts;
    for (double v : u) pts.push_back(Point{3.0 * v, 0.0});
    const auto ver = verify_conditions(build_K_delta(K, ScaleKernel::triangle(), 1.0, 2.0), pts);

    json t0s = json::array();
    bool found = true;
    const auto syn = synthetic_instance();
    for (double delta : {0.5, 0.1, 0.01}) {
        const auto rep = find_t0(build_K_delta(syn, ScaleKernel::triangle(), delta, 2.0), line_points(256, 0.0, 3.0));
        found = found && rep.t0_found && *rep.t0_found <= 30.0;
        t0s.push_back({{"delta", delta}, {"t0", rep.t0_found ? json(*rep.t0_found) : json(nullptr)}, {"min_eig_ladder", rep.min_eig_ladder}});
    }
    res.pass = diag_exact && ver.delta_part_psd() && found;
    res.details = {{"diagonal_exact", diag_exact}, {"verify", ver.to_json()}, {"synthetic_t0", t0s}};
    std::string t0_text;
    for (const auto& r : t0s) t0_text += (t0_text.empty() ? "" : ", ") + (r["t0"].is_null() ? std::string("none") : fmt("%g", r["t0"].get<double>()));
    res.summary = std::string("Delta(x,x) = delta ") + (diag_exact ? "exact" : "NOT exact") + "; min eig / max eig = " +
                  fmt("%.2e", ver.min_eig_delta_part / ver.max_eig_delta_part) + " on " + std::to_string(pts.size()) +
                  " points; t0 = " + t0_text + " for delta = 0.5, 0.1, 0.01";
    return res;
}

/// AC-9: spectral synthesis against exact Cholesky samples at shared points.
inline CriterionResult ac9_oracle(const AcceptanceProfile& p, std::uint64_t seed, const fs::path*) {
    CriterionResult res = criterion("AC-9", "oracle equivalence");
    const KernelSpec spec;
    const Mollifier m = Mollifier::standard_bump(1);
    const Grid g = Grid::make(1, p.ac9_n, 3.0);
    const auto sched = LayerSchedule::for_grid(g);
    const double eps = p.ac9_eps_cells * g.h();
    // half the points a few eps apart, half spread over the unit scale
    std::vector<std::size_t> sites;
    const std::size_t half = p.ac9_points / 2;
    for (std::size_t k = 0; k < half; ++k) sites.push_back(g.snap(Point{1.0 + 0.5 * eps * k, 0.0}));
    for (std::size_t k = half; k < p.ac9_points; ++k) {
        sites.push_back(g.snap(Point{1.5 + 1.0 * (k - half) / std::max<std::size_t>(1, p.ac9_points - half), 0.0}));
    }
    std::vector<Point> pts;
    for (auto s : sites) pts.push_back(g.point(s));
    FieldEnsemble e(spec, g, sched, p.ac9_R, seed);
    const MollifierFilter filt(g, m, eps);
    Eigen::MatrixXd X(p.ac9_R, pts.size());
    for (std::size_t r = 0; r < p.ac9_R; ++r) {
        auto w = e.walker(r);
        w.run_to(sched.layers());
        const auto x = w.mollified(filt);
        for (std::size_t j = 0; j < sites.size(); ++j) X(r, j) = x[sites[j]];
    }
    const Eigen::MatrixXd Y = cholesky_oracle(spec, m, eps, pts, p.ac9_R, seed + 7);
    const auto t = energy_distance_test(X, Y, p.ac9_perms, seed);
    res.pass = t.p_value > 0.01;
    res.details = t.to_json();
    res.details["eps"] = eps;
    res.details["points"] = pts.size();
    res.details["replicas"] = p.ac9_R;
    res.summary = "energy statistic " + fmt("%.4g", t.statistic) + ", p = " + fmt("%.3f", t.p_value) + " (> 0.01) with " +
                  std::to_string(p.ac9_R) + " samples per method";
    return res;
}

/// AC-10: coupled runs with halved dt and halved h against the base run.
inline CriterionResult ac10_discretisation(const AcceptanceProfile& p, std::uint64_t seed, const fs::path*) {
    CriterionResult res = criterion("AC-10", "discretization robustness");
    const Grid g = Grid::make(1, p.ac10_n, 3.0);
    const auto gam = accept::strict_gamma();
    const auto f = TestFunction::bump(g, 1.0, 2.0);
    const Mollifier m = Mollifier::standard_bump(1);
    const auto eps = accept::ladder(3.0, p.ladder_lo, p.ac10_ladder_hi);
    const std::vector<std::pair<std::string, SynthOptions>> variants{
        {"half_dt", SynthOptions{2, 1}}, {"half_h", SynthOptions{1, 2}}};

    // stable-limit test: CF estimates at the finest eps on the base run's xi grid
    const auto s3 = LayerSchedule::for_grid(g);
    StableLimitOptions o3;
    o3.boot_seed = seed;
    const auto base3 = stable_limit_test(FieldEnsemble(KernelSpec{}, g, s3, p.ac10_R3, seed), gam, f, accept::kOmega,
                                         accept::measures(), m, eps, o3);
    o3.xi_fixed = base3.levels.back().xi;
    // martingale bracket test, stopped where the base grid still resolves the layers
    const auto s4 = LayerSchedule::uniform(std::log(1.0 / g.h()), p.ac4_dt);
    const auto base4 = qv_lln_test(FieldEnsemble(KernelSpec{}, g, s4, p.ac10_R4, seed + 1), gam, f, accept::kOmega,
                                   QvMode::Martingale);
    auto pearson = [](const std::vector<double>& x, const std::vector<double>& y) { return stats::pearson(x, y); };
    const double corr_se = bootstrap_stderr(base4.normalised_bracket, base4.intensity, pearson, seed);

    bool pass = true;
    json vj = json::object();
    double worst = 0.0;  // largest |change| / stderr
    for (const auto& [name, opt] : variants) {
        const auto v3 = stable_limit_test(FieldEnsemble(KernelSpec{}, g, s3, p.ac10_R3, seed, opt), gam, f,
                                          accept::kOmega, accept::measures(), m, eps, o3);
        const auto& b = base3.levels.back().by_measure[0];
        const auto& c = v3.levels.back().by_measure[0];
        json cf = json::array();
        for (std::size_t k = 0; k < b.lhs.xi.size(); ++k) {
            const double dl = std::abs(c.lhs.phi_hat[k] - b.lhs.phi_hat[k]) / b.lhs.stderr[k];
            const double dr = std::abs(c.rhs.phi_hat[k] - b.rhs.phi_hat[k]) / b.rhs.stderr[k];
            worst = std::max({worst, dl, dr});
            pass = pass && dl < 1.0 && dr < 1.0;
            cf.push_back({{"xi", b.lhs.xi[k]}, {"lhs_change_over_se", dl}, {"rhs_change_over_se", dr}});
        }
        const auto v4 = qv_lln_test(FieldEnsemble(KernelSpec{}, g, s4, p.ac10_R4, seed + 1, opt), gam, f,
                                    accept::kOmega, QvMode::Martingale);
        const double dratio = std::abs(v4.mean_ratio - base4.mean_ratio) / base4.mean_ratio_stderr;
        const double dcorr = std::abs(v4.correlation - base4.correlation) / corr_se;
        worst = std::max({worst, dratio, dcorr});
        pass = pass && dratio < 1.0 && dcorr < 1.0;
        vj[name] = {{"cf", cf},
                    {"mean_ratio", v4.mean_ratio},
                    {"mean_ratio_change_over_se", dratio},
                    {"correlation", v4.correlation},
                    {"correlation_change_over_se", dcorr}};
    }
    res.pass = pass;
    res.details = {{"base", {{"mean_ratio", base4.mean_ratio}, {"mean_ratio_stderr", base4.mean_ratio_stderr},
                             {"correlation", base4.correlation}, {"correlation_stderr", corr_se},
                             {"xi", o3.xi_fixed}}},
                   {"variants", vj},
                   {"max_change_over_stderr", worst}};
    res.summary = "largest change of a point estimate = " + fmt("%.3f", worst) +
                  " bootstrap stderr over halved dt and halved h (< 1)";
    return res;
}

using CriterionFn = CriterionResult (*)(const AcceptanceProfile&, std::uint64_t, const fs::path*);

inline const std::vector<std::pair<std::string, CriterionFn>>& criteria_table() {
    static const std::vector<std::pair<std::string, CriterionFn>> t{
        {"AC-1", ac1_kernel_fidelity}, {"AC-2", ac2_second_moment}, {"AC-3", ac3_stable_limit},
        {"AC-4", ac4_qv_lln},          {"AC-5", ac5_b_negligibility}, {"AC-6", ac6_tightness},
        {"AC-7", ac7_constants},       {"AC-8", ac8_decomposition},   {"AC-9", ac9_oracle},
        {"AC-10", ac10_discretisation}};
    return t;
}

/// Runs the enabled criteria in order.  `on_result` sees each result as soon as it is known.
/// A numerical error inside a criterion fails that criterion with the message attached.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceProfile& p, const std::map<std::string, bool>& enabled,
                                                   std::uint64_t seed, const fs::path* out,
                                                   const std::function<void(const CriterionResult&)>& on_result = {}) {
    std::vector<CriterionResult> results;
    int k = 0;
    for (const auto& [id, fn] : criteria_table()) {
        ++k;
        CriterionResult r;
        const auto it = enabled.find(id);
        if (it != enabled.end() && !it->second) {
            r.id = id;
            r.enabled = false;
            r.summary = "disabled";
        } else {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                r = fn(p, accept::seed_for(seed, k), out);
            } catch (const std::exception& ex) {
                r.id = id;
                r.pass = false;
                r.summary = std::string("error: ") + ex.what();
                r.details = {{"error", ex.what()}};
            }
            r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        if (on_result) on_result(r);
        results.push_back(std::move(r));
    }
    return results;
}

inline std::string verdict_line(const CriterionResult& r) {
    const char* v = !r.enabled ? "SKIP" : (r.pass ? "PASS" : "FAIL");
    return r.id + " " + v + "  " + r.title + (r.title.empty() ? "" : ": ") + r.summary;
}

// ---------------------------------------------------------------------------
// subcommands

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
    std::optional<std::string> out;
};

/// Output directory: --out, else the config's output_dir, else "gmclab_out/<subcommand>";
/// relative results sit under $GMCLAB_OUTPUT_ROOT when that is set.
inline fs::path resolve_output(const ExperimentConfig& c, const RunOverrides& o, const std::string& sub) {
    fs::path p = o.out ? fs::path(*o.out) : (!c.output_dir.empty() ? fs::path(c.output_dir) : fs::path("gmclab_out") / sub);
    if (p.is_relative()) {
        if (const char* root = std::getenv("GMCLAB_OUTPUT_ROOT"); root && *root) p = fs::path(root) / p;
    }
    fs::create_directories(p);
    return p;
}

inline ResultRecord start_record(const std::string& sub, const ExperimentConfig& c, const RunOverrides& o) {
    ResultRecord rec;
    rec.subcommand = sub;
    rec.config_hash = c.hash();
    rec.config_text = c.text;
    rec.config_json = c.json;
    if (o.seed) rec.overrides["seed"] = *o.seed;
    if (o.replicas) rec.overrides["replicas"] = *o.replicas;
    if (o.out) rec.overrides["out"] = *o.out;
    rec.timestamps["started"] = utc_now();
    return rec;
}

inline FieldEnsemble config_ensemble(const ExperimentConfig& c, const LayerSchedule& sched) {
    return FieldEnsemble(c.kernel, c.grid, sched, c.replicas, c.seed, c.synth);
}

inline void cmd_constants(const ExperimentConfig& c, ResultRecord& rec, const fs::path& out) {
    rec.constants = constants_json(c, true);
    const auto& k = c.kernel.kappa;
    std::ofstream os(out / "constants_kernel.csv");
    os.precision(17);
    os << "r,kappa,phi,ell_kappa,K_star\n";
    for (int i = 0; i <= 200; ++i) {
        const double r = 1.5 * i / 200.0;
        os << r << ',' << k(r) << ',' << (r < 1.0 ? k.phi(r) : 0.0) << ',' << ell_kappa(k, r) << ','
           << c.kernel.star(r) << '\n';
    }
    std::ofstream ts(out / "constants_scaling.csv");
    ts.precision(17);
    ts << "alpha,beta,abs_sq,phase,eps,v_eps,t_max,v_bar\n";
    for (const auto& row : rec.constants["gamma"]) {
        if (!row.contains("v_eps")) continue;
        for (const auto& v : row["v_eps"]) {
            ts << row["alpha"] << ',' << row["beta"] << ',' << row["abs_sq"] << ',' << row["phase"].get<std::string>() << ','
               << v["eps"] << ',' << v["value"] << ',' << row["v_bar"]["t"] << ',' << row["v_bar"]["value"] << '\n';
        }
    }
    rec.reports["j_kappa"] = j_kappa(k);
}

inline void cmd_synthesize(const ExperimentConfig& c, ResultRecord& rec, const fs::path& out) {
    rec.constants = constants_json(c);
    const auto sched = c.schedule();
    const auto e = config_ensemble(c, sched);
    std::optional<MollifierFilter> filt;
    if (c.synthesize_eps) filt.emplace(c.grid, c.mollifier, *c.synthesize_eps);
    const auto h = export_ensemble(e, (out / "ensemble").string(), filt ? &*filt : nullptr);
    const auto values = import_ensemble((out / "ensemble").string());
    std::ofstream os(out / "synthesize_replicas.csv");
    os.precision(17);
    os << "replica,mean,variance,min,max\n";
    for (std::size_t r = 0; r < values.size(); ++r) {
        const auto& v = values[r];
        os << r << ',' << stats::mean(v) << ',' << stats::variance(v) << ',' << *std::min_element(v.begin(), v.end())
           << ',' << *std::max_element(v.begin(), v.end()) << '\n';
    }
    rec.reports["ensemble"] = h.meta;
    const double expected = filt ? e.mollified_variance(sched.layers(), *filt) : e.variance(sched.layers());
    rec.reports["expected_site_variance"] = expected;
    rec.criteria["clipped_mass_within_limit"] = e.clipped_mass() <= c.synth.max_clipped_mass;
}

inline void cmd_limit_test(const ExperimentConfig& c, ResultRecord& rec, const fs::path& out) {
    rec.constants = constants_json(c);
    const auto e = config_ensemble(c, c.schedule());
    json reps = json::array();
    for (std::size_t k = 0; k < c.gamma.size(); ++k) {
        StableLimitOptions opt;
        opt.boot_seed = c.seed;
        const auto rep = stable_limit_test(e, c.gamma[k], c.f.build(c.grid), c.omega, c.measures, c.mollifier, c.eps, opt);
        auto j = rep.to_json();
        j["alpha"] = c.gamma[k].alpha;
        j["beta"] = c.gamma[k].beta;
        reps.push_back(j);
        if (rep.status == "ok") {
            write_stable_limit_csv(rep, out / ("limit_test_gamma" + std::to_string(k) + ".csv"));
            rec.criteria["gamma" + std::to_string(k) + "_cf"] = rep.pass;
            rec.criteria["gamma" + std::to_string(k) + "_companion_worse"] = rep.companion_worse;
        }
    }
    rec.reports["stable_limit"] = reps;
}

inline void cmd_qv_test(const ExperimentConfig& c, ResultRecord& rec, const fs::path& out) {
    rec.constants = constants_json(c);
    const auto e = config_ensemble(c, c.schedule());
    std::optional<MollifierFilter> filt;
    if (c.qv.mode == QvMode::Convolution) filt.emplace(c.grid, c.mollifier, c.qv.eps.value_or(c.eps.back()));
    QvOptions opt;
    opt.b_times = c.qv.b_times;
    json reps = json::array();
    for (std::size_t k = 0; k < c.gamma.size(); ++k) {
        const auto rep = qv_lln_test(e, c.gamma[k], c.f.build(c.grid), c.omega, c.qv.mode, filt ? &*filt : nullptr, opt);
        auto j = rep.to_json();
        j["alpha"] = c.gamma[k].alpha;
        j["beta"] = c.gamma[k].beta;
        reps.push_back(j);
        if (rep.status == "ok") {
            rep.write_csv((out / ("qv_gamma" + std::to_string(k) + ".csv")).string());
            rec.criteria["gamma" + std::to_string(k)] = rep.pass;
        }
    }
    rec.reports["qv"] = reps;
}

/// Exponent of E|M_eps|^2 over the eps ladder for each gamma of the scan, on one ensemble.
inline void cmd_scan_phase(const ExperimentConfig& c, ResultRecord& rec, const fs::path& out) {
    const auto gammas = c.scan_phase.gamma.empty() ? c.gamma : c.scan_phase.gamma;
    const auto e = config_ensemble(c, c.schedule());
    const auto f = c.f.build(c.grid);
    struct Row {
        ComplexParam g;
        MomentFit fit;
    };
    std::vector<Row> rows;
    for (const auto& g : gammas) {
        rows.push_back({g, second_moment_fit(c.eps, second_moment_samples(e, g, f, c.mollifier, c.eps), MomentFitMode::LogLog, c.seed)});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.g.abs_sq() < b.g.abs_sq(); });
    const int d = c.grid.d;
    std::ofstream os(out / "scan_phase.csv");
    os.precision(17);
    os << "alpha,beta,abs_sq,phase,exponent,ci_lo,ci_hi,r2,expected_exponent\n";
    json arr = json::array();
    bool monotone = true;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& [g, fit] = rows[k];
        const double expected = std::min(0.0, d - g.abs_sq());
        os << g.alpha << ',' << g.beta << ',' << g.abs_sq() << ',' << to_string(classify_phase(g.alpha, g.beta, d)) << ','
           << fit.slope << ',' << fit.ci_lo << ',' << fit.ci_hi << ',' << fit.r2 << ',' << expected << '\n';
        auto j = fit.to_json();
        j["alpha"] = g.alpha;
        j["beta"] = g.beta;
        j["abs_sq"] = g.abs_sq();
        j["expected_exponent"] = expected;
        arr.push_back(j);
        // nonincreasing in |gamma|^2 up to the two bootstrap half-widths
        if (k > 0 && fit.slope > rows[k - 1].fit.slope + fit.half_width() + rows[k - 1].fit.half_width()) monotone = false;
    }
    rec.reports["scan"] = arr;
    rec.criteria["exponent_monotone"] = monotone;
}

inline void cmd_tightness(const ExperimentConfig& c, ResultRecord& rec, const fs::path& out) {
    rec.constants = constants_json(c);
    const auto e = config_ensemble(c, c.schedule());
    SobolevOptions opt;
    opt.u = c.tightness.u;
    opt.a_fractions = c.tightness.a_fractions;
    const auto prof = sobolev_diagnostics(e, c.gamma.front(), c.rho.build(c.grid), c.mollifier, c.eps, opt);
    prof.write_csv((out / "tightness_moments.csv").string(), c.grid);
    std::vector<double> inc;
    for (const auto& row : prof.increment_ratio) inc.insert(inc.end(), row.begin(), row.end());
    auto j = prof.to_json();
    j["increment_spread"] = accept::max_over_min(inc);
    j["norm_spread"] = accept::max_over_min(prof.norm_sq);
    rec.reports["sobolev"] = j;
    rec.criteria["moment_spread_le_3"] = prof.moment_spread() <= 3.0;
    rec.criteria["increment_spread_le_3"] = j["increment_spread"].get<double>() <= 3.0;
    rec.criteria["norm_spread_le_3"] = j["norm_spread"].get<double>() <= 3.0;
}

inline void cmd_decompose(const ExperimentConfig& c, ResultRecord& rec, const fs::path& out) {
    require(c.kernel.d == 1 || c.decompose.instance == "star", "the synthetic instance is one-dimensional");
    const LogKernel K = c.decompose.instance == "synthetic" ? synthetic_instance() : LogKernel::from_spec(c.kernel);
    const auto& k0 = c.kernel.kappa;
    std::vector<Point> pts;
    if (c.kernel.d == 1) {
        pts = line_points(c.decompose.points, 0.0, c.grid.side);
    } else {
        const auto m = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(c.decompose.points))));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                pts.push_back(Point{c.grid.side * i / (m - 1.0), c.grid.side * j / (m - 1.0)});
    }
    std::ofstream os(out / "decompose_ladder.csv");
    os.precision(17);
    os << "delta,t0,min_eig_remainder\n";
    json arr = json::array();
    bool ok = true;
    for (double delta : c.decompose.delta) {
        const auto kd = build_K_delta(K, k0, delta, c.decompose.s);
        const auto rep = find_t0(kd, pts, c.decompose.t0_step, c.decompose.t0_max);
        for (std::size_t i = 0; i < rep.t0_ladder.size(); ++i) os << delta << ',' << rep.t0_ladder[i] << ',' << rep.min_eig_ladder[i] << '\n';
        auto j = rep.to_json();
        j["diagonal_exact"] = kd.delta_part(0.0) == delta;
        arr.push_back(j);
        ok = ok && rep.t0_found.has_value() && rep.delta_part_psd() && kd.delta_part(0.0) == delta;
    }
    rec.reports["instance"] = K.name();
    rec.reports["decomposition"] = arr;
    rec.criteria["decomposition"] = ok;
}

inline void cmd_accept(const ExperimentConfig& c, ResultRecord& rec, const fs::path& out,
                       const std::function<void(const CriterionResult&)>& on_result = {}) {
    const auto prof = AcceptanceProfile::named(c.acceptance.profile);
    const auto results = run_acceptance(prof, c.acceptance.enabled, c.seed, &out, on_result);
    std::ofstream os(out / "acceptance.csv");
    os << "criterion,enabled,pass,summary\n";
    json arr = json::array();
    for (const auto& r : results) {
        std::string s = r.summary;
        for (auto& ch : s)
            if (ch == '"') ch = '\'';
        os << r.id << ',' << (r.enabled ? "true" : "false") << ',' << (r.pass ? "true" : "false") << ",\"" << s << "\"\n";
        arr.push_back({{"id", r.id}, {"title", r.title}, {"enabled", r.enabled}, {"pass", r.pass}, {"summary", r.summary}, {"details", r.details}});
        if (r.enabled) rec.criteria[r.id] = r.pass;
        rec.timestamps["seconds"][r.id] = r.seconds;
    }
    rec.reports["profile"] = prof.name;
    rec.reports["criteria"] = arr;
}

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s{"constants", "synthesize", "limit-test", "qv-test", "scan-phase", "tightness", "decompose", "accept"};
    return s;
}

/// Applies overrides, runs one subcommand and writes <out>/<subcommand>.json.
/// Returns the record; its pass() decides the exit status.
inline ResultRecord run_subcommand(const std::string& sub, ExperimentConfig c, const RunOverrides& o,
                                   const std::function<void(const CriterionResult&)>& on_result = {}) {
    if (o.seed) c.seed = *o.seed;
    if (o.replicas) c.replicas = *o.replicas;
    const auto out = resolve_output(c, o, sub);
    auto rec = start_record(sub, c, o);
    const auto t0 = std::chrono::steady_clock::now();
    if (sub == "constants") cmd_constants(c, rec, out);
    else if (sub == "synthesize") cmd_synthesize(c, rec, out);
    else if (sub == "limit-test") cmd_limit_test(c, rec, out);
    else if (sub == "qv-test") cmd_qv_test(c, rec, out);
    else if (sub == "scan-phase") cmd_scan_phase(c, rec, out);
    else if (sub == "tightness") cmd_tightness(c, rec, out);
    else if (sub == "decompose") cmd_decompose(c, rec, out);
    else if (sub == "accept") cmd_accept(c, rec, out, on_result);
    else throw ConfigError("unknown subcommand '" + sub + "'");
    rec.timestamps["finished"] = utc_now();
    rec.timestamps["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.output_dir = out;
    write_json(out / (sub + ".json"), rec.to_json());
    return rec;
}

}  // namespace gmclab
