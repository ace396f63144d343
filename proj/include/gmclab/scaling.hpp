#pragma once
// Phase classification and the normalising constants v(eps), vbar(t), a(s).

#include <cmath>
#include <numbers>
#include <string>

#include "json.hpp"

#include "gmclab/chaos.hpp"
#include "gmclab/error.hpp"
#include "gmclab/kernels.hpp"
#include "gmclab/quadrature.hpp"

namespace gmclab {

enum class PhaseRegion { Subcritical, PhaseII, PhaseIII, PhaseIIIClosure, Boundary, RealSupercritical, Other };

inline std::string to_string(PhaseRegion p) {
    switch (p) {
        case PhaseRegion::Subcritical: return "Subcritical";
        case PhaseRegion::PhaseII: return "PhaseII";
        case PhaseRegion::PhaseIII: return "PhaseIII";
        case PhaseRegion::PhaseIIIClosure: return "PhaseIIIClosure";
        case PhaseRegion::Boundary: return "Boundary";
        case PhaseRegion::RealSupercritical: return "RealSupercritical";
        default: return "Other";
    }
}

constexpr double kPhaseTol = 1e-12;

inline PhaseRegion classify_phase(double alpha, double beta, int d) {
    require(d >= 1, "dimension must be at least 1");
    if (!std::isfinite(alpha) || !std::isfinite(beta)) return PhaseRegion::Other;
    const double a = std::abs(alpha), b = std::abs(beta);
    const double r2 = alpha * alpha + beta * beta;
    const double half = std::sqrt(d / 2.0), full = std::sqrt(2.0 * d);
    auto tie = [](double x, double y) { return std::abs(x - y) <= kPhaseTol * std::max(1.0, std::abs(y)); };

    if (tie(r2, d) && a < half && !tie(a, half)) return PhaseRegion::PhaseIIIClosure;
    // The line |alpha| + |beta| = sqrt(2d) separates regions only where |alpha| >= sqrt(d/2).
    const bool on_line = tie(a + b, full) && a >= half * (1.0 - kPhaseTol);
    if (tie(r2, d) || tie(a, half) || on_line || (tie(a, full) && b == 0.0)) return PhaseRegion::Boundary;
    if (r2 > d && a < half) return PhaseRegion::PhaseIII;
    if (r2 < d) return PhaseRegion::Subcritical;
    if (b == 0.0 && a > full) return PhaseRegion::RealSupercritical;
    if (a > half && a + b > full) return PhaseRegion::PhaseII;
    if (a > half && a < full && a + b < full) return PhaseRegion::Subcritical;
    return PhaseRegion::Other;
}

/// Membership in the closed-circle phase region studied here.
inline bool in_phase_iii_prime(double alpha, double beta, int d) {
    const auto p = classify_phase(alpha, beta, d);
    return p == PhaseRegion::PhaseIII || p == PhaseRegion::PhaseIIIClosure;
}

// ---------------------------------------------------------------------------

enum class NormRegime { StrictPhaseIII, Circle };

struct NormConstant {
    double value = 0.0;
    NormRegime regime = NormRegime::StrictPhaseIII;
    double integral = 0.0;      // half-integral enters as (integral / 2)
    double gamma_half_d = 0.0;  // Gamma(d/2)
    double log_factor = 0.0;    // log(1/eps) or t on the circle

    nlohmann::json to_json() const {
        return {{"value", value},
                {"regime", regime == NormRegime::Circle ? "Circle" : "StrictPhaseIII"},
                {"integral", integral},
                {"gamma_half_d", gamma_half_d},
                {"log_factor", log_factor}};
    }
};

namespace detail {

inline NormRegime regime_of(double abs_sq, int d) {
    if (std::abs(abs_sq - d) <= kPhaseTol * d) return NormRegime::Circle;
    if (abs_sq < d) throw OutOfPhaseError("|gamma|^2 = " + std::to_string(abs_sq) + " is below d");
    return NormRegime::StrictPhaseIII;
}

/// Surface measure of the unit sphere in R^d, i.e. 2 pi^{d/2} / Gamma(d/2).
inline double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

}  // namespace detail

/// int_{R^d} e^{a ell_theta(z)} dz for a > d: quadrature to radius 48 plus an analytic tail.
inline double ell_theta_exp_integral(const Mollifier& m, double a) {
    const int d = m.dimension();
    require(a > d, "the ell_theta integral converges only for |gamma|^2 > d");
    const double area = detail::sphere_area(d);
    auto radial = [&](double r) { return area * std::pow(r, d - 1) * std::exp(a * ell_theta(m, Point{r, 0.0})); };
    const double R = 48.0;
    double core = quad::gk(radial, 0.0, 2.0, 1e-10);
    for (double lo = 2.0; lo < R; lo *= 2.0) core += quad::gk(radial, lo, std::min(2.0 * lo, R), 1e-11);
    // Beyond R: ell_theta = log(1/r) + c/r^2 (c = 0 in the plane), e^{a ell} ~ r^{-a}(1 + a c / r^2).
    const double c = (ell_theta(m, Point{R, 0.0}) + std::log(R)) * R * R;
    const double p = a - d;  // decay exponent of the radial integrand
    const double tail = area * (std::pow(R, -p) / p + a * c * std::pow(R, -p - 2.0) / (p + 2.0));
    return core + tail;
}

/// int_{R^d} e^{-a ell_kappa(|z|)} dz for a > d (inner part by quadrature, outer power law exactly).
inline double ell_kappa_exp_integral(const ScaleKernel& k, int d, double a) {
    require(a > d, "the ell_kappa integral converges only for |gamma|^2 > d");
    const double area = detail::sphere_area(d);
    auto radial = [&](double r) { return area * std::pow(r, d - 1) * std::exp(a * k.phi(r)); };
    const double inner = quad::gk_panels(radial, {0.0, 0.25, 0.5, 0.75, 1.0}, 1e-12);
    return inner + area / (a - d);
}

/// v(eps, theta, gamma): eps^{(|g|^2 - d)/2} (1/2 int e^{|g|^2 ell_theta})^{-1/2}, or the circle form.
inline NormConstant v_eps(double eps, const Mollifier& m, double abs_sq) {
    require(eps > 0.0 && eps < 1.0, "v_eps needs 0 < eps < 1");
    const int d = m.dimension();
    NormConstant c;
    c.regime = detail::regime_of(abs_sq, d);
    c.gamma_half_d = std::tgamma(0.5 * d);
    c.log_factor = std::log(1.0 / eps);
    if (c.regime == NormRegime::Circle) {
        c.value = 1.0 / std::sqrt(std::pow(std::numbers::pi, 0.5 * d) / c.gamma_half_d * c.log_factor);
    } else {
        c.integral = ell_theta_exp_integral(m, abs_sq);
        c.value = std::pow(eps, 0.5 * (abs_sq - d)) / std::sqrt(0.5 * c.integral);
    }
    return c;
}

/// vbar(t, kappa, gamma): e^{(d - |g|^2) t / 2} (1/2 int e^{-|g|^2 ell_kappa})^{-1/2}, or the circle form.
inline NormConstant v_bar(double t, const ScaleKernel& k, double abs_sq, int d) {
    require(t > 0.0, "v_bar needs t > 0");
    NormConstant c;
    c.regime = detail::regime_of(abs_sq, d);
    c.gamma_half_d = std::tgamma(0.5 * d);
    c.log_factor = t;
    if (c.regime == NormRegime::Circle) {
        c.value = 1.0 / std::sqrt(std::pow(std::numbers::pi, 0.5 * d) * t / c.gamma_half_d);
    } else {
        c.integral = ell_kappa_exp_integral(k, d, abs_sq);
        c.value = std::exp(0.5 * (d - abs_sq) * t) / std::sqrt(0.5 * c.integral);
    }
    return c;
}

/// Lattice version of vbar: vbar_h(t)^2 = 2 e^{-|g|^2 j} / (h^d sum_z (e^{|g|^2 K_t(0,z)} - 1)).
/// Tends to vbar(t) when the grid resolves e^{-t}.
inline double v_bar_lattice(const FieldEnsemble& e, std::size_t layer, double abs_sq) {
    require(e.spec().k0.is_zero(), "lattice vbar is defined for K0 = 0");
    const auto row = e.covariance_row(layer);
    std::vector<double> terms(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) terms[i] = std::expm1(abs_sq * row[i]);
    const double s = pairwise_sum(terms) * e.grid().cell();
    return std::sqrt(2.0 * std::exp(-abs_sq * j_kappa(e.spec().kappa)) / s);
}

/// Lattice v(eps) for the mollified field, same construction with K_eps.
inline double v_eps_lattice(const FieldEnsemble& e, const MollifierFilter& f, double abs_sq) {
    require(e.spec().k0.is_zero(), "lattice v is defined for K0 = 0");
    auto sh = rfft(e.grid().shape(), e.covariance_row(e.schedule().layers()));
    for (std::size_t k = 0; k < sh.size(); ++k) sh[k] *= std::norm(f.hat()[k]);
    const auto row = irfft(e.grid().shape(), sh);
    std::vector<double> terms(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) terms[i] = std::expm1(abs_sq * row[i]);
    const double s = pairwise_sum(terms) * e.grid().cell();
    return std::sqrt(2.0 * std::exp(-abs_sq * j_kappa(e.spec().kappa)) / s);
}

// ---------------------------------------------------------------------------
// a(s, kappa, gamma)

/// a(s) = int Q_s(0,z) e^{|g|^2 Khat_s(0,z)} dz with Khat_s = K_s - K0.  After y = e^s z:
/// a(s) = e^{(|g|^2 - d) s} int kappa(|y|) e^{|g|^2 (Phi(|y|) - Phi(e^{-s}|y|))} dy.
inline double a_const(double s, const ScaleKernel& k, double abs_sq, int d) {
    require(s >= 0.0, "a_const needs s >= 0");
    const double area = detail::sphere_area(d);
    auto radial = [&](double r) {
        if (r <= 0.0) return 0.0;
        const double kv = k(r);
        if (kv == 0.0) return 0.0;
        return area * std::pow(r, d - 1) * kv * std::exp(abs_sq * (k.phi(r) - k.phi(std::exp(-s) * r)));
    };
    const double inner = quad::gk_panels(radial, {0.0, 0.25, 0.5, 0.75, 1.0}, 1e-12);
    return std::exp((abs_sq - d) * s) * inner;
}

/// Mollified a(t, kappa, gamma, eps) = int Q_{t,eps}(0,z) e^{|g|^2 Khat_{t,eps}(0,z)} dz (d = 1).
inline double a_const_eps(double t, const KernelSpec& spec, const Mollifier& m, double eps, double abs_sq) {
    require(spec.d == 1, "mollified a(t, eps) is implemented for d = 1");
    require(spec.k0.is_zero(), "mollified a(t, eps) assumes K0 = 0");
    const double et = std::exp(t);
    auto q_eps = [&](double z) {
        auto g = [&](double w) { return m.autocorrelation(w) * spec.kappa(et * std::abs(z - eps * w)); };
        return quad::gk(g, -2.0, 2.0, 1e-10);
    };
    auto integrand = [&](double z) {
        const double k = kernel_K_eps(spec, m, Point{1.0, 0.0}, Point{1.0 + z, 0.0}, eps, t);
        return 2.0 * q_eps(z) * std::exp(abs_sq * k);
    };
    const double reach = 1.0 / et + 2.0 * eps;
    return quad::gk_panels(integrand, {0.0, 0.25 * reach, 0.5 * reach, reach}, 1e-10);
}

/// vbar(t)^2 |g|^2 int_0^t a(s) ds; tends to 2 e^{-|g|^2 j_kappa}.
inline double martingale_limit_check(double t, const ScaleKernel& k, double abs_sq, int d) {
    auto a = [&](double s) { return a_const(s, k, abs_sq, d); };
    double integral = 0.0;
    for (double lo = 0.0; lo < t; lo += 1.0) integral += quad::gk(a, lo, std::min(lo + 1.0, t), 1e-12);
    const double vb = v_bar(t, k, abs_sq, d).value;
    return vb * vb * abs_sq * integral;
}

/// Large-t value of martingale_limit_check computed after substituting y = e^t z:
/// |g|^2 e^{-|g|^2 j} int kappa e^{|g|^2 Phi} dy / ((|g|^2 - d) * 1/2 int e^{-|g|^2 ell_kappa}).
inline double martingale_limit_value(const ScaleKernel& k, double abs_sq, int d) {
    const double area = detail::sphere_area(d);
    auto radial = [&](double r) { return area * std::pow(r, d - 1) * k(r) * std::exp(abs_sq * k.phi(r)); };
    const double num = quad::gk_panels(radial, {0.0, 0.25, 0.5, 0.75, 1.0}, 1e-12);
    return abs_sq * std::exp(-abs_sq * j_kappa(k)) * num / ((abs_sq - d) * 0.5 * ell_kappa_exp_integral(k, d, abs_sq));
}

/// v(eps)^2 |g|^2 int_0^inf a(t, eps) dt = v(eps)^2 int (e^{|g|^2 K_eps(0,z)} - 1) dz (K0 = 0).
inline double convolution_limit_check(double eps, const KernelSpec& spec, const Mollifier& m, double abs_sq) {
    require(spec.k0.is_zero(), "convolution limit check assumes K0 = 0");
    const int d = spec.d;
    const double area = detail::sphere_area(d);
    const Point o{1.0, 1.0};
    auto radial = [&](double r) {
        const double k = kernel_K_eps(spec, m, o, Point{o[0] + r, o[1]}, eps);
        return area * std::pow(r, d - 1) * std::expm1(abs_sq * k);
    };
    const double reach = 1.0 + 2.0 * eps;
    double s = 0.0;
    double lo = 0.0;
    for (double hi = eps; lo < reach; hi = std::min(2.0 * hi, reach)) {
        s += quad::gk(radial, lo, hi, 1e-10);
        lo = hi;
    }
    const double v = v_eps(eps, m, abs_sq).value;
    return v * v * s;
}

}  // namespace gmclab
