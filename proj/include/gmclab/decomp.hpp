#pragma once
// Approximation K^delta = K + Delta^delta of a log-correlated kernel and the
// eigenvalue checks behind its splitting into a smooth part and a star-scale part.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "gmclab/error.hpp"
#include "gmclab/kernels.hpp"
#include "gmclab/quadrature.hpp"

namespace gmclab {

/// K(x, y) = log(1 / |x - y|) + L(x, y); K itself is infinite on the diagonal.
class LogKernel {
public:
    LogKernel(int d, std::function<double(const Point&, const Point&)> L, std::string name)
        : d_(d), L_(std::move(L)), name_(std::move(name)) {
        require(d == 1 || d == 2, "dimension must be 1 or 2");
    }

    /// K0 + int_0^inf kappa(e^t r) dt, i.e. L = K0 - Phi_kappa(r) + log+(r).
    static LogKernel from_spec(const KernelSpec& spec) {
        return LogKernel(
            spec.d,
            [spec](const Point& x, const Point& y) {
                const double r = dist(x, y, spec.d);
                return spec.k0(x, y, spec.d) - spec.kappa.phi(std::min(r, 1.0)) + (r > 1.0 ? std::log(r) : 0.0);
            },
            "star");
    }

    /// Adds a smooth kernel to L.
    LogKernel plus(const SmoothKernel& extra, std::string name) const {
        auto L = L_;
        const int d = d_;
        return LogKernel(d_, [L, extra, d](const Point& x, const Point& y) { return L(x, y) + extra(x, y, d); },
                         std::move(name));
    }

    int d() const { return d_; }
    const std::string& name() const { return name_; }
    double L(const Point& x, const Point& y) const { return L_(x, y); }
    double operator()(const Point& x, const Point& y) const {
        const double r = dist(x, y, d_);
        return r > 0.0 ? std::log(1.0 / r) + L_(x, y) : kInf;
    }

private:
    int d_;
    std::function<double(const Point&, const Point&)> L_;
    std::string name_;
};

/// K^delta = K + Delta^delta with Delta^delta(x, y) = eta delta int_0^inf e^{-eta t} kappa0(e^t |x - y|) dt.
class KDelta {
public:
    KDelta(LogKernel K, ScaleKernel kappa0, double delta, double s)
        : K_(std::move(K)), kappa0_(std::move(kappa0)), delta_(delta), s_(s), eta_(0.5 * (s - K_.d())) {
        require(delta > 0.0, "delta must be positive");
        require(s > K_.d(), "Sobolev exponent s must exceed d");
    }

    double delta() const { return delta_; }
    double s() const { return s_; }
    double eta() const { return eta_; }
    const LogKernel& base() const { return K_; }
    const ScaleKernel& kappa0() const { return kappa0_; }

    /// Delta^delta at distance r.  Substituting u = e^t r gives eta delta r^eta int_r^1 kappa0(u) u^{-eta-1} du.
    double delta_part(double r) const {
        if (r <= 0.0) return delta_;
        if (r >= 1.0) return 0.0;
        if (kappa0_.form() == ScaleKernel::Form::Triangle) {
            if (std::abs(eta_ - 1.0) < 1e-12) return delta_ * (1.0 - r + r * std::log(r));
            return delta_ * (1.0 - eta_ - std::pow(r, eta_) + eta_ * r) / (1.0 - eta_);
        }
        auto f = [&](double u) { return kappa0_(u) * std::pow(u, -eta_ - 1.0); };
        return eta_ * delta_ * std::pow(r, eta_) * quad::ts(f, r, 1.0, 1e-12 * std::pow(r, -eta_));
    }

    double operator()(const Point& x, const Point& y) const {
        const double r = dist(x, y, K_.d());
        return r > 0.0 ? K_(x, y) + delta_part(r) : kInf;
    }

    /// int_{t0}^inf kappa0(e^t r) dt, the star-scale tail that is split off.
    double star_tail(double r, double t0) const {
        const double rho = r * std::exp(t0);
        if (rho >= 1.0) return 0.0;
        return std::log(1.0 / rho) - kappa0_.phi(rho);
    }

    /// K^delta(x, y) - star_tail(|x - y|, t0); finite on the diagonal where it equals L + delta + t0 + j_kappa0.
    double remainder(const Point& x, const Point& y, double t0) const {
        const double r = dist(x, y, K_.d());
        const double rho = r * std::exp(t0);
        const double logpart = rho < 1.0 ? t0 + kappa0_.phi(rho) : std::log(1.0 / r);
        return K_.L(x, y) + delta_part(r) + logpart;
    }

private:
    LogKernel K_;
    ScaleKernel kappa0_;
    double delta_, s_, eta_;
};

inline KDelta build_K_delta(const LogKernel& K, const ScaleKernel& kappa0, double delta, double s) {
    return KDelta(K, kappa0, delta, s);
}

struct DecompositionReport {
    double delta = 0.0;
    double eta = 0.0;
    double s = 0.0;
    std::size_t points = 0;
    double sup_diff = 0.0;
    double min_eig_delta_part = 0.0;
    double max_eig_delta_part = 0.0;
    std::optional<double> t0_found;
    double min_eig_remainder = 0.0;
    double max_eig_remainder = 0.0;
    std::vector<double> t0_ladder, min_eig_ladder;

    bool delta_part_psd() const { return min_eig_delta_part >= -1e-8 * max_eig_delta_part; }

    nlohmann::json to_json() const {
        nlohmann::json j{{"delta", delta},
                         {"eta", eta},
                         {"s", s},
                         {"points", points},
                         {"sup_diff", sup_diff},
                         {"min_eig_delta_part", min_eig_delta_part},
                         {"max_eig_delta_part", max_eig_delta_part},
                         {"delta_part_psd", delta_part_psd()},
                         {"min_eig_remainder", min_eig_remainder},
                         {"max_eig_remainder", max_eig_remainder},
                         {"t0_ladder", t0_ladder},
                         {"min_eig_ladder", min_eig_ladder}};
        j["t0_found"] = t0_found ? nlohmann::json(*t0_found) : nlohmann::json(nullptr);
        return j;
    }
};

namespace detail {

template <class F>
Eigen::MatrixXd gram(const std::vector<Point>& pts, F&& k) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) G(i, j) = G(j, i) = k(pts[i], pts[j]);
    return G;
}

inline std::pair<double, double> eig_range(const Eigen::MatrixXd& G) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NonconvergenceError("symmetric eigensolve failed");
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

inline void check_points(const std::vector<Point>& pts, int d) {
    require(!pts.empty() && pts.size() <= 512, "verification grids hold 1..512 points");
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) require(dist(pts[i], pts[j], d) > 0.0, "points must be pairwise distinct");
}

}  // namespace detail

/// sup |K^delta - K| over all pairs and the spectrum of the Delta^delta Gram matrix.
inline DecompositionReport verify_conditions(const KDelta& kd, const std::vector<Point>& pts) {
    const int d = kd.base().d();
    detail::check_points(pts, d);
    DecompositionReport rep;
    rep.delta = kd.delta();
    rep.eta = kd.eta();
    rep.s = kd.s();
    rep.points = pts.size();
    const auto D = detail::gram(pts, [&](const Point& x, const Point& y) { return kd.delta_part(dist(x, y, d)); });
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j) {
            // off the diagonal the difference is computed from the two kernels themselves
            const double diff = i == j ? D(i, j) : kd(pts[i], pts[j]) - kd.base()(pts[i], pts[j]);
            rep.sup_diff = std::max(rep.sup_diff, std::abs(diff));
        }
    std::tie(rep.min_eig_delta_part, rep.max_eig_delta_part) = detail::eig_range(D);
    return rep;
}

/// Gram spectrum of the remainder K^delta - int_{t0}^inf kappa0(e^t .) dt.
inline std::pair<double, double> remainder_eig_range(const KDelta& kd, const std::vector<Point>& pts, double t0) {
    return detail::eig_range(detail::gram(pts, [&](const Point& x, const Point& y) { return kd.remainder(x, y, t0); }));
}

/// Smallest t0 on the ladder 0, step, 2 step, ... <= t_max whose remainder Gram matrix has
/// min eig >= -1e-8 max eig.  Fills the report's t0 fields; not finding one is reported, not thrown.
inline DecompositionReport find_t0(const KDelta& kd, const std::vector<Point>& pts, double step = 0.5,
                                   double t_max = 30.0) {
    auto rep = verify_conditions(kd, pts);
    for (int k = 0; k * step <= t_max + 1e-12; ++k) {
        const double t0 = k * step;
        const auto [lo, hi] = remainder_eig_range(kd, pts, t0);
        rep.t0_ladder.push_back(t0);
        rep.min_eig_ladder.push_back(lo);
        rep.min_eig_remainder = lo;
        rep.max_eig_remainder = hi;
        if (lo >= -1e-8 * hi) {
            rep.t0_found = t0;
            break;
        }
    }
    return rep;
}

/// Shipped instance: triangle star kernel in d = 1 minus a Gaussian bump of amplitude c and width w.
/// Its remainder fails to be positive definite for small t0, so find_t0 has something to find.
inline LogKernel synthetic_instance(double c = 0.75, double w = 0.5) {
    return LogKernel::from_spec(KernelSpec{}).plus(SmoothKernel::gaussian_bump(-c, w), "triangle-minus-gaussian");
}

/// Uniform grid of n points on [a, b] in d = 1.
inline std::vector<Point> line_points(std::size_t n, double a, double b) {
    std::vector<Point> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = Point{a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1), 0.0};
    return pts;
}

}  // namespace gmclab
