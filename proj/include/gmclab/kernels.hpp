#pragma once
// Covariance kernels of log-correlated fields with a star-scale invariant part,
//   K(x,y) = K0(x,y) + int_0^inf kappa(e^t |x-y|) dt,
// together with their truncations K_t, mollified versions K_eps and the scalar
// functionals ell_kappa, j_kappa and ell_theta entering the normalisations.

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmclab/error.hpp"
#include "gmclab/fft.hpp"
#include "gmclab/quadrature.hpp"

namespace gmclab {

using Point = std::array<double, 2>;

inline double dist(const Point& x, const Point& y, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// kappa
// ---------------------------------------------------------------------------

/// Seed kernel kappa of the scale decomposition.  Radial, kappa(0) = 1 and
/// supported in the unit ball.
class ScaleKernel {
public:
    enum class Form { Triangle, BallSelfConvolution, Tabulated };

    static ScaleKernel triangle() {
        ScaleKernel k(Form::Triangle, 1);
        k.lipschitz_ = 1.0;
        return k;
    }

    /// Normalised overlap volume of two balls of radius 1/2 at distance r,
    /// i.e. the regularised incomplete beta I_{1-r^2}((d+1)/2, 1/2).
    static ScaleKernel ball_self_convolution(int d) {
        require(d >= 1 && d <= 3, "ball self-convolution kernel supports d in {1,2,3}");
        ScaleKernel k(Form::BallSelfConvolution, d);
        k.lipschitz_ = 2.0 * std::tgamma(0.5 * d + 1.0) /
                       (std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (d + 1)));
        return k;
    }

    /// Piecewise-linear table of (r, kappa(r)); must start at r = 0 with value 1.
    static ScaleKernel tabulated(std::vector<std::pair<double, double>> samples, int d) {
        require(samples.size() >= 2, "tabulated kernel needs at least two samples");
        std::sort(samples.begin(), samples.end());
        require(samples.front().first == 0.0 && std::abs(samples.front().second - 1.0) < 1e-12,
                "tabulated kernel must satisfy kappa(0) = 1");
        ScaleKernel k(Form::Tabulated, d);
        double lip = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            require(samples[i].second >= 0.0, "tabulated kernel must be nonnegative");
            if (samples[i].first >= 1.0) require(samples[i].second == 0.0, "kappa must vanish for r >= 1");
            if (i > 0) {
                const double dr = samples[i].first - samples[i - 1].first;
                require(dr > 0.0, "tabulated kernel abscissae must be distinct");
                lip = std::max(lip, std::abs(samples[i].second - samples[i - 1].second) / dr);
            }
        }
        k.lipschitz_ = lip;
        k.table_ = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(samples));
        return k;
    }

    Form form() const { return form_; }
    int dimension() const { return d_; }
    double lipschitz_bound() const { return lipschitz_; }
    const std::vector<std::pair<double, double>>* table() const { return table_.get(); }

    std::string name() const {
        switch (form_) {
            case Form::Triangle: return "Triangle";
            case Form::BallSelfConvolution: return "BallSelfConvolution";
            default: return "Tabulated";
        }
    }

    double operator()(double r) const {
        require(r >= 0.0 && !std::isnan(r), "kappa evaluated at negative r");
        if (r >= 1.0) return 0.0;
        switch (form_) {
            case Form::Triangle: return 1.0 - r;
            case Form::BallSelfConvolution:
                if (d_ == 1) return 1.0 - r;
                if (d_ == 2) {
                    const double q = std::sqrt((1.0 - r) * (1.0 + r));
                    return (2.0 / std::numbers::pi) * (std::atan2(q, r) - r * q);
                }
                return boost::math::ibeta(0.5 * (d_ + 1), 0.5, 1.0 - r * r);
            case Form::Tabulated: {
                const auto& t = *table_;
                if (r > t.back().first) {
                    throw InterpolationRangeError("r = " + std::to_string(r) + " beyond table end " +
                                                  std::to_string(t.back().first));
                }
                auto it = std::upper_bound(t.begin(), t.end(), r,
                                           [](double v, const auto& p) { return v < p.first; });
                if (it == t.end()) return t.back().second;
                auto lo = it - 1;
                const double w = (r - lo->first) / (it->first - lo->first);
                return (1.0 - w) * lo->second + w * it->second;
            }
        }
        return 0.0;
    }

    /// Phi(r) = int_r^1 (1 - kappa(s))/s ds for r in [0,1], 0 beyond.
    /// Phi(0) = j_kappa and ell_kappa(r) = -Phi(r) for r <= 1.
    double phi(double r) const {
        if (r >= 1.0) return 0.0;
        if (1.0 - r < 1e-9) return 1.0 - r;  // kappa(1) = 0, so the integrand is 1 there
        if (form_ == Form::Triangle || (form_ == Form::BallSelfConvolution && d_ == 1)) return 1.0 - r;
        auto f = [this](double s) { return s > 0.0 ? (1.0 - (*this)(s)) / s : lipschitz_at_zero(); };
        if (form_ == Form::Tabulated) {
            double acc = 0.0;
            double a = r;
            for (const auto& [x, v] : *table_) {
                if (x <= a) continue;
                const double b = std::min(x, 1.0);
                acc += quad::gk(f, a, b, 1e-12);
                a = b;
                if (a >= 1.0) break;
            }
            if (a < 1.0) acc += quad::gk(f, a, 1.0, 1e-12);
            return acc;
        }
        // sqrt-type endpoint behaviour at s = 1 is handled by tanh-sinh.
        return quad::ts(f, r, 1.0, 1e-10);
    }

    /// Fast Phi for bulk evaluation (grid spectra): closed form for the
    /// triangle, cubic Hermite table with exact derivatives otherwise.
    double phi_fast(double r) const {
        if (r >= 1.0) return 0.0;
        if (form_ == Form::Triangle || (form_ == Form::BallSelfConvolution && d_ == 1)) return 1.0 - r;
        if (!phi_table_) build_phi_table();
        return (*phi_table_)(r);
    }

    /// int_0^t kappa(e^u r) du.
    double scale_integral(double r, double t, bool fast = false) const {
        require(t >= 0.0, "negative time");
        if (r <= 0.0) return t;
        if (r >= 1.0) return 0.0;
        const double T = std::min(t, -std::log(r));
        const double u = r * std::exp(T);
        const double ph_r = fast ? phi_fast(r) : phi(r);
        const double ph_u = u >= 1.0 ? 0.0 : (fast ? phi_fast(u) : phi(u));
        return T - ph_r + ph_u;
    }

private:
    ScaleKernel(Form f, int d) : form_(f), d_(d) {}

    double lipschitz_at_zero() const {
        const double s = 1e-9;
        return (1.0 - (*this)(s)) / s;
    }

    void build_phi_table() const {
        constexpr std::size_t n = 20001;
        const double dx = 1.0 / (n - 1);
        std::vector<double> y(n), dy(n);
        auto f = [this](double s) { return s > 0.0 ? (1.0 - (*this)(s)) / s : lipschitz_at_zero(); };
        y[n - 1] = 0.0;
        for (std::size_t k = n - 1; k-- > 0;) {
            const double a = k * dx;
            y[k] = y[k + 1] + quad::ts(f, a, a + dx, 1e-12);
        }
        for (std::size_t k = 0; k < n; ++k) dy[k] = -f(k * dx);
        phi_table_ = std::make_shared<boost::math::interpolators::cardinal_cubic_hermite<std::vector<double>>>(
            std::move(y), std::move(dy), 0.0, dx);
    }

    Form form_;
    int d_;
    double lipschitz_ = 0.0;
    std::shared_ptr<const std::vector<std::pair<double, double>>> table_;
    mutable std::shared_ptr<boost::math::interpolators::cardinal_cubic_hermite<std::vector<double>>> phi_table_;
};

inline double eval_kappa(const ScaleKernel& k, double r) { return k(r); }

/// ell_kappa(r) = int_0^inf [kappa(e^-t) - kappa(e^-t r)] dt (sign chosen so the
/// normalisation integrand e^{-|gamma|^2 ell} decays at infinity).
inline double ell_kappa(const ScaleKernel& k, double r) {
    require(r >= 0.0, "ell_kappa needs r >= 0");
    if (r >= 1.0) return std::log(r);
    return -k.phi(r);
}

/// j_kappa = int_0^inf (1 - kappa(e^-t)) dt, integrated up to t = 50 with a
/// Lipschitz tail bound guard.
inline double j_kappa(const ScaleKernel& k) {
    auto f = [&k](double t) { return 1.0 - k(std::exp(-t)); };
    double v = 0.0;
    const double cuts[] = {0.0, 1.0, 3.0, 8.0, 20.0, 50.0};
    for (int i = 0; i < 5; ++i) v += quad::gk(f, cuts[i], cuts[i + 1], 1e-12);
    const double tail = k.lipschitz_bound() * std::exp(-50.0);
    if (!(tail < 1e-9) || !std::isfinite(v)) {
        throw NonconvergenceError("j_kappa partial integral at t = 50 not converged (tail bound " +
                                  std::to_string(tail) + ")");
    }
    return v;
}

// ---------------------------------------------------------------------------
// K0
// ---------------------------------------------------------------------------

/// Bounded Holder-continuous positive definite part K0.
class SmoothKernel {
public:
    enum class Form { Zero, GaussianBump, Tabulated2D };

    static SmoothKernel zero() { return SmoothKernel(Form::Zero); }

    /// amplitude * exp(-|x-y|^2 / (2 width^2)).
    static SmoothKernel gaussian_bump(double amplitude, double width) {
        require(width > 0.0, "gaussian K0 width must be positive");
        SmoothKernel k(Form::GaussianBump);
        k.amp_ = amplitude;
        k.width_ = width;
        k.holder_ = 1.0;
        return k;
    }

    /// Values V[i][j] = K0(a + i dx, a + j dx) on a 1-d node set, bilinear in between.
    static SmoothKernel tabulated_2d(std::vector<std::vector<double>> values, double a, double dx,
                                     double holder = 1.0) {
        const std::size_t n = values.size();
        require(n >= 2 && dx > 0.0, "tabulated K0 needs at least two nodes");
        for (const auto& row : values) require(row.size() == n, "tabulated K0 must be square");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j)
                require(std::abs(values[i][j] - values[j][i]) <= 1e-12 * (1.0 + std::abs(values[i][j])),
                        "tabulated K0 must be symmetric");
        SmoothKernel k(Form::Tabulated2D);
        k.tab_ = std::make_shared<const std::vector<std::vector<double>>>(std::move(values));
        k.a_ = a;
        k.dx_ = dx;
        k.holder_ = holder;
        return k;
    }

    Form form() const { return form_; }
    bool is_zero() const { return form_ == Form::Zero; }
    bool is_stationary() const { return form_ != Form::Tabulated2D; }
    double holder_exponent() const { return holder_; }
    double amplitude() const { return amp_; }
    double width() const { return width_; }

    std::string name() const {
        switch (form_) {
            case Form::Zero: return "Zero";
            case Form::GaussianBump: return "GaussianBump";
            default: return "Tabulated2D";
        }
    }

    /// Stationary profile as a function of distance (Zero / GaussianBump only).
    double radial(double r) const {
        switch (form_) {
            case Form::Zero: return 0.0;
            case Form::GaussianBump: return amp_ * std::exp(-r * r / (2.0 * width_ * width_));
            default: throw DomainError("tabulated K0 is not stationary");
        }
    }

    double operator()(const Point& x, const Point& y, int d) const {
        if (form_ != Form::Tabulated2D) return radial(dist(x, y, d));
        require(d == 1, "tabulated K0 is implemented for d = 1");
        const auto& v = *tab_;
        const double n1 = static_cast<double>(v.size() - 1);
        const double u = (x[0] - a_) / dx_;
        const double w = (y[0] - a_) / dx_;
        if (u < -1e-9 || w < -1e-9 || u > n1 + 1e-9 || w > n1 + 1e-9) {
            throw InterpolationRangeError("tabulated K0 queried outside its node range");
        }
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, u)), v.size() - 2);
        const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, w)), v.size() - 2);
        const double fu = std::clamp(u - i, 0.0, 1.0);
        const double fw = std::clamp(w - j, 0.0, 1.0);
        return (1 - fu) * (1 - fw) * v[i][j] + fu * (1 - fw) * v[i + 1][j] + (1 - fu) * fw * v[i][j + 1] +
               fu * fw * v[i + 1][j + 1];
    }

private:
    explicit SmoothKernel(Form f) : form_(f) {}
    Form form_;
    double amp_ = 0.0;
    double width_ = 1.0;
    double holder_ = 1.0;
    std::shared_ptr<const std::vector<std::vector<double>>> tab_;
    double a_ = 0.0;
    double dx_ = 1.0;
};

// ---------------------------------------------------------------------------
// theta
// ---------------------------------------------------------------------------

/// Radial mollifier theta on the unit ball with unit mass.
class Mollifier {
public:
    enum class Form { StandardBump, Tabulated };

    static Mollifier standard_bump(int d) {
        require(d == 1 || d == 2, "mollifier dimension must be 1 or 2");
        Mollifier m(Form::StandardBump, d);
        m.norm_ = m.unnormalised_mass();
        return m;
    }

    /// Radial profile samples (r, value) on [0,1], linearly interpolated,
    /// normalised numerically to unit mass.
    static Mollifier tabulated(std::vector<std::pair<double, double>> samples, int d) {
        require(d == 1 || d == 2, "mollifier dimension must be 1 or 2");
        require(samples.size() >= 2, "tabulated mollifier needs at least two samples");
        std::sort(samples.begin(), samples.end());
        require(samples.front().first == 0.0, "tabulated mollifier must start at r = 0");
        require(samples.back().first <= 1.0, "mollifier support must lie in the unit ball");
        for (const auto& s : samples) require(s.second >= 0.0, "mollifier must be nonnegative");
        Mollifier m(Form::Tabulated, d);
        m.table_ = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(samples));
        m.norm_ = m.unnormalised_mass();
        require(m.norm_ > 0.0, "mollifier has zero mass");
        return m;
    }

    Form form() const { return form_; }
    int dimension() const { return d_; }
    double normalization_constant() const { return norm_; }
    std::string name() const { return form_ == Form::StandardBump ? "StandardBump" : "Tabulated"; }

    /// theta as a function of |x|.
    double radial(double r) const { return profile(r) / norm_; }

    double operator()(const Point& x) const { return radial(dist(x, Point{0.0, 0.0}, d_)); }

    /// Mass over the unit ball, computed independently of the normalisation.
    double mass() const { return unnormalised_mass() / norm_; }

    /// Autocorrelation g(|w|) = int theta(z) theta(z + w) dz, the density of
    /// z1 - z2 for independent z1, z2 ~ theta.  Supported in |w| <= 2.
    double autocorrelation(double s) const {
        s = std::abs(s);
        if (s >= 2.0) return 0.0;
        if (!g_table_) build_g_table();
        return std::max(0.0, (*g_table_)(s));
    }

    /// Direct quadrature of the autocorrelation (used to build the table).
    double autocorrelation_direct(double s) const {
        if (s >= 2.0) return 0.0;
        if (d_ == 1) {
            auto f = [&](double z) { return radial(std::abs(z)) * radial(std::abs(z + s)); };
            return quad::gk(f, -1.0, 1.0 - s, 1e-13);
        }
        // d = 2: polar coordinates about the origin of z; the angular integrand
        // is smooth and periodic, so the trapezoid rule converges spectrally.
        auto ring = [&](double r) {
            if (r <= 0.0) return 0.0;
            constexpr int n = 512;
            double acc = 0.0;
            for (int k = 0; k <= n; ++k) {
                const double phi = std::numbers::pi * k / n;
                const double w = (k == 0 || k == n) ? 0.5 : 1.0;
                acc += w * radial(std::sqrt(r * r + s * s + 2.0 * r * s * std::cos(phi)));
            }
            return 2.0 * std::numbers::pi / n * acc * r * radial(r);
        };
        return quad::gk(ring, 0.0, 1.0, 1e-12);
    }

private:
    Mollifier(Form f, int d) : form_(f), d_(d) {}

    double profile(double r) const {
        if (r >= 1.0) return 0.0;
        if (form_ == Form::StandardBump) return std::exp(-1.0 / (1.0 - r * r));
        const auto& t = *table_;
        if (r > t.back().first) return 0.0;
        auto it = std::upper_bound(t.begin(), t.end(), r, [](double v, const auto& p) { return v < p.first; });
        if (it == t.end()) return t.back().second;
        auto lo = it - 1;
        const double w = (r - lo->first) / (it->first - lo->first);
        return (1.0 - w) * lo->second + w * it->second;
    }

    double unnormalised_mass() const {
        if (d_ == 1) return 2.0 * quad::gk([this](double r) { return profile(r); }, 0.0, 1.0, 1e-14);
        return 2.0 * std::numbers::pi * quad::gk([this](double r) { return r * profile(r); }, 0.0, 1.0, 1e-14);
    }

    void build_g_table() const {
        if (d_ == 1) {
            constexpr std::size_t n = 2049;
            const double dx = 2.0 / (n - 1);
            std::vector<double> y(n);
            for (std::size_t k = 0; k < n; ++k) y[k] = k + 1 == n ? 0.0 : autocorrelation_direct(k * dx);
            g_table_ = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
                y.data(), y.size(), 0.0, dx, 0.0, 0.0);
            return;
        }
        // d = 2: lattice sums h^2 sum_z theta(z) theta(z + s e1) at s = k h, one
        // FFT correlation per lattice row.  For a C-infinity compactly supported
        // integrand the lattice sum is accurate far beyond the spline error.
        constexpr int m = 1024;  // nodes per unit length
        const double h = 1.0 / m;
        const int len = 2 * m + 1;
        const Shape sh{1, 4 * m};
        std::vector<double> acc(len, 0.0), row(sh.size());
        std::vector<cplx> spec(sh.half_size());
        for (int j = 0; j < len; ++j) {
            const double yv = -1.0 + j * h;
            std::fill(row.begin(), row.end(), 0.0);
            bool any = false;
            for (int i = 0; i < len; ++i) {
                row[i] = radial(std::hypot(-1.0 + i * h, yv));
                any = any || row[i] > 0.0;
            }
            if (!any) continue;
            fft_r2c(sh, row.data(), spec.data());
            for (auto& c : spec) c = std::norm(c);
            fft_c2r(sh, spec.data(), row.data());
            for (int k = 0; k < len; ++k) acc[k] += row[k] / sh.size();
        }
        for (auto& v : acc) v *= h * h;
        acc.back() = 0.0;
        g_table_ = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
            acc.data(), acc.size(), 0.0, h, 0.0, 0.0);
    }

    Form form_;
    int d_;
    double norm_ = 1.0;
    std::shared_ptr<const std::vector<std::pair<double, double>>> table_;
    mutable std::shared_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> g_table_;
};

/// ell_theta(z) = double theta-convolution of log(1/|.|) evaluated at z.
inline double ell_theta(const Mollifier& m, const Point& z) {
    const int d = m.dimension();
    const double r = dist(z, Point{0.0, 0.0}, d);
    if (d == 1) {
        // int g(w) log(1/|r - w|) dw on [-2, 2], split at the singular point.
        auto f = [&](double w) {
            const double a = std::abs(r - w);
            return a > 0.0 ? -m.autocorrelation(w) * std::log(a) : 0.0;
        };
        if (r >= 2.0) return quad::gk(f, -2.0, 2.0, 1e-12);
        return quad::ts(f, -2.0, r, 1e-12) + quad::ts(f, r, 2.0, 1e-12);
    }
    // Radial log-potential in the plane:
    // 2 pi [ log(1/r) int_0^r g s ds + int_r^2 log(1/s) g s ds ].
    auto gs = [&](double s) { return m.autocorrelation(s) * s; };
    auto lgs = [&](double s) { return s > 0.0 ? -std::log(s) * m.autocorrelation(s) * s : 0.0; };
    const double inner = r > 0.0 ? quad::gk(gs, 0.0, std::min(r, 2.0), 1e-13) : 0.0;
    const double outer = r < 2.0 ? quad::ts(lgs, r, 2.0, 1e-13) : 0.0;
    return 2.0 * std::numbers::pi * ((r > 0.0 ? -std::log(r) * inner : 0.0) + outer);
}

// ---------------------------------------------------------------------------
// K
// ---------------------------------------------------------------------------

struct Box {
    Point lo{0.0, 0.0};
    Point hi{1.0, 1.0};
};

/// K = K0 + star-scale part built on kappa, in dimension d, on an optional box.
struct KernelSpec {
    SmoothKernel k0 = SmoothKernel::zero();
    ScaleKernel kappa = ScaleKernel::triangle();
    int d = 1;
    std::optional<Box> domain;

    /// Star-scale part truncated at time t (t = inf gives the full kernel).
    double star(double r, double t = kInf, bool fast = false) const {
        if (std::isinf(t)) {
            if (r <= 0.0) return kInf;
            if (r >= 1.0) return 0.0;
            return -std::log(r) - (fast ? kappa.phi_fast(r) : kappa.phi(r));
        }
        return kappa.scale_integral(r, t, fast);
    }

    double K(const Point& x, const Point& y) const { return k0(x, y, d) + star(dist(x, y, d)); }

    /// L(x,y) = K(x,y) + log|x-y|; on the diagonal L(x,x) = K0(x,x) - j_kappa.
    double L(const Point& x, const Point& y) const {
        const double r = dist(x, y, d);
        if (r == 0.0) return k0(x, x, d) - j_kappa(kappa);
        return K(x, y) + std::log(r);
    }

    void check_in_domain(const Point& x, double margin, const char* what) const {
        if (!domain) return;
        for (int i = 0; i < d; ++i) {
            if (x[i] - domain->lo[i] < margin || domain->hi[i] - x[i] < margin) {
                throw DomainError(std::string(what) + ": point closer than " + std::to_string(margin) +
                                  " to the domain boundary");
            }
        }
    }
};

/// L on the diagonal through K0 and j_kappa (no cancellation of divergent logs).
inline double L_diag(const KernelSpec& s, const Point& x) { return s.k0(x, x, s.d) - j_kappa(s.kappa); }

inline double kernel_K_t(const KernelSpec& s, const Point& x, const Point& y, double t) {
    require(t >= 0.0, "kernel_K_t needs t >= 0");
    s.check_in_domain(x, 0.0, "kernel_K_t");
    s.check_in_domain(y, 0.0, "kernel_K_t");
    return s.k0(x, y, s.d) + s.star(dist(x, y, s.d), t);
}

/// K_eps (t = inf) or K_{t,eps}: the double theta_eps convolution of K_t,
///   int g(w) K_t(x - y - eps w) dw,
/// with g the mollifier autocorrelation.  Quadrature panels are split at the
/// log singularity of K.
inline double kernel_K_eps(const KernelSpec& s, const Mollifier& m, const Point& x, const Point& y, double eps,
                           double t = kInf) {
    require(eps > 0.0, "kernel_K_eps needs eps > 0");
    require(m.dimension() == s.d, "mollifier and kernel dimensions differ");
    s.check_in_domain(x, 2.0 * eps, "kernel_K_eps");
    s.check_in_domain(y, 2.0 * eps, "kernel_K_eps");
    const double delta = dist(x, y, s.d) / eps;
    double stat_part = 0.0;
    double k0_part = 0.0;
    const bool k0_stat = s.k0.is_stationary();
    auto k_stat = [&](double r) { return s.star(r, t) + (k0_stat ? s.k0.radial(r) : 0.0); };

    if (s.d == 1) {
        auto f = [&](double w) {
            const double r = eps * std::abs(delta - w);
            const double kv = r > 0.0 || !std::isinf(t) ? k_stat(r) : 0.0;
            return m.autocorrelation(w) * kv;
        };
        if (delta < 2.0) {
            stat_part = quad::ts(f, -2.0, delta, 1e-10) + quad::ts(f, delta, 2.0, 1e-10);
        } else {
            stat_part = quad::gk_panels(f, {-2.0, 0.0, 2.0}, 1e-10);
        }
    } else {
        // Polar coordinates centred at the singularity: v = delta e1 - w.
        const double rlo = std::max(0.0, delta - 2.0);
        const double rhi = delta + 2.0;
        auto angular = [&](double rho) {
            constexpr int n = 256;
            double acc = 0.0;
            for (int k = 0; k <= n; ++k) {
                const double phi = std::numbers::pi * k / n;
                const double w = (k == 0 || k == n) ? 0.5 : 1.0;
                acc += w * m.autocorrelation(std::sqrt(delta * delta + rho * rho - 2.0 * delta * rho * std::cos(phi)));
            }
            return 2.0 * std::numbers::pi / n * acc;
        };
        auto f = [&](double rho) {
            if (rho <= 0.0) return 0.0;
            return rho * k_stat(eps * rho) * angular(rho);
        };
        // The integrand is smooth apart from rho log(rho) at the origin.
        if (rlo == 0.0) {
            stat_part = quad::ts(f, 0.0, rhi, 1e-9);
        } else {
            stat_part = quad::gk(f, rlo, rhi, 1e-9);
        }
    }
    if (!k0_stat) {
        // Tensor quadrature for a non-stationary K0 (d = 1).
        auto inner = [&](double a) {
            auto g = [&](double b) {
                return m.radial(std::abs(a)) * m.radial(std::abs(b)) *
                       s.k0(Point{x[0] - eps * a, 0.0}, Point{y[0] - eps * b, 0.0}, 1);
            };
            return quad::gk(g, -1.0, 1.0, 1e-12);
        };
        k0_part = quad::gk(inner, -1.0, 1.0, 1e-10);
    }
    return stat_part + k0_part;
}

}  // namespace gmclab
