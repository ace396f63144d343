#pragma once
// Complex and real chaos functionals on the grid, the martingale N_t, and the
// bracket integrands A_s, B_s.
//
// Every dx integral is a plain Riemann sum with cell volume h^d.  Sums are
// reduced pairwise so results do not depend on evaluation order.

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gmclab/error.hpp"
#include "gmclab/fft.hpp"
#include "gmclab/kernels.hpp"
#include "gmclab/synth.hpp"

namespace gmclab {

struct ComplexParam {
    double alpha = 0.0;
    double beta = 0.0;

    cplx gamma() const { return {alpha, beta}; }
    cplx gamma_sq() const { return gamma() * gamma(); }
    double abs_sq() const { return alpha * alpha + beta * beta; }
};

template <class T>
T pairwise_sum(const T* x, std::size_t n) {
    if (n <= 32) {
        T s{};
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t m = n / 2;
    return pairwise_sum(x, m) + pairwise_sum(x + m, n - m);
}

template <class T>
T pairwise_sum(const std::vector<T>& x) {
    return pairwise_sum(x.data(), x.size());
}

/// Test function sampled on a grid, with its support box.
struct TestFunction {
    std::string name;
    int d = 1;
    std::vector<double> values;
    double lo = 0.0, hi = 0.0;  // support box [lo, hi]^d (closed)
    std::string smoothness = "C-infinity";

    /// Product of smooth bumps e*exp(-1/(1-u^2)) on [lo, hi] per axis; peak value 1.
    static TestFunction bump(const Grid& g, double lo, double hi) {
        require(lo < hi, "bump needs lo < hi");
        TestFunction f{"bump[" + std::to_string(lo) + "," + std::to_string(hi) + "]", g.d, {}, lo, hi};
        f.values.resize(g.size());
        auto b1 = [&](double x) {
            const double u = (2.0 * x - lo - hi) / (hi - lo);
            return std::abs(u) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0;
        };
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Point p = g.point(i);
            f.values[i] = g.d == 1 ? b1(p[0]) : b1(p[0]) * b1(p[1]);
        }
        return f;
    }

    static TestFunction from_values(const Grid& g, std::vector<double> v, std::string name, double lo, double hi) {
        require(v.size() == g.size(), "test function size differs from grid size");
        TestFunction f{std::move(name), g.d, std::move(v), lo, hi, "tabulated"};
        return f;
    }

    static TestFunction zero(const Grid& g) { return from_values(g, std::vector<double>(g.size(), 0.0), "zero", 1.0, 1.0); }

    /// Pointwise product (used for rho * f).
    TestFunction times(const TestFunction& o) const {
        require(o.values.size() == values.size(), "test functions on different grids");
        TestFunction r = *this;
        r.name = name + "*" + o.name;
        r.lo = std::max(lo, o.lo);
        r.hi = std::min(hi, o.hi);
        for (std::size_t i = 0; i < values.size(); ++i) r.values[i] *= o.values[i];
        return r;
    }

    /// Support must lie strictly inside the eps-shrunk box (0, side).
    void check_support(const Grid& g, double eps) const {
        require(values.size() == g.size(), "test function size differs from grid size");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] == 0.0) continue;
            const Point p = g.point(i);
            for (int a = 0; a < g.d; ++a) {
                if (!(p[a] > eps && p[a] < g.side - eps)) {
                    throw DomainError("test function support reaches within eps = " + std::to_string(eps) +
                                      " of the domain boundary");
                }
            }
        }
    }

    double integral(const Grid& g) const { return pairwise_sum(values) * g.cell(); }
};

namespace detail {

inline double diag_at(std::span<const double> k, std::size_t i) { return k.size() == 1 ? k[0] : k[i]; }

inline void check_exponent(double e, std::size_t site, double x, double k) {
    if (e > 700.0) {
        throw OverflowError("real exponent " + std::to_string(e) + " > 700 at site " + std::to_string(site) +
                            " (X = " + std::to_string(x) + ", K = " + std::to_string(k) + ")");
    }
}

}  // namespace detail

/// Integrand values G(x) = f(x) exp(gamma X(x) - gamma^2 K(x,x)/2); zero off the support.
inline std::vector<cplx> gmc_density(std::span<const double> X, std::span<const double> kdiag, ComplexParam g,
                                     const TestFunction& f) {
    require(X.size() == f.values.size(), "field and test function sizes differ");
    require(kdiag.size() == 1 || kdiag.size() == X.size(), "diag variance must be scalar or per site");
    const double re_g2 = g.alpha * g.alpha - g.beta * g.beta;
    const double im_g2 = 2.0 * g.alpha * g.beta;
    std::vector<cplx> out(X.size(), cplx(0.0, 0.0));
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (f.values[i] == 0.0) continue;
        const double k = detail::diag_at(kdiag, i);
        const double e = g.alpha * X[i] - 0.5 * re_g2 * k;
        detail::check_exponent(e, i, X[i], k);
        const double ph = g.beta * X[i] - 0.5 * im_g2 * k;
        out[i] = f.values[i] * std::exp(e) * cplx(std::cos(ph), std::sin(ph));
    }
    return out;
}

/// Riemann sum of f exp(gamma X - gamma^2 K/2) with cell volume `cell`.
inline cplx gmc(std::span<const double> X, std::span<const double> kdiag, ComplexParam g, const TestFunction& f,
                double cell) {
    return pairwise_sum(gmc_density(X, kdiag, g, f)) * cell;
}

inline double m_omega(cplx value, double omega) { return std::real(std::exp(cplx(0.0, -omega)) * value); }

/// M^(2 alpha)(e^{sign |gamma|^2 L} f^2) with L(x,x) = K0(x,x) - j_kappa.
inline double intensity_functional(std::span<const double> X, std::span<const double> kdiag, double alpha,
                                   std::span<const double> ldiag, double gamma_abs_sq, const TestFunction& f,
                                   double cell, int d, double sign = 1.0) {
    if (!(std::abs(2.0 * alpha) < std::sqrt(2.0 * d))) {
        throw OutOfPhaseError("|2 alpha| = " + std::to_string(std::abs(2.0 * alpha)) + " is not below sqrt(2d)");
    }
    require(ldiag.size() == 1 || ldiag.size() == X.size(), "L diagonal must be scalar or per site");
    std::vector<double> terms(X.size(), 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (f.values[i] == 0.0) continue;
        const double k = detail::diag_at(kdiag, i);
        const double e = 2.0 * alpha * X[i] - 2.0 * alpha * alpha * k + sign * gamma_abs_sq * detail::diag_at(ldiag, i);
        detail::check_exponent(e, i, X[i], k);
        terms[i] = f.values[i] * f.values[i] * std::exp(e);
    }
    return pairwise_sum(terms) * cell;
}

// ---------------------------------------------------------------------------
// per-layer diagonal variance of the walked field

/// K(x,x) of X_t (or X_{t,eps}) at every schedule index; inner size 1 when stationary.
inline std::vector<std::vector<double>> diag_profile(const FieldEnsemble& e, const MollifierFilter* filt) {
    std::vector<std::vector<double>> out(e.schedule().t.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (e.spec().k0.is_stationary()) {
            out[i] = {filt ? e.mollified_variance(i, *filt) : e.variance(i)};
        } else {
            out[i] = e.diag_variance(i, filt);
        }
    }
    return out;
}

/// L(x,x) = K0(x,x) - j_kappa per site (scalar when K0 is stationary).
inline std::vector<double> l_diagonal(const FieldEnsemble& e) {
    const double j = j_kappa(e.spec().kappa);
    if (e.spec().k0.is_stationary()) return {e.spec().k0.radial(0.0) - j};
    std::vector<double> out(e.grid().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Point p = e.grid().point(i);
        out[i] = e.spec().k0(p, p, e.grid().d) - j;
    }
    return out;
}

// ---------------------------------------------------------------------------
// bracket sums

struct BracketValue {
    double A = 0.0;
    cplx B{0.0, 0.0};
};

namespace detail {

inline std::size_t neg_index(const Grid& g, std::size_t k) {
    const std::size_t n = g.n;
    if (g.d == 1) return (n - k) % n;
    const std::size_t a = k / n, b = k % n;
    return ((n - a) % n) * n + (n - b) % n;
}

/// Full DFT of an even row; the imaginary part vanishes up to rounding.
inline std::vector<cplx> even_row_spectrum(const Grid& g, const std::vector<cplx>& row) {
    std::vector<cplx> s = row;
    fft_c2c(g.shape(), s.data(), -1);
    return s;
}

}  // namespace detail

/// h^{2d} sum_{x,y} G(x) conj(G(y)) qA(x-y) and h^{2d} sum G(x) G(y) qB(x-y) via the DFT.
inline BracketValue bracket_sums_spectral(const Grid& g, const std::vector<cplx>& G, const std::vector<cplx>& qhatA,
                                          const std::vector<cplx>& qhatB) {
    std::vector<cplx> gh = G;
    fft_c2c(g.shape(), gh.data(), -1);
    const std::size_t n = gh.size();
    std::vector<double> a(n);
    std::vector<cplx> b(n);
    for (std::size_t k = 0; k < n; ++k) {
        a[k] = qhatA[k].real() * std::norm(gh[k]);
        b[k] = qhatB[k] * gh[k] * gh[detail::neg_index(g, k)];
    }
    const double c2 = g.cell() * g.cell() / static_cast<double>(n);
    return {pairwise_sum(a) * c2, pairwise_sum(b) * c2};
}

/// Same sums by neighbor lists: only offsets within `radius` cells per axis.
inline BracketValue bracket_sums_direct(const Grid& g, const std::vector<cplx>& G, const std::vector<cplx>& rowA,
                                        const std::vector<cplx>& rowB, std::size_t radius) {
    const long n = g.n;
    const long r = static_cast<long>(std::min<std::size_t>(radius, g.n / 2 - 1));
    std::vector<long> offs;
    for (long o = -r; o <= r; ++o) offs.push_back(o);
    std::vector<double> a;
    std::vector<cplx> b;
    auto wrap = [n](long v) { return static_cast<std::size_t>(((v % n) + n) % n); };
    for (std::size_t x = 0; x < G.size(); ++x) {
        if (G[x] == cplx(0.0, 0.0)) continue;
        double sa = 0.0;
        cplx sb(0.0, 0.0);
        if (g.d == 1) {
            for (long o : offs) {
                const std::size_t y = wrap(static_cast<long>(x) + o);
                const std::size_t lag = wrap(o);
                sa += (G[x] * std::conj(G[y])).real() * rowA[lag].real();
                sb += G[x] * G[y] * rowB[lag];
            }
        } else {
            const long x0 = static_cast<long>(x) / n, x1 = static_cast<long>(x) % n;
            for (long o0 : offs)
                for (long o1 : offs) {
                    const std::size_t y = wrap(x0 + o0) * n + wrap(x1 + o1);
                    const std::size_t lag = wrap(o0) * n + wrap(o1);
                    sa += (G[x] * std::conj(G[y])).real() * rowA[lag].real();
                    sb += G[x] * G[y] * rowB[lag];
                }
        }
        a.push_back(sa);
        b.push_back(sb);
    }
    const double c2 = g.cell() * g.cell();
    return {pairwise_sum(a) * c2, pairwise_sum(b) * c2};
}

/// Q_s(r) = kappa(e^s r) on the grid, optionally smoothed twice by the mollifier.
inline std::vector<double> q_row(const FieldEnsemble& e, double s, const MollifierFilter* filt) {
    const Grid& g = e.grid();
    std::vector<double> row(g.size());
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = e.spec().kappa(std::exp(s) * g.torus_norm(i));
    if (!filt) return row;
    auto rh = rfft(g.shape(), row);
    for (std::size_t k = 0; k < rh.size(); ++k) rh[k] *= std::norm(filt->hat()[k]);
    return irfft(g.shape(), rh);
}

/// Covariance row of walked layer i (C_i, or theta*theta*C_i with a filter).
inline std::vector<double> layer_cov_row(const FieldEnsemble& e, std::size_t i, const MollifierFilter* filt) {
    const Grid& g = e.grid();
    const auto& t = e.schedule().t;
    std::vector<double> row(g.size());
    for (std::size_t k = 0; k < row.size(); ++k) {
        const double r = g.torus_norm(k);
        row[k] = e.spec().star(r, t[i + 1], true) - e.spec().star(r, t[i], true);
    }
    if (!filt) return row;
    auto rh = rfft(g.shape(), row);
    for (std::size_t k = 0; k < rh.size(); ++k) rh[k] *= std::norm(filt->hat()[k]);
    return irfft(g.shape(), rh);
}

/// Plain integrands (A_s, B_s) at one time from the field X_s and its diagonal variance.
inline BracketValue bracket_integrands(const FieldEnsemble& e, std::span<const double> X, std::span<const double> kdiag,
                                       double s, ComplexParam g, const TestFunction& f,
                                       const MollifierFilter* filt = nullptr) {
    require(s >= 0.0 && s <= e.schedule().t_max() + 1e-12, "bracket time must lie within the schedule");
    const auto G = gmc_density(X, kdiag, g, f);
    const auto q = q_row(e, s, filt);
    std::vector<cplx> qc(q.begin(), q.end());
    const auto qh = detail::even_row_spectrum(e.grid(), qc);
    return bracket_sums_spectral(e.grid(), G, qh, qh);
}

enum class BracketForm {
    Compensator,  ///< exact conditional second moments of each layer increment
    Riemann,      ///< left-point Riemann sum of the integrands A_s, B_s
};

/// Spectra of the bracket weights (qA, qB) of one layer.
struct LayerWeights {
    std::vector<cplx> qA, qB;
};

inline LayerWeights layer_weights(const FieldEnsemble& e, ComplexParam g, const MollifierFilter* filt, BracketForm form,
                                  std::size_t i) {
    const double a2 = g.abs_sq();
    const cplx g2 = g.gamma_sq();
    std::vector<cplx> ra(e.grid().size()), rb(e.grid().size());
    if (form == BracketForm::Compensator) {
        const auto c = layer_cov_row(e, i, filt);
        for (std::size_t k = 0; k < c.size(); ++k) {
            ra[k] = a2 > 0.0 ? std::expm1(a2 * c[k]) / a2 : c[k];
            rb[k] = std::abs(g2) > 0.0 ? (std::exp(g2 * c[k]) - 1.0) / g2 : cplx(c[k], 0.0);
        }
    } else {
        const auto q = q_row(e, e.schedule().t[i], filt);
        const double dt = e.schedule().dt;
        for (std::size_t k = 0; k < q.size(); ++k) ra[k] = rb[k] = q[k] * dt;
    }
    return {detail::even_row_spectrum(e.grid(), ra), detail::even_row_spectrum(e.grid(), rb)};
}

/// Per-layer spectra of the bracket weights for one (ensemble, gamma, filter), all layers held in memory.
class BracketTables {
public:
    BracketTables(const FieldEnsemble& e, ComplexParam g, const MollifierFilter* filt, BracketForm form)
        : form_(form) {
        for (std::size_t i = 0; i < e.schedule().layers(); ++i) layers_.push_back(layer_weights(e, g, filt, form, i));
    }

    BracketForm form() const { return form_; }
    const std::vector<cplx>& qA(std::size_t i) const { return layers_[i].qA; }
    const std::vector<cplx>& qB(std::size_t i) const { return layers_[i].qB; }

private:
    BracketForm form_;
    std::vector<LayerWeights> layers_;
};

/// One replica's chaos path over the walked schedule.
struct ChaosPath {
    std::vector<double> t;
    std::vector<cplx> M;    // M at every schedule index
    std::vector<double> A;  // bracket increment of each layer
    std::vector<cplx> B;

    double N(std::size_t i, double omega) const { return m_omega(M[i], omega); }

    double int_A(std::size_t upto) const {
        return pairwise_sum(A.data(), std::min(upto, A.size()));
    }
    cplx int_B(std::size_t upto) const { return pairwise_sum(B.data(), std::min(upto, B.size())); }

    /// <N> up to schedule index `upto`: 1/2 |g|^2 int A + 1/2 Re(e^{-2 i omega} g^2 int B).
    double bracket(std::size_t upto, ComplexParam g, double omega) const {
        return 0.5 * g.abs_sq() * int_A(upto) +
               0.5 * std::real(std::exp(cplx(0.0, -2.0 * omega)) * g.gamma_sq() * int_B(upto));
    }

    /// Realised quadratic variation sum (N_{t_{i+1}} - N_{t_i})^2 up to `upto`.
    double sum_sq_increments(std::size_t upto, double omega) const {
        std::vector<double> d;
        for (std::size_t i = 0; i < upto && i + 1 < M.size(); ++i) {
            const double v = N(i + 1, omega) - N(i, omega);
            d.push_back(v * v);
        }
        return pairwise_sum(d);
    }
};

/// Walks one replica, recording M_t (or M_{t,eps}) and, with tables, the bracket increments.
/// `final_field`, when given, receives the (mollified) field at the end of the schedule.
inline ChaosPath chaos_path(const FieldEnsemble& e, std::size_t replica, ComplexParam g, const TestFunction& f,
                            const MollifierFilter* filt, const std::vector<std::vector<double>>& diag,
                            const BracketTables* tables, std::vector<double>* final_field = nullptr) {
    f.check_support(e.grid(), filt ? filt->eps() : 0.0);
    const std::size_t L = e.schedule().layers();
    require(diag.size() == L + 1, "diag profile does not match the schedule");
    ChaosPath p;
    p.t = e.schedule().t;
    auto w = e.walker(replica);
    const double cell = e.grid().cell();
    for (std::size_t i = 0;; ++i) {
        const std::vector<double> x = filt ? w.mollified(*filt) : w.field();
        const auto G = gmc_density(x, diag[i], g, f);
        p.M.push_back(pairwise_sum(G) * cell);
        if (i == L) {
            if (final_field) *final_field = x;
            break;
        }
        if (tables) {
            const auto bv = bracket_sums_spectral(e.grid(), G, tables->qA(i), tables->qB(i));
            p.A.push_back(bv.A);
            p.B.push_back(bv.B);
        }
        w.advance();
    }
    return p;
}

/// Walks replicas [r0, r1) side by side, building each layer's bracket weights once for the
/// batch; equivalent to chaos_path with tables but without holding every layer's weights.
inline std::vector<ChaosPath> chaos_paths_batched(const FieldEnsemble& e, std::size_t r0, std::size_t r1,
                                                  ComplexParam g, const TestFunction& f, const MollifierFilter* filt,
                                                  const std::vector<std::vector<double>>& diag, BracketForm form,
                                                  std::vector<std::vector<double>>* final_fields = nullptr) {
    f.check_support(e.grid(), filt ? filt->eps() : 0.0);
    const std::size_t L = e.schedule().layers();
    require(diag.size() == L + 1, "diag profile does not match the schedule");
    require(r0 < r1 && r1 <= e.replicas(), "replica range out of bounds");
    const double cell = e.grid().cell();
    std::vector<ReplicaWalker> walkers;
    std::vector<ChaosPath> paths(r1 - r0);
    for (std::size_t r = r0; r < r1; ++r) {
        walkers.push_back(e.walker(r));
        paths[r - r0].t = e.schedule().t;
    }
    if (final_fields) final_fields->assign(r1 - r0, {});
    for (std::size_t i = 0;; ++i) {
        std::optional<LayerWeights> lw;
        if (i < L) lw = layer_weights(e, g, filt, form, i);
        for (std::size_t j = 0; j < walkers.size(); ++j) {
            auto& w = walkers[j];
            const std::vector<double> x = filt ? w.mollified(*filt) : w.field();
            const auto G = gmc_density(x, diag[i], g, f);
            paths[j].M.push_back(pairwise_sum(G) * cell);
            if (i == L) {
                if (final_fields) (*final_fields)[j] = x;
                continue;
            }
            const auto bv = bracket_sums_spectral(e.grid(), G, lw->qA, lw->qB);
            paths[j].A.push_back(bv.A);
            paths[j].B.push_back(bv.B);
            w.advance();
        }
        if (i == L) break;
    }
    return paths;
}

/// Path t_i -> N_{t_i} for one replica.
inline std::vector<double> martingale_path(const FieldEnsemble& e, std::size_t replica, const MollifierFilter* filt,
                                           ComplexParam g, const TestFunction& f, double omega) {
    const auto diag = diag_profile(e, filt);
    const auto p = chaos_path(e, replica, g, f, filt, diag, nullptr);
    std::vector<double> n(p.M.size());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = p.N(i, omega);
    return n;
}

// ---------------------------------------------------------------------------
// ensemble samples

struct ChaosSample {
    ComplexParam gamma;
    double eps = 0.0;  // 0 when unmollified
    double t = 0.0;
    std::string f_id;
    std::uint64_t seed = 0;
    std::vector<cplx> M;
    std::vector<double> intensity;           // M^(2 alpha)(e^{|gamma|^2 L} f^2)
    std::vector<double> intensity_opposite;  // same with e^{-|gamma|^2 L}

    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw Error("cannot write " + path);
        os.precision(17);
        os << "replica,re,im,intensity,intensity_opposite,alpha,beta,eps,t,f_id,seed\n";
        for (std::size_t r = 0; r < M.size(); ++r) {
            os << r << ',' << M[r].real() << ',' << M[r].imag() << ',' << intensity[r] << ','
               << intensity_opposite[r] << ',' << gamma.alpha << ',' << gamma.beta << ',' << eps << ',' << t << ','
               << f_id << ',' << seed << '\n';
        }
    }

    nlohmann::json summary() const {
        auto mom = [](const std::vector<double>& v) {
            const double n = static_cast<double>(v.size());
            const double m = pairwise_sum(v) / n;
            double ss = 0.0;
            for (double x : v) ss += (x - m) * (x - m);
            return nlohmann::json{{"mean", m}, {"stderr", std::sqrt(ss / std::max(1.0, n - 1) / n)}};
        };
        std::vector<double> re, im, sq;
        for (auto z : M) {
            re.push_back(z.real());
            im.push_back(z.imag());
            sq.push_back(std::norm(z));
        }
        return {{"alpha", gamma.alpha},
                {"beta", gamma.beta},
                {"eps", eps},
                {"t", t},
                {"f_id", f_id},
                {"seed", seed},
                {"replicas", M.size()},
                {"re", mom(re)},
                {"im", mom(im)},
                {"abs_sq", mom(sq)},
                {"intensity", mom(intensity)}};
    }
};

/// M and the two intensities at the end of the schedule for every replica.
inline ChaosSample sample_chaos(const FieldEnsemble& e, ComplexParam g, const TestFunction& f,
                                const MollifierFilter* filt) {
    f.check_support(e.grid(), filt ? filt->eps() : 0.0);
    const std::size_t L = e.schedule().layers();
    std::vector<double> kd;
    if (e.spec().k0.is_stationary()) {
        kd = {filt ? e.mollified_variance(L, *filt) : e.variance(L)};
    } else {
        kd = e.diag_variance(L, filt);
    }
    const auto ld = l_diagonal(e);
    const bool with_intensity = std::abs(2.0 * g.alpha) < std::sqrt(2.0 * e.grid().d);
    ChaosSample s{g, filt ? filt->eps() : 0.0, e.schedule().t_max(), f.name, e.seed(), {}, {}, {}};
    for (std::size_t r = 0; r < e.replicas(); ++r) {
        auto w = e.walker(r);
        w.run_to(L);
        const std::vector<double> x = filt ? w.mollified(*filt) : w.field();
        s.M.push_back(gmc(x, kd, g, f, e.grid().cell()));
        if (with_intensity) {
            s.intensity.push_back(intensity_functional(x, kd, g.alpha, ld, g.abs_sq(), f, e.grid().cell(), e.grid().d));
            s.intensity_opposite.push_back(
                intensity_functional(x, kd, g.alpha, ld, g.abs_sq(), f, e.grid().cell(), e.grid().d, -1.0));
        } else {
            s.intensity.push_back(std::nan(""));
            s.intensity_opposite.push_back(std::nan(""));
        }
    }
    return s;
}

}  // namespace gmclab
