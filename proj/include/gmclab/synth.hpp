#pragma once
// Spectral synthesis of the layered field X_t on a periodic grid.
//
// Layer i carries the exact integrated covariance C_i = K_{t_{i+1}} - K_{t_i}
// of the scale interval [t_i, t_{i+1}].  Replicas are never stored; each one is
// regenerated from its (seed, replica, layer) streams when walked.
//
// Two couplings support discretisation studies on identical randomness:
//  * dt_split = 2 halves every layer with a per-frequency Gaussian bridge
//    driven by the parent layer's noise, so the parent field is reproduced
//    exactly at every parent schedule time;
//  * restrict_factor = 2 synthesises on the grid refined by two and keeps the
//    even sites, which is the coarse-grid field coupled to the fine one.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gmclab/error.hpp"
#include "gmclab/fft.hpp"
#include "gmclab/kernels.hpp"
#include "gmclab/rng.hpp"

namespace gmclab {

/// Periodic lattice of N^d sites with spacing h = side / N.
struct Grid {
    int d = 1;
    int n = 4096;
    double side = 3.0;

    static Grid make(int d, int n, double side) {
        require(d == 1 || d == 2, "grid dimension must be 1 or 2");
        require(n >= 2 && (n & (n - 1)) == 0, "points per axis must be a power of two");
        require(side > 0.0, "side length must be positive");
        Grid g{d, n, side};
        require(g.size() <= (std::size_t(1) << 22), "grid exceeds the 2^22 site guard");
        return g;
    }

    double h() const { return side / n; }
    double cell() const { return d == 1 ? h() : h() * h(); }
    Shape shape() const { return Shape{d, n}; }
    std::size_t size() const { return shape().size(); }

    Point point(std::size_t idx) const {
        if (d == 1) return Point{idx * h(), 0.0};
        return Point{(idx / n) * h(), (idx % n) * h()};
    }

    /// Torus distance between site idx and the origin.
    double torus_norm(std::size_t idx) const {
        auto wrap = [this](std::size_t i) { return std::min<std::size_t>(i, n - i) * h(); };
        if (d == 1) return wrap(idx);
        return std::hypot(wrap(idx / n), wrap(idx % n));
    }

    /// Site index nearest to x.
    std::size_t snap(const Point& x) const {
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a) {
            // Atoms must lie in the fundamental cell; the last half cell wraps to site 0.
            const double u = x[a] / h();
            if (!(u >= -0.5 - 1e-9 && u <= n + 0.5 + 1e-9)) {
                throw DomainError("atom coordinate " + std::to_string(x[a]) + " is farther than h/2 from the grid");
            }
            const long k = static_cast<long>(std::round(u)) % n;
            idx = idx * n + static_cast<std::size_t>(k);
        }
        return idx;
    }

    Grid refined(int factor) const { return Grid::make(d, n * factor, side); }
};

/// Uniform scale schedule 0 = t_0 < ... < t_M = t_max.
struct LayerSchedule {
    std::vector<double> t;
    double dt = 0.0;

    static constexpr double kDefaultStep = std::numbers::ln2 / 8.0;

    static LayerSchedule uniform(double t_max, double target_dt = kDefaultStep) {
        require(t_max > 0.0 && target_dt > 0.0, "schedule needs positive t_max and step");
        const auto m = static_cast<std::size_t>(std::ceil(t_max / target_dt - 1e-9));
        LayerSchedule s;
        s.dt = t_max / m;
        s.t.resize(m + 1);
        for (std::size_t i = 0; i <= m; ++i) s.t[i] = i * s.dt;
        s.t[m] = t_max;
        return s;
    }

    /// Default truncation t_max = log(1/h) + 2.
    static LayerSchedule for_grid(const Grid& g, double target_dt = kDefaultStep) {
        return uniform(std::log(1.0 / g.h()) + 2.0, target_dt);
    }

    std::size_t layers() const { return t.size() - 1; }
    double t_max() const { return t.back(); }

    /// Same step, extended until t_max >= t_new (coarse schedule is a prefix).
    LayerSchedule extended_to(double t_new) const {
        LayerSchedule s = *this;
        while (s.t.back() < t_new - 1e-12) s.t.push_back(s.t.size() * dt);
        return s;
    }

    /// Every layer split in two.
    LayerSchedule halved() const {
        LayerSchedule s;
        s.dt = dt / 2.0;
        for (std::size_t i = 0; i + 1 < t.size(); ++i) {
            s.t.push_back(t[i]);
            s.t.push_back(0.5 * (t[i] + t[i + 1]));
        }
        s.t.push_back(t.back());
        return s;
    }

    std::size_t index_of(double time) const {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (std::abs(t[i] - time) <= 1e-9 * std::max(1.0, time)) return i;
        throw DomainError("time " + std::to_string(time) + " is not a schedule point");
    }

    /// Index of the schedule point nearest to `time`.
    std::size_t nearest(double time) const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < t.size(); ++i)
            if (std::abs(t[i] - time) < std::abs(t[best] - time)) best = i;
        return best;
    }

    void validate(const Grid& g) const {
        require(t.size() >= 2 && t.front() == 0.0, "schedule must start at 0 with at least one layer");
        for (std::size_t i = 1; i < t.size(); ++i)
            require(std::abs((t[i] - t[i - 1]) - dt) <= 1e-12 * std::max(1.0, t[i]), "schedule steps not uniform");
        require(t_max() >= std::log(1.0 / g.h()) - 1e-12, "t_max must be at least log(1/h)");
    }
};

struct SynthOptions {
    int dt_split = 1;         ///< 1, or 2 for bridge-halved layers
    int restrict_factor = 1;  ///< 1, or 2 for synthesis on the refined grid
    double max_clipped_mass = 1e-3;
};

/// Discrete signed measure sum_i w_i delta_{x_i}.
struct DiscreteMeasure {
    std::vector<Point> atoms;
    std::vector<double> weights;
};

class FieldEnsemble;

/// Circular convolution with theta_eps on a grid, weights normalised to sum 1.
class MollifierFilter {
public:
    MollifierFilter(const Grid& g, const Mollifier& m, double eps) : grid_(g), mollifier_(m), eps_(eps) {
        require(m.dimension() == g.d, "mollifier dimension differs from grid dimension");
        if (eps < 2.0 * g.h()) {
            throw ResolutionError("eps = " + std::to_string(eps) + " is below 2h = " + std::to_string(2.0 * g.h()));
        }
        require(eps < g.side / 4.0, "mollifier support must be well inside the torus");
        std::vector<double> w(g.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] = m.radial(g.torus_norm(i) / eps);
            sum += w[i];
        }
        for (auto& v : w) v /= sum;
        hat_ = rfft(g.shape(), w);
    }

    double eps() const { return eps_; }
    const Grid& grid() const { return grid_; }
    const Mollifier& mollifier() const { return mollifier_; }
    const std::vector<cplx>& hat() const { return hat_; }

    std::vector<double> apply(const std::vector<double>& x) const {
        auto xh = rfft(grid_.shape(), x);
        for (std::size_t k = 0; k < xh.size(); ++k) xh[k] *= hat_[k];
        return irfft(grid_.shape(), xh);
    }

    /// Filter applied to a half spectrum, returning the real field.
    std::vector<double> apply_hat(const std::vector<cplx>& xh) const {
        std::vector<cplx> y(xh.size());
        for (std::size_t k = 0; k < xh.size(); ++k) y[k] = xh[k] * hat_[k];
        return irfft(grid_.shape(), y);
    }

private:
    Grid grid_;
    Mollifier mollifier_;
    double eps_;
    std::vector<cplx> hat_;
};

/// Walks one replica through the schedule, accumulating layers.
class ReplicaWalker {
public:
    ReplicaWalker(const FieldEnsemble& e, std::size_t replica);

    std::size_t layer() const { return layer_; }
    double t() const;
    bool at_end() const;

    /// Applies the next layer; returns false when already at t_max.
    bool advance();
    void run_to(std::size_t layer) {
        while (layer_ < layer && advance()) {
        }
    }

    /// X_t on the output grid (cached until the next advance).
    const std::vector<double>& field();
    /// Half spectrum of X_t on the output grid.
    std::vector<cplx> field_hat() { return rfft(out_shape_, field()); }
    /// Increment of the last applied layer on the output grid.
    std::vector<double> last_increment();
    /// X_{t,eps} on the output grid.
    std::vector<double> mollified(const MollifierFilter& f);

private:
    void add_base();
    std::vector<cplx> noise_hat(std::uint32_t layer, StreamTag tag) const;

    const FieldEnsemble& e_;
    std::size_t replica_;
    std::size_t layer_ = 0;
    Shape out_shape_;
    std::vector<cplx> acc_;       // cumulative half spectrum, generation grid
    std::vector<cplx> last_inc_;  // last increment half spectrum
    std::vector<cplx> bridge_partner_;
    std::vector<double> base_real_;  // non-stationary base field (generation grid)
    std::vector<double> field_;
    bool field_valid_ = false;
};

/// Replicated layered field X_t with deterministic per-replica streams.
class FieldEnsemble {
public:
    FieldEnsemble(KernelSpec spec, Grid grid, LayerSchedule schedule, std::size_t replicas, std::uint64_t seed,
                  SynthOptions opt = {})
        : spec_(std::move(spec)), grid_(grid), schedule_(std::move(schedule)), replicas_(replicas), seed_(seed),
          opt_(opt) {
        require(spec_.d == grid_.d, "kernel and grid dimensions differ");
        require(opt_.dt_split == 1 || opt_.dt_split == 2, "dt_split must be 1 or 2");
        require(opt_.restrict_factor == 1 || opt_.restrict_factor == 2, "restrict_factor must be 1 or 2");
        require(replicas_ >= 1, "need at least one replica");
        schedule_.validate(grid_);
        if (!(1.0 < grid_.side / 2.0)) {
            throw DomainError("kappa support (radius 1) must fit within half the torus period");
        }
        gen_grid_ = grid_.refined(opt_.restrict_factor);
        noise_schedule_ = schedule_;
        walk_schedule_ = opt_.dt_split == 2 ? schedule_.halved() : schedule_;
        build_spectra();
    }

    const KernelSpec& spec() const { return spec_; }
    const Grid& grid() const { return grid_; }
    const Grid& generation_grid() const { return gen_grid_; }
    /// Schedule actually walked (halved when dt_split = 2).
    const LayerSchedule& schedule() const { return walk_schedule_; }
    const LayerSchedule& noise_schedule() const { return noise_schedule_; }
    std::size_t replicas() const { return replicas_; }
    std::uint64_t seed() const { return seed_; }
    const SynthOptions& options() const { return opt_; }
    double clipped_mass() const { return clipped_mass_; }
    std::string generator() const { return generator_algorithm(); }

    ReplicaWalker walker(std::size_t replica) const {
        require(replica < replicas_, "replica index out of range");
        return ReplicaWalker(*this, replica);
    }

    /// X at schedule layer `layer` (number of applied layers) for one replica.
    std::vector<double> field(std::size_t replica, std::size_t layer) const {
        auto w = walker(replica);
        w.run_to(layer);
        return w.field();
    }

    std::vector<double> final_field(std::size_t replica) const { return field(replica, schedule().layers()); }

    std::vector<double> layer_increment(std::size_t replica, std::size_t layer) const {
        require(layer >= 1 && layer <= schedule().layers(), "layer index out of range");
        auto w = walker(replica);
        w.run_to(layer);
        return w.last_increment();
    }

    /// First row of the output-grid covariance of X at `layer` (continuum
    /// kernel sampled at torus distances, K0 included).
    std::vector<double> covariance_row(std::size_t layer) const {
        const double t = schedule().t[layer];
        std::vector<double> row(grid_.size());
        for (std::size_t i = 0; i < row.size(); ++i) {
            const double r = grid_.torus_norm(i);
            row[i] = spec_.star(r, t, true) + (spec_.k0.is_stationary() ? spec_.k0.radial(r) : 0.0);
        }
        return row;
    }

    /// Output-grid spectrum of X at `layer` (cached).
    const std::vector<double>& output_spectrum(std::size_t layer) const {
        if (auto it = out_spec_cache_.find(layer); it != out_spec_cache_.end()) return it->second;
        auto c = rfft(grid_.shape(), covariance_row(layer));
        std::vector<double> s(c.size());
        for (std::size_t k = 0; k < c.size(); ++k) s[k] = std::max(0.0, c[k].real());
        return out_spec_cache_.emplace(layer, std::move(s)).first->second;
    }

    /// Exact discrete variance of X_t(x) (stationary part plus K0(x,x)).
    double variance(std::size_t layer) const {
        return schedule().t[layer] + (spec_.k0.is_stationary() ? spec_.k0.radial(0.0) : 0.0);
    }

    /// Exact discrete variance of the mollified field X_{t,eps}(x) when K is stationary.
    double mollified_variance(std::size_t layer, const MollifierFilter& f) const {
        require(spec_.k0.is_stationary(), "mollified variance array needed for non-stationary K0");
        const auto& s = output_spectrum(layer);
        const Shape sh = grid_.shape();
        double acc = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) acc += sh.half_weight(k) * s[k] * std::norm(f.hat()[k]);
        return acc / static_cast<double>(sh.size());
    }

    /// Per-site variance of X_t or X_{t,eps}; handles non-stationary K0.
    std::vector<double> diag_variance(std::size_t layer, const MollifierFilter* f = nullptr) const {
        if (spec_.k0.is_stationary()) {
            return std::vector<double>(grid_.size(), f ? mollified_variance(layer, *f) : variance(layer));
        }
        // Non-stationary K0: stationary star part plus the filtered K0 Gram diagonal.
        KernelSpec star_only = spec_;
        star_only.k0 = SmoothKernel::zero();
        std::vector<double> out(grid_.size());
        const std::size_t n = grid_.size();
        std::vector<double> w(n, 0.0);
        if (f) {
            std::vector<cplx> wh = f->hat();
            w = irfft(grid_.shape(), wh);
        } else {
            w[0] = 1.0;
        }
        std::vector<std::size_t> supp;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(w[i]) > 0.0) supp.push_back(i);
        double star_var = 0.0;
        {
            const double t = schedule().t[layer];
            std::vector<double> row(n);
            for (std::size_t i = 0; i < n; ++i) row[i] = star_only.star(grid_.torus_norm(i), t, true);
            auto s = rfft(grid_.shape(), row);
            const Shape sh = grid_.shape();
            std::vector<cplx> wh = f ? f->hat() : std::vector<cplx>(s.size(), cplx(1.0, 0.0));
            for (std::size_t k = 0; k < s.size(); ++k)
                star_var += sh.half_weight(k) * std::max(0.0, s[k].real()) * std::norm(wh[k]);
            star_var /= static_cast<double>(n);
        }
        for (std::size_t x = 0; x < n; ++x) {
            double acc = 0.0;
            for (std::size_t a : supp)
                for (std::size_t b : supp) {
                    const std::size_t ya = (x + n - a) % n, yb = (x + n - b) % n;
                    acc += w[a] * w[b] * spec_.k0(grid_.point(ya), grid_.point(yb), grid_.d);
                }
            out[x] = acc + star_var;
        }
        return out;
    }

private:
    friend class ReplicaWalker;

    std::vector<double> layer_spectrum(double t0, double t1) {
        const std::size_t n = gen_grid_.size();
        std::vector<double> row(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = gen_grid_.torus_norm(i);
            row[i] = spec_.star(r, t1, true) - spec_.star(r, t0, true);
        }
        return clip(rfft(gen_grid_.shape(), row));
    }

    std::vector<double> clip(const std::vector<cplx>& c) {
        const Shape sh = gen_grid_.shape();
        std::vector<double> s(c.size());
        double neg = 0.0, tot = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double v = c[k].real();
            tot += sh.half_weight(k) * std::abs(v);
            if (v < 0.0) neg += sh.half_weight(k) * -v;
            s[k] = std::max(0.0, v);
        }
        const double frac = tot > 0.0 ? neg / tot : 0.0;
        clipped_mass_ = std::max(clipped_mass_, frac);
        if (frac > opt_.max_clipped_mass) {
            throw SynthesisAccuracyError("clipped spectral mass " + std::to_string(frac) + " exceeds " +
                                         std::to_string(opt_.max_clipped_mass));
        }
        return s;
    }

    void build_spectra() {
        const auto& ts = walk_schedule_.t;
        spectra_.resize(walk_schedule_.layers());
        for (std::size_t i = 0; i < spectra_.size(); ++i) spectra_[i] = layer_spectrum(ts[i], ts[i + 1]);
        if (!spec_.k0.is_zero()) {
            if (spec_.k0.is_stationary()) {
                std::vector<double> row(gen_grid_.size());
                for (std::size_t i = 0; i < row.size(); ++i) row[i] = spec_.k0.radial(gen_grid_.torus_norm(i));
                base_spec_ = clip(rfft(gen_grid_.shape(), row));
            } else {
                const std::size_t n = gen_grid_.size();
                if (n > 2048) throw DomainError("non-stationary K0 needs dense factorisation; grid exceeds 2048 sites");
                Eigen::MatrixXd g(n, n);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) g(i, j) = spec_.k0(gen_grid_.point(i), gen_grid_.point(j), gen_grid_.d);
                const double jitter = 1e-10 * g.trace() / n;
                Eigen::LLT<Eigen::MatrixXd> llt(g);
                if (llt.info() != Eigen::Success) {
                    g.diagonal().array() += jitter;
                    llt.compute(g);
                }
                if (llt.info() != Eigen::Success) throw NotPositiveDefinite("K0 Gram factorisation failed");
                base_chol_ = llt.matrixL();
            }
        }
    }

    KernelSpec spec_;
    Grid grid_;
    Grid gen_grid_;
    LayerSchedule schedule_;
    LayerSchedule noise_schedule_;
    LayerSchedule walk_schedule_;
    std::size_t replicas_;
    std::uint64_t seed_;
    SynthOptions opt_;
    std::vector<std::vector<double>> spectra_;  // per walked layer, generation grid
    std::optional<std::vector<double>> base_spec_;
    std::optional<Eigen::MatrixXd> base_chol_;
    double clipped_mass_ = 0.0;
    mutable std::map<std::size_t, std::vector<double>> out_spec_cache_;
};

// ---------------------------------------------------------------------------

inline ReplicaWalker::ReplicaWalker(const FieldEnsemble& e, std::size_t replica)
    : e_(e), replica_(replica), out_shape_(e.grid_.shape()) {
    acc_.assign(e_.gen_grid_.shape().half_size(), cplx(0.0, 0.0));
    add_base();
}

inline double ReplicaWalker::t() const { return e_.walk_schedule_.t[layer_]; }
inline bool ReplicaWalker::at_end() const { return layer_ >= e_.walk_schedule_.layers(); }

inline void ReplicaWalker::add_base() {
    if (e_.spec_.k0.is_zero()) return;
    const Shape sh = e_.gen_grid_.shape();
    if (e_.base_spec_) {
        const auto zh = noise_hat(0, StreamTag::BaseField);
        for (std::size_t k = 0; k < zh.size(); ++k) acc_[k] += std::sqrt((*e_.base_spec_)[k]) * zh[k];
    } else {
        CounterStream cs(e_.seed_, static_cast<std::uint32_t>(replica_), 0, StreamTag::BaseField);
        const auto z = cs.normals(sh.size());
        Eigen::Map<const Eigen::VectorXd> zv(z.data(), z.size());
        Eigen::VectorXd x = (*e_.base_chol_) * zv;
        std::vector<double> xv(x.data(), x.data() + x.size());
        auto xh = rfft(sh, xv);
        for (std::size_t k = 0; k < xh.size(); ++k) acc_[k] += xh[k];
    }
}

/// Half spectrum of unit white noise on the generation grid.  With refined synthesis the
/// modes resolved by the output grid reuse the output-grid draws (scaled to the finer
/// lattice) and only the remaining modes are fresh, so refinement is coupled to the
/// unrefined run while the law stays that of fine-grid white noise.
inline std::vector<cplx> ReplicaWalker::noise_hat(std::uint32_t layer, StreamTag tag) const {
    const Shape sh = e_.gen_grid_.shape();
    const auto rep = static_cast<std::uint32_t>(replica_);
    CounterStream cs(e_.seed_, rep, layer, tag);
    const int factor = e_.opt_.restrict_factor;
    if (factor == 1) return rfft(sh, cs.normals(sh.size()));
    const Shape co = e_.grid_.shape();
    const auto zc = rfft(co, cs.normals(co.size()));
    CounterStream fs(e_.seed_, rep, layer, refined_tag(tag));
    auto zf = rfft(sh, fs.normals(sh.size()));
    const double scale = std::pow(static_cast<double>(factor), 0.5 * co.d);
    const long nc = co.n, nf = sh.n;
    const long hc = nc / 2 + 1, hf = nf / 2 + 1;
    // coarse Nyquist modes are real on the coarse grid but complex on the fine one: left fresh
    if (co.d == 1) {
        for (long k = 0; k < nc / 2; ++k) zf[k] = scale * zc[k];
        return zf;
    }
    for (long i0 = 0; i0 < nf; ++i0) {
        const long k0 = i0 <= nf / 2 ? i0 : i0 - nf;
        if (std::abs(k0) >= nc / 2) continue;
        const long c0 = k0 >= 0 ? k0 : k0 + nc;
        for (long k1 = 0; k1 < nc / 2; ++k1) zf[i0 * hf + k1] = scale * zc[c0 * hc + k1];
    }
    return zf;
}

inline bool ReplicaWalker::advance() {
    if (at_end()) return false;
    if (e_.opt_.dt_split == 1) {
        const auto zh = noise_hat(static_cast<std::uint32_t>(layer_), StreamTag::Layer);
        const auto& s = e_.spectra_[layer_];
        last_inc_.resize(zh.size());
        for (std::size_t k = 0; k < zh.size(); ++k) last_inc_[k] = std::sqrt(s[k]) * zh[k];
    } else if (layer_ % 2 == 0) {
        // First half of a parent layer: bridge split of the parent increment.
        const auto parent = static_cast<std::uint32_t>(layer_ / 2);
        const auto zh = noise_hat(parent, StreamTag::Layer);
        const auto wh = noise_hat(parent, StreamTag::Bridge);
        const auto& sa = e_.spectra_[layer_];
        const auto& sb = e_.spectra_[layer_ + 1];
        last_inc_.resize(zh.size());
        bridge_partner_.resize(zh.size());
        for (std::size_t k = 0; k < zh.size(); ++k) {
            const double s = sa[k] + sb[k];
            if (s <= 0.0) {
                last_inc_[k] = 0.0;
                bridge_partner_[k] = 0.0;
                continue;
            }
            const cplx y = std::sqrt(s) * zh[k];
            const cplx ya = (sa[k] / s) * y + std::sqrt(sa[k] * sb[k] / s) * wh[k];
            last_inc_[k] = ya;
            bridge_partner_[k] = y - ya;
        }
    } else {
        last_inc_ = bridge_partner_;
    }
    for (std::size_t k = 0; k < acc_.size(); ++k) acc_[k] += last_inc_[k];
    ++layer_;
    field_valid_ = false;
    return true;
}

namespace detail {

inline std::vector<double> restrict_to(const std::vector<double>& fine, const Grid& out, int factor) {
    if (factor == 1) return fine;
    std::vector<double> r(out.size());
    const std::size_t nf = static_cast<std::size_t>(out.n) * factor;
    if (out.d == 1) {
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = fine[i * factor];
    } else {
        for (std::size_t i = 0; i < static_cast<std::size_t>(out.n); ++i)
            for (std::size_t j = 0; j < static_cast<std::size_t>(out.n); ++j)
                r[i * out.n + j] = fine[(i * factor) * nf + j * factor];
    }
    return r;
}

}  // namespace detail

inline const std::vector<double>& ReplicaWalker::field() {
    if (!field_valid_) {
        field_ = detail::restrict_to(irfft(e_.gen_grid_.shape(), acc_), e_.grid_, e_.opt_.restrict_factor);
        field_valid_ = true;
    }
    return field_;
}

inline std::vector<double> ReplicaWalker::mollified(const MollifierFilter& f) {
    if (e_.opt_.restrict_factor == 1) return f.apply_hat(acc_);
    return f.apply(field());
}

inline std::vector<double> ReplicaWalker::last_increment() {
    require(layer_ > 0, "no layer applied yet");
    return detail::restrict_to(irfft(e_.gen_grid_.shape(), last_inc_), e_.grid_, e_.opt_.restrict_factor);
}

// ---------------------------------------------------------------------------
// operations

inline FieldEnsemble sample_layers(const KernelSpec& spec, const Grid& grid, const LayerSchedule& schedule,
                                   std::size_t replicas, std::uint64_t seed, SynthOptions opt = {}) {
    return FieldEnsemble(spec, grid, schedule, replicas, seed, opt);
}

/// X_{t,eps} for every replica (small ensembles; large runs mollify per walker).
inline std::vector<std::vector<double>> mollify(const FieldEnsemble& e, const Mollifier& m, double eps,
                                                std::size_t layer) {
    MollifierFilter f(e.grid(), m, eps);
    std::vector<std::vector<double>> out;
    out.reserve(e.replicas());
    for (std::size_t r = 0; r < e.replicas(); ++r) out.push_back(f.apply(e.field(r, layer)));
    return out;
}

/// Site indices and weights of a measure on the grid.
struct ResolvedMeasure {
    std::vector<std::size_t> sites;
    std::vector<double> weights;
};

inline ResolvedMeasure resolve(const Grid& g, const DiscreteMeasure& mu) {
    require(mu.atoms.size() == mu.weights.size(), "measure atoms and weights differ in length");
    ResolvedMeasure r;
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        r.sites.push_back(g.snap(mu.atoms[i]));
        r.weights.push_back(mu.weights[i]);
    }
    return r;
}

inline double pair(const std::vector<double>& x, const ResolvedMeasure& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.sites.size(); ++i) s += mu.weights[i] * x[mu.sites[i]];
    return s;
}

/// <X_t, mu> per replica.
inline std::vector<double> pair_with_measure(const FieldEnsemble& e, const DiscreteMeasure& mu, std::size_t layer) {
    const auto rm = resolve(e.grid(), mu);
    std::vector<double> out(e.replicas());
    for (std::size_t r = 0; r < e.replicas(); ++r) out[r] = pair(e.field(r, layer), rm);
    return out;
}

/// Exact Gaussian samples with covariance [K_eps(x_i, x_j)] (R x P matrix).
inline Eigen::MatrixXd cholesky_oracle(const KernelSpec& spec, const Mollifier& m, double eps,
                                       const std::vector<Point>& points, std::size_t R, std::uint64_t seed) {
    const std::size_t p = points.size();
    require(p >= 1 && p <= 2048, "cholesky_oracle supports 1..2048 points");
    Eigen::MatrixXd g(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j <= i; ++j) g(i, j) = g(j, i) = kernel_K_eps(spec, m, points[i], points[j], eps);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) {
        g.diagonal().array() += 1e-10 * g.trace() / p;
        llt.compute(g);
        if (llt.info() != Eigen::Success) throw NotPositiveDefinite("K_eps Gram matrix not positive definite");
    }
    const Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd out(R, p);
    for (std::size_t r = 0; r < R; ++r) {
        CounterStream cs(seed, static_cast<std::uint32_t>(r), 0, StreamTag::Cholesky);
        auto z = cs.normals(p);
        Eigen::Map<const Eigen::VectorXd> zv(z.data(), p);
        out.row(r) = (L * zv).transpose();
    }
    return out;
}

}  // namespace gmclab
