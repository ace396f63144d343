#pragma once
// FFTW3 plans cached per (kind, shape).  Plans are built with FFTW_ESTIMATE so
// the chosen algorithm, and hence every output bit, is the same on each run.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "gmclab/error.hpp"

namespace gmclab {

using cplx = std::complex<double>;

/// Periodic array shape N^d, d in {1,2}, row-major with the last axis fastest.
struct Shape {
    int d = 1;
    int n = 1;

    std::size_t size() const { return d == 1 ? std::size_t(n) : std::size_t(n) * n; }
    /// Length of the Hermitian half spectrum (last axis truncated to n/2+1).
    std::size_t half_size() const {
        const std::size_t h = std::size_t(n) / 2 + 1;
        return d == 1 ? h : std::size_t(n) * h;
    }
    /// Multiplicity of a half-spectrum bin in the full spectrum (1 or 2).
    double half_weight(std::size_t k) const {
        const std::size_t h = std::size_t(n) / 2 + 1;
        const std::size_t last = k % h;
        return (last == 0 || last == h - 1) ? 1.0 : 2.0;
    }
    bool operator<(const Shape& o) const { return std::tie(d, n) < std::tie(o.d, o.n); }
};

namespace detail {

enum class PlanKind { R2C, C2R, Forward, Backward };

inline fftw_plan get_plan(PlanKind kind, const Shape& s) {
    static std::mutex mtx;
    static std::map<std::pair<int, Shape>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(mtx);
    const auto key = std::make_pair(static_cast<int>(kind), s);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    int dims[2] = {s.n, s.n};
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::vector<double> r(s.size());
    std::vector<cplx> c(kind == PlanKind::R2C || kind == PlanKind::C2R ? s.half_size() : s.size());
    auto* cp = reinterpret_cast<fftw_complex*>(c.data());
    fftw_plan p = nullptr;
    switch (kind) {
        case PlanKind::R2C: p = fftw_plan_dft_r2c(s.d, dims, r.data(), cp, flags); break;
        case PlanKind::C2R: p = fftw_plan_dft_c2r(s.d, dims, cp, r.data(), flags); break;
        case PlanKind::Forward: p = fftw_plan_dft(s.d, dims, cp, cp, FFTW_FORWARD, flags); break;
        case PlanKind::Backward: p = fftw_plan_dft(s.d, dims, cp, cp, FFTW_BACKWARD, flags); break;
    }
    if (!p) throw Error("FFTW planning failed");
    cache.emplace(key, p);
    return p;
}

}  // namespace detail

/// Unnormalised forward real-to-half-complex transform (sign -1).
inline void fft_r2c(const Shape& s, const double* in, cplx* out) {
    fftw_execute_dft_r2c(detail::get_plan(detail::PlanKind::R2C, s), const_cast<double*>(in),
                         reinterpret_cast<fftw_complex*>(out));
}

/// Unnormalised inverse half-complex-to-real transform (sign +1).  `in` is preserved.
inline void fft_c2r(const Shape& s, const cplx* in, double* out) {
    std::vector<cplx> tmp(in, in + s.half_size());
    fftw_execute_dft_c2r(detail::get_plan(detail::PlanKind::C2R, s),
                         reinterpret_cast<fftw_complex*>(tmp.data()), out);
}

/// Unnormalised complex transform in place; sign -1 forward, +1 backward.
inline void fft_c2c(const Shape& s, cplx* data, int sign) {
    auto kind = sign < 0 ? detail::PlanKind::Forward : detail::PlanKind::Backward;
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(detail::get_plan(kind, s), p, p);
}

inline std::vector<cplx> rfft(const Shape& s, const std::vector<double>& x) {
    std::vector<cplx> out(s.half_size());
    fft_r2c(s, x.data(), out.data());
    return out;
}

/// Normalised inverse (divides by N^d).
inline std::vector<double> irfft(const Shape& s, const std::vector<cplx>& xh) {
    std::vector<double> out(s.size());
    fft_c2r(s, xh.data(), out.data());
    const double inv = 1.0 / static_cast<double>(s.size());
    for (auto& v : out) v *= inv;
    return out;
}

}  // namespace gmclab
