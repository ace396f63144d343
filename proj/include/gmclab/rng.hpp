#pragma once
// Counter-based random streams.  Every (seed, replica, layer, tag) tuple maps to
// its own ChaCha20 keystream, so a replica can be regenerated alone and in any
// order with bit-identical output.

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gmclab/error.hpp"

namespace gmclab {

/// Purpose tags keep streams for different uses disjoint.
enum class StreamTag : std::uint32_t {
    Layer = 1,
    BaseField = 2,
    Cholesky = 3,
    Bootstrap = 4,
    Permutation = 5,
    Sampling = 6,
    Bridge = 7,
};

/// Companion tag for the extra modes drawn when synthesising on a refined grid.
inline StreamTag refined_tag(StreamTag t) { return static_cast<StreamTag>(static_cast<std::uint32_t>(t) | 0x100u); }

inline std::string generator_algorithm() {
    return std::string("chacha20-ietf keystream (libsodium ") + sodium_version_string() +
           "), key=sha256(seed), nonce=(replica,layer,tag), marsaglia-polar normals, refined grids share resolved modes v3";
}

class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint32_t replica, std::uint32_t layer, StreamTag tag) {
        if (sodium_init() < 0) throw Error("libsodium initialisation failed");
        std::array<unsigned char, 8> s{};
        for (int i = 0; i < 8; ++i) s[i] = static_cast<unsigned char>(seed >> (8 * i));
        crypto_hash_sha256(key_.data(), s.data(), s.size());
        put32(nonce_.data(), replica);
        put32(nonce_.data() + 4, layer);
        put32(nonce_.data() + 8, static_cast<std::uint32_t>(tag));
    }

    /// Fills `out` with raw 64-bit words continuing from the current block counter.
    void fill_bits(std::span<std::uint64_t> out) {
        if (out.empty()) return;
        std::vector<unsigned char> buf(out.size() * 8 + 64, 0);
        const std::size_t blocks = (out.size() * 8 + 63) / 64;
        crypto_stream_chacha20_ietf_xor_ic(buf.data(), buf.data(), blocks * 64, nonce_.data(),
                                           block_, key_.data());
        block_ += static_cast<std::uint32_t>(blocks);
        std::memcpy(out.data(), buf.data(), out.size() * 8);
    }

    /// Uniforms on the open interval (0,1) with 53 random bits.
    void fill_uniform(std::span<double> out) {
        std::vector<std::uint64_t> bits(out.size());
        fill_bits(bits);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_unit(bits[i]);
    }

    /// Standard normals by the Marsaglia polar method on consecutive word pairs.
    /// Rejected pairs are skipped, so consumption varies but stays deterministic.
    void fill_normal(std::span<double> out) {
        const std::size_t n = out.size();
        std::vector<std::uint64_t> bits;
        std::size_t j = 0;
        while (j < n) {
            // About 4/pi words per normal are needed; draw a little more.
            bits.resize(((n - j) * 13 / 10 + 16) & ~std::size_t(1));
            fill_bits(bits);
            for (std::size_t k = 0; k + 1 < bits.size() && j < n; k += 2) {
                const double x = 2.0 * to_unit(bits[k]) - 1.0;
                const double y = 2.0 * to_unit(bits[k + 1]) - 1.0;
                const double s = x * x + y * y;
                if (s >= 1.0) continue;
                const double f = std::sqrt(-2.0 * std::log(s) / s);
                out[j++] = x * f;
                if (j < n) out[j++] = y * f;
            }
        }
    }

    std::vector<double> normals(std::size_t n) {
        std::vector<double> v(n);
        fill_normal(v);
        return v;
    }

    /// Uniform indices in [0, n), floor(u*n); bias is below 2^-53 * n.
    std::vector<std::size_t> indices(std::size_t count, std::size_t n) {
        std::vector<double> u(count);
        fill_uniform(u);
        std::vector<std::size_t> idx(count);
        for (std::size_t i = 0; i < count; ++i) {
            idx[i] = std::min(n - 1, static_cast<std::size_t>(u[i] * static_cast<double>(n)));
        }
        return idx;
    }

    /// In-place Fisher-Yates shuffle driven by this stream.
    template <class T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        std::vector<double> u(v.size() - 1);
        fill_uniform(u);
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            auto j = std::min(i, static_cast<std::size_t>(u[i - 1] * static_cast<double>(i + 1)));
            std::swap(v[i], v[j]);
        }
    }

private:
    static void put32(unsigned char* p, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    static double to_unit(std::uint64_t b) {
        return (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
    }

    std::array<unsigned char, crypto_stream_chacha20_ietf_KEYBYTES> key_{};
    std::array<unsigned char, crypto_stream_chacha20_ietf_NONCEBYTES> nonce_{};
    std::uint32_t block_ = 0;
};

inline std::string sha256_hex(const std::string& bytes) {
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");
    std::array<unsigned char, crypto_hash_sha256_BYTES> d{};
    crypto_hash_sha256(d.data(), reinterpret_cast<const unsigned char*>(bytes.data()),
                       bytes.size());
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char c : d) {
        out.push_back(hex[c >> 4]);
        out.push_back(hex[c & 15]);
    }
    return out;
}

}  // namespace gmclab
