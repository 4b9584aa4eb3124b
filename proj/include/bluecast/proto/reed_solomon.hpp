#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bluecast/proto/gf32.hpp"

namespace bluecast::proto {

using Symbols = std::vector<std::uint8_t>;

/// Raised when a requested code or frame layout cannot be represented.
class LayoutError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Maximum codeword length of a Reed-Solomon code over GF(2^5).
inline constexpr std::size_t kMaxCodewordLength = GF32::kOrder;

namespace detail {

inline void check_symbols(std::span<const std::uint8_t> s)
{
    for (auto v : s)
        if (v >= GF32::kSize) throw std::invalid_argument("symbol value out of range for GF(32): " + std::to_string(v));
}

// Generator polynomial prod_{j=1..n_parity} (x - alpha^j), highest degree first.
inline Symbols generator_poly(std::size_t n_parity)
{
    Symbols g{1};
    for (std::size_t j = 1; j <= n_parity; ++j) {
        const std::uint8_t root = GF32::pow_alpha(static_cast<int>(j));
        Symbols next(g.size() + 1, 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            next[i] ^= g[i];
            next[i + 1] ^= GF32::mul(g[i], root);
        }
        g = std::move(next);
    }
    return g;
}

// c(x) = sum c_i x^(n-1-i); returns c(alpha^j) for j = 1..n_parity.
inline Symbols syndromes(std::span<const std::uint8_t> codeword, std::size_t n_parity)
{
    Symbols s(n_parity, 0);
    for (std::size_t j = 0; j < n_parity; ++j) {
        const std::uint8_t x = GF32::pow_alpha(static_cast<int>(j + 1));
        std::uint8_t acc = 0;
        for (auto c : codeword) acc = GF32::mul(acc, x) ^ c;
        s[j] = acc;
    }
    return s;
}

// Evaluate a polynomial stored lowest degree first.
inline std::uint8_t eval_low_first(const Symbols& p, std::uint8_t x)
{
    std::uint8_t acc = 0;
    for (std::size_t i = p.size(); i-- > 0;) acc = GF32::mul(acc, x) ^ p[i];
    return acc;
}

// Berlekamp-Massey; returns the error locator lowest degree first.
inline Symbols berlekamp_massey(const Symbols& s)
{
    Symbols c{1};
    Symbols b{1};
    std::size_t l = 0;
    std::size_t m = 1;
    std::uint8_t bd = 1;
    for (std::size_t n = 0; n < s.size(); ++n) {
        std::uint8_t d = s[n];
        for (std::size_t i = 1; i <= l && i < c.size(); ++i) d ^= GF32::mul(c[i], s[n - i]);
        if (d == 0) {
            ++m;
            continue;
        }
        const std::uint8_t coef = GF32::div(d, bd);
        Symbols t = c;
        if (c.size() < b.size() + m) c.resize(b.size() + m, 0);
        for (std::size_t i = 0; i < b.size(); ++i) c[i + m] ^= GF32::mul(coef, b[i]);
        if (2 * l <= n) {
            l = n + 1 - l;
            b = std::move(t);
            bd = d;
            m = 1;
        } else {
            ++m;
        }
    }
    c.resize(l + 1, 0);
    return c;
}

} // namespace detail

/// Systematic RS encoding: returns data followed by n_parity check symbols.
inline Symbols rs_encode(std::span<const std::uint8_t> data, std::size_t n_parity)
{
    if (data.size() + n_parity > kMaxCodewordLength)
        throw LayoutError("RS codeword of " + std::to_string(data.size() + n_parity) + " symbols exceeds GF(32) bound of 31");
    detail::check_symbols(data);

    const Symbols g = detail::generator_poly(n_parity);
    Symbols work(data.begin(), data.end());
    work.resize(data.size() + n_parity, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::uint8_t coef = work[i];
        if (coef == 0) continue;
        for (std::size_t j = 1; j < g.size(); ++j) work[i + j] ^= GF32::mul(g[j], coef);
    }
    Symbols out(data.begin(), data.end());
    out.insert(out.end(), work.begin() + static_cast<std::ptrdiff_t>(data.size()), work.end());
    return out;
}

struct RsDecoded {
    Symbols data;
    std::size_t corrected = 0;
};

/// Decodes a (possibly shortened) codeword. Returns nullopt when the error
/// pattern is beyond the decoder's reach; a miscorrection is still possible
/// past floor(n_parity/2) errors and must be caught by a higher layer.
inline std::optional<RsDecoded> rs_decode(std::span<const std::uint8_t> received, std::size_t n_parity)
{
    if (received.size() > kMaxCodewordLength)
        throw LayoutError("received word longer than 31 symbols");
    if (received.size() < n_parity)
        throw LayoutError("received word shorter than the parity section");
    detail::check_symbols(received);

    const std::size_t n = received.size();
    const std::size_t k = n - n_parity;
    const Symbols s = detail::syndromes(received, n_parity);

    bool clean = true;
    for (auto v : s) clean = clean && v == 0;
    if (clean) return RsDecoded{Symbols(received.begin(), received.begin() + static_cast<std::ptrdiff_t>(k)), 0};

    const Symbols lambda = detail::berlekamp_massey(s);
    const std::size_t n_errors = lambda.size() - 1;
    if (n_errors == 0 || 2 * n_errors > n_parity) return std::nullopt;

    // Chien search over the positions that exist in the shortened word.
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < n; ++i) {
        const int power = static_cast<int>(n - 1 - i);
        if (detail::eval_low_first(lambda, GF32::pow_alpha(-power)) == 0) positions.push_back(i);
    }
    if (positions.size() != n_errors) return std::nullopt;

    // Forney with first consecutive root alpha^1.
    Symbols omega(n_parity, 0);
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < lambda.size() && i + j < n_parity; ++j)
            omega[i + j] ^= GF32::mul(s[i], lambda[j]);

    Symbols lambda_deriv(lambda.size() > 1 ? lambda.size() - 1 : 1, 0);
    for (std::size_t i = 1; i < lambda.size(); i += 2) lambda_deriv[i - 1] = lambda[i];

    Symbols corrected(received.begin(), received.end());
    for (auto pos : positions) {
        const int power = static_cast<int>(n - 1 - pos);
        const std::uint8_t x_inv = GF32::pow_alpha(-power);
        const std::uint8_t denom = detail::eval_low_first(lambda_deriv, x_inv);
        if (denom == 0) return std::nullopt;
        corrected[pos] ^= GF32::div(detail::eval_low_first(omega, x_inv), denom);
    }

    for (auto v : detail::syndromes(corrected, n_parity))
        if (v != 0) return std::nullopt;

    return RsDecoded{Symbols(corrected.begin(), corrected.begin() + static_cast<std::ptrdiff_t>(k)), positions.size()};
}

} // namespace bluecast::proto
