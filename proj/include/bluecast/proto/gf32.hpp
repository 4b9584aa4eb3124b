#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace bluecast::proto {

namespace detail {

struct GF32Tables {
    // exp is doubled so that log[a] + log[b] never needs a modulo.
    std::array<std::uint8_t, 62> exp{};
    std::array<std::uint8_t, 32> log{};
};

constexpr GF32Tables build_gf32_tables(unsigned poly)
{
    GF32Tables t{};
    unsigned x = 1;
    for (unsigned i = 0; i < 31; ++i) {
        t.exp[i] = static_cast<std::uint8_t>(x);
        t.exp[i + 31] = static_cast<std::uint8_t>(x);
        t.log[x] = static_cast<std::uint8_t>(i);
        x <<= 1;
        if (x & 32u) x ^= poly;
    }
    return t;
}

inline constexpr GF32Tables gf32_tables = build_gf32_tables(0x25);

} // namespace detail

/// Arithmetic in GF(2^5) generated by the primitive polynomial x^5 + x^2 + 1.
///
/// Elements are stored in polynomial (bit-vector) form. Addition is XOR;
/// multiplication goes through log/antilog tables built at compile time.
class GF32 {
public:
    static constexpr unsigned kBits = 5;
    static constexpr unsigned kSize = 1u << kBits;   // 32 elements
    static constexpr unsigned kOrder = kSize - 1;    // multiplicative group order
    static constexpr unsigned kPrimitivePoly = 0x25; // x^5 + x^2 + 1

    static constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) { return a ^ b; }

    static constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b)
    {
        if (a == 0 || b == 0) return 0;
        return tables().exp[tables().log[a] + tables().log[b]];
    }

    static constexpr std::uint8_t inv(std::uint8_t a)
    {
        if (a == 0) throw std::domain_error("GF32: zero has no inverse");
        return tables().exp[kOrder - tables().log[a]];
    }

    static constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) { return mul(a, inv(b)); }

    /// alpha^e for any integer e (reduced mod 31).
    static constexpr std::uint8_t pow_alpha(int e)
    {
        int r = e % static_cast<int>(kOrder);
        if (r < 0) r += kOrder;
        return tables().exp[r];
    }

    static constexpr unsigned log(std::uint8_t a)
    {
        if (a == 0) throw std::domain_error("GF32: log of zero");
        return tables().log[a];
    }

private:
    static constexpr const detail::GF32Tables& tables() { return detail::gf32_tables; }
};

inline constexpr std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) { return GF32::mul(a, b); }

} // namespace bluecast::proto
