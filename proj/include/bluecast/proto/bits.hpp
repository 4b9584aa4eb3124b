#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace bluecast {

/// One bit per element, values 0 or 1.
using Bits = std::vector<std::uint8_t>;

namespace proto {

/// Packs bits MSB-first into 5-bit symbols. Length must be a multiple of 5.
inline std::vector<std::uint8_t> bits_to_symbols(std::span<const std::uint8_t> bits)
{
    if (bits.size() % 5 != 0) throw std::invalid_argument("bit count is not a multiple of 5");
    std::vector<std::uint8_t> out(bits.size() / 5, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        out[i / 5] = static_cast<std::uint8_t>((out[i / 5] << 1) | (bits[i] & 1u));
    return out;
}

inline Bits symbols_to_bits(std::span<const std::uint8_t> symbols)
{
    Bits out;
    out.reserve(symbols.size() * 5);
    for (auto s : symbols)
        for (int b = 4; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((s >> b) & 1u));
    return out;
}

inline Bits uint_to_bits(unsigned value, unsigned width)
{
    Bits out(width);
    for (unsigned i = 0; i < width; ++i) out[i] = static_cast<std::uint8_t>((value >> (width - 1 - i)) & 1u);
    return out;
}

inline unsigned bits_to_uint(std::span<const std::uint8_t> bits)
{
    unsigned v = 0;
    for (auto b : bits) v = (v << 1) | (b & 1u);
    return v;
}

/// Bytes to bits, MSB of each byte first.
inline Bits bytes_to_bits(std::span<const std::uint8_t> bytes)
{
    Bits out;
    out.reserve(bytes.size() * 8);
    for (auto byte : bytes)
        for (int b = 7; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((byte >> b) & 1u));
    return out;
}

/// Bits to bytes; a trailing partial byte is zero-padded on the right.
inline std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits)
{
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    return out;
}

inline std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("hamming_distance: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
    return d;
}

} // namespace proto
} // namespace bluecast
