#pragma once

#include <cstdint>
#include <span>

#include "bluecast/proto/bits.hpp"

namespace bluecast::proto {

/// BSD rotate-and-add checksum on a 5-bit register.
///
/// The input is consumed as 5-bit symbols (MSB-first). For each symbol the
/// register is rotated right by one bit and the symbol is added mod 32.
inline std::uint8_t bsd5(std::span<const std::uint8_t> bits)
{
    unsigned reg = 0;
    for (auto s : bits_to_symbols(bits)) {
        reg = ((reg >> 1) | ((reg & 1u) << 4)) & 0x1Fu;
        reg = (reg + s) & 0x1Fu;
    }
    return static_cast<std::uint8_t>(reg);
}

} // namespace bluecast::proto
