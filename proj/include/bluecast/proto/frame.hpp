#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bluecast/proto/bits.hpp"
#include "bluecast/proto/checksum.hpp"
#include "bluecast/proto/reed_solomon.hpp"

namespace bluecast::proto {

inline constexpr unsigned kSeqBits = 5;
inline constexpr unsigned kChecksumBits = 5;
inline constexpr unsigned kSeqModulus = 1u << kSeqBits;

/// Bit budget of one data frame on an M x N cell grid.
///
/// Serialized order: payload | seq | checksum | parity | pad. Pad bits
/// (M*N mod 5 of them, always zero) only exist for grids whose cell count is
/// not a whole number of symbols. Frames longer than one GF(32) codeword are
/// split into several RS blocks of near-equal size; message symbols of all
/// blocks come first, then the parity symbols of all blocks.
class FrameLayout {
public:
    FrameLayout() = default;

    static FrameLayout make(std::size_t rows, std::size_t cols, std::size_t parity_bits)
    {
        FrameLayout l;
        l.rows_ = rows;
        l.cols_ = cols;
        l.parity_bits_ = parity_bits;
        const std::size_t cells = rows * cols;
        if (rows == 0 || cols == 0) throw LayoutError("grid must be non-empty");
        if (parity_bits % 5 != 0) throw LayoutError("parity bits must be whole 5-bit symbols");
        l.pad_bits_ = cells % 5;
        const std::size_t usable = cells - l.pad_bits_;
        if (usable < kSeqBits + kChecksumBits + parity_bits)
            throw LayoutError("grid " + std::to_string(rows) + "x" + std::to_string(cols) + " too small for " +
                              std::to_string(parity_bits) + " parity bits");
        l.data_bits_ = usable - kSeqBits - kChecksumBits - parity_bits;

        const std::size_t total_symbols = usable / 5;
        const std::size_t message_symbols = (l.data_bits_ + kSeqBits + kChecksumBits) / 5;
        const std::size_t parity_symbols = parity_bits / 5;
        const std::size_t blocks = (total_symbols + kMaxCodewordLength - 1) / kMaxCodewordLength;
        for (std::size_t b = 0; b < blocks; ++b) {
            Block blk;
            blk.message = message_symbols / blocks + (b < message_symbols % blocks ? 1 : 0);
            blk.parity = parity_symbols / blocks + (b < parity_symbols % blocks ? 1 : 0);
            if (blk.message + blk.parity > kMaxCodewordLength) throw LayoutError("RS block exceeds 31 symbols");
            l.blocks_.push_back(blk);
        }
        return l;
    }

    /// Parity fractions used for the published grid sizes (50/60/70/80 %).
    static FrameLayout standard(std::size_t rows, std::size_t cols)
    {
        const std::size_t cells = rows * cols;
        double fraction = 0.5;
        if (cells >= 900) fraction = 0.8;
        else if (cells >= 400) fraction = 0.7;
        else if (cells >= 200) fraction = 0.6;
        else if (cells < 100) fraction = 0.4;
        const std::size_t usable = cells - cells % 5;
        std::size_t parity = static_cast<std::size_t>(fraction * static_cast<double>(cells) + 0.5);
        parity -= parity % 5;
        parity = std::min(parity, usable - kSeqBits - kChecksumBits);
        return make(rows, cols, parity);
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t cells() const { return rows_ * cols_; }
    std::size_t data_bits() const { return data_bits_; }
    std::size_t parity_bits() const { return parity_bits_; }
    std::size_t pad_bits() const { return pad_bits_; }
    std::size_t seq_bits() const { return kSeqBits; }
    std::size_t checksum_bits() const { return kChecksumBits; }
    std::size_t message_bits() const { return data_bits_ + kSeqBits + kChecksumBits; }
    double parity_fraction() const { return static_cast<double>(parity_bits_) / static_cast<double>(cells()); }

    struct Block {
        std::size_t message = 0;
        std::size_t parity = 0;
        bool operator==(const Block&) const = default;
    };
    const std::vector<Block>& blocks() const { return blocks_; }

    bool operator==(const FrameLayout&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t parity_bits_ = 0;
    std::size_t data_bits_ = 0;
    std::size_t pad_bits_ = 0;
    std::vector<Block> blocks_;
};

struct DataFrame {
    Bits payload;
    unsigned seq = 0;
};

inline Bits assemble_frame(std::span<const std::uint8_t> payload, unsigned seq, const FrameLayout& layout)
{
    if (payload.size() != layout.data_bits())
        throw LayoutError("payload has " + std::to_string(payload.size()) + " bits, layout expects " +
                          std::to_string(layout.data_bits()));
    if (seq >= kSeqModulus) throw LayoutError("sequence number out of range");

    Bits covered(payload.begin(), payload.end());
    const Bits seq_bits = uint_to_bits(seq, kSeqBits);
    covered.insert(covered.end(), seq_bits.begin(), seq_bits.end());
    const std::uint8_t checksum = bsd5(covered);
    const Bits cs_bits = uint_to_bits(checksum, kChecksumBits);
    covered.insert(covered.end(), cs_bits.begin(), cs_bits.end());

    const Symbols message = bits_to_symbols(covered);
    Symbols parity_all;
    std::size_t offset = 0;
    for (const auto& blk : layout.blocks()) {
        const Symbols cw = rs_encode(std::span(message).subspan(offset, blk.message), blk.parity);
        parity_all.insert(parity_all.end(), cw.begin() + static_cast<std::ptrdiff_t>(blk.message), cw.end());
        offset += blk.message;
    }

    Bits out = covered;
    const Bits parity_bits = symbols_to_bits(parity_all);
    out.insert(out.end(), parity_bits.begin(), parity_bits.end());
    out.resize(layout.cells(), 0);
    return out;
}

enum class FrameError { rs_failure, checksum_mismatch };

inline const char* to_string(FrameError e)
{
    return e == FrameError::rs_failure ? "rs_failure" : "checksum_mismatch";
}

struct ParsedFrame {
    Bits payload;
    unsigned seq = 0;
    std::size_t corrected = 0;
};

using ParseResult = std::variant<ParsedFrame, FrameError>;

inline ParseResult parse_frame(std::span<const std::uint8_t> bits, const FrameLayout& layout)
{
    if (bits.size() != layout.cells())
        throw LayoutError("frame has " + std::to_string(bits.size()) + " bits, layout expects " +
                          std::to_string(layout.cells()));

    const Symbols symbols = bits_to_symbols(bits.first(layout.cells() - layout.pad_bits()));
    const std::size_t message_symbols = layout.message_bits() / 5;

    Symbols message;
    std::size_t corrected = 0;
    std::size_t msg_off = 0;
    std::size_t par_off = message_symbols;
    for (const auto& blk : layout.blocks()) {
        Symbols word(symbols.begin() + static_cast<std::ptrdiff_t>(msg_off),
                     symbols.begin() + static_cast<std::ptrdiff_t>(msg_off + blk.message));
        word.insert(word.end(), symbols.begin() + static_cast<std::ptrdiff_t>(par_off),
                    symbols.begin() + static_cast<std::ptrdiff_t>(par_off + blk.parity));
        auto decoded = rs_decode(word, blk.parity);
        if (!decoded) return FrameError::rs_failure;
        message.insert(message.end(), decoded->data.begin(), decoded->data.end());
        corrected += decoded->corrected;
        msg_off += blk.message;
        par_off += blk.parity;
    }

    const Bits msg_bits = symbols_to_bits(message);
    const std::size_t covered_len = layout.data_bits() + kSeqBits;
    const std::span<const std::uint8_t> covered(msg_bits.data(), covered_len);
    const unsigned checksum = bits_to_uint(std::span(msg_bits).subspan(covered_len, kChecksumBits));
    if (bsd5(covered) != checksum) return FrameError::checksum_mismatch;

    ParsedFrame out;
    out.payload.assign(msg_bits.begin(), msg_bits.begin() + static_cast<std::ptrdiff_t>(layout.data_bits()));
    out.seq = bits_to_uint(std::span(msg_bits).subspan(layout.data_bits(), kSeqBits));
    out.corrected = corrected;
    return out;
}

/// PN9 sequence (x^9 + x^5 + 1, register seeded with ones), one bit per cell.
inline Bits whitening_mask(std::size_t n)
{
    Bits out(n);
    unsigned s = 0x1ff;
    for (auto& b : out) {
        b = static_cast<std::uint8_t>(s & 1u);
        const unsigned fb = (s ^ (s >> 5)) & 1u;
        s = (s >> 1) | (fb << 8);
    }
    return out;
}

/// XOR with the PN9 mask; its own inverse. Applied between the frame word and
/// the screen cells so that uniform cell patterns (all cells pushed one way by
/// a content change) do not read back as the all-zero codeword.
inline Bits whiten(std::span<const std::uint8_t> bits)
{
    Bits out = whitening_mask(bits.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= bits[i];
    return out;
}

/// Screen cell bits for a data frame.
inline Bits frame_to_cells(std::span<const std::uint8_t> payload, unsigned seq, const FrameLayout& layout)
{
    return whiten(assemble_frame(payload, seq, layout));
}

inline ParseResult parse_cells(std::span<const std::uint8_t> cells, const FrameLayout& layout)
{
    if (cells.size() != layout.cells())
        throw LayoutError("frame has " + std::to_string(cells.size()) + " bits, layout expects " + std::to_string(layout.cells()));
    return parse_frame(whiten(cells), layout);
}

} // namespace bluecast::proto
