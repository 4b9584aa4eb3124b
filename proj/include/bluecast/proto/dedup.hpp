#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "bluecast/proto/frame.hpp"

namespace bluecast::proto {

/// Minimum camera-frame spacing between consecutively numbered data frames.
inline int separation(double camera_rate, double display_rate)
{
    if (camera_rate <= 0 || display_rate <= 0) throw std::invalid_argument("frame rates must be positive");
    const int sep = static_cast<int>(2.0 * camera_rate / display_rate + 1e-9);
    if (sep < 1) throw std::invalid_argument("camera rate too low for the display rate");
    return sep;
}

/// Sequence numbers more than this far ahead are treated as stale.
inline constexpr unsigned kSeqUnwrapWindow = 16;

struct DedupState {
    std::optional<unsigned> last_seq;
    std::optional<std::int64_t> last_frame_index;
    int sep = 4;

    static DedupState for_rates(double camera_rate, double display_rate)
    {
        DedupState s;
        s.sep = separation(camera_rate, display_rate);
        return s;
    }
};

enum class DedupDecision { accept, duplicate, too_close, stale };

inline const char* to_string(DedupDecision d)
{
    switch (d) {
    case DedupDecision::accept: return "accept";
    case DedupDecision::duplicate: return "duplicate";
    case DedupDecision::too_close: return "too_close";
    case DedupDecision::stale: return "stale";
    }
    return "?";
}

/// Accepts a decoded frame iff its sequence advance x satisfies 1 <= x < 16 and
/// it arrived at least x * sep camera frames after the last accepted frame.
inline DedupDecision dedup_accept(DedupState& state, unsigned seq, std::int64_t frame_index)
{
    if (seq >= kSeqModulus) throw std::invalid_argument("sequence number out of range");
    if (!state.last_seq) {
        state.last_seq = seq;
        state.last_frame_index = frame_index;
        return DedupDecision::accept;
    }
    const unsigned x = (seq + kSeqModulus - *state.last_seq) % kSeqModulus;
    if (x == 0) return DedupDecision::duplicate;
    if (x >= kSeqUnwrapWindow) return DedupDecision::stale;
    if (frame_index - *state.last_frame_index < static_cast<std::int64_t>(x) * state.sep) return DedupDecision::too_close;
    state.last_seq = seq;
    state.last_frame_index = frame_index;
    return DedupDecision::accept;
}

/// Unwraps accepted 5-bit sequence numbers into a monotone counter.
class SeqUnwrapper {
public:
    std::int64_t push(unsigned seq)
    {
        if (!last_) {
            last_ = seq;
            value_ = seq;
            return value_;
        }
        const unsigned x = (seq + kSeqModulus - *last_) % kSeqModulus;
        value_ += x;
        last_ = seq;
        return value_;
    }

private:
    std::optional<unsigned> last_;
    std::int64_t value_ = 0;
};

} // namespace bluecast::proto
