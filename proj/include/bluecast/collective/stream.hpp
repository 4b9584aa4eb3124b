#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bluecast/collective/decoder.hpp"
#include "bluecast/collective/triples.hpp"
#include "bluecast/proto/dedup.hpp"
#include "bluecast/proto/frame.hpp"

namespace bluecast::collective {

/// Triples whose first and last views are identical carry no Manchester
/// transition; every decoder maps them to a constant word, and the all-zero
/// word is a valid frame.
inline constexpr double kMinPhaseScore = 1e-9;

struct StreamDecodeConfig {
    proto::FrameLayout layout;
    double camera_rate = 120;
    double display_rate = 60;
    /// Non-maximum suppression radius over phase scores; negative decodes
    /// every candidate triple.
    int nms_radius = -1;
    int repeat = 1; ///< display repeats per frame of the sender
    /// Deliver nothing until two decoded frames agree on sequence advance and
    /// timing; the dedup rule alone trusts whichever frame arrives first.
    bool confirm_lock = true;
};

/// NMS radius matching the pair period (half a period on each side).
inline int default_nms_radius(double camera_rate, double display_rate, int repeat = 1)
{
    return pair_period(camera_rate, display_rate, repeat) / 2;
}

struct Delivered {
    unsigned seq = 0;
    std::int64_t sequence = 0; ///< unwrapped
    Bits payload;
    int frame_index = 0;
};

struct FrameLogRow {
    int frame_index = 0;
    double phase_score = 0;
    std::optional<unsigned> seq;
    std::size_t corrected = 0;
    std::string decision; ///< accept, no_signal, rs_failure, checksum_mismatch, duplicate, too_close, stale, unconfirmed
};

struct StreamDecodeResult {
    std::vector<Delivered> delivered;
    std::vector<FrameLogRow> log;
    std::size_t decoder_calls = 0;
};

/// Decodes candidate triples in stream order, screens them through RS,
/// checksum and Sep-based dedup, and delivers accepted payloads.
inline StreamDecodeResult decode_stream(const std::vector<FrameTriple>& triples, const TripleDecoder& decoder,
                                        const StreamDecodeConfig& cfg)
{
    StreamDecodeResult out;
    proto::DedupState dedup = proto::DedupState::for_rates(cfg.camera_rate, cfg.display_rate);
    proto::SeqUnwrapper unwrap;
    std::vector<std::size_t> order;
    if (cfg.nms_radius < 0) {
        for (std::size_t i = 0; i < triples.size(); ++i) order.push_back(i);
    } else {
        order = select_candidates(triples, cfg.nms_radius);
    }
    const int period = pair_period(cfg.camera_rate, cfg.display_rate, cfg.repeat);
    struct Pending {
        unsigned seq;
        int frame;
        Bits payload;
        std::size_t row;
    };
    std::vector<Pending> pending;
    bool locked = !cfg.confirm_lock;
    auto screen = [&](const Pending& c) {
        const auto d = proto::dedup_accept(dedup, c.seq, c.frame);
        out.log[c.row].decision = proto::to_string(d);
        if (d == proto::DedupDecision::accept) out.delivered.push_back({c.seq, unwrap.push(c.seq), c.payload, c.frame});
    };
    // b plausibly follows a: sequence advance x in [1, 16), spacing at least
    // x * Sep and within half a period of x pair periods
    auto consistent = [&](const Pending& a, const Pending& b) {
        const unsigned x = (b.seq + proto::kSeqModulus - a.seq) % proto::kSeqModulus;
        const int gap = b.frame - a.frame;
        return x >= 1 && x < proto::kSeqUnwrapWindow && gap >= static_cast<int>(x) * dedup.sep &&
               gap <= static_cast<int>(x) * period + period / 2;
    };
    for (std::size_t i : order) {
        const FrameTriple& t = triples[i];
        FrameLogRow row;
        row.frame_index = t.indices[0];
        row.phase_score = t.phase_score;
        if (t.phase_score <= kMinPhaseScore) {
            row.decision = "no_signal";
            out.log.push_back(std::move(row));
            continue;
        }
        const Bits bits = decoder(t);
        ++out.decoder_calls;
        const auto parsed = proto::parse_cells(bits, cfg.layout);
        if (const auto* err = std::get_if<proto::FrameError>(&parsed)) {
            row.decision = proto::to_string(*err);
            out.log.push_back(std::move(row));
            continue;
        }
        const auto& pf = std::get<proto::ParsedFrame>(parsed);
        row.seq = pf.seq;
        row.corrected = pf.corrected;
        row.decision = "pending";
        out.log.push_back(std::move(row));
        Pending c{pf.seq, t.indices[0], pf.payload, out.log.size() - 1};
        if (locked) {
            screen(c);
            continue;
        }
        std::erase_if(pending, [&](const Pending& p) {
            const bool old = c.frame - p.frame > static_cast<int>(proto::kSeqUnwrapWindow) * period;
            if (old) out.log[p.row].decision = "unconfirmed";
            return old;
        });
        const auto lock = std::find_if(pending.begin(), pending.end(), [&](const Pending& p) { return consistent(p, c); });
        if (lock == pending.end()) {
            pending.push_back(std::move(c));
            continue;
        }
        locked = true;
        for (auto p = pending.begin(); p != lock; ++p)
            out.log[p->row].decision = p->seq == lock->seq && p->payload == lock->payload ? "duplicate" : "unconfirmed";
        for (auto p = lock; p != pending.end(); ++p) screen(*p);
        screen(c);
        pending.clear();
    }
    for (const auto& p : pending) out.log[p.row].decision = "unconfirmed";
    return out;
}

/// Batched-CNN variant of decode_stream (same screening, fewer forward calls).
inline StreamDecodeResult decode_stream_cnn(const std::vector<FrameTriple>& triples, nn::Model<float>& model, int rows, int cols,
                                            const StreamDecodeConfig& cfg)
{
    std::vector<std::size_t> order;
    if (cfg.nms_radius < 0) {
        for (std::size_t i = 0; i < triples.size(); ++i) order.push_back(i);
    } else {
        order = select_candidates(triples, cfg.nms_radius);
    }
    std::vector<const FrameTriple*> ptrs;
    for (std::size_t i : order)
        if (triples[i].phase_score > kMinPhaseScore) ptrs.push_back(&triples[i]);
    const auto decoded = cnn_decode_batch(ptrs, model, rows, cols);
    std::map<int, const Bits*> by_start;
    for (std::size_t j = 0; j < ptrs.size(); ++j) by_start[ptrs[j]->indices[0]] = &decoded[j];
    StreamDecodeConfig all = cfg;
    all.nms_radius = -1;
    // decode_stream only reads indices and scores from these
    std::vector<FrameTriple> selected;
    selected.reserve(order.size());
    for (std::size_t i : order) {
        FrameTriple s;
        s.indices = triples[i].indices;
        s.phase_score = triples[i].phase_score;
        selected.push_back(std::move(s));
    }
    return decode_stream(selected, [&](const FrameTriple& t) { return *by_start.at(t.indices[0]); }, all);
}

/// Packs delivered payload bits (in delivery order) into bytes, MSB first.
inline std::vector<std::uint8_t> payload_bytes(const std::vector<Delivered>& delivered)
{
    Bits all;
    for (const auto& d : delivered) all.insert(all.end(), d.payload.begin(), d.payload.end());
    std::vector<std::uint8_t> out((all.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    return out;
}

inline void write_frame_log(const std::filesystem::path& path, const std::vector<FrameLogRow>& log)
{
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "# bluecast-frames v1\n";
    f << "frame_index,phase_score,seq,corrected_symbols,decision\n";
    f.precision(6);
    for (const auto& r : log) {
        f << r.frame_index << ',' << r.phase_score << ',';
        if (r.seq) f << *r.seq;
        f << ',' << r.corrected << ',' << r.decision << '\n';
    }
}

} // namespace bluecast::collective
