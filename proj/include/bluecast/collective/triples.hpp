#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bluecast/extract/extract.hpp"
#include "bluecast/geometry.hpp"
#include "bluecast/image.hpp"

namespace bluecast::collective {

/// Three consecutive Blue-channel screen views, nominally (F+, F+ transition, F-).
struct FrameTriple {
    std::array<Plane, 3> frames;
    std::array<int, 3> indices{};
    double phase_score = 0; ///< mean |f1 - f3|
};

/// Blue channel of the quad region, rectified to side x side.
inline Plane unwarp_blue(const Frame& frame, const ScreenQuad& quad, int side)
{
    return extract::unwarp_plane(extract_channel(frame, Channel::blue), quad, side, side);
}

inline double phase_score(const Plane& a, const Plane& b)
{
    if (a.data.size() != b.data.size() || a.data.empty()) throw std::invalid_argument("phase_score: size mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s / static_cast<double>(a.data.size());
}

/// Every consecutive triple of the stream, each frame unwarped once with its
/// quad. `quads` holds one quad per frame, or a single quad for all frames.
inline std::vector<FrameTriple> assemble_triples(const std::vector<Frame>& stream, const std::vector<ScreenQuad>& quads,
                                                 int side)
{
    std::vector<FrameTriple> out;
    if (stream.size() < 3) return out;
    if (quads.size() != 1 && quads.size() != stream.size())
        throw std::invalid_argument("assemble_triples: need one quad per frame or a single quad");
    std::vector<Plane> views;
    views.reserve(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) views.push_back(unwarp_blue(stream[i], quads.size() == 1 ? quads[0] : quads[i], side));
    for (std::size_t i = 0; i + 2 < stream.size(); ++i) {
        FrameTriple t;
        t.frames = {views[i], views[i + 1], views[i + 2]};
        t.indices = {static_cast<int>(i), static_cast<int>(i + 1), static_cast<int>(i + 2)};
        t.phase_score = phase_score(views[i], views[i + 2]);
        out.push_back(std::move(t));
    }
    return out;
}

/// Non-maximum suppression over phase scores: keeps triple i when no triple
/// within `radius` positions scores higher (ties keep the earliest).
inline std::vector<std::size_t> select_candidates(const std::vector<FrameTriple>& triples, int radius)
{
    std::vector<std::size_t> keep;
    const auto n = static_cast<std::ptrdiff_t>(triples.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        bool best = triples[i].phase_score > 0;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - radius); best && j <= std::min(n - 1, i + radius); ++j) {
            if (j == i) continue;
            const double sj = triples[j].phase_score, si = triples[i].phase_score;
            if (sj > si || (sj == si && j < i)) best = false;
        }
        if (best) keep.push_back(static_cast<std::size_t>(i));
    }
    return keep;
}

/// Camera frames per transmitted pair: 2 display frames per pair, each shown
/// `repeat` times, k camera frames per display frame.
inline int pair_period(double camera_rate, double display_rate, int repeat = 1)
{
    const double k = camera_rate / display_rate;
    const int ki = static_cast<int>(std::lround(k));
    if (ki < 2 || std::abs(k - ki) > 1e-9 || repeat < 1) throw std::invalid_argument("unsupported rate combination");
    return 2 * ki * repeat;
}

} // namespace bluecast::collective
