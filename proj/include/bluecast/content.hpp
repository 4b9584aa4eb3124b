#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bluecast/image.hpp"

// Procedural stand-ins for video content and camera backgrounds.

namespace bluecast::content {

inline constexpr int kCorpusSize = 20;

namespace detail {

struct Rgb {
    float r, g, b;
};

inline Rgb lerp(Rgb a, Rgb b, float t) { return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t}; }

inline float smooth(float t) { return t * t * (3 - 2 * t); }

/// Multi-octave value noise in [0, 1].
class ValueNoise {
public:
    ValueNoise(std::uint64_t seed, int lattice) : lattice_(lattice), values_((lattice + 1) * (lattice + 1))
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<float> u(0.0f, 1.0f);
        for (auto& v : values_) v = u(rng);
    }

    float at(float x, float y) const
    {
        x *= lattice_;
        y *= lattice_;
        const int x0 = std::clamp(static_cast<int>(x), 0, lattice_ - 1);
        const int y0 = std::clamp(static_cast<int>(y), 0, lattice_ - 1);
        const float fx = smooth(std::clamp(x - x0, 0.0f, 1.0f));
        const float fy = smooth(std::clamp(y - y0, 0.0f, 1.0f));
        const float a = v(x0, y0), b = v(x0 + 1, y0), c = v(x0, y0 + 1), d = v(x0 + 1, y0 + 1);
        return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
    }

private:
    float v(int x, int y) const { return values_[static_cast<std::size_t>(y) * (lattice_ + 1) + x]; }

    int lattice_;
    std::vector<float> values_;
};

inline float fractal(const std::vector<ValueNoise>& octaves, float x, float y)
{
    float sum = 0, norm = 0, amp = 1;
    for (const auto& o : octaves) {
        sum += amp * o.at(x, y);
        norm += amp;
        amp *= 0.5f;
    }
    return sum / norm;
}

inline std::vector<ValueNoise> make_octaves(std::uint64_t seed, int base, int count)
{
    std::vector<ValueNoise> out;
    for (int i = 0; i < count; ++i) out.emplace_back(seed * 7919 + i, base << i);
    return out;
}

inline void put(Frame& f, int x, int y, Rgb c)
{
    f.at(x, y, Channel::red) = quantize(c.r);
    f.at(x, y, Channel::green) = quantize(c.g);
    f.at(x, y, Channel::blue) = quantize(c.b);
}

// Palettes avoid saturated red so no content frame looks like a landmark.
inline const std::array<std::array<Rgb, 3>, 8>& palettes()
{
    static const std::array<std::array<Rgb, 3>, 8> p{{
        {{{20, 40, 90}, {90, 140, 200}, {230, 240, 250}}},  // sky
        {{{30, 60, 20}, {90, 140, 60}, {200, 210, 150}}},   // foliage
        {{{60, 45, 35}, {150, 120, 90}, {235, 220, 200}}},  // skin / wood
        {{{10, 10, 20}, {40, 40, 70}, {120, 110, 140}}},    // night
        {{{40, 40, 40}, {128, 128, 128}, {220, 220, 220}}}, // gray
        {{{70, 30, 80}, {170, 90, 150}, {250, 200, 210}}},  // sunset
        {{{0, 50, 60}, {30, 150, 160}, {200, 250, 240}}},   // sea
        {{{80, 60, 10}, {190, 160, 60}, {250, 240, 190}}},  // desert
    }};
    return p;
}

inline Rgb palette_at(const std::array<Rgb, 3>& p, float t)
{
    t = std::clamp(t, 0.0f, 1.0f);
    return t < 0.5f ? lerp(p[0], p[1], t * 2) : lerp(p[1], p[2], (t - 0.5f) * 2);
}

} // namespace detail

/// One procedurally generated content frame. `index` selects the style
/// (landscape, texture, blobs, stripes, dark scene) and palette.
inline Frame procedural_frame(int index, int width, int height, std::uint64_t seed = 1)
{
    using namespace detail;
    Frame f(width, height);
    const std::uint64_t s = seed * 1000003ull + static_cast<std::uint64_t>(index);
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    const auto& pal = palettes()[static_cast<std::size_t>(index) % palettes().size()];
    const auto octaves = make_octaves(s, 3 + index % 3, 4);
    const int style = (index / 2) % 5;

    // blob parameters for the blob style
    struct Blob {
        float cx, cy, r;
        Rgb c;
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < 12; ++i) blobs.push_back({u(rng), u(rng), 0.05f + 0.2f * u(rng), palette_at(pal, u(rng))});
    const float stripe_angle = u(rng) * 3.14159f;
    const float stripe_freq = 4 + 10 * u(rng);
    const float horizon = 0.35f + 0.3f * u(rng);
    const float sun_x = u(rng), sun_y = horizon * u(rng);

    for (int y = 0; y < height; ++y) {
        const float fy = (y + 0.5f) / height;
        for (int x = 0; x < width; ++x) {
            const float fx = (x + 0.5f) / width;
            const float n = fractal(octaves, fx, fy);
            Rgb c{};
            switch (style) {
            case 0: { // landscape: sky gradient, textured ground, sun
                if (fy < horizon + 0.05f * (n - 0.5f)) {
                    c = lerp(pal[2], pal[1], fy / horizon);
                    const float d = std::hypot(fx - sun_x, (fy - sun_y) * height / width);
                    if (d < 0.06f) c = lerp(c, Rgb{250, 245, 220}, 1.0f - d / 0.06f);
                } else {
                    c = palette_at(pal, 0.6f * n);
                }
                break;
            }
            case 1: // fractal texture
                c = palette_at(pal, n);
                break;
            case 2: { // soft blobs over a gradient
                c = lerp(pal[0], pal[1], fx);
                for (const auto& b : blobs) {
                    const float d = std::hypot(fx - b.cx, fy - b.cy);
                    if (d < b.r) c = lerp(c, b.c, 0.8f * smooth(1.0f - d / b.r));
                }
                break;
            }
            case 3: { // stripes modulated by noise
                const float t = fx * std::cos(stripe_angle) + fy * std::sin(stripe_angle);
                c = palette_at(pal, 0.5f + 0.35f * std::sin(t * stripe_freq * 6.2832f) + 0.3f * (n - 0.5f));
                break;
            }
            default: { // dark scene with a dim light source
                const float d = std::hypot(fx - sun_x, fy - 0.5f);
                const float light = std::exp(-d * d * 8.0f);
                c = palette_at(palettes()[3], 0.15f + 0.5f * light + 0.2f * (n - 0.5f));
                c.b *= 0.6f;
                break;
            }
            }
            put(f, x, y, c);
        }
    }
    return f;
}

/// The default content corpus of `count` procedural frames.
inline std::vector<Frame> corpus(int width, int height, int count = kCorpusSize, std::uint64_t seed = 1)
{
    std::vector<Frame> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(procedural_frame(i, width, height, seed));
    return out;
}

/// Loads every .ppm/.rgbp image in `dir` (sorted by name), resized.
inline std::vector<Frame> load_directory(const std::filesystem::path& dir, int width, int height)
{
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".ppm" || ext == ".rgbp")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Frame> out;
    for (const auto& p : files) out.push_back(resize_nearest(read_image(p), width, height));
    return out;
}

/// Flat gray camera background.
inline Frame flat_background(int width, int height, std::uint8_t gray = 128)
{
    return Frame::filled(width, height, gray, gray, gray);
}

/// Indoor-style wall: a near-neutral tint under a broad, smooth lighting
/// falloff, plus fine texture grain.
inline Frame indoor_background(int width, int height, std::uint64_t seed)
{
    std::mt19937_64 rng(seed ^ 0x5eed'ba11'0000ull);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::normal_distribution<float> grain(0.0f, 1.5f);
    const float base = 140 + 80 * u(rng);
    const detail::Rgb tint{base + 30 * (u(rng) - 0.5f), base + 30 * (u(rng) - 0.5f), base + 30 * (u(rng) - 0.5f)};
    const float lx = u(rng), ly = u(rng) * 0.5f;
    const float falloff = 0.15f + 0.2f * u(rng);
    Frame f(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const float fx = (x + 0.5f) / width, fy = (y + 0.5f) / height;
            const float r2 = (fx - lx) * (fx - lx) + (fy - ly) * (fy - ly);
            const float light = 1.0f - falloff + falloff * std::exp(-r2 / 0.5f);
            const float g = grain(rng);
            detail::put(f, x, y, {tint.r * light + g, tint.g * light + g, tint.b * light + g});
        }
    }
    return f;
}

/// All-red landmark frame.
inline Frame landmark_frame(int width, int height) { return Frame::filled(width, height, 255, 0, 0); }

} // namespace bluecast::content
