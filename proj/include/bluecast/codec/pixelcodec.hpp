#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bluecast/image.hpp"
#include "bluecast/proto/bits.hpp"

namespace bluecast::codec {

class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// M x N cell grid laid over a W x H image. Cells are B_r x B_c pixels;
/// leftover pixels join the last cell row and column.
struct GridGeometry {
    int rows = 10;
    int cols = 10;
    int width = 0;
    int height = 0;

    static GridGeometry for_image(int rows, int cols, int width, int height)
    {
        GridGeometry g{rows, cols, width, height};
        g.validate();
        return g;
    }

    void validate() const
    {
        if (rows <= 0 || cols <= 0) throw GeometryError("grid must have at least one cell");
        if (rows > height || cols > width)
            throw GeometryError("grid " + std::to_string(rows) + "x" + std::to_string(cols) + " does not fit a " +
                                std::to_string(width) + "x" + std::to_string(height) + " image");
    }

    int cells() const { return rows * cols; }
    int cell_height() const { return height / rows; }
    int cell_width() const { return width / cols; }

    int row_begin(int r) const { return r * cell_height(); }
    int row_end(int r) const { return r == rows - 1 ? height : (r + 1) * cell_height(); }
    int col_begin(int c) const { return c * cell_width(); }
    int col_end(int c) const { return c == cols - 1 ? width : (c + 1) * cell_width(); }
};

struct ModulationPlan {
    enum class Mode { fixed, mix };

    Mode mode = Mode::mix;
    int delta = 2;
    int delta_low = 3;
    int delta_high = 2;
    double threshold = 30.0;

    static ModulationPlan fixed(int delta)
    {
        ModulationPlan p;
        p.mode = Mode::fixed;
        p.delta = delta;
        p.validate();
        return p;
    }

    static ModulationPlan mix() { return ModulationPlan{}; }

    void validate() const
    {
        auto ok = [](int d) { return d >= 1 && d <= 3; };
        if (mode == Mode::fixed ? !ok(delta) : !(ok(delta_low) && ok(delta_high)))
            throw std::invalid_argument("modulation delta must be 1, 2 or 3");
    }

    /// Amplitude for a cell whose unencoded mean Blue value is `mean_blue`.
    int delta_for(double mean_blue) const
    {
        if (mode == Mode::fixed) return delta;
        return mean_blue > threshold ? delta_high : delta_low;
    }

    /// Sign applied in F+ for a given bit; F- uses the opposite sign.
    static int plus_sign(std::uint8_t bit) { return bit ? +1 : -1; }
};

inline const char* to_string(ModulationPlan::Mode m)
{
    return m == ModulationPlan::Mode::fixed ? "fixed" : "mix";
}

namespace detail {

inline void check_bits(std::span<const std::uint8_t> bits, const GridGeometry& geom)
{
    if (bits.size() != static_cast<std::size_t>(geom.cells()))
        throw GeometryError("expected " + std::to_string(geom.cells()) + " bits, got " + std::to_string(bits.size()));
}

inline void check_image(const GridGeometry& geom, int width, int height)
{
    geom.validate();
    if (geom.width != width || geom.height != height)
        throw GeometryError("grid geometry is for " + std::to_string(geom.width) + "x" + std::to_string(geom.height) +
                            ", image is " + std::to_string(width) + "x" + std::to_string(height));
}

} // namespace detail

/// Mean Blue value of every cell, row-major.
inline std::vector<double> cell_means(const Frame& image, const GridGeometry& geom)
{
    detail::check_image(geom, image.width(), image.height());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(geom.cells()));
    for (int r = 0; r < geom.rows; ++r) {
        for (int c = 0; c < geom.cols; ++c) {
            double sum = 0;
            for (int y = geom.row_begin(r); y < geom.row_end(r); ++y)
                for (int x = geom.col_begin(c); x < geom.col_end(c); ++x) sum += image.at(x, y, Channel::blue);
            const double n = double(geom.row_end(r) - geom.row_begin(r)) * (geom.col_end(c) - geom.col_begin(c));
            out.push_back(sum / n);
        }
    }
    return out;
}

struct FramePair {
    Frame plus;
    Frame minus;
};

/// Embeds one data frame into a Manchester pair. Bits map to cells row-major.
inline FramePair embed_pair(const Frame& image, std::span<const std::uint8_t> bits, const GridGeometry& geom,
                            const ModulationPlan& plan)
{
    detail::check_image(geom, image.width(), image.height());
    detail::check_bits(bits, geom);
    plan.validate();

    const auto means = cell_means(image, geom);
    FramePair out{image, image};
    for (int r = 0; r < geom.rows; ++r) {
        for (int c = 0; c < geom.cols; ++c) {
            const int idx = r * geom.cols + c;
            const int d = plan.delta_for(means[static_cast<std::size_t>(idx)]) * ModulationPlan::plus_sign(bits[idx]);
            for (int y = geom.row_begin(r); y < geom.row_end(r); ++y) {
                for (int x = geom.col_begin(c); x < geom.col_end(c); ++x) {
                    const int b = image.at(x, y, Channel::blue);
                    out.plus.at(x, y, Channel::blue) = static_cast<std::uint8_t>(std::clamp(b + d, 0, 255));
                    out.minus.at(x, y, Channel::blue) = static_cast<std::uint8_t>(std::clamp(b - d, 0, 255));
                }
            }
        }
    }
    return out;
}

/// Per-cell decoder on Blue planes: bit = 1 iff mean(plus) - mean(minus) > 0.
inline Bits classical_decode(const Plane& plus, const Plane& minus, const GridGeometry& geom)
{
    if (plus.width != minus.width || plus.height != minus.height)
        throw GeometryError("frame pair dimensions differ");
    detail::check_image(geom, plus.width, plus.height);
    Bits out;
    out.reserve(static_cast<std::size_t>(geom.cells()));
    for (int r = 0; r < geom.rows; ++r) {
        for (int c = 0; c < geom.cols; ++c) {
            double diff = 0;
            for (int y = geom.row_begin(r); y < geom.row_end(r); ++y)
                for (int x = geom.col_begin(c); x < geom.col_end(c); ++x)
                    diff += static_cast<double>(plus.at(x, y)) - minus.at(x, y);
            out.push_back(diff > 0 ? 1 : 0);
        }
    }
    return out;
}

inline Bits classical_decode(const Frame& plus, const Frame& minus, const GridGeometry& geom)
{
    if (plus.width() != minus.width() || plus.height() != minus.height())
        throw GeometryError("frame pair dimensions differ");
    return classical_decode(extract_channel(plus, Channel::blue), extract_channel(minus, Channel::blue), geom);
}

/// Bit error rate between two equal-length bit vectors.
inline double bit_error_rate(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("bit vectors differ in length");
    if (a.empty()) return 0.0;
    return static_cast<double>(proto::hamming_distance(a, b)) / static_cast<double>(a.size());
}

inline constexpr double kPsnrPeak = 255.0;

inline double psnr_from_mse(double mse)
{
    if (mse <= 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(kPsnrPeak * kPsnrPeak / mse);
}

/// PSNR with the MSE averaged over every pixel and all three channels.
inline double psnr(const Frame& original, const Frame& modified)
{
    if (original.width() != modified.width() || original.height() != modified.height())
        throw GeometryError("PSNR needs equal frame dimensions");
    const auto& a = original.data();
    const auto& b = modified.data();
    if (a.empty()) throw GeometryError("PSNR of an empty frame");
    double sse = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        sse += d * d;
    }
    return psnr_from_mse(sse / static_cast<double>(a.size()));
}

/// PSNR restricted to one channel.
inline double psnr_channel(const Frame& original, const Frame& modified, Channel ch)
{
    if (original.width() != modified.width() || original.height() != modified.height())
        throw GeometryError("PSNR needs equal frame dimensions");
    if (original.empty()) throw GeometryError("PSNR of an empty frame");
    double sse = 0;
    const int off = static_cast<int>(ch);
    for (std::size_t i = 0; i < original.pixel_count(); ++i) {
        const double d = double(original.data()[i * 3 + off]) - double(modified.data()[i * 3 + off]);
        sse += d * d;
    }
    return psnr_from_mse(sse / static_cast<double>(original.pixel_count()));
}

} // namespace bluecast::codec
