#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bluecast {

enum class Channel : int { red = 0, green = 1, blue = 2 };

/// 8-bit RGB image, interleaved, row-major.
class Frame {
public:
    Frame() = default;
    Frame(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3, fill)
    {
        if (width < 0 || height < 0) throw std::invalid_argument("negative frame size");
    }

    static Frame filled(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    {
        Frame f(width, height);
        for (std::size_t i = 0; i < f.data_.size(); i += 3) {
            f.data_[i] = r;
            f.data_[i + 1] = g;
            f.data_[i + 2] = b;
        }
        return f;
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return width_ == 0 || height_ == 0; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    std::uint8_t& at(int x, int y, Channel c) { return data_[index(x, y) + static_cast<int>(c)]; }
    std::uint8_t at(int x, int y, Channel c) const { return data_[index(x, y) + static_cast<int>(c)]; }

    std::vector<std::uint8_t>& data() { return data_; }
    const std::vector<std::uint8_t>& data() const { return data_; }

    bool operator==(const Frame&) const = default;

private:
    std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * 3; }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Single-channel float image, row-major.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Plane() = default;
    Plane(int w, int h, float fill = 0.0f) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    /// Bilinear sample with pixel centres at integer coordinates; clamps to the border.
    float sample(double x, double y) const
    {
        x = std::clamp(x, 0.0, static_cast<double>(width - 1));
        y = std::clamp(y, 0.0, static_cast<double>(height - 1));
        const int x0 = static_cast<int>(x);
        const int y0 = static_cast<int>(y);
        const int x1 = std::min(x0 + 1, width - 1);
        const int y1 = std::min(y0 + 1, height - 1);
        const double fx = x - x0;
        const double fy = y - y0;
        const double top = at(x0, y0) * (1 - fx) + at(x1, y0) * fx;
        const double bot = at(x0, y1) * (1 - fx) + at(x1, y1) * fx;
        return static_cast<float>(top * (1 - fy) + bot * fy);
    }
};

/// Planar float RGB image used inside the channel simulator to avoid
/// repeated 8-bit quantization.
struct FloatImage {
    Plane r, g, b;

    FloatImage() = default;
    FloatImage(int w, int h, float fill = 0.0f) : r(w, h, fill), g(w, h, fill), b(w, h, fill) {}

    int width() const { return r.width; }
    int height() const { return r.height; }
    Plane& channel(Channel c) { return c == Channel::red ? r : (c == Channel::green ? g : b); }
    const Plane& channel(Channel c) const { return c == Channel::red ? r : (c == Channel::green ? g : b); }
};

inline Plane extract_channel(const Frame& f, Channel c)
{
    Plane p(f.width(), f.height());
    const auto& d = f.data();
    const int off = static_cast<int>(c);
    for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] = d[i * 3 + off];
    return p;
}

inline FloatImage to_float(const Frame& f)
{
    FloatImage out;
    out.r = extract_channel(f, Channel::red);
    out.g = extract_channel(f, Channel::green);
    out.b = extract_channel(f, Channel::blue);
    return out;
}

inline std::uint8_t quantize(float v)
{
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
}

inline Frame to_frame(const FloatImage& img)
{
    Frame f(img.width(), img.height());
    auto& d = f.data();
    for (std::size_t i = 0; i < img.r.data.size(); ++i) {
        d[i * 3] = quantize(img.r.data[i]);
        d[i * 3 + 1] = quantize(img.g.data[i]);
        d[i * 3 + 2] = quantize(img.b.data[i]);
    }
    return f;
}

inline double mean_channel(const Frame& f, Channel c)
{
    if (f.empty()) return 0.0;
    double s = 0;
    const int off = static_cast<int>(c);
    for (std::size_t i = 0; i < f.pixel_count(); ++i) s += f.data()[i * 3 + off];
    return s / static_cast<double>(f.pixel_count());
}

/// Nearest-neighbour crop/resize used for content preparation.
inline Frame resize_nearest(const Frame& src, int width, int height)
{
    Frame out(width, height);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(src.height() - 1, static_cast<int>((y + 0.5) * src.height() / height));
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(src.width() - 1, static_cast<int>((x + 0.5) * src.width() / width));
            for (int c = 0; c < 3; ++c) out.at(x, y, Channel(c)) = src.at(sx, sy, Channel(c));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// File formats
//
// PPM: binary P6, maxval 255.
// Raw planar (.rgbp): 16-byte header "RGBP" + u32 width + u32 height + u32 0
// (little endian), then the full R plane, G plane and B plane, row-major.

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void write_ppm(const std::filesystem::path& path, const Frame& f)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageIoError("cannot open " + path.string() + " for writing");
    out << "P6\n" << f.width() << " " << f.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(f.data().data()), static_cast<std::streamsize>(f.data().size()));
    if (!out) throw ImageIoError("write failed: " + path.string());
}

namespace detail {

inline std::string ppm_token(std::istream& in)
{
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string dummy;
            std::getline(in, dummy);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

inline void put_u32(std::ostream& out, std::uint32_t v)
{
    const char b[4] = {char(v & 0xFF), char((v >> 8) & 0xFF), char((v >> 16) & 0xFF), char((v >> 24) & 0xFF)};
    out.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& in)
{
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ImageIoError("truncated header");
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace detail

inline Frame read_ppm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open " + path.string());
    if (detail::ppm_token(in) != "P6") throw ImageIoError(path.string() + ": not a binary PPM (P6)");
    const int w = std::stoi(detail::ppm_token(in));
    const int h = std::stoi(detail::ppm_token(in));
    const int maxval = std::stoi(detail::ppm_token(in));
    if (w <= 0 || h <= 0 || maxval != 255) throw ImageIoError(path.string() + ": unsupported PPM header");
    Frame f(w, h);
    in.read(reinterpret_cast<char*>(f.data().data()), static_cast<std::streamsize>(f.data().size()));
    if (!in) throw ImageIoError(path.string() + ": truncated pixel data");
    return f;
}

inline void write_rgbp(const std::filesystem::path& path, const Frame& f)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageIoError("cannot open " + path.string() + " for writing");
    out.write("RGBP", 4);
    detail::put_u32(out, static_cast<std::uint32_t>(f.width()));
    detail::put_u32(out, static_cast<std::uint32_t>(f.height()));
    detail::put_u32(out, 0);
    std::vector<char> plane(f.pixel_count());
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = static_cast<char>(f.data()[i * 3 + c]);
        out.write(plane.data(), static_cast<std::streamsize>(plane.size()));
    }
    if (!out) throw ImageIoError("write failed: " + path.string());
}

inline Frame read_rgbp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "RGBP") throw ImageIoError(path.string() + ": bad magic");
    const auto w = detail::get_u32(in);
    const auto h = detail::get_u32(in);
    detail::get_u32(in);
    if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) throw ImageIoError(path.string() + ": bad dimensions");
    Frame f(static_cast<int>(w), static_cast<int>(h));
    std::vector<char> plane(f.pixel_count());
    for (int c = 0; c < 3; ++c) {
        in.read(plane.data(), static_cast<std::streamsize>(plane.size()));
        if (!in) throw ImageIoError(path.string() + ": truncated plane data");
        for (std::size_t i = 0; i < plane.size(); ++i) f.data()[i * 3 + c] = static_cast<std::uint8_t>(plane[i]);
    }
    return f;
}

/// Reads .ppm or .rgbp by extension.
inline Frame read_image(const std::filesystem::path& path)
{
    const auto ext = path.extension().string();
    if (ext == ".rgbp") return read_rgbp(path);
    return read_ppm(path);
}

inline void write_image(const std::filesystem::path& path, const Frame& f)
{
    if (path.extension() == ".rgbp") write_rgbp(path, f);
    else write_ppm(path, f);
}

} // namespace bluecast
