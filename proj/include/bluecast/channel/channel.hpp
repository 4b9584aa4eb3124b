#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bluecast/codec/pixelcodec.hpp"
#include "bluecast/content.hpp"
#include "bluecast/geometry.hpp"
#include "bluecast/image.hpp"

namespace bluecast::channel {

class ChannelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Background { flat, indoor, image };

inline const char* to_string(Background b)
{
    switch (b) {
    case Background::flat: return "flat";
    case Background::indoor: return "indoor";
    case Background::image: return "image";
    }
    return "?";
}

/// Physical width of the reference 25-inch 16:9 display, metres.
inline constexpr double kScreenWidthMetres = 0.553;

struct ChannelConfig {
    double display_rate = 60.0;
    double camera_rate = 120.0;
    double distance = 1.0;  // metres
    double angle_deg = 0.0; // yaw of the screen plane
    int scene_width = 320;
    int scene_height = 240;
    // Calibration constant: fraction of the scene width the screen spans at
    // 1 m, head-on. Sets the focal length.
    double screen_fill = 0.6;
    // Screen centre in the scene, as fractions of scene width/height.
    double center_x = 0.5;
    double center_y = 0.5;
    Background background = Background::flat;
    int background_gray = 128;
    std::string background_path;
    double noise_sigma = 0.0;
    double blur_radius = 0.0;
    double gain = 1.0;
    double transition_weight = 0.5;
    std::uint64_t seed = 1;

    double focal_px() const { return screen_fill * scene_width / kScreenWidthMetres; }

    /// Camera frames per display frame; throws unless it is an integer >= 2.
    int rate_ratio() const
    {
        if (display_rate <= 0 || camera_rate <= 0) throw ChannelError("frame rates must be positive");
        const double k = camera_rate / display_rate;
        const double kr = std::round(k);
        if (std::abs(k - kr) > 1e-9 || kr < 2)
            throw ChannelError("camera rate must be an integer multiple (>= 2) of the display rate");
        return static_cast<int>(kr);
    }
};

/// Projected screen placement for a given config and screen resolution.
struct Placement {
    ScreenQuad truth;
    Homography screen_to_camera; // screen pixel coords (centres at integers) -> camera pixel coords
    Homography camera_to_screen;
};

inline Placement place_screen(const ChannelConfig& cfg, int screen_w, int screen_h)
{
    if (screen_w <= 0 || screen_h <= 0) throw ChannelError("screen frame is empty");
    if (std::abs(cfg.angle_deg) >= 90.0) throw ChannelError("viewing angle must satisfy |theta| < 90 degrees");
    if (cfg.distance <= 0) throw ChannelError("viewing distance must be positive");
    if (cfg.scene_width <= 0 || cfg.scene_height <= 0) throw ChannelError("scene must be non-empty");

    const double theta = cfg.angle_deg * std::numbers::pi / 180.0;
    const double half_w = kScreenWidthMetres / 2;
    const double half_h = half_w * screen_h / screen_w;
    const double f = cfg.focal_px();
    const double cx = cfg.center_x * cfg.scene_width - 0.5;
    const double cy = cfg.center_y * cfg.scene_height - 0.5;

    auto project = [&](double u, double v) {
        const double X = u * std::cos(theta);
        const double Z = cfg.distance + u * std::sin(theta);
        if (Z <= 1e-6) throw ChannelError("screen crosses the camera plane");
        return Point{f * X / Z + cx, f * v / Z + cy};
    };

    Placement p;
    p.truth = ScreenQuad{{project(-half_w, -half_h), project(half_w, -half_h), project(half_w, half_h),
                          project(-half_w, half_h)}};
    p.screen_to_camera = rect_to_quad(-0.5, -0.5, screen_w - 0.5, screen_h - 0.5, p.truth);
    p.camera_to_screen = p.screen_to_camera.inverse();
    return p;
}

inline FloatImage make_background(const ChannelConfig& cfg)
{
    switch (cfg.background) {
    case Background::flat:
        return to_float(content::flat_background(cfg.scene_width, cfg.scene_height,
                                                 static_cast<std::uint8_t>(std::clamp(cfg.background_gray, 0, 255))));
    case Background::indoor:
        return to_float(content::indoor_background(cfg.scene_width, cfg.scene_height, cfg.seed));
    case Background::image:
        return to_float(resize_nearest(read_image(cfg.background_path), cfg.scene_width, cfg.scene_height));
    }
    throw ChannelError("unknown background kind");
}

namespace detail {

inline std::vector<float> gaussian_kernel(double sigma)
{
    const int r = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
    std::vector<float> k(2 * r + 1);
    double sum = 0;
    for (int i = -r; i <= r; ++i) sum += k[i + r] = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
    for (auto& v : k) v = static_cast<float>(v / sum);
    return k;
}

inline void blur_plane(Plane& p, const std::vector<float>& k)
{
    const int r = static_cast<int>(k.size() / 2);
    Plane tmp(p.width, p.height);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            float s = 0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * p.at(std::clamp(x + i, 0, p.width - 1), y);
            tmp.at(x, y) = s;
        }
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            float s = 0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * tmp.at(x, std::clamp(y + i, 0, p.height - 1));
            p.at(x, y) = s;
        }
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

/// The simulated optical path for one screen resolution. Geometry and
/// background are fixed at construction; rendering is deterministic in
/// (config, frame index).
class OpticalPath {
public:
    OpticalPath(const ChannelConfig& cfg, int screen_w, int screen_h)
        : cfg_(cfg), screen_w_(screen_w), screen_h_(screen_h), placement_(place_screen(cfg, screen_w, screen_h)),
          background_(make_background(cfg))
    {
        if (cfg.gain <= 0) throw ChannelError("gain must be positive");
        if (cfg.noise_sigma < 0 || cfg.blur_radius < 0) throw ChannelError("noise and blur must be non-negative");
        build_coverage();
    }

    const ChannelConfig& config() const { return cfg_; }
    const ScreenQuad& truth() const { return placement_.truth; }
    const Placement& placement() const { return placement_; }
    const FloatImage& background() const { return background_; }

    /// Projects a screen frame into the scene over the background, without
    /// photometric distortion.
    FloatImage project(const Frame& screen) const
    {
        if (screen.width() != screen_w_ || screen.height() != screen_h_)
            throw ChannelError("screen frame size differs from the channel's screen size");
        const FloatImage src = to_float(screen);
        FloatImage out = background_;
        for (const auto& s : samples_) {
            for (int c = 0; c < 3; ++c) {
                const Plane& sp = src.channel(chan(c));
                Plane& op = out.channel(chan(c));
                const float v = sp.sample(s.sx, s.sy);
                float& o = op.data[s.index];
                o = s.coverage * v + (1 - s.coverage) * o;
            }
        }
        return out;
    }

    /// Gain, blur, additive Gaussian noise and 8-bit quantization.
    Frame photometric(FloatImage img, std::uint64_t frame_index) const
    {
        std::vector<float> kernel;
        if (cfg_.blur_radius > 0) kernel = detail::gaussian_kernel(cfg_.blur_radius);
        std::mt19937_64 rng(detail::mix_seed(cfg_.seed, frame_index));
        std::normal_distribution<float> noise(0.0f, static_cast<float>(cfg_.noise_sigma));
        for (int c = 0; c < 3; ++c) {
            Plane& p = img.channel(chan(c));
            if (cfg_.gain != 1.0)
                for (auto& v : p.data) v *= static_cast<float>(cfg_.gain);
            if (!kernel.empty()) detail::blur_plane(p, kernel);
            if (cfg_.noise_sigma > 0)
                for (auto& v : p.data) v += noise(rng);
        }
        return to_frame(img);
    }

    Frame render(const Frame& screen, std::uint64_t frame_index = 0) const
    {
        return photometric(project(screen), frame_index);
    }

private:
    static bluecast::Channel chan(int c) { return static_cast<bluecast::Channel>(c); }

    struct Sample {
        std::size_t index;
        float sx, sy;
        float coverage;
    };

    // Precomputes, for every camera pixel touched by the screen, the screen
    // coordinate of its centre and the fraction of its area the screen covers.
    void build_coverage()
    {
        const auto poly = placement_.truth.polygon();
        const double orient = signed_area(poly) >= 0 ? 1.0 : -1.0;
        double minx = 1e18, miny = 1e18, maxx = -1e18, maxy = -1e18;
        for (const auto& p : poly) {
            minx = std::min(minx, p.x);
            maxx = std::max(maxx, p.x);
            miny = std::min(miny, p.y);
            maxy = std::max(maxy, p.y);
        }
        auto inside_depth = [&](double x, double y) {
            double d = 1e18;
            for (std::size_t i = 0; i < 4; ++i) {
                const Point a = poly[i], b = poly[(i + 1) % 4];
                const Point e = b - a;
                d = std::min(d, orient * cross(e, Point{x, y} - a) / std::hypot(e.x, e.y));
            }
            return d;
        };
        auto inside = [&](double x, double y) { return inside_depth(x, y) >= 0; };

        const int x0 = std::max(0, static_cast<int>(std::floor(minx)));
        const int x1 = std::min(cfg_.scene_width - 1, static_cast<int>(std::ceil(maxx)));
        const int y0 = std::max(0, static_cast<int>(std::floor(miny)));
        const int y1 = std::min(cfg_.scene_height - 1, static_cast<int>(std::ceil(maxy)));
        constexpr int kSub = 4;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double depth = inside_depth(x, y);
                float cov;
                if (depth >= 0.75) cov = 1.0f;
                else if (depth <= -0.75) continue;
                else {
                    int hits = 0;
                    for (int j = 0; j < kSub; ++j)
                        for (int i = 0; i < kSub; ++i)
                            hits += inside(x - 0.5 + (i + 0.5) / kSub, y - 0.5 + (j + 0.5) / kSub);
                    if (hits == 0) continue;
                    cov = static_cast<float>(hits) / (kSub * kSub);
                }
                const Point s = placement_.camera_to_screen.apply({double(x), double(y)});
                samples_.push_back({static_cast<std::size_t>(y) * cfg_.scene_width + x, static_cast<float>(s.x),
                                    static_cast<float>(s.y), cov});
            }
        }
    }

    ChannelConfig cfg_;
    int screen_w_;
    int screen_h_;
    Placement placement_;
    FloatImage background_;
    std::vector<Sample> samples_;
};

struct SceneResult {
    Frame frame;
    ScreenQuad truth;
};

inline SceneResult compose_scene(const Frame& screen, const ChannelConfig& cfg, std::uint64_t frame_index = 0)
{
    if (screen.empty()) throw ChannelError("screen frame is empty");
    const OpticalPath ch(cfg, screen.width(), screen.height());
    return {ch.render(screen, frame_index), ch.truth()};
}

struct CameraStream {
    std::vector<Frame> frames;
    std::vector<int> display_index; // display frame each camera frame starts in
    std::vector<bool> transition;   // exposure straddles a display refresh
    ScreenQuad truth;
};

/// Camera sampling at F_c = k * F_d: per display frame, k - 1 aligned
/// exposures then one transition exposure blending into the next frame.
/// The stream's last frame blends with itself.
inline CameraStream sample_camera_stream(const std::vector<Frame>& display, const ChannelConfig& cfg,
                                         std::uint64_t first_frame_index = 0)
{
    const int k = cfg.rate_ratio();
    CameraStream out;
    if (display.empty()) return out;
    const OpticalPath ch(cfg, display.front().width(), display.front().height());
    out.truth = ch.truth();
    const float w = static_cast<float>(cfg.transition_weight);
    if (w < 0 || w > 1) throw ChannelError("transition weight must lie in [0, 1]");

    std::uint64_t index = first_frame_index;
    FloatImage cur = ch.project(display[0]);
    for (std::size_t i = 0; i < display.size(); ++i) {
        FloatImage next = i + 1 < display.size() ? ch.project(display[i + 1]) : cur;
        for (int j = 0; j + 1 < k; ++j) {
            out.frames.push_back(ch.photometric(cur, index++));
            out.display_index.push_back(static_cast<int>(i));
            out.transition.push_back(false);
        }
        FloatImage blend = cur;
        for (int c = 0; c < 3; ++c) {
            auto& b = blend.channel(static_cast<bluecast::Channel>(c)).data;
            const auto& n = next.channel(static_cast<bluecast::Channel>(c)).data;
            for (std::size_t p = 0; p < b.size(); ++p) b[p] = (1 - w) * b[p] + w * n[p];
        }
        out.frames.push_back(ch.photometric(std::move(blend), index++));
        out.display_index.push_back(static_cast<int>(i));
        out.transition.push_back(true);
        cur = std::move(next);
    }
    return out;
}

/// Shows each display frame `times` times in a row (low-rate content on a
/// faster display).
inline std::vector<Frame> repeat_frames(const std::vector<Frame>& frames, int times)
{
    if (times < 1) throw ChannelError("repeat count must be positive");
    std::vector<Frame> out;
    out.reserve(frames.size() * static_cast<std::size_t>(times));
    for (const auto& f : frames)
        for (int i = 0; i < times; ++i) out.push_back(f);
    return out;
}

// ---------------------------------------------------------------------------
// Screen-coordinate perturbations

enum class PerturbKind { shift, expand, shrink, rotate };

inline const char* to_string(PerturbKind k)
{
    switch (k) {
    case PerturbKind::shift: return "SHIFT";
    case PerturbKind::expand: return "EXPAND";
    case PerturbKind::shrink: return "SHRINK";
    case PerturbKind::rotate: return "ROTATE";
    }
    return "?";
}

inline PerturbKind parse_perturb_kind(const std::string& s)
{
    std::string u;
    for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (u == "SHIFT") return PerturbKind::shift;
    if (u == "EXPAND") return PerturbKind::expand;
    if (u == "SHRINK") return PerturbKind::shrink;
    if (u == "ROTATE") return PerturbKind::rotate;
    throw std::invalid_argument("unknown perturbation kind: " + s);
}

struct Perturbation {
    PerturbKind kind = PerturbKind::shift;
    double magnitude = 0.0; // fraction of a cell
    // Bit 0: negative x direction (SHIFT) or counter-clockwise (ROTATE).
    // Bit 1: negative y direction (SHIFT).
    unsigned direction = 0;
};

/// Mean cell size of `quad` in camera pixels, averaged over both axes.
inline double mean_cell_px(const ScreenQuad& q, const codec::GridGeometry& geom)
{
    const auto& c = q.corners;
    const double w = 0.5 * (distance(c[0], c[1]) + distance(c[3], c[2]));
    const double h = 0.5 * (distance(c[0], c[3]) + distance(c[1], c[2]));
    return 0.5 * (w / geom.cols + h / geom.rows);
}

/// Moves the quad by a fraction of a grid cell. SHIFT, EXPAND and SHRINK act
/// in the quad's own normalized coordinates (so they follow perspective);
/// ROTATE turns the quad about its centroid.
inline ScreenQuad perturb_quad(const ScreenQuad& truth, const Perturbation& p, const codec::GridGeometry& geom)
{
    if (p.magnitude < 0 || p.magnitude >= 1) throw std::invalid_argument("perturbation magnitude must be in [0, 1)");
    if (geom.rows <= 0 || geom.cols <= 0) throw std::invalid_argument("grid must be non-empty");
    if (p.magnitude == 0) return truth;

    const double du = p.magnitude / geom.cols;
    const double dv = p.magnitude / geom.rows;
    const Homography h = unit_to_quad(truth);
    switch (p.kind) {
    case PerturbKind::shift: {
        const double sx = (p.direction & 1u) ? -1 : 1;
        const double sy = (p.direction & 2u) ? -1 : 1;
        return transform(h, ScreenQuad::rect(sx * du, sy * dv, 1 + sx * du, 1 + sy * dv));
    }
    case PerturbKind::expand: return transform(h, ScreenQuad::rect(-du, -dv, 1 + du, 1 + dv));
    case PerturbKind::shrink: return transform(h, ScreenQuad::rect(du, dv, 1 - du, 1 - dv));
    case PerturbKind::rotate: {
        const Point c = truth.centroid();
        double r = 0;
        for (const auto& q : truth.corners) r = std::max(r, distance(q, c));
        const double disp = p.magnitude * mean_cell_px(truth, geom);
        const double phi = 2 * std::asin(std::min(1.0, disp / (2 * r))) * ((p.direction & 1u) ? -1 : 1);
        ScreenQuad out;
        for (int i = 0; i < 4; ++i) {
            const Point d = truth.corners[i] - c;
            out.corners[i] = c + Point{d.x * std::cos(phi) - d.y * std::sin(phi), d.x * std::sin(phi) + d.y * std::cos(phi)};
        }
        return out;
    }
    }
    return truth;
}

} // namespace bluecast::channel
