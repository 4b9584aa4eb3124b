#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bluecast/geometry.hpp"
#include "bluecast/image.hpp"

namespace bluecast::extract {

inline constexpr int kDefaultSide = 299;

/// Per-pixel screen probability in [0, 1].
using ProbMap = Plane;

/// Any Frame -> ProbMap strategy. The default works on synthetic scenes; a
/// learned segmenter can be dropped in.
using Segmenter = std::function<ProbMap(const Frame&)>;

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}
    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const { return static_cast<std::size_t>(std::count(data.begin(), data.end(), 1)); }
};

struct SegmenterOptions {
    // Known background (e.g. the simulator's), used instead of estimating one.
    std::optional<FloatImage> background;
    int border = 3;          // width of the frame band the background model is fitted to
    int smooth_radius = 1;   // box filter radius on the difference image
    double min_threshold = 10.0;
    // Border residual (robust sigma) above which the border is taken to be
    // screen content, i.e. the screen fills the frame.
    double textured_border_sigma = 8.0;
};

namespace detail {

using Vec6 = Eigen::Matrix<double, 6, 1>;

// Quadratic surface in normalized coordinates: 1, x, y, x^2, xy, y^2.
inline Vec6 quad_basis(double x, double y, int w, int h)
{
    const double u = 2.0 * x / w - 1.0, v = 2.0 * y / h - 1.0;
    Vec6 b;
    b << 1.0, u, v, u * u, u * v, v * v;
    return b;
}

struct SurfaceFit {
    std::array<Vec6, 3> coef; // per channel
    double sigma = 0;         // robust residual scale

    double eval(int c, double x, double y, int w, int h) const
    {
        return coef[static_cast<std::size_t>(c)].dot(quad_basis(x, y, w, h));
    }
};

// Smooth background fit to the frame border, trimmed so that a screen
// touching part of the border does not drag the model.
inline SurfaceFit fit_border_surface(const FloatImage& img, int border)
{
    const int w = img.width(), h = img.height();
    std::vector<std::pair<int, int>> pts;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (x < border || y < border || x >= w - border || y >= h - border) pts.emplace_back(x, y);

    std::vector<char> use(pts.size(), 1);
    SurfaceFit fit;
    for (int iter = 0; iter < 3; ++iter) {
        Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
        std::array<Vec6, 3> atb{Vec6::Zero(), Vec6::Zero(), Vec6::Zero()};
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (!use[i]) continue;
            const Vec6 row = quad_basis(pts[i].first, pts[i].second, w, h);
            ata += row * row.transpose();
            for (int c = 0; c < 3; ++c)
                atb[static_cast<std::size_t>(c)] += row * img.channel(Channel(c)).at(pts[i].first, pts[i].second);
        }
        const auto solver = ata.ldlt();
        for (int c = 0; c < 3; ++c) fit.coef[static_cast<std::size_t>(c)] = solver.solve(atb[static_cast<std::size_t>(c)]);

        std::vector<double> res(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double s = 0;
            for (int c = 0; c < 3; ++c) {
                const double d = img.channel(Channel(c)).at(pts[i].first, pts[i].second) -
                                 fit.eval(c, pts[i].first, pts[i].second, w, h);
                s += d * d;
            }
            res[i] = std::sqrt(s / 3);
        }
        std::vector<double> sorted = res;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
        const double median = sorted[sorted.size() / 2];
        fit.sigma = 1.4826 * median;
        const double cut = std::max(3.0 * fit.sigma, 2.0);
        for (std::size_t i = 0; i < pts.size(); ++i) use[i] = res[i] <= cut;
    }
    return fit;
}

inline Plane box_filter(const Plane& p, int r)
{
    if (r <= 0) return p;
    const int w = p.width, h = p.height;
    // summed-area table
    std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    auto S = [&](int x, int y) -> double& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) S(x + 1, y + 1) = p.at(x, y) + S(x, y + 1) + S(x + 1, y) - S(x, y);
    Plane out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
            const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
            out.at(x, y) = static_cast<float>((S(x1, y1) - S(x0, y1) - S(x1, y0) + S(x0, y0)) / ((x1 - x0) * (y1 - y0)));
        }
    return out;
}

} // namespace detail

/// Default segmenter for synthetic scenes: colour distance to a background
/// model (known, or a quadratic surface fitted to the frame border) mapped
/// through a logistic, then box-smoothed.
inline ProbMap segment_default(const Frame& frame, const SegmenterOptions& opt = {})
{
    const int w = frame.width(), h = frame.height();
    ProbMap out(w, h, 0.0f);
    if (frame.empty()) return out;
    const FloatImage img = to_float(frame);

    Plane dist(w, h);
    double sigma = 2.0;
    if (opt.background) {
        if (opt.background->width() != w || opt.background->height() != h)
            throw std::invalid_argument("known background size differs from the frame");
        for (std::size_t i = 0; i < dist.data.size(); ++i) {
            const double dr = img.r.data[i] - opt.background->r.data[i];
            const double dg = img.g.data[i] - opt.background->g.data[i];
            const double db = img.b.data[i] - opt.background->b.data[i];
            dist.data[i] = static_cast<float>(std::sqrt((dr * dr + dg * dg + db * db) / 3));
        }
    } else {
        const auto fit = detail::fit_border_surface(img, std::max(1, std::min({opt.border, w / 2, h / 2})));
        if (fit.sigma > opt.textured_border_sigma) {
            // No usable background anywhere on the border: the screen fills the frame.
            std::fill(out.data.begin(), out.data.end(), 1.0f);
            return out;
        }
        sigma = std::max(sigma, fit.sigma);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double s = 0;
                for (int c = 0; c < 3; ++c) {
                    const double d = img.channel(Channel(c)).at(x, y) - fit.eval(c, x, y, w, h);
                    s += d * d;
                }
                dist.at(x, y) = static_cast<float>(std::sqrt(s / 3));
            }
    }
    const double t0 = std::max(opt.min_threshold, 4.0 * sigma);
    const double scale = t0 / 4.0;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(1.0 / (1.0 + std::exp(-(dist.data[i] - t0) / scale)));
    // smoothing the probabilities (not the distances) keeps high-contrast
    // edges from bleeding outward
    return detail::box_filter(out, opt.smooth_radius);
}

inline Segmenter default_segmenter(SegmenterOptions opt = {})
{
    return [opt = std::move(opt)](const Frame& f) { return segment_default(f, opt); };
}

/// Max-dilation over a K x K window (anchor K/2), then binarize at `threshold`.
inline BinaryMask smooth_threshold(const ProbMap& map, int kernel, double threshold = 0.5)
{
    if (kernel < 1) throw std::invalid_argument("dilation kernel must be at least 1");
    const int lo = -(kernel / 2);
    const int hi = kernel - 1 + lo;
    const int w = map.width, h = map.height;
    Plane tmp(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float m = map.at(x, y);
            for (int d = lo; d <= hi; ++d) {
                const int xx = x + d;
                if (xx >= 0 && xx < w) m = std::max(m, map.at(xx, y));
            }
            tmp.at(x, y) = m;
        }
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float m = tmp.at(x, y);
            for (int d = lo; d <= hi; ++d) {
                const int yy = y + d;
                if (yy >= 0 && yy < h) m = std::max(m, tmp.at(x, yy));
            }
            out.at(x, y) = m >= threshold ? 1 : 0;
        }
    return out;
}

namespace detail {

/// Labels of the largest 4-connected foreground component.
inline std::vector<std::pair<int, int>> largest_component(const BinaryMask& mask)
{
    const int w = mask.width, h = mask.height;
    std::vector<int> label(mask.data.size(), -1);
    std::vector<std::pair<int, int>> best, cur, stack;
    int next = 0;
    for (int y0 = 0; y0 < h; ++y0)
        for (int x0 = 0; x0 < w; ++x0) {
            const std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
            if (!mask.data[i0] || label[i0] >= 0) continue;
            cur.clear();
            stack.assign(1, {x0, y0});
            label[i0] = next;
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                cur.emplace_back(x, y);
                const int nx[4] = {x + 1, x - 1, x, x};
                const int ny[4] = {y, y, y + 1, y - 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
                    const std::size_t j = static_cast<std::size_t>(ny[k]) * w + nx[k];
                    if (mask.data[j] && label[j] < 0) {
                        label[j] = next;
                        stack.emplace_back(nx[k], ny[k]);
                    }
                }
            }
            ++next;
            if (cur.size() > best.size()) best.swap(cur);
        }
    return best;
}

/// Andrew's monotone chain; returns the hull in clockwise screen order.
inline Polygon convex_hull(std::vector<Point> pts)
{
    std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    Polygon hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

/// Reduces a convex polygon to a quadrilateral by repeatedly deleting the
/// edge whose removal (extending both neighbouring edges to meet) adds the
/// least area. The result circumscribes the input.
inline Polygon reduce_to_quad(Polygon poly)
{
    auto line_meet = [](Point a, Point b, Point c, Point d, Point& out) {
        const Point r = b - a, s = d - c;
        const double den = cross(r, s);
        if (std::abs(den) < 1e-12) return false;
        const double t = cross(c - a, s) / den;
        out = a + r * t;
        return true;
    };
    while (poly.size() > 4) {
        const std::size_t n = poly.size();
        std::size_t best = n;
        double best_area = 1e300;
        Point best_point;
        for (std::size_t i = 0; i < n; ++i) {
            const Point a = poly[(i + n - 1) % n], b = poly[i], c = poly[(i + 1) % n], d = poly[(i + 2) % n];
            Point p;
            if (!line_meet(a, b, d, c, p)) continue;
            // the meeting point must lie beyond b along a->b and beyond c along d->c
            if ((p - b).x * (b - a).x + (p - b).y * (b - a).y < -1e-9) continue;
            if ((p - c).x * (c - d).x + (p - c).y * (c - d).y < -1e-9) continue;
            const double added = std::abs(cross(p - b, c - b)) * 0.5;
            if (added < best_area) {
                best_area = added;
                best = i;
                best_point = p;
            }
        }
        if (best == n) {
            // no edge can be removed by extension; fall back to dropping the
            // vertex that loses the least area
            std::size_t drop = 0;
            double least = 1e300;
            for (std::size_t i = 0; i < n; ++i) {
                const double tri = std::abs(cross(poly[i] - poly[(i + n - 1) % n], poly[(i + 1) % n] - poly[(i + n - 1) % n]));
                if (tri < least) least = tri, drop = i;
            }
            poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(drop));
            continue;
        }
        // replace the edge (best, best+1) by the meeting point
        const std::size_t j = (best + 1) % n;
        poly[best] = best_point;
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return poly;
}

} // namespace detail

/// Largest component of the mask reduced to a quadrilateral; nullopt when no
/// component reaches `min_area_fraction` of the frame or no convex quad fits.
inline std::optional<ScreenQuad> localize_quad(const BinaryMask& mask, double min_area_fraction = 0.01)
{
    const auto comp = detail::largest_component(mask);
    const double frame_area = double(mask.width) * mask.height;
    if (comp.empty() || double(comp.size()) < min_area_fraction * frame_area) return std::nullopt;

    auto in = [&](int x, int y) { return x >= 0 && y >= 0 && x < mask.width && y < mask.height && mask.at(x, y); };
    std::vector<Point> corners;
    for (const auto& [x, y] : comp) {
        if (in(x - 1, y) && in(x + 1, y) && in(x, y - 1) && in(x, y + 1)) continue;
        corners.push_back({x - 0.5, y - 0.5});
        corners.push_back({x + 0.5, y - 0.5});
        corners.push_back({x + 0.5, y + 0.5});
        corners.push_back({x - 0.5, y + 0.5});
    }
    const Polygon hull = detail::convex_hull(std::move(corners));
    if (hull.size() < 4) return std::nullopt;
    const Polygon quad = detail::reduce_to_quad(hull);
    const ScreenQuad q = canonical_order({quad[0], quad[1], quad[2], quad[3]});
    if (!q.convex() || q.area() < min_area_fraction * frame_area * 0.5) return std::nullopt;
    return q;
}

namespace detail {

inline void check_quad(const ScreenQuad& quad)
{
    if (!quad.convex() || quad.area() < 1.0) throw std::domain_error("degenerate screen quad");
}

} // namespace detail

/// Perspective-rectifies one channel of the quad region to out_w x out_h.
inline Plane unwarp_plane(const Plane& src, const ScreenQuad& quad, int out_w, int out_h)
{
    detail::check_quad(quad);
    if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("output size must be positive");
    const Homography h = unit_to_quad(quad);
    Plane out(out_w, out_h);
    for (int j = 0; j < out_h; ++j)
        for (int i = 0; i < out_w; ++i) {
            const Point p = h.apply({(i + 0.5) / out_w, (j + 0.5) / out_h});
            out.at(i, j) = src.sample(p.x, p.y);
        }
    return out;
}

inline Frame unwarp(const Frame& frame, const ScreenQuad& quad, int out_w, int out_h)
{
    const FloatImage img = to_float(frame);
    FloatImage out;
    out.r = unwarp_plane(img.r, quad, out_w, out_h);
    out.g = unwarp_plane(img.g, quad, out_w, out_h);
    out.b = unwarp_plane(img.b, quad, out_w, out_h);
    return to_frame(out);
}

inline Frame unwarp(const Frame& frame, const ScreenQuad& quad, int side = kDefaultSide)
{
    return unwarp(frame, quad, side, side);
}

struct ExtractionResult {
    ScreenQuad quad;
    Frame normalized;
};

struct ExtractOptions {
    int kernel = 2;
    double threshold = 0.5;
    double min_area_fraction = 0.01;
    int side = kDefaultSide;
};

/// Quad only (segment, dilate/threshold, localize).
inline std::optional<ScreenQuad> locate_screen(const Frame& frame, const Segmenter& seg, const ExtractOptions& opt = {})
{
    return localize_quad(smooth_threshold(seg(frame), opt.kernel, opt.threshold), opt.min_area_fraction);
}

inline std::optional<ExtractionResult> extract_screen(const Frame& frame, const Segmenter& seg,
                                                      const ExtractOptions& opt = {})
{
    const auto q = locate_screen(frame, seg, opt);
    if (!q) return std::nullopt;
    return ExtractionResult{*q, unwarp(frame, *q, opt.side)};
}

struct Overlap {
    double iou = 0;
    double ioc = 0;
};

inline Overlap iou_ioc(const ScreenQuad& pred, const ScreenQuad& truth)
{
    const double at = truth.area();
    const double ap = pred.area();
    if (at <= 0) throw std::domain_error("truth quad has no area");
    const double inter = area(clip_polygon(pred.polygon(), truth.polygon()));
    const double uni = at + ap - inter;
    return {uni > 0 ? inter / uni : 0.0, inter / at};
}

struct LandmarkThresholds {
    double min_red = 180;
    double max_green = 60;
    double max_blue = 60;
};

/// True when the mean colour inside `quad` (or the whole frame) is landmark red.
inline bool detect_landmark(const Frame& frame, const std::optional<ScreenQuad>& quad = std::nullopt,
                            const LandmarkThresholds& t = {})
{
    if (frame.empty()) return false;
    double sum[3] = {0, 0, 0};
    std::size_t n = 0;
    const Polygon poly = quad ? quad->polygon() : Polygon{};
    const double orient = quad && signed_area(poly) < 0 ? -1.0 : 1.0;
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x) {
            if (quad) {
                bool inside = true;
                for (std::size_t i = 0; i < 4 && inside; ++i)
                    inside = orient * cross(poly[(i + 1) % 4] - poly[i], Point{double(x), double(y)} - poly[i]) >= 0;
                if (!inside) continue;
            }
            for (int c = 0; c < 3; ++c) sum[c] += frame.at(x, y, Channel(c));
            ++n;
        }
    if (n == 0) return false;
    return sum[0] / n > t.min_red && sum[1] / n < t.max_green && sum[2] / n < t.max_blue;
}

} // namespace bluecast::extract
