#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace bluecast {

struct Point {
    double x = 0;
    double y = 0;

    Point operator+(Point o) const { return {x + o.x, y + o.y}; }
    Point operator-(Point o) const { return {x - o.x, y - o.y}; }
    Point operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Point&) const = default;
};

inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

using Polygon = std::vector<Point>;

/// Signed shoelace area; positive for clockwise order in image coordinates
/// (y pointing down), i.e. TL, TR, BR, BL.
inline double signed_area(const Polygon& p)
{
    double a = 0;
    for (std::size_t i = 0; i < p.size(); ++i) a += cross(p[i], p[(i + 1) % p.size()]);
    return 0.5 * a;
}

inline double area(const Polygon& p) { return std::abs(signed_area(p)); }

inline bool is_convex(const Polygon& p)
{
    if (p.size() < 3) return false;
    int sign = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Point a = p[i], b = p[(i + 1) % p.size()], c = p[(i + 2) % p.size()];
        const double z = cross(b - a, c - b);
        if (std::abs(z) < 1e-12) continue;
        const int s = z > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return sign != 0;
}

/// Sutherland-Hodgman clip of `subject` against the convex polygon `clip`.
inline Polygon clip_polygon(const Polygon& subject, const Polygon& clip)
{
    Polygon out = subject;
    const double orient = signed_area(clip) >= 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
        const Point a = clip[i];
        const Point b = clip[(i + 1) % clip.size()];
        auto inside = [&](Point p) { return orient * cross(b - a, p - a) >= 0; };
        auto intersect = [&](Point p, Point q) {
            const double d1 = cross(b - a, p - a);
            const double d2 = cross(b - a, q - a);
            const double t = d1 / (d1 - d2);
            return p + (q - p) * t;
        };
        Polygon in = std::move(out);
        out.clear();
        for (std::size_t j = 0; j < in.size(); ++j) {
            const Point cur = in[j];
            const Point prev = in[(j + in.size() - 1) % in.size()];
            const bool cin = inside(cur);
            const bool pin = inside(prev);
            if (cin) {
                if (!pin) out.push_back(intersect(prev, cur));
                out.push_back(cur);
            } else if (pin) {
                out.push_back(intersect(prev, cur));
            }
        }
    }
    return out;
}

/// Screen corners in a camera frame, ordered TL, TR, BR, BL.
struct ScreenQuad {
    std::array<Point, 4> corners{};

    static ScreenQuad rect(double x0, double y0, double x1, double y1)
    {
        return ScreenQuad{{Point{x0, y0}, Point{x1, y0}, Point{x1, y1}, Point{x0, y1}}};
    }

    /// Quad covering an entire w x h frame, pixel centres at integers.
    static ScreenQuad full_frame(int w, int h) { return rect(-0.5, -0.5, w - 0.5, h - 0.5); }

    Polygon polygon() const { return Polygon(corners.begin(), corners.end()); }
    double area() const { return bluecast::area(polygon()); }
    bool convex() const { return is_convex(polygon()); }

    Point centroid() const
    {
        Point c;
        for (const auto& p : corners) c = c + p;
        return c * 0.25;
    }

    double max_corner_distance(const ScreenQuad& o) const
    {
        double m = 0;
        for (int i = 0; i < 4; ++i) m = std::max(m, distance(corners[i], o.corners[i]));
        return m;
    }
};

/// Reorders four points by angle about their centroid, starting at the one
/// nearest the top-left (smallest x + y) and proceeding clockwise on screen.
inline ScreenQuad canonical_order(std::array<Point, 4> pts)
{
    Point c;
    for (const auto& p : pts) c = c + p;
    c = c * 0.25;
    std::sort(pts.begin(), pts.end(), [&](Point a, Point b) {
        return std::atan2(a.y - c.y, a.x - c.x) < std::atan2(b.y - c.y, b.x - c.x);
    });
    const auto tl = std::min_element(pts.begin(), pts.end(), [](Point a, Point b) { return a.x + a.y < b.x + b.y; });
    std::rotate(pts.begin(), tl, pts.end());
    return ScreenQuad{pts};
}

class Homography {
public:
    Homography() : h_(Eigen::Matrix3d::Identity()) {}
    explicit Homography(const Eigen::Matrix3d& h) : h_(h) {}

    /// Exact homography mapping src[i] -> dst[i] for four point pairs.
    static Homography from_points(const std::array<Point, 4>& src, const std::array<Point, 4>& dst)
    {
        Eigen::Matrix<double, 8, 8> a;
        Eigen::Matrix<double, 8, 1> b;
        for (int i = 0; i < 4; ++i) {
            const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
            a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
            a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
            b(2 * i) = u;
            b(2 * i + 1) = v;
        }
        Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
        if (!lu.isInvertible()) throw std::domain_error("degenerate point configuration for homography");
        const Eigen::Matrix<double, 8, 1> p = lu.solve(b);
        Eigen::Matrix3d h;
        h << p(0), p(1), p(2), p(3), p(4), p(5), p(6), p(7), 1.0;
        return Homography(h);
    }

    Point apply(Point p) const
    {
        const Eigen::Vector3d r = h_ * Eigen::Vector3d(p.x, p.y, 1.0);
        return {r(0) / r(2), r(1) / r(2)};
    }

    Homography inverse() const { return Homography(h_.inverse()); }
    Homography operator*(const Homography& o) const { return Homography(h_ * o.h_); }
    const Eigen::Matrix3d& matrix() const { return h_; }

private:
    Eigen::Matrix3d h_;
};

/// Homography taking the axis-aligned rectangle [x0,x1] x [y0,y1] onto `quad`.
inline Homography rect_to_quad(double x0, double y0, double x1, double y1, const ScreenQuad& quad)
{
    return Homography::from_points(ScreenQuad::rect(x0, y0, x1, y1).corners, quad.corners);
}

/// Homography from normalized screen coordinates (unit square) onto `quad`.
inline Homography unit_to_quad(const ScreenQuad& quad) { return rect_to_quad(0, 0, 1, 1, quad); }

inline ScreenQuad transform(const Homography& h, const ScreenQuad& q)
{
    ScreenQuad out;
    for (int i = 0; i < 4; ++i) out.corners[i] = h.apply(q.corners[i]);
    return out;
}

} // namespace bluecast
