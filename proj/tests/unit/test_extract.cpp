#include <gtest/gtest.h>

#include <random>

#include "bluecast/channel/channel.hpp"
#include "bluecast/codec/pixelcodec.hpp"
#include "bluecast/content.hpp"
#include "bluecast/extract/extract.hpp"

using namespace bluecast;
using namespace bluecast::extract;
using channel::ChannelConfig;

namespace {

ChannelConfig scene_config(double angle = 0)
{
    ChannelConfig cfg;
    cfg.scene_width = 240;
    cfg.scene_height = 180;
    cfg.angle_deg = angle;
    return cfg;
}

bool inside(const ScreenQuad& q, double x, double y)
{
    const auto p = q.polygon();
    const double o = signed_area(p) >= 0 ? 1 : -1;
    for (int i = 0; i < 4; ++i)
        if (o * cross(p[(i + 1) % 4] - p[i], Point{x, y} - p[i]) < 0) return false;
    return true;
}

BinaryMask rasterize(const ScreenQuad& q, int w, int h)
{
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.at(x, y) = inside(q, x, y) ? 1 : 0;
    return m;
}

} // namespace

TEST(Segment, FlatBackgroundSeparates)
{
    const Frame screen = content::procedural_frame(6, 192, 108);
    const auto res = channel::compose_scene(screen, scene_config(20));
    const auto map = segment_default(res.frame);
    double in = 0, out = 0;
    int nin = 0, nout = 0;
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            ASSERT_GE(map.at(x, y), 0.0f);
            ASSERT_LE(map.at(x, y), 1.0f);
            if (inside(res.truth, x, y)) in += map.at(x, y), ++nin;
            else out += map.at(x, y), ++nout;
        }
    EXPECT_GT(in / nin, 0.9);
    EXPECT_LT(out / nout, 0.1);
}

TEST(Segment, KnownBackgroundOption)
{
    auto cfg = scene_config(-15);
    cfg.background = channel::Background::indoor;
    const channel::OpticalPath path(cfg, 192, 108);
    const Frame cam = path.render(content::procedural_frame(2, 192, 108));
    SegmenterOptions opt;
    opt.background = path.background();
    const auto q = locate_screen(cam, default_segmenter(opt));
    ASSERT_TRUE(q.has_value());
    EXPECT_GT(iou_ioc(*q, path.truth()).iou, 0.95);
}

TEST(Segment, BackgroundOnlyHasNoScreen)
{
    const auto seg = default_segmenter();
    EXPECT_FALSE(locate_screen(content::flat_background(240, 180), seg).has_value());
    for (std::uint64_t s = 0; s < 5; ++s)
        EXPECT_FALSE(locate_screen(content::indoor_background(240, 180, s), seg).has_value()) << s;
}

TEST(Segment, FullyCoveredFrame)
{
    auto cfg = scene_config();
    cfg.distance = cfg.screen_fill;
    const auto full = ScreenQuad::full_frame(240, 180);
    // textured content on the border is recognised as screen by the blind model
    const auto tex = channel::compose_scene(content::procedural_frame(2, 240, 180), cfg);
    const auto q = locate_screen(tex.frame, default_segmenter());
    ASSERT_TRUE(q.has_value());
    EXPECT_LT(q->max_corner_distance(full), 2.0);
    // smooth content needs the known background to be told apart from a wall
    const channel::OpticalPath path(cfg, 240, 180);
    SegmenterOptions opt;
    opt.background = path.background();
    const auto qk = locate_screen(path.render(content::procedural_frame(5, 240, 180)), default_segmenter(opt));
    ASSERT_TRUE(qk.has_value());
    EXPECT_LT(qk->max_corner_distance(full), 2.0);
}

TEST(SmoothThreshold, KernelOneIsThreshold)
{
    std::mt19937 rng(2);
    std::uniform_real_distribution<float> u(0, 1);
    ProbMap m(20, 15);
    for (auto& v : m.data) v = u(rng);
    const auto mask = smooth_threshold(m, 1, 0.5);
    for (std::size_t i = 0; i < m.data.size(); ++i) EXPECT_EQ(mask.data[i], m.data[i] >= 0.5f ? 1 : 0);
}

TEST(SmoothThreshold, DilationShapes)
{
    ProbMap m(9, 9, 0.0f);
    m.at(4, 4) = 1.0f;
    const auto k3 = smooth_threshold(m, 3);
    EXPECT_EQ(k3.count(), 9u);
    for (int y = 3; y <= 5; ++y)
        for (int x = 3; x <= 5; ++x) EXPECT_EQ(k3.at(x, y), 1);
    const auto k2 = smooth_threshold(m, 2);
    EXPECT_EQ(k2.count(), 4u);
    EXPECT_EQ(k2.at(5, 5), 1);
    EXPECT_THROW(smooth_threshold(m, 0), std::invalid_argument);
}

TEST(LocalizeQuad, AxisAlignedRectangle)
{
    BinaryMask m(100, 80);
    for (int y = 10; y <= 59; ++y)
        for (int x = 20; x <= 89; ++x) m.at(x, y) = 1;
    const auto q = localize_quad(m);
    ASSERT_TRUE(q.has_value());
    EXPECT_LT(q->max_corner_distance(ScreenQuad::rect(19.5, 9.5, 89.5, 59.5)), 1.0);
}

TEST(LocalizeQuad, ObliqueTrapezoidFromScene)
{
    const auto res = channel::compose_scene(content::procedural_frame(11, 192, 108), scene_config(30));
    const auto q = localize_quad(smooth_threshold(segment_default(res.frame), 1));
    ASSERT_TRUE(q.has_value());
    EXPECT_LT(q->max_corner_distance(res.truth), 2.0);
}

TEST(LocalizeQuad, LargerComponentWins)
{
    BinaryMask m(100, 100);
    for (int y = 5; y < 20; ++y)
        for (int x = 5; x < 20; ++x) m.at(x, y) = 1;
    for (int y = 40; y < 90; ++y)
        for (int x = 30; x < 95; ++x) m.at(x, y) = 1;
    const auto q = localize_quad(m);
    ASSERT_TRUE(q.has_value());
    EXPECT_LT(q->max_corner_distance(ScreenQuad::rect(29.5, 39.5, 94.5, 89.5)), 1.0);
}

TEST(LocalizeQuad, RejectsTinyComponentsAndStaysConvex)
{
    BinaryMask m(200, 200);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) m.at(x, y) = 1; // 100 px < 1% of 40000
    EXPECT_FALSE(localize_quad(m).has_value());

    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 50; ++t) {
        const ScreenQuad q = canonical_order({Point{20 + 40 * u(rng), 20 + 40 * u(rng)}, Point{140 + 40 * u(rng), 20 + 40 * u(rng)},
                                               Point{140 + 40 * u(rng), 140 + 40 * u(rng)}, Point{20 + 40 * u(rng), 140 + 40 * u(rng)}});
        const auto r = localize_quad(rasterize(q, 200, 200));
        ASSERT_TRUE(r.has_value());
        EXPECT_TRUE(r->convex());
        EXPECT_GT(iou_ioc(*r, q).iou, 0.97);
    }
}

TEST(Unwarp, FullFrameIsIdentity)
{
    const Frame f = content::procedural_frame(7, 64, 64);
    EXPECT_EQ(unwarp(f, ScreenQuad::full_frame(64, 64), 64), f);
}

TEST(Unwarp, ObliqueRoundtripBlueError)
{
    for (double angle : {30.0, -30.0}) {
        auto cfg = scene_config(angle);
        cfg.scene_width = 480;
        cfg.scene_height = 360;
        const Frame screen = content::procedural_frame(1, 192, 108);
        const auto res = channel::compose_scene(screen, cfg);
        const Frame back = unwarp(res.frame, res.truth, 192, 108);
        double err = 0;
        for (int y = 0; y < 108; ++y)
            for (int x = 0; x < 192; ++x)
                err += std::abs(int(back.at(x, y, Channel::blue)) - int(screen.at(x, y, Channel::blue)));
        EXPECT_LT(err / (192.0 * 108.0), 2.0) << angle;
    }
}

TEST(Unwarp, DegenerateQuadThrows)
{
    const Frame f(10, 10);
    ScreenQuad q{{Point{0, 0}, Point{5, 5}, Point{9, 9}, Point{2, 2}}};
    EXPECT_THROW(unwarp(f, q, 8), std::domain_error);
}

TEST(EndToEnd, TruthQuadClassicalDecodeIsExact)
{
    std::mt19937 rng(17);
    for (int g : {4, 10}) {
        auto cfg = scene_config(0);
        const Frame img = content::procedural_frame(g, 200, 120);
        const auto geom = codec::GridGeometry::for_image(g, g, 200, 120);
        Bits bits(static_cast<std::size_t>(g * g));
        for (auto& b : bits) b = rng() & 1u;
        const auto pair = codec::embed_pair(img, bits, geom, codec::ModulationPlan::mix());
        const auto p = channel::compose_scene(pair.plus, cfg);
        const auto m = channel::compose_scene(pair.minus, cfg);
        const auto ugeom = codec::GridGeometry::for_image(g, g, 200, 120);
        const Frame up = unwarp(p.frame, p.truth, 200, 120);
        const Frame um = unwarp(m.frame, m.truth, 200, 120);
        EXPECT_EQ(codec::classical_decode(up, um, ugeom), bits) << g;
    }
}

TEST(IouIoc, Basics)
{
    const auto t = ScreenQuad::rect(0, 0, 10, 10);
    auto o = iou_ioc(t, t);
    EXPECT_NEAR(o.iou, 1.0, 1e-12);
    EXPECT_NEAR(o.ioc, 1.0, 1e-12);
    o = iou_ioc(ScreenQuad::rect(0, 0, 20, 10), t);
    EXPECT_NEAR(o.iou, 0.5, 1e-12);
    EXPECT_NEAR(o.ioc, 1.0, 1e-12);
    o = iou_ioc(ScreenQuad::rect(5, 0, 15, 10), t);
    EXPECT_NEAR(o.iou, 50.0 / 150.0, 1e-12);
    EXPECT_NEAR(o.ioc, 0.5, 1e-12);
    o = iou_ioc(ScreenQuad::rect(20, 20, 30, 30), t);
    EXPECT_EQ(o.iou, 0.0);
}

TEST(IouIoc, IouNeverExceedsIoc)
{
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    auto rq = [&] {
        return canonical_order({Point{10 * u(rng), 10 * u(rng)}, Point{20 + 10 * u(rng), 10 * u(rng)},
                                Point{20 + 10 * u(rng), 20 + 10 * u(rng)}, Point{10 * u(rng), 20 + 10 * u(rng)}});
    };
    for (int i = 0; i < 500; ++i) {
        const auto o = iou_ioc(rq(), rq());
        ASSERT_LE(o.iou, o.ioc + 1e-12);
        ASSERT_GE(o.iou, 0.0);
        ASSERT_LE(o.ioc, 1.0 + 1e-12);
    }
}

TEST(IouIoc, DilationNeverLowersIoc)
{
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    for (int s = 0; s < 10; ++s) {
        auto cfg = scene_config(-40 + 80 * u(rng));
        cfg.background = channel::Background::indoor;
        cfg.seed = 500 + s;
        cfg.noise_sigma = 1;
        const auto res = channel::compose_scene(content::procedural_frame(s, 192, 108), cfg, s);
        const auto map = segment_default(res.frame);
        double prev = -1;
        for (int k = 1; k <= 3; ++k) {
            const auto q = localize_quad(smooth_threshold(map, k));
            ASSERT_TRUE(q.has_value());
            const double ioc = iou_ioc(*q, res.truth).ioc;
            EXPECT_GE(ioc, prev - 1e-3) << "scene " << s << " K=" << k;
            prev = ioc;
        }
    }
}

TEST(Landmark, RedScreenDetected)
{
    EXPECT_TRUE(detect_landmark(content::landmark_frame(32, 18)));
    auto cfg = scene_config(10);
    cfg.noise_sigma = 2;
    const auto res = channel::compose_scene(content::landmark_frame(192, 108), cfg, 3);
    EXPECT_TRUE(detect_landmark(res.frame, res.truth));
    EXPECT_FALSE(detect_landmark(res.frame)); // whole frame includes gray background
}

TEST(Landmark, NaturalContentNotDetected)
{
    for (int i = 0; i < 50; ++i) EXPECT_FALSE(detect_landmark(content::procedural_frame(i, 96, 54))) << i;
}
