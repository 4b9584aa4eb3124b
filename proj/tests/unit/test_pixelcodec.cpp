#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "bluecast/codec/pixelcodec.hpp"
#include "bluecast/content.hpp"

using namespace bluecast;
using namespace bluecast::codec;

namespace {

Bits random_bits(std::mt19937& rng, std::size_t n)
{
    Bits b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng() & 1u);
    return b;
}

Frame random_image(std::mt19937& rng, int w, int h)
{
    Frame f(w, h);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto& v : f.data()) v = static_cast<std::uint8_t>(d(rng));
    return f;
}

Bits all_ones(int n) { return Bits(static_cast<std::size_t>(n), 1); }

} // namespace

TEST(GridGeometry, RemainderJoinsLastCell)
{
    const auto g = GridGeometry::for_image(10, 10, 103, 57);
    EXPECT_EQ(g.cell_width(), 10);
    EXPECT_EQ(g.cell_height(), 5);
    EXPECT_EQ(g.col_end(9) - g.col_begin(9), 13);
    EXPECT_EQ(g.row_end(9) - g.row_begin(9), 12);
    long covered = 0;
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) covered += long(g.row_end(r) - g.row_begin(r)) * (g.col_end(c) - g.col_begin(c));
    EXPECT_EQ(covered, 103L * 57L);
}

TEST(GridGeometry, RejectsOversizedGrid)
{
    EXPECT_THROW(GridGeometry::for_image(10, 10, 9, 40), GeometryError);
    EXPECT_THROW(GridGeometry::for_image(0, 10, 100, 100), GeometryError);
}

TEST(EmbedPair, UniformGrayDeltaTwo)
{
    const Frame img = Frame::filled(40, 30, 128, 128, 128);
    const auto g = GridGeometry::for_image(3, 4, 40, 30);
    const auto pair = embed_pair(img, all_ones(12), g, ModulationPlan::fixed(2));
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x) {
            ASSERT_EQ(pair.plus.at(x, y, Channel::blue), 130);
            ASSERT_EQ(pair.minus.at(x, y, Channel::blue), 126);
            ASSERT_EQ(pair.plus.at(x, y, Channel::red), 128);
            ASSERT_EQ(pair.minus.at(x, y, Channel::green), 128);
        }
}

TEST(EmbedPair, ClampsAtWhite)
{
    const Frame img = Frame::filled(10, 10, 0, 0, 255);
    const auto pair = embed_pair(img, Bits{1}, GridGeometry::for_image(1, 1, 10, 10), ModulationPlan::fixed(2));
    EXPECT_EQ(pair.plus.at(3, 3, Channel::blue), 255);
    EXPECT_EQ(pair.minus.at(3, 3, Channel::blue), 253);
}

TEST(EmbedPair, ZeroBitFlipsSigns)
{
    const Frame img = Frame::filled(10, 10, 0, 0, 100);
    const auto pair = embed_pair(img, Bits{0}, GridGeometry::for_image(1, 1, 10, 10), ModulationPlan::fixed(3));
    EXPECT_EQ(pair.plus.at(0, 0, Channel::blue), 97);
    EXPECT_EQ(pair.minus.at(0, 0, Channel::blue), 103);
}

TEST(EmbedPair, MixDeltaPerCell)
{
    // left cell mean Blue 20, right cell 40, boundary cell exactly 30
    Frame img(30, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 30; ++x) img.at(x, y, Channel::blue) = x < 10 ? 20 : (x < 20 ? 40 : 30);
    const auto pair = embed_pair(img, Bits{1, 1, 1}, GridGeometry::for_image(1, 3, 30, 10), ModulationPlan::mix());
    EXPECT_EQ(pair.plus.at(5, 5, Channel::blue), 23);
    EXPECT_EQ(pair.plus.at(15, 5, Channel::blue), 42);
    EXPECT_EQ(pair.plus.at(25, 5, Channel::blue), 33);
}

TEST(EmbedPair, RejectsWrongBitCount)
{
    const Frame img(20, 20);
    const auto g = GridGeometry::for_image(2, 2, 20, 20);
    EXPECT_THROW(embed_pair(img, Bits(3, 0), g, ModulationPlan::mix()), GeometryError);
    EXPECT_THROW(embed_pair(img, Bits(4, 0), GridGeometry::for_image(2, 2, 21, 20), ModulationPlan::mix()),
                 GeometryError);
}

TEST(EmbedPair, InvalidDeltaRejected)
{
    EXPECT_THROW(ModulationPlan::fixed(0), std::invalid_argument);
    EXPECT_THROW(ModulationPlan::fixed(4), std::invalid_argument);
}

TEST(EmbedPair, ChannelInvariantsOnRandomImages)
{
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Frame img = random_image(rng, 64, 48);
        const auto g = GridGeometry::for_image(8, 8, 64, 48);
        const Bits bits = random_bits(rng, 64);
        const ModulationPlan plan = trial % 2 ? ModulationPlan::mix() : ModulationPlan::fixed(1 + trial % 3);
        const auto means = cell_means(img, g);
        const auto pair = embed_pair(img, bits, g, plan);
        for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < g.cols; ++c) {
                const int d = plan.delta_for(means[std::size_t(r * g.cols + c)]);
                for (int y = g.row_begin(r); y < g.row_end(r); ++y)
                    for (int x = g.col_begin(c); x < g.col_end(c); ++x) {
                        const int b = img.at(x, y, Channel::blue);
                        const int p = pair.plus.at(x, y, Channel::blue);
                        const int m = pair.minus.at(x, y, Channel::blue);
                        ASSERT_EQ(pair.plus.at(x, y, Channel::red), img.at(x, y, Channel::red));
                        ASSERT_EQ(pair.plus.at(x, y, Channel::green), img.at(x, y, Channel::green));
                        ASSERT_EQ(pair.minus.at(x, y, Channel::red), img.at(x, y, Channel::red));
                        ASSERT_EQ(pair.minus.at(x, y, Channel::green), img.at(x, y, Channel::green));
                        const bool clamped = b - d < 0 || b + d > 255;
                        if (!clamped) {
                            ASSERT_EQ(std::abs(p - m), 2 * d);
                            ASSERT_EQ(p + m, 2 * b); // temporal average is exact
                        } else {
                            // clamping moves the average by at most d/2
                            ASSERT_LE(std::abs((p + m) / 2.0 - b), d / 2.0);
                        }
                    }
            }
    }
}

TEST(ClassicalDecode, NoiselessRoundtripAndPolarity)
{
    std::mt19937 rng(5);
    const auto corpus = content::corpus(120, 90);
    for (const auto& img : corpus) {
        const auto g = GridGeometry::for_image(10, 10, 120, 90);
        const Bits bits = random_bits(rng, 100);
        const auto pair = embed_pair(img, bits, g, ModulationPlan::mix());
        EXPECT_EQ(classical_decode(pair.plus, pair.minus, g), bits);
        Bits comp = bits;
        for (auto& b : comp) b ^= 1u;
        EXPECT_EQ(classical_decode(pair.minus, pair.plus, g), comp);
    }
}

TEST(ClassicalDecode, TieResolvesToZero)
{
    const Frame img = Frame::filled(10, 10, 1, 2, 3);
    EXPECT_EQ(classical_decode(img, img, GridGeometry::for_image(2, 2, 10, 10)), Bits(4, 0));
}

TEST(ClassicalDecode, NoiseFloorSigmaOne)
{
    // 10x10 grid of 50x50-pixel cells, Delta 2, Gaussian noise sigma 1 on both frames
    std::mt19937 rng(99);
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto corpus = content::corpus(500, 500, 4);
    const auto g = GridGeometry::for_image(10, 10, 500, 500);
    std::size_t errors = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Bits bits = random_bits(rng, 100);
        auto pair = embed_pair(corpus[std::size_t(trial) % corpus.size()], bits, g, ModulationPlan::fixed(2));
        Plane p = extract_channel(pair.plus, Channel::blue);
        Plane m = extract_channel(pair.minus, Channel::blue);
        for (auto& v : p.data) v = static_cast<float>(std::clamp(std::round(v + noise(rng)), 0.0, 255.0));
        for (auto& v : m.data) v = static_cast<float>(std::clamp(std::round(v + noise(rng)), 0.0, 255.0));
        errors += proto::hamming_distance(classical_decode(p, m, g), bits);
        total += bits.size();
    }
    EXPECT_LT(double(errors) / double(total), 0.01);
}

TEST(Psnr, IdenticalIsInfinite)
{
    const Frame a = Frame::filled(8, 8, 9, 9, 9);
    EXPECT_TRUE(std::isinf(psnr(a, a)));
    EXPECT_GT(psnr(a, a), 0);
}

TEST(Psnr, BlueOnlyDeltaThreeClosedForm)
{
    const Frame img = Frame::filled(64, 64, 100, 100, 100);
    const auto pair = embed_pair(img, Bits(16, 1), GridGeometry::for_image(4, 4, 64, 64), ModulationPlan::fixed(3));
    // MSE = 9 on one channel of three
    const double expected = 10.0 * std::log10(255.0 * 255.0 / 3.0);
    EXPECT_NEAR(psnr(img, pair.plus), expected, 1e-9);
    EXPECT_NEAR(psnr(img, pair.minus), 43.36, 0.01);
    EXPECT_NEAR(psnr_channel(img, pair.plus, Channel::blue), 10.0 * std::log10(255.0 * 255.0 / 9.0), 1e-9);
    EXPECT_TRUE(std::isinf(psnr_channel(img, pair.plus, Channel::red)));
}

TEST(Psnr, DimensionMismatchThrows)
{
    EXPECT_THROW(psnr(Frame(4, 4), Frame(4, 5)), GeometryError);
}

TEST(ImageIo, PpmAndPlanarRoundtrip)
{
    std::mt19937 rng(3);
    const Frame img = random_image(rng, 17, 9);
    const auto dir = std::filesystem::temp_directory_path() / "bluecast_io_test";
    std::filesystem::create_directories(dir);
    write_image(dir / "a.ppm", img);
    write_image(dir / "a.rgbp", img);
    EXPECT_EQ(read_image(dir / "a.ppm"), img);
    EXPECT_EQ(read_image(dir / "a.rgbp"), img);
    {
        std::ofstream trunc(dir / "b.rgbp", std::ios::binary);
        trunc.write("RGBP", 4);
    }
    EXPECT_THROW(read_image(dir / "b.rgbp"), ImageIoError);
    std::filesystem::remove_all(dir);
}

TEST(Content, CorpusIsDeterministicAndVaried)
{
    const auto a = content::corpus(64, 36);
    const auto b = content::corpus(64, 36);
    ASSERT_EQ(a.size(), 20u);
    EXPECT_EQ(a, b);
    int dark = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) EXPECT_NE(a[i], a[j]);
        if (mean_channel(a[i], Channel::blue) <= 30) ++dark;
    }
    EXPECT_GT(dark, 0); // some frames exercise the low-intensity Delta
}
