#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bluecast/harness/config.hpp"
#include "bluecast/harness/pipeline.hpp"
#include "bluecast/harness/recipe.hpp"
#include "bluecast/harness/report.hpp"

using namespace bluecast;
using namespace bluecast::harness;

namespace {

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.rows = 5;
    c.cols = 5;
    c.frames = 12;
    c.content_width = 160;
    c.content_height = 90;
    c.channel.scene_width = 200;
    c.channel.scene_height = 150;
    c.decoder.side = 64;
    return c;
}

std::filesystem::path temp_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("bluecast_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

} // namespace

TEST(Goodput, PublishedRows)
{
    const auto half = layout_for(10, 10, 0.5);
    EXPECT_EQ(half.data_bits(), 40u);
    EXPECT_NEAR(compute_goodput(half, 60, 0.003), 1196.4, 1e-9);
    EXPECT_NEAR(compute_goodput(half, 60, 0.003) / 1000, 1.2, 0.01);
    const auto thirty = layout_for(10, 10, 0.3);
    EXPECT_EQ(thirty.data_bits(), 60u);
    EXPECT_NEAR(compute_goodput(thirty, 60, 0.04), 1728.0, 1e-9);
    EXPECT_EQ(compute_goodput(half, 60, 1.0), 0.0);
    EXPECT_THROW(compute_goodput(half, 60, 1.5), std::invalid_argument);
}

TEST(Goodput, OrderingOfRates)
{
    const auto l = layout_for(10, 10, 0.5);
    for (double fer : {0.0, 0.1, 0.5}) {
        EXPECT_LE(compute_goodput(l, 60, fer), compute_throughput(l, 60, fer));
        EXPECT_LE(compute_throughput(l, 60, fer), compute_raw_throughput(l, 60, 0.0));
    }
}

TEST(Config, JsonRoundTripAndHash)
{
    auto c = small_config();
    c.distances = {1.0, 1.5};
    c.perturbations = {{channel::PerturbKind::shift, 0.2, 1}};
    const auto back = config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
    EXPECT_EQ(back.conditions().size(), 2u);
    c.seed = 2;
    EXPECT_NE(config_hash(back), config_hash(c));
}

TEST(Config, Defaults)
{
    const ExperimentConfig c;
    EXPECT_EQ(c.rows, 10);
    EXPECT_EQ(c.layout(c.rs_rate).parity_fraction(), 0.5);
    EXPECT_EQ(c.channel.display_rate, 60);
    EXPECT_EQ(c.channel.camera_rate, 120);
    EXPECT_EQ(c.conditions().front().delta_label(), "mix");
}

TEST(Config, RejectsBadInput)
{
    EXPECT_THROW(config_from_json(json{{"rowz", 3}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"extractor", {{"every", 0}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"content_dir", "/no/such/dir"}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"decoder", {{"kind", "cnn"}, {"model", "/no/such.bcnn"}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"rows", "ten"}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"channel", {{"camera_rate", 90}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"sweep", {{"delta", {4}}}}}), ConfigError);
    EXPECT_THROW(load_config("/no/such/config.json"), ConfigError);
}

TEST(Config, OutputRootFromEnvironment)
{
    ::setenv("BLUECAST_OUT", "/tmp/root", 1);
    EXPECT_EQ(resolve_output("run1"), std::filesystem::path("/tmp/root/run1"));
    EXPECT_EQ(resolve_output("/abs/run"), std::filesystem::path("/abs/run"));
    ::unsetenv("BLUECAST_OUT");
    EXPECT_EQ(resolve_output("run1"), std::filesystem::path("run1"));
}

TEST(Pipeline, TrueTripleArithmetic)
{
    EXPECT_EQ(true_triple_start(0, 2), 0);
    EXPECT_EQ(true_triple_start(3, 2), 12);
    EXPECT_EQ(true_triple_start(0, 2, 2), 2);
    EXPECT_EQ(true_triple_start(3, 2, 2), 26);
    EXPECT_EQ(true_triple_start(1, 4), 10);
}

TEST(Pipeline, BytesToPayloadsRoundTrip)
{
    const std::vector<std::uint8_t> bytes{0xde, 0xad, 0xbe, 0xef, 0x01};
    const auto frames = bytes_to_payloads(bytes, 15);
    ASSERT_EQ(frames.size(), 3u);
    std::vector<collective::Delivered> d;
    for (const auto& f : frames) d.push_back({0, 0, f, 0});
    auto back = collective::payload_bytes(d);
    back.resize(bytes.size());
    EXPECT_EQ(back, bytes);
}

TEST(Pipeline, NoiselessTruthQuadRunHasZeroFer)
{
    auto c = small_config();
    c.distances = {0.9, 1.2};
    const auto res = run_experiment(c);
    ASSERT_EQ(res.rows.size(), 2u);
    for (const auto& r : res.rows) {
        EXPECT_TRUE(r.error.empty()) << r.error;
        EXPECT_EQ(r.fer, 0.0);
        EXPECT_EQ(r.ber, 0.0);
        EXPECT_EQ(r.corrupted, 0u);
        EXPECT_EQ(r.frames_delivered, 12u);
        EXPECT_NEAR(r.goodput, compute_goodput(layout_for(5, 5, -1), 60, r.fer), 1e-9);
        EXPECT_LE(r.goodput, r.throughput);
        EXPECT_LE(r.throughput, r.raw_throughput);
        EXPECT_GT(r.psnr, 40);
    }
}

TEST(Pipeline, SameSeedSameBytes)
{
    auto c = small_config();
    c.channel.noise_sigma = 2;
    c.perturbations = {{channel::PerturbKind::shift, 0.3, 0}};
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    EXPECT_EQ(metrics_csv(a.rows), metrics_csv(b.rows));
    EXPECT_EQ(a.manifest.dump(), b.manifest.dump());
    c.seed = 99;
    EXPECT_NE(run_experiment(c).manifest.dump(), a.manifest.dump());
}

TEST(Pipeline, ThirtyFpsContent)
{
    auto c = small_config();
    c.repeat = 2;
    const auto res = run_experiment(c);
    EXPECT_EQ(res.rows.at(0).fer, 0.0);
}

TEST(Pipeline, PhaseNmsCutsDecoderCalls)
{
    auto c = small_config();
    c.content_hold = 100;
    const auto all = run_experiment(c);
    c.decoder.phase_nms = true;
    const auto nms = run_experiment(c);
    EXPECT_EQ(nms.rows[0].fer, 0.0);
    EXPECT_LT(nms.rows[0].decoder_calls * 3, all.rows[0].decoder_calls);
}

TEST(Pipeline, FailedRowIsRecordedAndSweepContinues)
{
    auto c = small_config();
    c.distances = {1.0, 1.1};
    const auto dir = temp_dir("model");
    std::filesystem::create_directories(dir);
    auto wrong = nn::Model<float>::build(collective::decoder_spec(32, 16, {4, 4, 4, 4, 4}), 1);
    nn::save_model(dir / "m.bcnn", wrong);
    c.decoder.kind = "cnn";
    c.decoder.model_path = (dir / "m.bcnn").string();
    const auto res = run_experiment(c);
    ASSERT_EQ(res.rows.size(), 2u);
    for (const auto& r : res.rows) {
        EXPECT_FALSE(r.error.empty());
        EXPECT_EQ(r.fer, 1.0);
    }
}

TEST(Pipeline, ExtractorRunsEveryJFrames)
{
    auto c = small_config();
    c.frames = 3;
    c.channel.background = channel::Background::indoor;
    const auto content = load_content(c);
    const auto run = render_condition(c, c.conditions()[0], content, 5);
    ExtractorPolicy p;
    p.mode = "default";
    p.every = 4;
    const auto t = track_quads(run.stream, p);
    ASSERT_EQ(t.quads.size(), run.stream.frames.size());
    for (std::size_t i = 0; i < t.quads.size(); ++i) EXPECT_EQ(t.quads[i].corners, t.quads[i - i % 4].corners);
    EXPECT_GT(t.iou, 0.85);
    EXPECT_GT(t.ioc, 0.9);
}

TEST(Pipeline, WritesCsvAndManifest)
{
    auto c = small_config();
    const auto dir = temp_dir("write");
    write_experiment(run_experiment(c), dir);
    const auto rows = read_metrics_csv(dir / "metrics.csv");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].fer, 0.0);
    std::ifstream m(dir / "manifest.json");
    const auto j = json::parse(m);
    EXPECT_EQ(j.at("config_hash"), config_hash(c));
    EXPECT_EQ(j.at("rows").size(), 1u);
}

TEST(Report, SeriesPerVaryingAxis)
{
    std::vector<MetricsRow> rows(4);
    const double mags[] = {0.1, 0.2, 0.3, 0.4};
    for (int i = 0; i < 4; ++i) {
        rows[i].distance = 1;
        rows[i].delta = "mix";
        rows[i].rs_rate = 0.5;
        std::ostringstream os;
        os << "SHIFT:" << mags[i];
        rows[i].perturbation = os.str();
        rows[i].fer = 0.1 * i;
    }
    const auto s = plot_series(rows);
    ASSERT_EQ(s.size(), 1u);
    const auto& text = s.at("fer_vs_perturbation.csv");
    EXPECT_NE(text.find("# bluecast-plot v1"), std::string::npos);
    EXPECT_NE(text.find(",0.3,0.2"), std::string::npos);
}

TEST(Recipe, JsonRoundTripAndValidation)
{
    TrainRecipe r;
    r.epochs = 2;
    EXPECT_EQ(to_json(recipe_from_json(to_json(r))), to_json(r));
    EXPECT_EQ(recipe_hash(r), recipe_hash(recipe_from_json(to_json(r))));
    r.batch = 1;
    EXPECT_THROW(validate(r), ConfigError);
}

TEST(Recipe, TinyTrainingRunLearns)
{
    TrainRecipe r;
    r.rows = 2;
    r.cols = 2;
    r.side = 32;
    r.widths = {8, 16, 16, 16, 16};
    r.content_width = 160;
    r.content_height = 90;
    r.scene_width = 160;
    r.scene_height = 120;
    r.epochs = 3;
    r.steps_per_epoch = 80;
    r.pool = 200;
    r.copies = 2;
    r.validation = 60;
    const auto out = train_decoder(r);
    ASSERT_EQ(out.history.epochs.size(), 3u);
    EXPECT_GT(out.history.epochs.back().val_bit_accuracy, 0.8);
}
