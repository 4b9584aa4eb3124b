#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "bluecast/channel/channel.hpp"
#include "bluecast/codec/pixelcodec.hpp"
#include "bluecast/collective/decoder.hpp"
#include "bluecast/content.hpp"
#include "bluecast/extract/extract.hpp"
#include "bluecast/nn/train.hpp"

namespace bluecast::collective {

/// Decoder CNN: 1x1 front conv, four 3x3 stride-2 convs (each with BN and
/// ReLU), dense head with sigmoid.
inline nn::ModelSpec decoder_spec(int side, int outputs, const std::vector<int>& widths = {16, 32, 32, 64, 64})
{
    if (widths.size() != 5) throw std::invalid_argument("decoder_spec: need five conv widths");
    nn::ModelSpec s;
    s.input = {3, side, side};
    int in = 3, h = side;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        const int k = i == 0 ? 1 : 3, stride = i == 0 ? 1 : 2;
        s.layers.push_back(nn::LayerSpec::conv(in, widths[i], k, stride));
        s.layers.push_back(nn::LayerSpec::batchnorm(widths[i]));
        s.layers.push_back(nn::LayerSpec::relu());
        in = widths[i];
        h = (h + 2 * (k / 2) - k) / stride + 1;
    }
    s.layers.push_back(nn::LayerSpec::dense(in * h * h, outputs));
    s.layers.push_back(nn::LayerSpec::sigmoid());
    return s;
}

struct Range {
    double lo = 0, hi = 0;
    double draw(std::mt19937_64& rng) const { return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng); }
};

/// Training-data generation settings. Channel conditions are redrawn per
/// landmark group from the ranges below.
struct GenConfig {
    int rows = 5;
    int cols = 5;
    int side = 96;
    codec::ModulationPlan plan = codec::ModulationPlan::mix();
    channel::ChannelConfig channel;  ///< base config; ranged fields are overwritten
    int pairs_per_landmark = 10;
    double jitter = 0.5;             ///< max quad offset per axis, in cells
    int copies_per_triple = 2;       ///< independently jittered views per triple
    Range distance{0.8, 1.6};
    Range angle_deg{-30, 30};
    Range center{0.42, 0.58};
    Range noise_sigma{0.5, 2.0};
    Range blur{0.0, 1.0};
    double indoor_fraction = 0.5;    ///< share of groups with an indoor background
};

struct TrainSample {
    nn::Sample sample;
    double jitter_x = 0; ///< cells
    double jitter_y = 0;
    std::size_t group = 0;
};

/// One landmark-delimited stretch of rendered camera frames.
struct LandmarkGroup {
    channel::CameraStream stream;
    std::vector<Bits> payloads;
    channel::ChannelConfig channel;
    std::optional<int> first_triple; ///< camera index of the first true triple
    std::size_t index = 0;
};

/// Redness inside the quad: mean R minus the larger of mean G and mean B.
inline double landmark_score(const Frame& frame, const ScreenQuad& quad)
{
    const Frame v = extract::unwarp(frame, quad, 16, 16);
    return mean_channel(v, Channel::red) - std::max(mean_channel(v, Channel::green), mean_channel(v, Channel::blue));
}

/// Camera index of the first (F+, F+ transition, F-) triple after the
/// landmark. Exposures straddling the landmark's end blend it with the next
/// frame and can still pass the colour test, so the last exposure of the
/// detected run scoring within 90% of the run's best is taken as the last
/// aligned one.
inline std::optional<int> align_after_landmark(const channel::CameraStream& s, int rate_ratio)
{
    std::vector<std::pair<int, double>> run;
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
        if (extract::detect_landmark(s.frames[i], s.truth)) run.emplace_back(static_cast<int>(i), landmark_score(s.frames[i], s.truth));
        else if (!run.empty()) break;
    }
    if (run.empty()) return std::nullopt;
    double best = 0;
    for (const auto& [i, sc] : run) best = std::max(best, sc);
    int last = run.front().first;
    for (const auto& [i, sc] : run)
        if (sc >= 0.9 * best) last = i;
    return last + rate_ratio;
}

/// Quad offset by (jx, jy) cells in the quad's own screen coordinates.
inline ScreenQuad jitter_quad(const ScreenQuad& truth, double jx, double jy, int rows, int cols)
{
    const double du = jx / cols, dv = jy / rows;
    return transform(unit_to_quad(truth), ScreenQuad::rect(du, dv, 1 + du, 1 + dv));
}

/// Deterministic stream of jitter-augmented training samples rendered through
/// the channel simulator.
class TrainingSetGenerator {
public:
    TrainingSetGenerator(std::vector<Frame> content, GenConfig cfg, std::uint64_t seed)
        : content_(std::move(content)), cfg_(std::move(cfg)), rng_(seed)
    {
        if (content_.empty()) throw std::invalid_argument("training generator needs content frames");
        if (cfg_.jitter < 0 || cfg_.jitter > 0.5) throw std::invalid_argument("jitter must lie in [0, 0.5] cells");
        geom_ = codec::GridGeometry::for_image(cfg_.rows, cfg_.cols, content_.front().width(), content_.front().height());
    }

    const GenConfig& config() const { return cfg_; }

    /// Renders the next landmark group: one landmark frame then
    /// pairs_per_landmark Manchester pairs over random content.
    LandmarkGroup render_group()
    {
        LandmarkGroup g;
        g.index = groups_++;
        g.channel = cfg_.channel;
        auto& ch = g.channel;
        ch.distance = cfg_.distance.draw(rng_);
        ch.angle_deg = cfg_.angle_deg.draw(rng_);
        ch.center_x = cfg_.center.draw(rng_);
        ch.center_y = cfg_.center.draw(rng_);
        ch.noise_sigma = cfg_.noise_sigma.draw(rng_);
        ch.blur_radius = cfg_.blur.draw(rng_);
        ch.background = std::uniform_real_distribution<double>(0, 1)(rng_) < cfg_.indoor_fraction ? channel::Background::indoor
                                                                                                  : channel::Background::flat;
        ch.background_gray = 60 + static_cast<int>(rng_() % 150);
        ch.seed = rng_();

        const Frame& first = content_.front();
        std::vector<Frame> display{content::landmark_frame(first.width(), first.height())};
        for (int p = 0; p < cfg_.pairs_per_landmark; ++p) {
            Bits bits(static_cast<std::size_t>(cfg_.rows * cfg_.cols));
            for (auto& b : bits) b = static_cast<std::uint8_t>(rng_() & 1u);
            const Frame& img = content_[rng_() % content_.size()];
            auto pair = codec::embed_pair(img, bits, geom_, cfg_.plan);
            display.push_back(std::move(pair.plus));
            display.push_back(std::move(pair.minus));
            g.payloads.push_back(std::move(bits));
        }
        g.stream = channel::sample_camera_stream(display, ch, g.index * 1000003ull);
        g.first_triple = align_after_landmark(g.stream, ch.rate_ratio());
        return g;
    }

    /// Jittered samples for every true triple of a group (none when the
    /// landmark was not found).
    std::vector<TrainSample> samples_from_group(const LandmarkGroup& g)
    {
        std::vector<TrainSample> out;
        if (!g.first_triple) return out;
        const int period = 2 * g.channel.rate_ratio();
        std::uniform_real_distribution<double> uj(-cfg_.jitter, cfg_.jitter);
        std::vector<Plane> blue;
        for (const auto& f : g.stream.frames) blue.push_back(extract_channel(f, Channel::blue));
        for (std::size_t p = 0; p < g.payloads.size(); ++p) {
            const int start = *g.first_triple + static_cast<int>(p) * period;
            if (start + 2 >= static_cast<int>(blue.size())) break;
            for (int c = 0; c < cfg_.copies_per_triple; ++c) {
                const double jx = cfg_.jitter > 0 ? uj(rng_) : 0.0;
                const double jy = cfg_.jitter > 0 ? uj(rng_) : 0.0;
                const ScreenQuad q = jitter_quad(g.stream.truth, jx, jy, cfg_.rows, cfg_.cols);
                FrameTriple t;
                for (int k = 0; k < 3; ++k) {
                    t.frames[k] = extract::unwarp_plane(blue[start + k], q, cfg_.side, cfg_.side);
                    t.indices[k] = start + k;
                }
                TrainSample s;
                s.sample.input = to_input(t);
                s.sample.target = g.payloads[p];
                s.jitter_x = jx;
                s.jitter_y = jy;
                s.group = g.index;
                out.push_back(std::move(s));
            }
        }
        return out;
    }

    /// Next `count` samples, continuing across landmark groups.
    std::vector<TrainSample> generate(std::size_t count)
    {
        std::vector<TrainSample> out;
        while (out.size() < count) {
            if (pending_.empty()) {
                pending_ = samples_from_group(render_group());
                std::reverse(pending_.begin(), pending_.end());
                // pathological configs can hide the landmark; give up rather than spin
                if (pending_.empty() && ++empty_groups_ > 100) throw std::runtime_error("landmark never detected");
                continue;
            }
            out.push_back(std::move(pending_.back()));
            pending_.pop_back();
        }
        return out;
    }

private:
    std::vector<Frame> content_;
    GenConfig cfg_;
    std::mt19937_64 rng_;
    codec::GridGeometry geom_;
    std::size_t groups_ = 0;
    std::size_t empty_groups_ = 0;
    std::vector<TrainSample> pending_;
};

inline std::vector<TrainSample> gen_training_set(const std::vector<Frame>& content, const GenConfig& cfg, std::size_t count,
                                                 std::uint64_t seed)
{
    TrainingSetGenerator gen(content, cfg, seed);
    return gen.generate(count);
}

inline std::vector<nn::Sample> to_nn_samples(std::vector<TrainSample> samples)
{
    std::vector<nn::Sample> out;
    out.reserve(samples.size());
    for (auto& s : samples) out.push_back(std::move(s.sample));
    return out;
}

/// Shuffling reservoir over a live generator: each batch draws from a pool
/// that is partly refreshed with new samples, so consecutive samples of one
/// landmark group do not dominate a batch.
class GeneratorPool final : public nn::SampleSource {
public:
    GeneratorPool(TrainingSetGenerator& gen, std::size_t pool_size, std::size_t refresh_per_batch, std::size_t steps_per_epoch,
                  std::uint64_t seed)
        : gen_(gen), refresh_(refresh_per_batch), steps_(steps_per_epoch), rng_(seed)
    {
        pool_ = to_nn_samples(gen_.generate(pool_size));
    }

    std::vector<nn::Sample> next_batch(std::size_t batch) override
    {
        auto fresh = to_nn_samples(gen_.generate(refresh_));
        for (auto& s : fresh) pool_[rng_() % pool_.size()] = std::move(s);
        std::vector<nn::Sample> out;
        out.reserve(batch);
        for (std::size_t i = 0; i < batch; ++i) out.push_back(pool_[rng_() % pool_.size()]);
        return out;
    }

    std::size_t default_steps(std::size_t) const override { return steps_; }

private:
    TrainingSetGenerator& gen_;
    std::size_t refresh_, steps_;
    std::mt19937_64 rng_;
    std::vector<nn::Sample> pool_;
};

} // namespace bluecast::collective
