#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bluecast/collective/training.hpp"
#include "bluecast/harness/config.hpp"
#include "bluecast/nn/serialize.hpp"
#include "bluecast/nn/train.hpp"

namespace bluecast::harness {

/// Training run for a decoder model. Defaults are the desk profile: 5x5
/// grid, S = 96, 320x180 content, 240x180 camera.
struct TrainRecipe {
    int rows = 5;
    int cols = 5;
    int side = 96;
    std::vector<int> widths{16, 32, 32, 64, 64};
    int content_width = 320;
    int content_height = 180;
    int scene_width = 240;
    int scene_height = 180;
    std::string content_dir;
    std::size_t epochs = 5;
    std::size_t steps_per_epoch = 250;
    std::size_t batch = 16;
    std::size_t pool = 2000;
    std::size_t refresh = 4;
    int copies = 4;
    std::size_t validation = 300;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
};

inline json to_json(const TrainRecipe& r)
{
    return {{"rows", r.rows},
            {"cols", r.cols},
            {"side", r.side},
            {"widths", r.widths},
            {"content_width", r.content_width},
            {"content_height", r.content_height},
            {"scene_width", r.scene_width},
            {"scene_height", r.scene_height},
            {"content_dir", r.content_dir},
            {"epochs", r.epochs},
            {"steps_per_epoch", r.steps_per_epoch},
            {"batch", r.batch},
            {"pool", r.pool},
            {"refresh", r.refresh},
            {"copies", r.copies},
            {"validation", r.validation},
            {"learning_rate", r.learning_rate},
            {"seed", r.seed}};
}

inline TrainRecipe recipe_from_json(const json& j)
{
    using detail::get_if;
    detail::check_keys(j,
                       {"rows", "cols", "side", "widths", "content_width", "content_height", "scene_width", "scene_height",
                        "content_dir", "epochs", "steps_per_epoch", "batch", "pool", "refresh", "copies", "validation",
                        "learning_rate", "seed"},
                       "recipe");
    TrainRecipe r;
    get_if(j, "rows", r.rows);
    get_if(j, "cols", r.cols);
    get_if(j, "side", r.side);
    get_if(j, "widths", r.widths);
    get_if(j, "content_width", r.content_width);
    get_if(j, "content_height", r.content_height);
    get_if(j, "scene_width", r.scene_width);
    get_if(j, "scene_height", r.scene_height);
    get_if(j, "content_dir", r.content_dir);
    get_if(j, "epochs", r.epochs);
    get_if(j, "steps_per_epoch", r.steps_per_epoch);
    get_if(j, "batch", r.batch);
    get_if(j, "pool", r.pool);
    get_if(j, "refresh", r.refresh);
    get_if(j, "copies", r.copies);
    get_if(j, "validation", r.validation);
    get_if(j, "learning_rate", r.learning_rate);
    get_if(j, "seed", r.seed);
    return r;
}

inline void validate(const TrainRecipe& r)
{
    if (r.rows <= 0 || r.cols <= 0) throw ConfigError("recipe grid must be non-empty");
    if (r.side < 16) throw ConfigError("recipe side must be at least 16");
    if (r.widths.size() != 5) throw ConfigError("recipe needs five conv widths");
    if (r.epochs == 0 || r.steps_per_epoch == 0) throw ConfigError("recipe needs at least one epoch and step");
    if (r.batch < 2) throw ConfigError("batch must be at least 2");
    if (r.pool == 0 || r.copies < 1) throw ConfigError("pool and copies must be positive");
    if (r.learning_rate <= 0) throw ConfigError("learning rate must be positive");
    if (!r.content_dir.empty() && !std::filesystem::is_directory(r.content_dir))
        throw ConfigError("content directory not found: " + r.content_dir);
}

inline std::string recipe_hash(const TrainRecipe& r) { return hex64(fnv1a(to_json(r).dump())); }

inline collective::GenConfig gen_config(const TrainRecipe& r)
{
    collective::GenConfig g;
    g.rows = r.rows;
    g.cols = r.cols;
    g.side = r.side;
    g.copies_per_triple = r.copies;
    g.channel.scene_width = r.scene_width;
    g.channel.scene_height = r.scene_height;
    return g;
}

inline std::vector<Frame> recipe_content(const TrainRecipe& r)
{
    auto c = r.content_dir.empty() ? content::corpus(r.content_width, r.content_height)
                                   : content::load_directory(r.content_dir, r.content_width, r.content_height);
    if (c.empty()) throw ConfigError("no content images in " + r.content_dir);
    return c;
}

struct TrainOutcome {
    nn::Model<float> model;
    nn::TrainHistory history;
    double seconds = 0;
};

/// Trains a decoder on simulator-generated, jitter-augmented samples. The
/// validation set is drawn from an independent generator without jitter.
inline TrainOutcome train_decoder(const TrainRecipe& r, const nn::EpochCallback& on_epoch = {})
{
    validate(r);
    const auto start = std::chrono::steady_clock::now();
    const auto content = recipe_content(r);
    const auto g = gen_config(r);
    collective::TrainingSetGenerator gen(content, g, channel::detail::mix_seed(r.seed, 11));
    collective::GeneratorPool pool(gen, r.pool, r.refresh, r.steps_per_epoch, channel::detail::mix_seed(r.seed, 12));
    auto gv = g;
    gv.jitter = 0;
    gv.copies_per_triple = 1;
    const auto val = collective::to_nn_samples(collective::gen_training_set(content, gv, r.validation, channel::detail::mix_seed(r.seed, 13)));
    auto model = nn::Model<float>::build(collective::decoder_spec(r.side, r.rows * r.cols, r.widths), channel::detail::mix_seed(r.seed, 14));
    nn::TrainConfig tc;
    tc.epochs = r.epochs;
    tc.batch = r.batch;
    tc.steps_per_epoch = r.steps_per_epoch;
    tc.adam.learning_rate = r.learning_rate;
    auto history = nn::train(model, pool, tc, &val, on_epoch);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(model), std::move(history), secs};
}

} // namespace bluecast::harness
