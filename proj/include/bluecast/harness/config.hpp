#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bluecast/channel/channel.hpp"
#include "bluecast/codec/pixelcodec.hpp"
#include "bluecast/proto/frame.hpp"

namespace bluecast::harness {

using json = nlohmann::json;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull)
{
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

inline std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

/// Layout with the given parity fraction (rounded down to whole symbols);
/// a negative fraction selects FrameLayout::standard.
inline proto::FrameLayout layout_for(int rows, int cols, double parity_fraction)
{
    if (rows <= 0 || cols <= 0) throw ConfigError("grid must be non-empty");
    if (parity_fraction < 0) return proto::FrameLayout::standard(rows, cols);
    if (parity_fraction >= 1) throw ConfigError("RS rate must be below 1");
    auto parity = static_cast<std::size_t>(parity_fraction * rows * cols + 1e-9);
    parity -= parity % 5;
    try {
        return proto::FrameLayout::make(rows, cols, parity);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

/// One point of a sweep. A delta of 0 means Mix-delta.
struct Condition {
    double distance = 1.0;
    double angle_deg = 0.0;
    int delta = 0;
    double rs_rate = -1;
    std::optional<channel::Perturbation> perturbation;

    std::string delta_label() const { return delta == 0 ? "mix" : std::to_string(delta); }

    std::string perturbation_label() const
    {
        if (!perturbation || perturbation->magnitude == 0) return "none";
        std::ostringstream os;
        os << channel::to_string(perturbation->kind) << ':' << perturbation->magnitude;
        return os.str();
    }

    codec::ModulationPlan plan() const { return delta == 0 ? codec::ModulationPlan::mix() : codec::ModulationPlan::fixed(delta); }
};

struct ExtractorPolicy {
    std::string mode = "truth"; ///< truth | default
    int every = 1;              ///< run the extractor on every J-th frame, reuse the last quad
    int kernel = 2;
};

struct DecoderPolicy {
    std::string kind = "classical"; ///< classical | cnn
    std::string model_path;
    int side = 96;                  ///< rectified view side
    int model_rows = 0;             ///< canonical model grid; 0 = the layout grid
    int model_cols = 0;
    bool phase_nms = false;         ///< decode only phase-score maxima
};

/// Everything a run_experiment call needs. Defaults: 10x10 grid, 50% RS,
/// Mix-delta, 60 Hz display, 120 FPS camera.
struct ExperimentConfig {
    std::string name = "experiment";
    int rows = 10;
    int cols = 10;
    double rs_rate = -1;
    channel::ChannelConfig channel;
    std::vector<double> distances;
    std::vector<double> angles;
    std::vector<int> deltas;
    std::vector<double> rs_rates;
    std::vector<channel::Perturbation> perturbations;
    ExtractorPolicy extractor;
    DecoderPolicy decoder;
    int frames = 100;       ///< data frames per condition
    int repeat = 1;         ///< display repeats per content frame (2 = 30 FPS content at 60 Hz)
    int content_hold = 10;  ///< consecutive pairs drawn over the same content frame
    int content_width = 320;
    int content_height = 180;
    std::string content_dir; ///< empty = procedural corpus
    std::uint64_t seed = 1;
    std::string output_dir = "bluecast-out";

    proto::FrameLayout layout(double rate) const { return layout_for(rows, cols, rate); }

    /// Cartesian product of the sweep lists (an empty list keeps the base value).
    std::vector<Condition> conditions() const
    {
        const std::vector<double> ds = distances.empty() ? std::vector<double>{channel.distance} : distances;
        const std::vector<double> as = angles.empty() ? std::vector<double>{channel.angle_deg} : angles;
        const std::vector<int> dl = deltas.empty() ? std::vector<int>{0} : deltas;
        const std::vector<double> rr = rs_rates.empty() ? std::vector<double>{rs_rate} : rs_rates;
        std::vector<std::optional<channel::Perturbation>> ps;
        if (perturbations.empty()) ps.push_back(std::nullopt);
        for (const auto& p : perturbations) ps.push_back(p);
        std::vector<Condition> out;
        for (double d : ds)
            for (double a : as)
                for (int de : dl)
                    for (double r : rr)
                        for (const auto& p : ps) out.push_back({d, a, de, r, p});
        return out;
    }

    void validate() const
    {
        if (frames < 1) throw ConfigError("frames must be at least 1");
        if (repeat < 1) throw ConfigError("repeat must be at least 1");
        if (content_hold < 1) throw ConfigError("content_hold must be at least 1");
        if (extractor.every < 1) throw ConfigError("extractor.every (J) must be at least 1");
        if (extractor.mode != "truth" && extractor.mode != "default")
            throw ConfigError("extractor.mode must be truth or default");
        if (extractor.kernel < 1) throw ConfigError("extractor.kernel must be positive");
        if (decoder.kind != "classical" && decoder.kind != "cnn") throw ConfigError("decoder.kind must be classical or cnn");
        if (decoder.side < 8) throw ConfigError("decoder.side must be at least 8");
        if (decoder.kind == "cnn") {
            if (decoder.model_path.empty()) throw ConfigError("decoder.model is required for the cnn decoder");
            if (!std::filesystem::exists(decoder.model_path)) throw ConfigError("model file not found: " + decoder.model_path);
            const int mr = decoder.model_rows ? decoder.model_rows : rows;
            const int mc = decoder.model_cols ? decoder.model_cols : cols;
            if (rows % mr || cols % mc) throw ConfigError("grid is not a multiple of the model grid");
        }
        if (!content_dir.empty() && !std::filesystem::is_directory(content_dir))
            throw ConfigError("content directory not found: " + content_dir);
        if (channel.background == channel::Background::image && !std::filesystem::exists(channel.background_path))
            throw ConfigError("background image not found: " + channel.background_path);
        try {
            channel.rate_ratio();
            codec::GridGeometry::for_image(rows, cols, content_width, content_height);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        if (channel.noise_sigma < 0 || channel.blur_radius < 0) throw ConfigError("noise and blur must be non-negative");
        for (const auto& c : conditions()) {
            if (c.distance <= 0) throw ConfigError("distance must be positive");
            if (c.delta < 0 || c.delta > 3) throw ConfigError("delta must be 0 (mix), 1, 2 or 3");
            layout(c.rs_rate);
            if (c.perturbation && (c.perturbation->magnitude < 0 || c.perturbation->magnitude >= 1))
                throw ConfigError("perturbation magnitude must be in [0, 1)");
        }
    }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <typename T> void get_if(const json& j, const char* key, T& out)
{
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

} // namespace detail

inline json perturbation_to_json(const channel::Perturbation& p)
{
    return {{"kind", channel::to_string(p.kind)}, {"magnitude", p.magnitude}, {"direction", p.direction}};
}

inline channel::Perturbation perturbation_from_json(const json& j)
{
    detail::check_keys(j, {"kind", "magnitude", "direction"}, "perturbation");
    channel::Perturbation p;
    std::string kind = "SHIFT";
    detail::get_if(j, "kind", kind);
    try {
        p.kind = channel::parse_perturb_kind(kind);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    detail::get_if(j, "magnitude", p.magnitude);
    detail::get_if(j, "direction", p.direction);
    return p;
}

inline json channel_to_json(const channel::ChannelConfig& c)
{
    return {{"display_rate", c.display_rate},
            {"camera_rate", c.camera_rate},
            {"distance", c.distance},
            {"angle_deg", c.angle_deg},
            {"scene_width", c.scene_width},
            {"scene_height", c.scene_height},
            {"screen_fill", c.screen_fill},
            {"center_x", c.center_x},
            {"center_y", c.center_y},
            {"background", channel::to_string(c.background)},
            {"background_gray", c.background_gray},
            {"background_path", c.background_path},
            {"noise_sigma", c.noise_sigma},
            {"blur_radius", c.blur_radius},
            {"gain", c.gain},
            {"transition_weight", c.transition_weight},
            {"seed", c.seed}};
}

inline channel::ChannelConfig channel_from_json(const json& j)
{
    detail::check_keys(j,
                       {"display_rate", "camera_rate", "distance", "angle_deg", "scene_width", "scene_height", "screen_fill",
                        "center_x", "center_y", "background", "background_gray", "background_path", "noise_sigma",
                        "blur_radius", "gain", "transition_weight", "seed"},
                       "channel");
    channel::ChannelConfig c;
    detail::get_if(j, "display_rate", c.display_rate);
    detail::get_if(j, "camera_rate", c.camera_rate);
    detail::get_if(j, "distance", c.distance);
    detail::get_if(j, "angle_deg", c.angle_deg);
    detail::get_if(j, "scene_width", c.scene_width);
    detail::get_if(j, "scene_height", c.scene_height);
    detail::get_if(j, "screen_fill", c.screen_fill);
    detail::get_if(j, "center_x", c.center_x);
    detail::get_if(j, "center_y", c.center_y);
    std::string bg = channel::to_string(c.background);
    detail::get_if(j, "background", bg);
    if (bg == "flat") c.background = channel::Background::flat;
    else if (bg == "indoor") c.background = channel::Background::indoor;
    else if (bg == "image") c.background = channel::Background::image;
    else throw ConfigError("channel.background must be flat, indoor or image");
    detail::get_if(j, "background_gray", c.background_gray);
    detail::get_if(j, "background_path", c.background_path);
    detail::get_if(j, "noise_sigma", c.noise_sigma);
    detail::get_if(j, "blur_radius", c.blur_radius);
    detail::get_if(j, "gain", c.gain);
    detail::get_if(j, "transition_weight", c.transition_weight);
    detail::get_if(j, "seed", c.seed);
    return c;
}

inline json to_json(const ExperimentConfig& c)
{
    json ps = json::array();
    for (const auto& p : c.perturbations) ps.push_back(perturbation_to_json(p));
    return {{"name", c.name},
            {"rows", c.rows},
            {"cols", c.cols},
            {"rs_rate", c.rs_rate},
            {"channel", channel_to_json(c.channel)},
            {"sweep",
             {{"distance", c.distances}, {"angle_deg", c.angles}, {"delta", c.deltas}, {"rs_rate", c.rs_rates}, {"perturbation", ps}}},
            {"extractor", {{"mode", c.extractor.mode}, {"every", c.extractor.every}, {"kernel", c.extractor.kernel}}},
            {"decoder",
             {{"kind", c.decoder.kind},
              {"model", c.decoder.model_path},
              {"side", c.decoder.side},
              {"model_rows", c.decoder.model_rows},
              {"model_cols", c.decoder.model_cols},
              {"phase_nms", c.decoder.phase_nms}}},
            {"frames", c.frames},
            {"repeat", c.repeat},
            {"content_hold", c.content_hold},
            {"content_width", c.content_width},
            {"content_height", c.content_height},
            {"content_dir", c.content_dir},
            {"seed", c.seed},
            {"output_dir", c.output_dir}};
}

inline ExperimentConfig config_from_json(const json& j)
{
    using detail::get_if;
    detail::check_keys(j,
                       {"name", "rows", "cols", "rs_rate", "channel", "sweep", "extractor", "decoder", "frames", "repeat",
                        "content_hold", "content_width", "content_height", "content_dir", "seed", "output_dir"},
                       "config");
    ExperimentConfig c;
    get_if(j, "name", c.name);
    get_if(j, "rows", c.rows);
    get_if(j, "cols", c.cols);
    get_if(j, "rs_rate", c.rs_rate);
    if (j.contains("channel")) c.channel = channel_from_json(j.at("channel"));
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        detail::check_keys(s, {"distance", "angle_deg", "delta", "rs_rate", "perturbation"}, "sweep");
        get_if(s, "distance", c.distances);
        get_if(s, "angle_deg", c.angles);
        get_if(s, "delta", c.deltas);
        get_if(s, "rs_rate", c.rs_rates);
        if (s.contains("perturbation")) {
            if (!s.at("perturbation").is_array()) throw ConfigError("sweep.perturbation must be an array");
            for (const auto& p : s.at("perturbation")) c.perturbations.push_back(perturbation_from_json(p));
        }
    }
    if (j.contains("extractor")) {
        const json& e = j.at("extractor");
        detail::check_keys(e, {"mode", "every", "kernel"}, "extractor");
        get_if(e, "mode", c.extractor.mode);
        get_if(e, "every", c.extractor.every);
        get_if(e, "kernel", c.extractor.kernel);
    }
    if (j.contains("decoder")) {
        const json& d = j.at("decoder");
        detail::check_keys(d, {"kind", "model", "side", "model_rows", "model_cols", "phase_nms"}, "decoder");
        get_if(d, "kind", c.decoder.kind);
        get_if(d, "model", c.decoder.model_path);
        get_if(d, "side", c.decoder.side);
        get_if(d, "model_rows", c.decoder.model_rows);
        get_if(d, "model_cols", c.decoder.model_cols);
        get_if(d, "phase_nms", c.decoder.phase_nms);
    }
    get_if(j, "frames", c.frames);
    get_if(j, "repeat", c.repeat);
    get_if(j, "content_hold", c.content_hold);
    get_if(j, "content_width", c.content_width);
    get_if(j, "content_height", c.content_height);
    get_if(j, "content_dir", c.content_dir);
    get_if(j, "seed", c.seed);
    get_if(j, "output_dir", c.output_dir);
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

/// FNV-1a over the canonical JSON (sorted keys) of the config.
inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a(to_json(c).dump())); }

/// Output root: relative directories resolve under $BLUECAST_OUT when set.
inline std::filesystem::path resolve_output(const std::string& dir)
{
    std::filesystem::path p(dir);
    if (p.is_relative())
        if (const char* root = std::getenv("BLUECAST_OUT"); root && *root) return std::filesystem::path(root) / p;
    return p;
}

} // namespace bluecast::harness
