// bluecast: encode, simulate, extract, decode, train, evaluate, report.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bluecast/collective/stream.hpp"
#include "bluecast/harness/config.hpp"
#include "bluecast/harness/pipeline.hpp"
#include "bluecast/harness/recipe.hpp"
#include "bluecast/harness/report.hpp"
#include "bluecast/nn/serialize.hpp"

namespace fs = std::filesystem;
using namespace bluecast;
using harness::ConfigError;
using harness::json;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p)
{
    std::ifstream f(p);
    if (!f) throw ConfigError("cannot read " + p.string());
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

std::vector<fs::path> image_files(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".ppm" || ext == ".rgbp")) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw ConfigError("no .ppm or .rgbp frames in " + dir.string());
    return out;
}

std::vector<Frame> read_frames(const fs::path& dir)
{
    std::vector<Frame> out;
    for (const auto& p : image_files(dir)) out.push_back(read_image(p));
    return out;
}

std::string frame_name(std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu.ppm", i);
    return buf;
}

json quad_json(const ScreenQuad& q)
{
    json a = json::array();
    for (const auto& p : q.corners) a.push_back({p.x, p.y});
    return a;
}

ScreenQuad quad_from_json(const json& a)
{
    ScreenQuad q;
    for (int i = 0; i < 4; ++i) q.corners[i] = {a.at(i).at(0).get<double>(), a.at(i).at(1).get<double>()};
    return q;
}

struct LayoutOpts {
    int rows = 10;
    int cols = 10;
    double rs_rate = -1;
    void add(CLI::App* app)
    {
        app->add_option("--rows", rows, "grid rows")->capture_default_str();
        app->add_option("--cols", cols, "grid columns")->capture_default_str();
        app->add_option("--rs-rate", rs_rate, "parity fraction (negative: standard for the grid)")->capture_default_str();
    }
    proto::FrameLayout layout() const { return harness::layout_for(rows, cols, rs_rate); }
};

// ---------------------------------------------------------------------------

struct EncodeOpts {
    std::string payload, content, out;
    LayoutOpts layout;
    int delta = 0, repeat = 1, hold = 10, width = 320, height = 180;
};

int run_encode(const EncodeOpts& o)
{
    const auto layout = o.layout.layout();
    if (o.delta < 0 || o.delta > 3) throw ConfigError("delta must be 0 (mix), 1, 2 or 3");
    if (o.repeat < 1 || o.hold < 1) throw ConfigError("repeat and hold must be positive");
    const auto bytes = read_bytes(o.payload);
    auto content = o.content.empty() ? content::corpus(o.width, o.height) : content::load_directory(o.content, o.width, o.height);
    if (content.empty()) throw ConfigError("no content images in " + o.content);
    codec::GridGeometry::for_image(o.layout.rows, o.layout.cols, o.width, o.height);
    const auto payloads = harness::bytes_to_payloads(bytes, layout.data_bits());
    const auto plan = o.delta ? codec::ModulationPlan::fixed(o.delta) : codec::ModulationPlan::mix();
    const auto enc = harness::encode_sequence(payloads, layout, content, plan, o.repeat, o.hold);

    fs::create_directories(o.out);
    for (std::size_t i = 0; i < enc.display.size(); ++i) write_ppm(fs::path(o.out) / frame_name(i), enc.display[i]);
    const json m = {{"tool", "bluecast"},
                    {"kind", "encode"},
                    {"manifest_version", 1},
                    {"rows", o.layout.rows},
                    {"cols", o.layout.cols},
                    {"rs_rate", layout.parity_fraction()},
                    {"delta", o.delta},
                    {"repeat", o.repeat},
                    {"payload_bytes", bytes.size()},
                    {"data_frames", payloads.size()},
                    {"display_frames", enc.display.size()},
                    {"psnr_db", enc.psnr}};
    harness::write_text(fs::path(o.out) / "manifest.json", m.dump(2) + "\n");
    std::cout << "encoded " << bytes.size() << " bytes into " << payloads.size() << " data frames (" << enc.display.size()
              << " display frames), PSNR " << enc.psnr << " dB\n";
    return 0;
}

struct SimulateOpts {
    std::string frames, out, channel_file;
    double distance = 1, angle = 0, noise = 0, blur = 0;
    int scene_w = 320, scene_h = 240;
    std::string background = "flat";
    std::uint64_t seed = 1;
};

int run_simulate(const SimulateOpts& o)
{
    channel::ChannelConfig ch;
    if (!o.channel_file.empty()) {
        ch = harness::channel_from_json(read_json(o.channel_file));
    } else {
        ch.distance = o.distance;
        ch.angle_deg = o.angle;
        ch.noise_sigma = o.noise;
        ch.blur_radius = o.blur;
        ch.scene_width = o.scene_w;
        ch.scene_height = o.scene_h;
        ch.seed = o.seed;
        ch = harness::channel_from_json([&] {
            auto j = harness::channel_to_json(ch);
            j["background"] = o.background;
            return j;
        }());
    }
    ch.rate_ratio();
    const auto display = read_frames(o.frames);
    const auto stream = channel::sample_camera_stream(display, ch);
    fs::create_directories(o.out);
    for (std::size_t i = 0; i < stream.frames.size(); ++i) write_ppm(fs::path(o.out) / frame_name(i), stream.frames[i]);
    json m = {{"tool", "bluecast"},
              {"kind", "simulate"},
              {"manifest_version", 1},
              {"seed", ch.seed},
              {"channel", harness::channel_to_json(ch)},
              {"config_hash", harness::hex64(harness::fnv1a(harness::channel_to_json(ch).dump()))},
              {"truth_quad", quad_json(stream.truth)},
              {"display_index", stream.display_index},
              {"transition", stream.transition}};
    // the camera is static, so the truth quad holds for every frame
    json per = json::array();
    for (std::size_t i = 0; i < stream.frames.size(); ++i) per.push_back({{"frame", i}, {"quad", quad_json(stream.truth)}});
    m["frames"] = per;
    harness::write_text(fs::path(o.out) / "manifest.json", m.dump(2) + "\n");
    std::cout << "simulated " << stream.frames.size() << " camera frames\n";
    return 0;
}

struct ExtractOpts {
    std::string stream, out;
    int kernel = 2, every = 1;
};

int run_extract(const ExtractOpts& o)
{
    if (o.kernel < 1 || o.every < 1) throw ConfigError("kernel and every must be positive");
    const auto files = image_files(o.stream);
    std::optional<ScreenQuad> truth;
    if (fs::exists(fs::path(o.stream) / "manifest.json")) truth = quad_from_json(read_json(fs::path(o.stream) / "manifest.json").at("truth_quad"));
    channel::CameraStream s;
    for (const auto& p : files) s.frames.push_back(read_image(p));
    s.truth = truth.value_or(ScreenQuad::full_frame(s.frames[0].width(), s.frames[0].height()));
    const auto track = harness::track_quads(s, {"default", o.every, o.kernel});
    std::ostringstream csv;
    csv << "# bluecast-quads v1\nframe,x0,y0,x1,y1,x2,y2,x3,y3,iou,ioc\n";
    csv.precision(8);
    for (std::size_t i = 0; i < track.quads.size(); ++i) {
        csv << i;
        for (const auto& p : track.quads[i].corners) csv << ',' << p.x << ',' << p.y;
        if (truth) {
            const auto ov = extract::iou_ioc(track.quads[i], *truth);
            csv << ',' << ov.iou << ',' << ov.ioc << '\n';
        } else {
            csv << ",,\n";
        }
    }
    harness::write_text(o.out, csv.str());
    if (truth) std::cout << "mean IoU " << track.iou << " IoC " << track.ioc << '\n';
    return 0;
}

struct DecodeOpts {
    std::string stream, out, model, quads = "truth";
    LayoutOpts layout;
    int side = 96, model_rows = 0, model_cols = 0, kernel = 2, every = 1, repeat = 1;
    bool nms = false;
};

int run_decode(const DecodeOpts& o)
{
    const auto layout = o.layout.layout();
    if (o.quads != "truth" && o.quads != "extract") throw ConfigError("--quads must be truth or extract");
    const fs::path mpath = fs::path(o.stream) / "manifest.json";
    if (!fs::exists(mpath)) throw ConfigError("stream manifest not found: " + mpath.string());
    const json m = read_json(mpath);
    const auto ch = harness::channel_from_json(m.at("channel"));
    std::unique_ptr<nn::Model<float>> model;
    harness::DecoderPolicy pol;
    pol.side = o.side;
    pol.phase_nms = o.nms;
    if (!o.model.empty()) {
        pol.kind = "cnn";
        model = std::make_unique<nn::Model<float>>(nn::load_model(o.model));
        pol.model_rows = o.model_rows;
        pol.model_cols = o.model_cols;
    }
    const auto dec = harness::resolve_decoder(pol, o.layout.rows, o.layout.cols, model.get());

    channel::CameraStream s;
    for (const auto& p : image_files(o.stream)) s.frames.push_back(read_image(p));
    s.truth = quad_from_json(m.at("truth_quad"));
    const auto track = harness::track_quads(s, {o.quads == "truth" ? "truth" : "default", o.every, o.kernel});
    const auto triples = collective::assemble_triples(s.frames, track.quads, dec.side);

    // screen geometry only matters for uneven cells; the cell grid is what counts
    const auto geom = codec::GridGeometry::for_image(o.layout.rows, o.layout.cols, 32 * o.layout.cols, 32 * o.layout.rows);
    collective::StreamDecodeConfig sc{layout, ch.camera_rate, ch.display_rate, -1, o.repeat};
    if (o.nms) sc.nms_radius = collective::default_nms_radius(ch.camera_rate, ch.display_rate, o.repeat);
    std::set<std::size_t> all;
    for (std::size_t i = 0; i < triples.size(); ++i)
        if (triples[i].phase_score > collective::kMinPhaseScore) all.insert(i);
    const auto decoded = harness::decode_triples(triples, all, dec, geom);
    const auto res = collective::decode_stream(triples, [&](const collective::FrameTriple& t) { return decoded.at(t.indices[0]); }, sc);

    fs::create_directories(o.out);
    const auto bytes = collective::payload_bytes(res.delivered);
    std::ofstream(fs::path(o.out) / "payload.bin", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                                         static_cast<std::streamsize>(bytes.size()));
    collective::write_frame_log(fs::path(o.out) / "frames.csv", res.log);
    std::cout << "delivered " << res.delivered.size() << " data frames (" << bytes.size() << " bytes) from " << triples.size()
              << " candidate triples\n";
    return 0;
}

struct TrainOpts {
    std::string recipe, out, history, content;
    int rows = 5, cols = 5, side = 96, epochs = 5, steps = 250;
    std::uint64_t seed = 1;
};

int run_train(const TrainOpts& o, const CLI::App& app)
{
    harness::TrainRecipe r;
    if (!o.recipe.empty()) r = harness::recipe_from_json(read_json(o.recipe));
    if (app.count("--rows")) r.rows = o.rows;
    if (app.count("--cols")) r.cols = o.cols;
    if (app.count("--side")) r.side = o.side;
    if (app.count("--epochs")) r.epochs = static_cast<std::size_t>(o.epochs);
    if (app.count("--steps")) r.steps_per_epoch = static_cast<std::size_t>(o.steps);
    if (app.count("--seed")) r.seed = o.seed;
    if (app.count("--content")) r.content_dir = o.content;
    harness::validate(r);
    auto out = harness::train_decoder(r, [](const nn::EpochStats& e) {
        std::cout << "epoch " << e.epoch << " loss " << e.loss << " bit accuracy " << e.bit_accuracy << " val " << e.val_bit_accuracy
                  << std::endl;
    });
    if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
    nn::save_model(o.out, out.model);
    if (!o.history.empty()) out.history.write_csv(o.history);
    std::cout << "trained in " << out.seconds << " s, " << out.model.parameter_count() << " parameters -> " << o.out << '\n';
    return 0;
}

struct EvaluateOpts {
    std::string config, model, out;
};

int run_evaluate(const EvaluateOpts& o)
{
    json j = read_json(o.config);
    if (!o.model.empty()) {
        j["decoder"]["kind"] = "cnn";
        j["decoder"]["model"] = o.model;
    }
    if (!o.out.empty()) j["output_dir"] = o.out;
    const auto cfg = harness::config_from_json(j);
    const auto res = harness::run_experiment(cfg);
    const auto dir = harness::resolve_output(cfg.output_dir);
    harness::write_experiment(res, dir);
    std::size_t failed = 0;
    for (const auto& r : res.rows) {
        std::cout << r.label << "  FER " << r.fer << "  BER " << r.ber << "  GP " << r.goodput / 1000 << " Kbps";
        if (!r.error.empty()) {
            std::cout << "  error: " << r.error;
            ++failed;
        }
        std::cout << '\n';
    }
    std::cout << res.rows.size() << " rows -> " << dir.string() << '\n';
    return failed ? 3 : 0;
}

struct ReportOpts {
    std::vector<std::string> metrics;
    std::string out;
};

int run_report(const ReportOpts& o)
{
    std::vector<harness::MetricsRow> rows;
    for (const auto& m : o.metrics) {
        auto r = harness::read_metrics_csv(m);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    const auto names = harness::write_report(rows, o.out);
    for (const auto& n : names) std::cout << (fs::path(o.out) / n).string() << '\n';
    if (names.empty()) std::cout << "no sweep axis varies; nothing to plot\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"bluecast: blue-channel screen-camera link simulator and decoders"};
    app.require_subcommand(1);

    EncodeOpts eo;
    auto* enc = app.add_subcommand("encode", "embed a payload file into Manchester frame pairs");
    enc->add_option("--payload", eo.payload, "payload file")->required();
    enc->add_option("--content", eo.content, "directory of .ppm/.rgbp content images (default: procedural corpus)");
    enc->add_option("--out", eo.out, "output frame directory")->required();
    eo.layout.add(enc);
    enc->add_option("--delta", eo.delta, "modulation amplitude 1-3, 0 for Mix-delta")->capture_default_str();
    enc->add_option("--repeat", eo.repeat, "display repeats per frame (2 for 30 FPS content at 60 Hz)")->capture_default_str();
    enc->add_option("--hold", eo.hold, "pairs per content image")->capture_default_str();
    enc->add_option("--width", eo.width)->capture_default_str();
    enc->add_option("--height", eo.height)->capture_default_str();

    SimulateOpts so;
    auto* sim = app.add_subcommand("simulate", "render display frames through the camera channel");
    sim->add_option("--frames", so.frames, "display frame directory")->required();
    sim->add_option("--out", so.out, "camera frame directory")->required();
    sim->add_option("--channel", so.channel_file, "channel config JSON (overrides the flags below)");
    sim->add_option("--distance", so.distance, "metres")->capture_default_str();
    sim->add_option("--angle", so.angle, "degrees")->capture_default_str();
    sim->add_option("--noise", so.noise, "sensor noise sigma")->capture_default_str();
    sim->add_option("--blur", so.blur, "blur radius")->capture_default_str();
    sim->add_option("--scene-width", so.scene_w)->capture_default_str();
    sim->add_option("--scene-height", so.scene_h)->capture_default_str();
    sim->add_option("--background", so.background, "flat or indoor")->capture_default_str();
    sim->add_option("--seed", so.seed)->capture_default_str();

    ExtractOpts xo;
    auto* ext = app.add_subcommand("extract", "locate the screen in camera frames");
    ext->add_option("--stream", xo.stream, "camera frame directory")->required();
    ext->add_option("--out", xo.out, "quad CSV")->required();
    ext->add_option("--kernel", xo.kernel, "dilation kernel")->capture_default_str();
    ext->add_option("--every", xo.every, "run the extractor every J frames")->capture_default_str();

    DecodeOpts dopt;
    auto* dec = app.add_subcommand("decode", "decode a camera stream to payload bytes");
    dec->add_option("--stream", dopt.stream, "camera frame directory (with simulate manifest)")->required();
    dec->add_option("--out", dopt.out, "output directory")->required();
    dopt.layout.add(dec);
    dec->add_option("--model", dopt.model, "CNN model file (default: classical decoder)");
    dec->add_option("--model-rows", dopt.model_rows, "canonical model grid rows for tiled decoding");
    dec->add_option("--model-cols", dopt.model_cols, "canonical model grid columns for tiled decoding");
    dec->add_option("--side", dopt.side, "view side for the classical decoder")->capture_default_str();
    dec->add_option("--quads", dopt.quads, "truth or extract")->capture_default_str();
    dec->add_option("--kernel", dopt.kernel)->capture_default_str();
    dec->add_option("--every", dopt.every)->capture_default_str();
    dec->add_option("--repeat", dopt.repeat, "display repeats (sets the phase NMS radius)")->capture_default_str();
    dec->add_flag("--nms", dopt.nms, "decode only phase-score maxima");

    TrainOpts to;
    auto* tr = app.add_subcommand("train", "train a decoder CNN on simulated data");
    tr->add_option("--recipe", to.recipe, "recipe JSON");
    tr->add_option("--out", to.out, "model file")->required();
    tr->add_option("--history", to.history, "per-epoch CSV");
    tr->add_option("--rows", to.rows);
    tr->add_option("--cols", to.cols);
    tr->add_option("--side", to.side);
    tr->add_option("--epochs", to.epochs);
    tr->add_option("--steps", to.steps, "steps per epoch");
    tr->add_option("--seed", to.seed);
    tr->add_option("--content", to.content, "content image directory");

    EvaluateOpts vo;
    auto* ev = app.add_subcommand("evaluate", "run an experiment sweep");
    ev->add_option("--config", vo.config, "experiment config JSON")->required();
    ev->add_option("--model", vo.model, "use the CNN decoder with this model");
    ev->add_option("--out", vo.out, "output directory (relative paths resolve under $BLUECAST_OUT)");

    ReportOpts ro;
    auto* rep = app.add_subcommand("report", "turn metric CSVs into plot-data series");
    rep->add_option("--metrics", ro.metrics, "metrics.csv files")->required();
    rep->add_option("--out", ro.out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*enc) return run_encode(eo);
        if (*sim) return run_simulate(so);
        if (*ext) return run_extract(xo);
        if (*dec) return run_decode(dopt);
        if (*tr) return run_train(to, *tr);
        if (*ev) return run_evaluate(vo);
        if (*rep) return run_report(ro);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
