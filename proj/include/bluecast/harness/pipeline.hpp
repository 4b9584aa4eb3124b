#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bluecast/channel/channel.hpp"
#include "bluecast/codec/pixelcodec.hpp"
#include "bluecast/collective/stream.hpp"
#include "bluecast/content.hpp"
#include "bluecast/extract/extract.hpp"
#include "bluecast/harness/config.hpp"
#include "bluecast/harness/metrics.hpp"
#include "bluecast/nn/serialize.hpp"
#include "bluecast/proto/frame.hpp"

namespace bluecast::harness {

struct EncodedSequence {
    std::vector<Frame> display; ///< F+, F- per data frame, each repeated `repeat` times
    std::vector<Bits> payloads;
    std::vector<Bits> cells;    ///< serialized data frames (row-major grid bits)
    double psnr = 0;            ///< mean over all modulated frames
};

/// Serializes each payload with its sequence number and embeds it as a
/// Manchester pair. Content frame i / hold (mod corpus size) carries pair i.
inline EncodedSequence encode_sequence(const std::vector<Bits>& payloads, const proto::FrameLayout& layout,
                                       const std::vector<Frame>& content, const codec::ModulationPlan& plan, int repeat = 1,
                                       int hold = 1, unsigned first_seq = 0)
{
    if (content.empty()) throw std::invalid_argument("encode_sequence: no content frames");
    const auto geom = codec::GridGeometry::for_image(static_cast<int>(layout.rows()), static_cast<int>(layout.cols()),
                                                     content.front().width(), content.front().height());
    EncodedSequence out;
    double psnr_sum = 0;
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        const unsigned seq = static_cast<unsigned>((first_seq + i) % proto::kSeqModulus);
        Bits cells = proto::frame_to_cells(payloads[i], seq, layout);
        const Frame& img = content[(i / static_cast<std::size_t>(hold)) % content.size()];
        auto pair = codec::embed_pair(img, cells, geom, plan);
        psnr_sum += codec::psnr(img, pair.plus) + codec::psnr(img, pair.minus);
        for (int r = 0; r < repeat; ++r) out.display.push_back(pair.plus);
        for (int r = 0; r < repeat; ++r) out.display.push_back(pair.minus);
        out.payloads.push_back(payloads[i]);
        out.cells.push_back(std::move(cells));
    }
    out.psnr = payloads.empty() ? 0 : psnr_sum / (2.0 * payloads.size());
    return out;
}

inline std::vector<Bits> random_payloads(std::size_t count, std::size_t bits, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Bits> out(count, Bits(bits));
    for (auto& p : out)
        for (auto& b : p) b = static_cast<std::uint8_t>(rng() & 1u);
    return out;
}

/// Payload bytes split into data frames, MSB first, zero-padded.
inline std::vector<Bits> bytes_to_payloads(const std::vector<std::uint8_t>& bytes, std::size_t bits_per_frame)
{
    if (bits_per_frame == 0) throw std::invalid_argument("layout carries no payload bits");
    const std::size_t total = bytes.size() * 8;
    std::vector<Bits> out;
    for (std::size_t off = 0; off < total; off += bits_per_frame) {
        Bits b(bits_per_frame, 0);
        for (std::size_t i = 0; i < bits_per_frame && off + i < total; ++i)
            b[i] = (bytes[(off + i) / 8] >> (7 - (off + i) % 8)) & 1u;
        out.push_back(std::move(b));
    }
    return out;
}

/// Camera index where the true (F+, F+ transition, F-) triple of pair i starts.
inline int true_triple_start(std::size_t pair, int rate_ratio, int repeat = 1)
{
    return (2 * static_cast<int>(pair) * repeat + repeat - 1) * rate_ratio + rate_ratio - 2;
}

/// Content frames for a config: the directory if given, else the procedural corpus.
inline std::vector<Frame> load_content(const ExperimentConfig& cfg)
{
    auto c = cfg.content_dir.empty() ? content::corpus(cfg.content_width, cfg.content_height)
                                     : content::load_directory(cfg.content_dir, cfg.content_width, cfg.content_height);
    if (c.empty()) throw ConfigError("no .ppm or .rgbp images in " + cfg.content_dir);
    return c;
}

inline std::uint64_t content_digest(const std::vector<Frame>& content)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& f : content) h = fnv1a(f.data().data(), f.data().size(), h);
    return h;
}

/// One rendered sweep condition: what was sent and what the camera saw.
struct RenderedRun {
    Condition condition;
    proto::FrameLayout layout;
    codec::GridGeometry geom;
    channel::ChannelConfig channel;
    EncodedSequence encoded;
    channel::CameraStream stream;
    int repeat = 1;
};

inline RenderedRun render_condition(const ExperimentConfig& cfg, const Condition& cond, const std::vector<Frame>& content,
                                    std::uint64_t row_seed)
{
    RenderedRun r;
    r.condition = cond;
    r.layout = cfg.layout(cond.rs_rate);
    r.geom = codec::GridGeometry::for_image(cfg.rows, cfg.cols, content.front().width(), content.front().height());
    r.channel = cfg.channel;
    r.channel.distance = cond.distance;
    r.channel.angle_deg = cond.angle_deg;
    r.channel.seed = channel::detail::mix_seed(row_seed, 1);
    r.repeat = cfg.repeat;
    const auto payloads = random_payloads(static_cast<std::size_t>(cfg.frames), r.layout.data_bits(), channel::detail::mix_seed(row_seed, 2));
    r.encoded = encode_sequence(payloads, r.layout, content, cond.plan(), cfg.repeat, cfg.content_hold);
    r.stream = channel::sample_camera_stream(r.encoded.display, r.channel);
    return r;
}

/// Per-frame quads under the extractor policy (truth or default pipeline run
/// every J frames), before any perturbation. Overlap stats cover the frames
/// where the extractor ran.
struct QuadTrack {
    std::vector<ScreenQuad> quads;
    double iou = 1;
    double ioc = 1;
    std::size_t misses = 0;
};

inline QuadTrack track_quads(const channel::CameraStream& stream, const ExtractorPolicy& policy)
{
    QuadTrack t;
    if (policy.mode == "truth") {
        t.quads.assign(stream.frames.size(), stream.truth);
        return t;
    }
    const auto seg = extract::default_segmenter();
    extract::ExtractOptions opt;
    opt.kernel = policy.kernel;
    std::optional<ScreenQuad> last;
    double iou = 0, ioc = 0;
    std::size_t runs = 0;
    for (std::size_t i = 0; i < stream.frames.size(); ++i) {
        if (i % static_cast<std::size_t>(policy.every) == 0) {
            const auto q = extract::locate_screen(stream.frames[i], seg, opt);
            ++runs;
            if (q) {
                last = *q;
                const auto o = extract::iou_ioc(*q, stream.truth);
                iou += o.iou;
                ioc += o.ioc;
            } else {
                ++t.misses;
            }
        }
        // nothing located yet: fall back to the whole frame
        t.quads.push_back(last ? *last : ScreenQuad::full_frame(stream.frames[i].width(), stream.frames[i].height()));
    }
    t.iou = runs ? iou / static_cast<double>(runs) : 0;
    t.ioc = runs ? ioc / static_cast<double>(runs) : 0;
    return t;
}

/// Decoder set-up resolved against the layout.
struct DecoderSetup {
    std::string kind = "classical";
    nn::Model<float>* model = nullptr;
    int side = 96;       ///< view side the triples are rectified to
    int tile_rows = 0;   ///< model grid (cnn)
    int tile_cols = 0;
    int tile_side = 0;
    bool phase_nms = false;
};

inline DecoderSetup resolve_decoder(const DecoderPolicy& p, int rows, int cols, nn::Model<float>* model)
{
    DecoderSetup d;
    d.kind = p.kind;
    d.side = p.side;
    d.phase_nms = p.phase_nms;
    if (p.kind == "cnn") {
        if (!model) throw collective::DecoderError("cnn decoder needs a model");
        d.model = model;
        d.tile_rows = p.model_rows ? p.model_rows : rows;
        d.tile_cols = p.model_cols ? p.model_cols : cols;
        const auto& in = model->spec().input;
        if (in.size() != 3 || in[1] != in[2]) throw collective::DecoderError("model input must be 3 x S x S");
        d.tile_side = in[1];
        collective::check_model(model->spec(), d.tile_side, d.tile_rows * d.tile_cols);
        if (rows % d.tile_rows || cols % d.tile_cols) throw collective::DecoderError("grid is not a multiple of the model grid");
        d.side = d.tile_side * std::max(rows / d.tile_rows, cols / d.tile_cols);
    }
    return d;
}

/// Decoded grid bits (row-major) for the triples at `which`.
inline std::map<std::size_t, Bits> decode_triples(const std::vector<collective::FrameTriple>& triples, const std::set<std::size_t>& which,
                                                  const DecoderSetup& d, const codec::GridGeometry& geom)
{
    std::map<std::size_t, Bits> out;
    if (d.kind == "classical") {
        for (std::size_t i : which) out[i] = collective::classical_triple_decode(triples[i], geom);
        return out;
    }
    if (d.tile_rows == geom.rows && d.tile_cols == geom.cols) {
        std::vector<const collective::FrameTriple*> ptrs;
        for (std::size_t i : which) ptrs.push_back(&triples[i]);
        const auto bits = collective::cnn_decode_batch(ptrs, *d.model, geom.rows, geom.cols);
        std::size_t k = 0;
        for (std::size_t i : which) out[i] = bits[k++];
        return out;
    }
    const auto tile = collective::make_cnn_decoder(*d.model, d.tile_rows, d.tile_cols);
    for (std::size_t i : which) {
        const Bits t = collective::decode_tiled(triples[i], tile, geom.rows, geom.cols, d.tile_rows, d.tile_cols, d.tile_side);
        out[i] = collective::from_tile_order(t, geom.rows, geom.cols, d.tile_rows, d.tile_cols);
    }
    return out;
}

struct DecodeOutcome {
    MetricsRow row;
    collective::StreamDecodeResult stream;
    std::vector<std::size_t> recovered; ///< indices of data frames delivered bit-exact
};

/// Decodes a rendered run and scores it against what was sent.
inline DecodeOutcome decode_run(const RenderedRun& run, const std::vector<ScreenQuad>& quads, const DecoderSetup& dec)
{
    DecodeOutcome out;
    MetricsRow& row = out.row;
    const Condition& c = run.condition;
    row.distance = c.distance;
    row.angle_deg = c.angle_deg;
    row.delta = c.delta_label();
    row.rs_rate = run.layout.parity_fraction();
    row.perturbation = c.perturbation_label();
    row.frames_sent = run.encoded.payloads.size();
    row.psnr = run.encoded.psnr;
    {
        std::ostringstream os;
        os << "d=" << c.distance << " angle=" << c.angle_deg << " delta=" << row.delta << " rate=" << row.rs_rate
           << " perturb=" << row.perturbation;
        row.label = os.str();
    }

    std::vector<ScreenQuad> perturbed = quads;
    if (c.perturbation)
        for (auto& q : perturbed) q = channel::perturb_quad(q, *c.perturbation, run.geom);
    const auto triples = collective::assemble_triples(run.stream.frames, perturbed, dec.side);

    const int k = run.channel.rate_ratio();
    collective::StreamDecodeConfig sc{run.layout, run.channel.camera_rate, run.channel.display_rate, -1, run.repeat};
    if (dec.phase_nms) sc.nms_radius = collective::default_nms_radius(run.channel.camera_rate, run.channel.display_rate, run.repeat);

    std::set<std::size_t> which;
    if (sc.nms_radius < 0) {
        for (std::size_t i = 0; i < triples.size(); ++i) which.insert(i);
    } else {
        for (std::size_t i : collective::select_candidates(triples, sc.nms_radius)) which.insert(i);
    }
    std::vector<std::size_t> truth_at;
    for (std::size_t p = 0; p < run.encoded.cells.size(); ++p) {
        const int s = true_triple_start(p, k, run.repeat);
        if (s >= 0 && static_cast<std::size_t>(s) < triples.size()) {
            truth_at.push_back(static_cast<std::size_t>(s));
            which.insert(static_cast<std::size_t>(s));
        }
    }
    const auto decoded = decode_triples(triples, which, dec, run.geom);

    std::size_t bit_errors = 0, bits = 0;
    for (std::size_t p = 0; p < truth_at.size(); ++p) {
        const Bits& got = decoded.at(truth_at[p]);
        const Bits& want = run.encoded.cells[p];
        for (std::size_t b = 0; b < want.size(); ++b) bit_errors += got[b] != want[b];
        bits += want.size();
    }
    row.ber = bits ? static_cast<double>(bit_errors) / static_cast<double>(bits) : 1.0;

    out.stream = collective::decode_stream(triples, [&](const collective::FrameTriple& t) { return decoded.at(t.indices[0]); }, sc);
    row.decoder_calls = out.stream.decoder_calls;

    // A delivered frame belongs to the nearest pair with the same sequence number.
    const int period = 2 * k * run.repeat;
    std::set<std::size_t> ok;
    for (const auto& d : out.stream.delivered) {
        const long guess = std::lround(static_cast<double>(d.frame_index - true_triple_start(0, k, run.repeat)) / period);
        bool matched = false;
        for (long p = guess - 2; p <= guess + 2 && !matched; ++p) {
            if (p < 0 || p >= static_cast<long>(run.encoded.payloads.size())) continue;
            if (static_cast<unsigned>(p) % proto::kSeqModulus != d.seq) continue;
            matched = d.payload == run.encoded.payloads[static_cast<std::size_t>(p)];
            if (matched) ok.insert(static_cast<std::size_t>(p));
        }
        if (!matched) ++row.corrupted;
    }
    out.recovered.assign(ok.begin(), ok.end());
    row.frames_delivered = out.stream.delivered.size();
    row.fer = row.frames_sent ? 1.0 - static_cast<double>(ok.size()) / static_cast<double>(row.frames_sent) : 1.0;
    row.goodput = compute_goodput(run.layout, run.channel.display_rate, row.fer);
    row.throughput = compute_throughput(run.layout, run.channel.display_rate, row.fer);
    row.raw_throughput = compute_raw_throughput(run.layout, run.channel.display_rate, row.ber);
    return out;
}

struct ExperimentResult {
    std::vector<MetricsRow> rows;
    json manifest;
};

/// Runs every sweep condition. Failures are recorded in the row's error
/// column and the sweep continues.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, nn::Model<float>* model = nullptr)
{
    cfg.validate();
    std::unique_ptr<nn::Model<float>> owned;
    if (cfg.decoder.kind == "cnn" && !model) {
        owned = std::make_unique<nn::Model<float>>(nn::load_model(cfg.decoder.model_path));
        model = owned.get();
    }
    const auto content = load_content(cfg);
    ExperimentResult res;
    res.manifest = {{"tool", "bluecast"},
                    {"manifest_version", 1},
                    {"name", cfg.name},
                    {"config_hash", config_hash(cfg)},
                    {"seed", cfg.seed},
                    {"content_digest", hex64(content_digest(content))},
                    {"config", to_json(cfg)}};
    json rows = json::array();
    const auto conds = cfg.conditions();
    for (std::size_t i = 0; i < conds.size(); ++i) {
        const std::uint64_t row_seed = channel::detail::mix_seed(cfg.seed, i);
        json mrow = {{"row", i}, {"row_seed", row_seed}};
        try {
            const auto run = render_condition(cfg, conds[i], content, row_seed);
            const auto track = track_quads(run.stream, cfg.extractor);
            const auto dec = resolve_decoder(cfg.decoder, cfg.rows, cfg.cols, model);
            auto out = decode_run(run, track.quads, dec);
            out.row.iou = track.iou;
            out.row.ioc = track.ioc;
            mrow["label"] = out.row.label;
            json q = json::array();
            for (const auto& p : run.stream.truth.corners) q.push_back({p.x, p.y});
            mrow["truth_quad"] = q;
            mrow["camera_frames"] = run.stream.frames.size();
            res.rows.push_back(std::move(out.row));
        } catch (const std::exception& e) {
            MetricsRow r;
            r.label = "row " + std::to_string(i);
            r.distance = conds[i].distance;
            r.angle_deg = conds[i].angle_deg;
            r.delta = conds[i].delta_label();
            r.rs_rate = conds[i].rs_rate;
            r.perturbation = conds[i].perturbation_label();
            r.frames_sent = static_cast<std::size_t>(cfg.frames);
            r.error = e.what();
            mrow["error"] = e.what();
            res.rows.push_back(std::move(r));
        }
        rows.push_back(std::move(mrow));
    }
    res.manifest["rows"] = rows;
    return res;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

/// metrics.csv and manifest.json under `dir`.
inline void write_experiment(const ExperimentResult& res, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    write_text(dir / "metrics.csv", metrics_csv(res.rows));
    write_text(dir / "manifest.json", res.manifest.dump(2) + "\n");
}

} // namespace bluecast::harness
