#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bluecast/codec/pixelcodec.hpp"
#include "bluecast/collective/triples.hpp"
#include "bluecast/nn/model.hpp"

namespace bluecast::collective {

class DecoderError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr float kBitThreshold = 0.5f;

/// Triple to the model's [3, S, S] input: Blue / 255.
inline nn::Tensor<float> to_input(const FrameTriple& t)
{
    const int w = t.frames[0].width, h = t.frames[0].height;
    nn::Tensor<float> x({3, h, w});
    for (int c = 0; c < 3; ++c) {
        if (t.frames[c].width != w || t.frames[c].height != h) throw DecoderError("triple frames differ in size");
        for (std::size_t i = 0; i < t.frames[c].data.size(); ++i)
            x[static_cast<std::size_t>(c) * w * h + i] = t.frames[c].data[i] / 255.0f;
    }
    return x;
}

inline void check_model(const nn::ModelSpec& spec, int side, int bits)
{
    if (spec.input != nn::Shape{3, side, side})
        throw DecoderError("model expects input " + nn::shape_str(spec.input) + ", triple is 3x" + std::to_string(side) + "x" +
                           std::to_string(side));
    if (spec.output_length() != bits)
        throw DecoderError("model outputs " + std::to_string(spec.output_length()) + " bits, grid has " + std::to_string(bits));
}

/// Batched CNN decode; sigmoid outputs thresholded at 0.5.
inline std::vector<Bits> cnn_decode_batch(const std::vector<const FrameTriple*>& triples, nn::Model<float>& model, int rows,
                                          int cols, std::size_t batch = 32)
{
    std::vector<Bits> out;
    if (triples.empty()) return out;
    check_model(model.spec(), triples.front()->frames[0].width, rows * cols);
    for (std::size_t i = 0; i < triples.size(); i += batch) {
        std::vector<nn::Tensor<float>> inputs;
        std::vector<const nn::Tensor<float>*> ptrs;
        const std::size_t end = std::min(triples.size(), i + batch);
        inputs.reserve(end - i);
        for (std::size_t j = i; j < end; ++j) inputs.push_back(to_input(*triples[j]));
        for (const auto& t : inputs) ptrs.push_back(&t);
        const nn::Tensor<float> p = model.forward(nn::stack(ptrs), nn::Mode::infer);
        const int n = rows * cols;
        for (std::size_t j = 0; j < end - i; ++j) {
            Bits b(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k) b[k] = p[j * n + k] > kBitThreshold ? 1 : 0;
            out.push_back(std::move(b));
        }
    }
    return out;
}

inline Bits cnn_decode(const FrameTriple& triple, nn::Model<float>& model, int rows, int cols)
{
    return cnn_decode_batch({&triple}, model, rows, cols).front();
}

/// Per-cell mean-difference decode of the triple's first and last frames.
/// View pixels are assigned to cells of `screen` (the display-side grid), so
/// uneven cell sizes on the display carry over to the rectified view.
inline Bits classical_triple_decode(const FrameTriple& t, const codec::GridGeometry& screen)
{
    const Plane& a = t.frames[0];
    const Plane& b = t.frames[2];
    std::vector<double> sum(static_cast<std::size_t>(screen.cells()), 0.0);
    std::vector<int> col_of(static_cast<std::size_t>(a.width)), row_of(static_cast<std::size_t>(a.height));
    for (int i = 0; i < a.width; ++i)
        col_of[i] = std::min(screen.cols - 1, static_cast<int>((i + 0.5) * screen.width / a.width) / screen.cell_width());
    for (int j = 0; j < a.height; ++j)
        row_of[j] = std::min(screen.rows - 1, static_cast<int>((j + 0.5) * screen.height / a.height) / screen.cell_height());
    for (int j = 0; j < a.height; ++j)
        for (int i = 0; i < a.width; ++i)
            sum[static_cast<std::size_t>(row_of[j]) * screen.cols + col_of[i]] += a.at(i, j) - b.at(i, j);
    Bits out(sum.size());
    for (std::size_t k = 0; k < sum.size(); ++k) out[k] = sum[k] > 0 ? 1 : 0;
    return out;
}

/// Same, for a view whose grid is uniform.
inline Bits classical_triple_decode(const FrameTriple& t, int rows, int cols)
{
    return classical_triple_decode(t, codec::GridGeometry::for_image(rows, cols, t.frames[0].width, t.frames[0].height));
}

/// Decodes one triple (of a whole screen or of a tile) into grid bits.
using TripleDecoder = std::function<Bits(const FrameTriple&)>;

inline TripleDecoder make_cnn_decoder(nn::Model<float>& model, int rows, int cols)
{
    return [&model, rows, cols](const FrameTriple& t) { return cnn_decode(t, model, rows, cols); };
}

inline TripleDecoder make_classical_decoder(const codec::GridGeometry& screen)
{
    return [screen](const FrameTriple& t) { return classical_triple_decode(t, screen); };
}

namespace detail {

inline Plane crop_resize(const Plane& src, int x0, int y0, int x1, int y1, int out_w, int out_h)
{
    Plane out(out_w, out_h);
    const double sx = double(x1 - x0) / out_w, sy = double(y1 - y0) / out_h;
    for (int j = 0; j < out_h; ++j)
        for (int i = 0; i < out_w; ++i)
            out.at(i, j) = src.sample(x0 - 0.5 + (i + 0.5) * sx, y0 - 0.5 + (j + 0.5) * sy);
    return out;
}

} // namespace detail

/// Splits the screen view into (rows / tile_rows) x (cols / tile_cols) equal
/// tiles, decodes each with `tile_decoder`, and concatenates the tile bit
/// vectors in row-major tile order. Each tile view is resampled to
/// `tile_side` (the canonical model's input side).
inline Bits decode_tiled(const FrameTriple& full, const TripleDecoder& tile_decoder, int rows, int cols, int tile_rows,
                         int tile_cols, int tile_side, int* invocations = nullptr)
{
    if (tile_rows <= 0 || tile_cols <= 0 || rows % tile_rows != 0 || cols % tile_cols != 0)
        throw DecoderError("grid " + std::to_string(rows) + "x" + std::to_string(cols) + " is not a multiple of the " +
                           std::to_string(tile_rows) + "x" + std::to_string(tile_cols) + " model grid");
    const int ty = rows / tile_rows, tx = cols / tile_cols;
    const int w = full.frames[0].width, h = full.frames[0].height;
    Bits out;
    int calls = 0;
    for (int r = 0; r < ty; ++r)
        for (int c = 0; c < tx; ++c) {
            FrameTriple tile;
            tile.indices = full.indices;
            const int x0 = c * w / tx, x1 = (c + 1) * w / tx, y0 = r * h / ty, y1 = (r + 1) * h / ty;
            for (int k = 0; k < 3; ++k)
                tile.frames[k] = (tx == 1 && ty == 1 && w == tile_side && h == tile_side)
                                     ? full.frames[k]
                                     : detail::crop_resize(full.frames[k], x0, y0, x1, y1, tile_side, tile_side);
            const Bits b = tile_decoder(tile);
            if (static_cast<int>(b.size()) != tile_rows * tile_cols) throw DecoderError("tile decoder returned wrong bit count");
            out.insert(out.end(), b.begin(), b.end());
            ++calls;
        }
    if (invocations) *invocations = calls;
    return out;
}

/// Row-major grid bits to the tile-major order produced by decode_tiled.
inline Bits to_tile_order(const Bits& grid_bits, int rows, int cols, int tile_rows, int tile_cols)
{
    if (static_cast<int>(grid_bits.size()) != rows * cols || rows % tile_rows || cols % tile_cols)
        throw DecoderError("to_tile_order: bad grid");
    Bits out;
    for (int tr = 0; tr < rows / tile_rows; ++tr)
        for (int tc = 0; tc < cols / tile_cols; ++tc)
            for (int r = 0; r < tile_rows; ++r)
                for (int c = 0; c < tile_cols; ++c)
                    out.push_back(grid_bits[static_cast<std::size_t>(tr * tile_rows + r) * cols + tc * tile_cols + c]);
    return out;
}

/// Inverse of to_tile_order.
inline Bits from_tile_order(const Bits& tile_bits, int rows, int cols, int tile_rows, int tile_cols)
{
    if (static_cast<int>(tile_bits.size()) != rows * cols || rows % tile_rows || cols % tile_cols)
        throw DecoderError("from_tile_order: bad grid");
    Bits out(tile_bits.size());
    std::size_t k = 0;
    for (int tr = 0; tr < rows / tile_rows; ++tr)
        for (int tc = 0; tc < cols / tile_cols; ++tc)
            for (int r = 0; r < tile_rows; ++r)
                for (int c = 0; c < tile_cols; ++c)
                    out[static_cast<std::size_t>(tr * tile_rows + r) * cols + tc * tile_cols + c] = tile_bits[k++];
    return out;
}

} // namespace bluecast::collective
