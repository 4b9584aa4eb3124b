#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "bluecast/nn/model.hpp"

// Model file: "BCNN", u32 version, u32 input rank + dims, u32 layer count,
// five u32 per layer (kind, in, out, kernel, stride), then every parameter
// and buffer tensor as float32. All little-endian.

namespace bluecast::nn {

inline constexpr std::uint32_t kModelFormatVersion = 1;

class ModelFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}

    std::uint32_t u32()
    {
        if (pos_ + 4 > b_.size()) throw ModelFormatError("model file truncated");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(b_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    float f32()
    {
        const std::uint32_t u = u32();
        float f;
        std::memcpy(&f, &u, 4);
        return f;
    }

    bool done() const { return pos_ == b_.size(); }

private:
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

} // namespace detail

template <class T>
std::vector<std::uint8_t> serialize(Model<T>& model)
{
    std::vector<std::uint8_t> out{'B', 'C', 'N', 'N'};
    detail::put_u32(out, kModelFormatVersion);
    const auto& spec = model.spec();
    detail::put_u32(out, static_cast<std::uint32_t>(spec.input.size()));
    for (int d : spec.input) detail::put_u32(out, static_cast<std::uint32_t>(d));
    detail::put_u32(out, static_cast<std::uint32_t>(spec.layers.size()));
    for (const auto& l : spec.layers) {
        detail::put_u32(out, static_cast<std::uint32_t>(l.kind));
        for (int v : {l.in, l.out, l.kernel, l.stride}) detail::put_u32(out, static_cast<std::uint32_t>(v));
    }
    for (auto* t : model.state())
        for (T v : t->data) {
            const float f = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            detail::put_u32(out, u);
        }
    return out;
}

inline Model<float> deserialize(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "BCNN", 4) != 0) throw ModelFormatError("not a model file");
    std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
    detail::Reader r(body);
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw ModelFormatError("unsupported model format version " + std::to_string(version));
    ModelSpec spec;
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 4) throw ModelFormatError("bad input rank");
    for (std::uint32_t i = 0; i < rank; ++i) spec.input.push_back(static_cast<int>(r.u32()));
    const std::uint32_t n = r.u32();
    if (n > 1024) throw ModelFormatError("implausible layer count");
    for (std::uint32_t i = 0; i < n; ++i) {
        LayerSpec l;
        const std::uint32_t kind = r.u32();
        if (kind < 1 || kind > 5) throw ModelFormatError("unknown layer kind " + std::to_string(kind));
        l.kind = static_cast<LayerKind>(kind);
        l.in = static_cast<int>(r.u32());
        l.out = static_cast<int>(r.u32());
        l.kernel = static_cast<int>(r.u32());
        l.stride = static_cast<int>(r.u32());
        spec.layers.push_back(l);
    }
    Model<float> m;
    try {
        m = Model<float>::build(spec, 0);
    } catch (const ShapeError& e) {
        throw ModelFormatError(std::string("inconsistent architecture: ") + e.what());
    }
    for (auto* t : m.state())
        for (float& v : t->data) v = r.f32();
    if (!r.done()) throw ModelFormatError("trailing bytes after model state");
    return m;
}

template <class T>
void save_model(const std::filesystem::path& path, Model<T>& model)
{
    const auto bytes = serialize(model);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ModelFormatError("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ModelFormatError("write failed for " + path.string());
}

inline Model<float> load_model(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ModelFormatError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

} // namespace bluecast::nn
