#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace bluecast::nn {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<int>;

inline std::size_t shape_size(const Shape& s)
{
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

inline std::string shape_str(const Shape& s)
{
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

/// Dense row-major n-d array. Batched image tensors are NCHW.
template <class T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), data(shape_size(shape), fill)
    {
        for (int d : shape)
            if (d < 0) throw ShapeError("negative tensor dimension");
    }

    std::size_t size() const { return data.size(); }
    int dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const { return shape.size(); }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }
    T& operator[](std::size_t i) { return data[i]; }
    T operator[](std::size_t i) const { return data[i]; }

    /// Elements per leading (batch) index.
    std::size_t stride0() const { return shape.empty() || shape[0] == 0 ? 0 : data.size() / shape[0]; }

    bool all_finite() const
    {
        for (const T& v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const Tensor&) const = default;
};

/// Stacks equal-shaped tensors along a new leading axis.
template <class T>
Tensor<T> stack(const std::vector<const Tensor<T>*>& items)
{
    if (items.empty()) throw ShapeError("cannot stack zero tensors");
    Shape s = items.front()->shape;
    s.insert(s.begin(), static_cast<int>(items.size()));
    Tensor<T> out(s);
    const std::size_t n = items.front()->size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i]->shape != items.front()->shape) throw ShapeError("stack: shape mismatch");
        std::copy(items[i]->data.begin(), items[i]->data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    return out;
}

} // namespace bluecast::nn
