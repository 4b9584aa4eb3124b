#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bluecast/nn/tensor.hpp"

namespace bluecast::nn {

enum class Mode { train, infer };

enum class LayerKind : std::uint32_t { conv = 1, batchnorm = 2, relu = 3, dense = 4, sigmoid = 5 };

inline std::string to_string(LayerKind k)
{
    switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::dense: return "dense";
    case LayerKind::sigmoid: return "sigmoid";
    }
    return "unknown";
}

/// Layer hyperparameters. `in`/`out` are channels for conv, features for
/// dense, and channels (or features) for batchnorm.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    int in = 0;
    int out = 0;
    int kernel = 1;
    int stride = 1;

    static LayerSpec conv(int in, int out, int kernel, int stride = 1) { return {LayerKind::conv, in, out, kernel, stride}; }
    static LayerSpec batchnorm(int channels) { return {LayerKind::batchnorm, channels, channels, 1, 1}; }
    static LayerSpec relu() { return {LayerKind::relu, 0, 0, 1, 1}; }
    static LayerSpec dense(int in, int out) { return {LayerKind::dense, in, out, 1, 1}; }
    static LayerSpec sigmoid() { return {LayerKind::sigmoid, 0, 0, 1, 1}; }

    bool operator==(const LayerSpec&) const = default;
};

template <class T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
};

template <class T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual LayerSpec spec() const = 0;
    /// Per-sample output shape for a per-sample input shape.
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
    /// Accumulates parameter gradients and returns dL/dx for the last forward.
    virtual Tensor<T> backward(const Tensor<T>& gy) = 0;
    virtual std::vector<Param<T>*> params() { return {}; }
    /// Non-trainable state that is serialized (BN running statistics).
    virtual std::vector<Tensor<T>*> buffers() { return {}; }
};

namespace detail {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using CMapMat = Eigen::Map<const RowMat<T>>;

inline void require(bool ok, const std::string& msg)
{
    if (!ok) throw ShapeError(msg);
}

// Eigen's vectorized reductions peel to an alignment boundary, so their
// summation order depends on the buffer address. Training must be
// bit-reproducible, hence a fixed-order loop.
template <class T>
T ordered_sum(const T* p, int n, int stride)
{
    T s = 0;
    for (int i = 0; i < n; ++i) s += p[static_cast<std::ptrdiff_t>(i) * stride];
    return s;
}

} // namespace detail

/// 2-D convolution with "same" padding (k/2) and integer stride.
template <class T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(int in, int out, int kernel, int stride) : in_(in), out_(out), k_(kernel), s_(stride)
    {
        detail::require(in > 0 && out > 0 && kernel > 0 && stride > 0, "conv: bad hyperparameters");
        w_.name = "weight";
        w_.value = Tensor<T>({out, in, kernel, kernel});
        w_.grad = w_.value;
        b_.name = "bias";
        b_.value = Tensor<T>({out});
        b_.grad = b_.value;
    }

    LayerSpec spec() const override { return LayerSpec::conv(in_, out_, k_, s_); }

    Shape output_shape(const Shape& in) const override
    {
        detail::require(in.size() == 3 && in[0] == in_, "conv: expected " + std::to_string(in_) + " input channels, got " + shape_str(in));
        return {out_, out_dim(in[1]), out_dim(in[2])};
    }

    Tensor<T> forward(const Tensor<T>& x, Mode) override
    {
        detail::require(x.rank() == 4, "conv: expected NCHW input");
        const Shape os = output_shape({x.dim(1), x.dim(2), x.dim(3)});
        x_ = x;
        const int n = x.dim(0);
        Tensor<T> y({n, os[0], os[1], os[2]});
        const int p = os[1] * os[2];
        detail::CMapMat<T> w(w_.value.ptr(), out_, in_ * k_ * k_);
        for (int i = 0; i < n; ++i) {
            detail::MapMat<T> yi(y.ptr() + static_cast<std::size_t>(i) * out_ * p, out_, p);
            if (pointwise()) {
                yi.noalias() = w * detail::CMapMat<T>(x.ptr() + static_cast<std::size_t>(i) * x.stride0(), in_, p);
            } else {
                im2col(x, i, os[1], os[2]);
                yi.noalias() = w * detail::CMapMat<T>(cols_.data(), in_ * k_ * k_, p);
            }
            for (int o = 0; o < out_; ++o) yi.row(o).array() += b_.value[o];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override
    {
        const int n = x_.dim(0), h = x_.dim(2), wd = x_.dim(3);
        const int ho = gy.dim(2), wo = gy.dim(3), p = ho * wo;
        const int ckk = in_ * k_ * k_;
        Tensor<T> gx(x_.shape);
        detail::CMapMat<T> w(w_.value.ptr(), out_, ckk);
        detail::MapMat<T> gw(w_.grad.ptr(), out_, ckk);
        std::vector<T> gcols(static_cast<std::size_t>(ckk) * p);
        for (int i = 0; i < n; ++i) {
            detail::CMapMat<T> gyi(gy.ptr() + static_cast<std::size_t>(i) * out_ * p, out_, p);
            for (int o = 0; o < out_; ++o) b_.grad[o] += detail::ordered_sum(gyi.data() + static_cast<std::size_t>(o) * p, p, 1);
            if (pointwise()) {
                const std::size_t off = static_cast<std::size_t>(i) * x_.stride0();
                gw.noalias() += gyi * detail::CMapMat<T>(x_.ptr() + off, in_, p).transpose();
                detail::MapMat<T>(gx.ptr() + off, in_, p).noalias() = w.transpose() * gyi;
            } else {
                im2col(x_, i, ho, wo);
                gw.noalias() += gyi * detail::CMapMat<T>(cols_.data(), ckk, p).transpose();
                detail::MapMat<T>(gcols.data(), ckk, p).noalias() = w.transpose() * gyi;
                col2im(gcols, gx, i, h, wd, ho, wo);
            }
        }
        return gx;
    }

    std::vector<Param<T>*> params() override { return {&w_, &b_}; }

private:
    bool pointwise() const { return k_ == 1 && s_ == 1; }
    int pad() const { return k_ / 2; }
    int out_dim(int d) const { return (d + 2 * pad() - k_) / s_ + 1; }

    void im2col(const Tensor<T>& x, int i, int ho, int wo)
    {
        const int h = x.dim(2), wd = x.dim(3);
        const int p = ho * wo;
        cols_.assign(static_cast<std::size_t>(in_) * k_ * k_ * p, T(0));
        const T* xi = x.ptr() + static_cast<std::size_t>(i) * x.stride0();
        for (int c = 0; c < in_; ++c)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    T* row = cols_.data() + static_cast<std::size_t>((c * k_ + ky) * k_ + kx) * p;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * s_ - pad() + ky;
                        if (iy < 0 || iy >= h) continue;
                        const T* src = xi + (static_cast<std::size_t>(c) * h + iy) * wd;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * s_ - pad() + kx;
                            if (ix >= 0 && ix < wd) row[oy * wo + ox] = src[ix];
                        }
                    }
                }
    }

    void col2im(const std::vector<T>& gcols, Tensor<T>& gx, int i, int h, int wd, int ho, int wo) const
    {
        const int p = ho * wo;
        T* gi = gx.ptr() + static_cast<std::size_t>(i) * gx.stride0();
        for (int c = 0; c < in_; ++c)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    const T* row = gcols.data() + static_cast<std::size_t>((c * k_ + ky) * k_ + kx) * p;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * s_ - pad() + ky;
                        if (iy < 0 || iy >= h) continue;
                        T* dst = gi + (static_cast<std::size_t>(c) * h + iy) * wd;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * s_ - pad() + kx;
                            if (ix >= 0 && ix < wd) dst[ix] += row[oy * wo + ox];
                        }
                    }
                }
    }

    int in_, out_, k_, s_;
    Param<T> w_, b_;
    Tensor<T> x_;
    std::vector<T> cols_;
};

/// Batch normalization over N (and H, W for 4-D inputs) per channel.
template <class T>
class BatchNorm final : public Layer<T> {
public:
    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.9;

    explicit BatchNorm(int channels) : c_(channels)
    {
        detail::require(channels > 0, "batchnorm: bad channel count");
        gamma_ = {"gamma", Tensor<T>({channels}, T(1)), Tensor<T>({channels})};
        beta_ = {"beta", Tensor<T>({channels}), Tensor<T>({channels})};
        running_mean_ = Tensor<T>({channels});
        running_var_ = Tensor<T>({channels}, T(1));
    }

    LayerSpec spec() const override { return LayerSpec::batchnorm(c_); }

    Shape output_shape(const Shape& in) const override
    {
        detail::require(!in.empty() && in[0] == c_, "batchnorm: expected " + std::to_string(c_) + " channels, got " + shape_str(in));
        return in;
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override
    {
        detail::require(x.rank() == 2 || x.rank() == 4, "batchnorm: expected NC or NCHW input");
        output_shape(Shape(x.shape.begin() + 1, x.shape.end()));
        const int n = x.dim(0);
        const std::size_t inner = x.rank() == 4 ? static_cast<std::size_t>(x.dim(2)) * x.dim(3) : 1;
        const double m = static_cast<double>(n) * inner;
        training_ = mode == Mode::train;
        if (training_ && n < 2) throw ShapeError("batchnorm: training needs a batch of at least 2");
        xhat_ = Tensor<T>(x.shape);
        inv_std_.assign(static_cast<std::size_t>(c_), T(0));
        Tensor<T> y(x.shape);
        for (int c = 0; c < c_; ++c) {
            double mean, var;
            if (training_) {
                double s = 0, s2 = 0;
                for_each(x, c, inner, [&](std::size_t idx) { s += x[idx]; });
                mean = s / m;
                for_each(x, c, inner, [&](std::size_t idx) {
                    const double d = x[idx] - mean;
                    s2 += d * d;
                });
                var = s2 / m;
                running_mean_[c] = static_cast<T>(kMomentum * running_mean_[c] + (1 - kMomentum) * mean);
                const double unbiased = m > 1 ? var * m / (m - 1) : var;
                running_var_[c] = static_cast<T>(kMomentum * running_var_[c] + (1 - kMomentum) * unbiased);
            } else {
                mean = running_mean_[c];
                var = running_var_[c];
            }
            const double inv = 1.0 / std::sqrt(var + kEps);
            inv_std_[c] = static_cast<T>(inv);
            const T g = gamma_.value[c], b = beta_.value[c];
            for_each(x, c, inner, [&](std::size_t idx) {
                const T xh = static_cast<T>((x[idx] - mean) * inv);
                xhat_[idx] = xh;
                y[idx] = g * xh + b;
            });
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override
    {
        const int n = gy.dim(0);
        const std::size_t inner = gy.rank() == 4 ? static_cast<std::size_t>(gy.dim(2)) * gy.dim(3) : 1;
        const double m = static_cast<double>(n) * inner;
        Tensor<T> gx(gy.shape);
        for (int c = 0; c < c_; ++c) {
            double sum_g = 0, sum_gx = 0;
            for_each(gy, c, inner, [&](std::size_t idx) {
                sum_g += gy[idx];
                sum_gx += static_cast<double>(gy[idx]) * xhat_[idx];
            });
            gamma_.grad[c] += static_cast<T>(sum_gx);
            beta_.grad[c] += static_cast<T>(sum_g);
            const double g = gamma_.value[c], inv = inv_std_[c];
            if (training_) {
                for_each(gy, c, inner, [&](std::size_t idx) {
                    gx[idx] = static_cast<T>(g * inv / m * (m * gy[idx] - sum_g - xhat_[idx] * sum_gx));
                });
            } else {
                for_each(gy, c, inner, [&](std::size_t idx) { gx[idx] = static_cast<T>(g * inv * gy[idx]); });
            }
        }
        return gx;
    }

    std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
    std::vector<Tensor<T>*> buffers() override { return {&running_mean_, &running_var_}; }

private:
    template <class F>
    void for_each(const Tensor<T>& x, int c, std::size_t inner, F&& f) const
    {
        const int n = x.dim(0);
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * c_ + c) * inner;
            for (std::size_t j = 0; j < inner; ++j) f(base + j);
        }
    }

    int c_;
    Param<T> gamma_, beta_;
    Tensor<T> running_mean_, running_var_;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
    bool training_ = false;
};

template <class T>
class ReLU final : public Layer<T> {
public:
    LayerSpec spec() const override { return LayerSpec::relu(); }
    Shape output_shape(const Shape& in) const override { return in; }

    Tensor<T> forward(const Tensor<T>& x, Mode) override
    {
        x_ = x;
        Tensor<T> y = x;
        for (auto& v : y.data) v = v > T(0) ? v : T(0);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override
    {
        Tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.size(); ++i)
            if (!(x_[i] > T(0))) gx[i] = T(0);
        return gx;
    }

private:
    Tensor<T> x_;
};

/// Fully connected layer; flattens any per-sample shape.
template <class T>
class Dense final : public Layer<T> {
public:
    Dense(int in, int out) : in_(in), out_(out)
    {
        detail::require(in > 0 && out > 0, "dense: bad hyperparameters");
        w_ = {"weight", Tensor<T>({out, in}), Tensor<T>({out, in})};
        b_ = {"bias", Tensor<T>({out}), Tensor<T>({out})};
    }

    LayerSpec spec() const override { return LayerSpec::dense(in_, out_); }

    Shape output_shape(const Shape& in) const override
    {
        detail::require(static_cast<int>(shape_size(in)) == in_,
                        "dense: expected " + std::to_string(in_) + " input features, got " + shape_str(in));
        return {out_};
    }

    Tensor<T> forward(const Tensor<T>& x, Mode) override
    {
        const int n = x.dim(0);
        detail::require(static_cast<int>(x.stride0()) == in_, "dense: input feature mismatch " + shape_str(x.shape));
        x_ = x;
        Tensor<T> y({n, out_});
        detail::MapMat<T> ym(y.ptr(), n, out_);
        ym.noalias() = detail::CMapMat<T>(x.ptr(), n, in_) * detail::CMapMat<T>(w_.value.ptr(), out_, in_).transpose();
        for (int i = 0; i < n; ++i)
            for (int o = 0; o < out_; ++o) ym(i, o) += b_.value[o];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override
    {
        const int n = gy.dim(0);
        detail::CMapMat<T> g(gy.ptr(), n, out_);
        detail::MapMat<T>(w_.grad.ptr(), out_, in_).noalias() += g.transpose() * detail::CMapMat<T>(x_.ptr(), n, in_);
        for (int o = 0; o < out_; ++o) b_.grad[o] += detail::ordered_sum(gy.ptr() + o, n, out_);
        Tensor<T> gx(x_.shape);
        detail::MapMat<T>(gx.ptr(), n, in_).noalias() = g * detail::CMapMat<T>(w_.value.ptr(), out_, in_);
        return gx;
    }

    std::vector<Param<T>*> params() override { return {&w_, &b_}; }

private:
    int in_, out_;
    Param<T> w_, b_;
    Tensor<T> x_;
};

template <class T>
class Sigmoid final : public Layer<T> {
public:
    LayerSpec spec() const override { return LayerSpec::sigmoid(); }
    Shape output_shape(const Shape& in) const override { return in; }

    Tensor<T> forward(const Tensor<T>& x, Mode) override
    {
        y_ = x;
        for (auto& v : y_.data) v = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
        return y_;
    }

    Tensor<T> backward(const Tensor<T>& gy) override
    {
        Tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= y_[i] * (T(1) - y_[i]);
        return gx;
    }

private:
    Tensor<T> y_;
};

template <class T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& s)
{
    switch (s.kind) {
    case LayerKind::conv: return std::make_unique<Conv2d<T>>(s.in, s.out, s.kernel, s.stride);
    case LayerKind::batchnorm: return std::make_unique<BatchNorm<T>>(s.in);
    case LayerKind::relu: return std::make_unique<ReLU<T>>();
    case LayerKind::dense: return std::make_unique<Dense<T>>(s.in, s.out);
    case LayerKind::sigmoid: return std::make_unique<Sigmoid<T>>();
    }
    throw ShapeError("unknown layer kind");
}

} // namespace bluecast::nn
