#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bluecast/nn/layers.hpp"

namespace bluecast::nn {

class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(const std::string& where, std::size_t layer)
        : std::runtime_error("non-finite values produced by " + where), layer_index(layer)
    {
    }
    std::size_t layer_index; ///< layer count if the loss itself overflowed
};

inline constexpr double kBceClamp = 1e-7;

struct ModelSpec {
    Shape input; ///< per-sample {C, H, W} or {F}
    std::vector<LayerSpec> layers;

    /// Per-sample output shape; throws ShapeError on any mismatch.
    Shape output_shape() const
    {
        if (input.empty()) throw ShapeError("model: empty input shape");
        if (layers.empty() || layers.back().kind != LayerKind::sigmoid) throw ShapeError("model: final layer must be sigmoid");
        Shape s = input;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            try {
                s = make_layer<float>(layers[i])->output_shape(s);
            } catch (const ShapeError& e) {
                throw ShapeError("layer " + std::to_string(i) + " (" + to_string(layers[i].kind) + "): " + e.what());
            }
        }
        return s;
    }

    int output_length() const { return static_cast<int>(shape_size(output_shape())); }

    bool operator==(const ModelSpec&) const = default;
};

/// Mean binary cross-entropy with probabilities clamped to [ε, 1 − ε].
template <class T>
double bce_loss(const Tensor<T>& p, const Tensor<T>& target)
{
    if (p.size() != target.size() || p.size() == 0) throw ShapeError("bce: size mismatch");
    double sum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(static_cast<double>(p[i]), kBceClamp, 1 - kBceClamp);
        sum -= target[i] * std::log(q) + (1 - target[i]) * std::log(1 - q);
    }
    return sum / static_cast<double>(p.size());
}

/// dL/dp of bce_loss, evaluated at the clamped probability.
template <class T>
Tensor<T> bce_grad(const Tensor<T>& p, const Tensor<T>& target)
{
    Tensor<T> g(p.shape);
    const double n = static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(static_cast<double>(p[i]), kBceClamp, 1 - kBceClamp);
        g[i] = static_cast<T>((q - target[i]) / (q * (1 - q)) / n);
    }
    return g;
}

template <class T>
class Model {
public:
    Model() = default;

    /// Builds the network with He-normal weights and zero biases.
    static Model build(const ModelSpec& spec, std::uint64_t seed)
    {
        spec.output_shape();
        Model m;
        m.spec_ = spec;
        std::mt19937_64 rng(seed);
        for (const auto& ls : spec.layers) {
            auto layer = make_layer<T>(ls);
            if (ls.kind == LayerKind::conv || ls.kind == LayerKind::dense) {
                const double fan_in = ls.kind == LayerKind::conv ? double(ls.in) * ls.kernel * ls.kernel : double(ls.in);
                std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
                for (auto& v : layer->params()[0]->value.data) v = static_cast<T>(dist(rng));
            }
            m.layers_.push_back(std::move(layer));
        }
        return m;
    }

    Model(Model&&) noexcept = default;
    Model& operator=(Model&&) noexcept = default;

    Model clone() const
    {
        Model m = build(spec_, 0);
        m.copy_state_from(*this);
        return m;
    }

    const ModelSpec& spec() const { return spec_; }
    std::size_t layer_count() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_.at(i); }

    /// Batched forward pass; `x` is the per-sample input shape with a leading
    /// batch axis. Output is [N, outputs].
    Tensor<T> forward(const Tensor<T>& x, Mode mode, bool check_finite = false)
    {
        Shape expect = spec_.input;
        expect.insert(expect.begin(), x.rank() ? x.dim(0) : 0);
        if (x.shape != expect) throw ShapeError("model: expected input " + shape_str(expect) + ", got " + shape_str(x.shape));
        Tensor<T> h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            h = layers_[i]->forward(h, mode);
            if (check_finite && !h.all_finite()) throw NonFiniteError("layer " + std::to_string(i) + " (" + to_string(layers_[i]->spec().kind) + ")", i);
        }
        h.shape = {h.dim(0), static_cast<int>(h.stride0())};
        return h;
    }

    /// Forward in training mode, BCE loss, and backward. Parameter gradients
    /// are overwritten.
    double loss_and_backward(const Tensor<T>& x, const Tensor<T>& target, Tensor<T>* outputs = nullptr)
    {
        zero_grad();
        const Tensor<T> p = forward(x, Mode::train, true);
        if (outputs) *outputs = p;
        if (p.shape != target.shape) throw ShapeError("model: target shape " + shape_str(target.shape) + " does not match output " + shape_str(p.shape));
        const double loss = bce_loss(p, target);
        if (!std::isfinite(loss)) throw NonFiniteError("loss", layers_.size());
        Tensor<T> g = bce_grad(p, target);
        for (std::size_t i = layers_.size(); i-- > 0;) {
            if (i + 1 == layers_.size()) g.shape = last_output_shape(p.dim(0));
            g = layers_[i]->backward(g);
        }
        for (auto* prm : params())
            if (!prm->grad.all_finite()) throw NonFiniteError("gradient of " + prm->name, layers_.size());
        return loss;
    }

    /// Evaluates the loss without touching gradients or running statistics.
    double loss(const Tensor<T>& x, const Tensor<T>& target, Mode mode)
    {
        if (mode == Mode::train) {
            // batch statistics would update the running averages; snapshot them
            std::vector<Tensor<T>> saved;
            for (auto* b : buffers()) saved.push_back(*b);
            const double l = bce_loss(forward(x, mode), target);
            auto bufs = buffers();
            for (std::size_t i = 0; i < bufs.size(); ++i) *bufs[i] = saved[i];
            return l;
        }
        return bce_loss(forward(x, mode), target);
    }

    std::vector<Param<T>*> params()
    {
        std::vector<Param<T>*> out;
        for (auto& l : layers_)
            for (auto* p : l->params()) out.push_back(p);
        return out;
    }

    std::vector<Tensor<T>*> buffers()
    {
        std::vector<Tensor<T>*> out;
        for (auto& l : layers_)
            for (auto* b : l->buffers()) out.push_back(b);
        return out;
    }

    /// Parameters then buffers, layer by layer, in serialization order.
    std::vector<Tensor<T>*> state()
    {
        std::vector<Tensor<T>*> out;
        for (auto& l : layers_) {
            for (auto* p : l->params()) out.push_back(&p->value);
            for (auto* b : l->buffers()) out.push_back(b);
        }
        return out;
    }

    std::size_t parameter_count()
    {
        std::size_t n = 0;
        for (auto* p : params()) n += p->value.size();
        return n;
    }

    void zero_grad()
    {
        for (auto* p : params()) p->grad.fill(T(0));
    }

    template <class U>
    void copy_state_from(Model<U>& other)
    {
        if (!(other.spec() == spec_)) throw ShapeError("copy_state_from: architecture mismatch");
        auto dst = state();
        auto src = other.state();
        for (std::size_t i = 0; i < dst.size(); ++i)
            std::transform(src[i]->data.begin(), src[i]->data.end(), dst[i]->data.begin(), [](U v) { return static_cast<T>(v); });
    }

    void copy_state_from(const Model& other) { copy_state_from(const_cast<Model&>(other)); }

private:
    Shape last_output_shape(int n) const
    {
        Shape s = spec_.input;
        for (std::size_t i = 0; i + 1 < layers_.size(); ++i) s = layers_[i]->output_shape(s);
        s.insert(s.begin(), n);
        return s;
    }

    ModelSpec spec_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <class T>
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<Param<T>*>& params)
    {
        if (m_.empty()) {
            for (auto* p : params) {
                m_.emplace_back(p->value.size(), 0.0);
                v_.emplace_back(p->value.size(), 0.0);
            }
        }
        if (m_.size() != params.size()) throw ShapeError("adam: parameter set changed");
        ++t_;
        const double c1 = 1 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& val = params[k]->value.data;
            const auto& g = params[k]->grad.data;
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < val.size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (1 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1 - cfg_.beta2) * double(g[i]) * g[i];
                val[i] -= static_cast<T>(cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon));
            }
        }
    }

    long steps() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

} // namespace bluecast::nn
