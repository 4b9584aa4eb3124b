#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bluecast/nn/model.hpp"

namespace bluecast::nn {

struct GradMismatch {
    std::string param;
    std::size_t index = 0;
    double analytic = 0;
    double numeric = 0;
    double rel = 0;
};

struct GradCheckResult {
    std::size_t checked = 0;
    double worst = 0;
    std::vector<GradMismatch> mismatches; ///< entries with rel >= tolerance
};

/// Smallest per-channel batch variance of an NC or NCHW activation.
inline double min_channel_variance(const Tensor<double>& a)
{
    const int n = a.dim(0), c = a.dim(1);
    const std::size_t inner = a.stride0() / c;
    double lo = 1e300;
    for (int ch = 0; ch < c; ++ch) {
        double s = 0, s2 = 0;
        for (int i = 0; i < n; ++i)
            for (std::size_t j = 0; j < inner; ++j) {
                const double v = a[(static_cast<std::size_t>(i) * c + ch) * inner + j];
                s += v;
                s2 += v * v;
            }
        const double m = static_cast<double>(n * inner);
        lo = std::min(lo, s2 / m - (s / m) * (s / m));
    }
    return lo;
}

/// Compares every parameter gradient with a fourth-order central difference
/// of step h. Returns nullopt (nothing checked) when the input sits within
/// 1e-2 of a ReLU kink or feeds a BatchNorm channel with batch variance below
/// 1e-2; there a step of h is not small against the local curvature.
inline std::optional<GradCheckResult> check_gradients(Model<double>& model, const Tensor<double>& x, const Tensor<double>& t,
                                                      double h, double tolerance = 1e-4)
{
    constexpr double kink_margin = 1e-2;
    constexpr double min_bn_variance = 1e-2;
    Tensor<double> act = x;
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const auto kind = model.layer(i).spec().kind;
        if (kind == LayerKind::relu)
            for (double v : act.data)
                if (std::abs(v) < kink_margin) return std::nullopt;
        if (kind == LayerKind::batchnorm && min_channel_variance(act) < min_bn_variance) return std::nullopt;
        act = model.layer(i).forward(act, Mode::train);
    }
    model.loss_and_backward(x, t);
    GradCheckResult out;
    for (auto* p : model.params()) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double orig = p->value[i];
            auto at = [&](double d) {
                p->value[i] = orig + d;
                return model.loss(x, t, Mode::train);
            };
            const double num = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
            p->value[i] = orig;
            const double ana = p->grad[i];
            const double rel = std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6});
            out.worst = std::max(out.worst, rel);
            ++out.checked;
            if (rel >= tolerance) out.mismatches.push_back({p->name, i, ana, num, rel});
        }
    }
    return out;
}

/// Random reduced conv-BN-ReLU-conv-BN-ReLU-dense-sigmoid configurations with
/// two-sample batches. Draws until `count` configurations pass the
/// conditioning screen and accumulates their results.
inline GradCheckResult gradient_sweep(int count, std::uint64_t seed, double h = 1e-3, double tolerance = 1e-4,
                                      int max_attempts = 5000)
{
    std::mt19937_64 rng(seed);
    GradCheckResult total;
    int accepted = 0, attempts = 0;
    while (accepted < count) {
        if (++attempts > max_attempts) throw std::runtime_error("gradient sweep: too many ill-conditioned draws");
        const int c0 = 1 + static_cast<int>(rng() % 3);
        const int side = 4 + static_cast<int>(rng() % 3);
        const int c1 = 2 + static_cast<int>(rng() % 2);
        const int c2 = 2 + static_cast<int>(rng() % 2);
        const int k2 = rng() % 3 ? 3 : 1;
        const int stride = 1 + static_cast<int>(rng() % 2);
        const int out = 2 + static_cast<int>(rng() % 4);
        const int so = (side + 2 * (k2 / 2) - k2) / stride + 1;
        ModelSpec spec;
        spec.input = {c0, side, side};
        spec.layers = {LayerSpec::conv(c0, c1, 1), LayerSpec::batchnorm(c1), LayerSpec::relu(),
                       LayerSpec::conv(c1, c2, k2, stride), LayerSpec::batchnorm(c2), LayerSpec::relu(),
                       LayerSpec::dense(c2 * so * so, out), LayerSpec::sigmoid()};
        auto model = Model<double>::build(spec, rng());
        std::normal_distribution<double> jitter(0, 0.1), unit(0, 1);
        for (auto* p : model.params())
            for (auto& v : p->value.data) v += jitter(rng);
        Tensor<double> x({2, c0, side, side});
        for (auto& v : x.data) v = unit(rng);
        Tensor<double> t({2, out});
        for (auto& v : t.data) v = static_cast<double>(rng() & 1);
        if (auto r = check_gradients(model, x, t, h, tolerance)) {
            ++accepted;
            total.checked += r->checked;
            total.worst = std::max(total.worst, r->worst);
            total.mismatches.insert(total.mismatches.end(), r->mismatches.begin(), r->mismatches.end());
        }
    }
    return total;
}

} // namespace bluecast::nn
