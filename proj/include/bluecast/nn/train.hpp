#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "bluecast/nn/model.hpp"

namespace bluecast::nn {

/// One training example: per-sample input tensor and 0/1 targets.
struct Sample {
    Tensor<float> input;
    std::vector<std::uint8_t> target;
};

/// Supplies mini-batches. Implementations must be deterministic for a given
/// construction seed.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::vector<Sample> next_batch(std::size_t batch) = 0;
    /// Batches per epoch when the config does not override it.
    virtual std::size_t default_steps(std::size_t batch) const = 0;
};

/// Finite dataset reshuffled every pass.
class InMemorySource final : public SampleSource {
public:
    InMemorySource(std::vector<Sample> samples, std::uint64_t seed) : samples_(std::move(samples)), rng_(seed)
    {
        if (samples_.empty()) throw std::invalid_argument("empty dataset");
        order_.resize(samples_.size());
        reshuffle();
    }

    std::vector<Sample> next_batch(std::size_t batch) override
    {
        std::vector<Sample> out;
        out.reserve(batch);
        while (out.size() < batch) {
            if (pos_ == order_.size()) reshuffle();
            out.push_back(samples_[order_[pos_++]]);
        }
        return out;
    }

    std::size_t default_steps(std::size_t batch) const override { return (samples_.size() + batch - 1) / batch; }

private:
    void reshuffle()
    {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
    }

    std::vector<Sample> samples_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    std::mt19937_64 rng_;
};

/// Adapts a generator callback (called once per batch) to a SampleSource.
class GeneratorSource final : public SampleSource {
public:
    using Fn = std::function<std::vector<Sample>(std::size_t batch)>;
    GeneratorSource(Fn fn, std::size_t steps_per_epoch) : fn_(std::move(fn)), steps_(steps_per_epoch) {}
    std::vector<Sample> next_batch(std::size_t batch) override { return fn_(batch); }
    std::size_t default_steps(std::size_t) const override { return steps_; }

private:
    Fn fn_;
    std::size_t steps_;
};

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch = 16;
    std::size_t steps_per_epoch = 0; ///< 0: source default
    AdamConfig adam;
};

struct EpochStats {
    std::size_t epoch = 0;
    std::size_t steps = 0;
    double loss = 0;
    double bit_accuracy = 0;
    double val_loss = 0;
    double val_bit_accuracy = 0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;

    void write_csv(const std::filesystem::path& path) const
    {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        f << "# bluecast-history v1\n";
        f << "epoch,steps,loss,bit_accuracy,val_loss,val_bit_accuracy\n";
        f.precision(8);
        for (const auto& e : epochs)
            f << e.epoch << ',' << e.steps << ',' << e.loss << ',' << e.bit_accuracy << ',' << e.val_loss << ','
              << e.val_bit_accuracy << '\n';
    }
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& what, TrainHistory h) : std::runtime_error(what), history(std::move(h)) {}
    TrainHistory history;
};

/// Stacks samples into an input batch and a target batch.
inline std::pair<Tensor<float>, Tensor<float>> collate(const std::vector<Sample>& batch)
{
    std::vector<const Tensor<float>*> inputs;
    for (const auto& s : batch) inputs.push_back(&s.input);
    Tensor<float> x = stack(inputs);
    const int bits = static_cast<int>(batch.front().target.size());
    Tensor<float> t({static_cast<int>(batch.size()), bits});
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (static_cast<int>(batch[i].target.size()) != bits) throw ShapeError("collate: target length mismatch");
        for (int j = 0; j < bits; ++j) t[i * bits + j] = batch[i].target[j] ? 1.0f : 0.0f;
    }
    return {std::move(x), std::move(t)};
}

inline std::size_t count_correct(const Tensor<float>& p, const Tensor<float>& t)
{
    std::size_t ok = 0;
    for (std::size_t i = 0; i < p.size(); ++i) ok += (p[i] > 0.5f) == (t[i] > 0.5f);
    return ok;
}

struct EvalStats {
    double loss = 0;
    double bit_accuracy = 0;
};

/// Inference-mode loss and bit accuracy over a sample set.
inline EvalStats evaluate(Model<float>& model, const std::vector<Sample>& samples, std::size_t batch = 32)
{
    if (samples.empty()) return {};
    double loss = 0;
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 0; i < samples.size(); i += batch) {
        const std::vector<Sample> chunk(samples.begin() + static_cast<std::ptrdiff_t>(i),
                                        samples.begin() + static_cast<std::ptrdiff_t>(std::min(samples.size(), i + batch)));
        auto [x, t] = collate(chunk);
        const Tensor<float> p = model.forward(x, Mode::infer);
        loss += bce_loss(p, t) * static_cast<double>(p.size());
        correct += count_correct(p, t);
        total += p.size();
    }
    return {loss / static_cast<double>(total), static_cast<double>(correct) / static_cast<double>(total)};
}

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam training. Deterministic given the model, the source and
/// the config. A non-finite loss or gradient throws TrainingDiverged carrying
/// the epochs completed so far.
inline TrainHistory train(Model<float>& model, SampleSource& source, const TrainConfig& cfg,
                          const std::vector<Sample>* validation = nullptr, const EpochCallback& on_epoch = {})
{
    if (cfg.batch < 2) throw std::invalid_argument("train: batch size must be at least 2");
    Adam<float> opt(cfg.adam);
    TrainHistory history;
    const std::size_t steps = cfg.steps_per_epoch ? cfg.steps_per_epoch : source.default_steps(cfg.batch);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double loss_sum = 0;
        std::size_t correct = 0, total = 0;
        for (std::size_t s = 0; s < steps; ++s) {
            auto [x, t] = collate(source.next_batch(cfg.batch));
            double loss;
            Tensor<float> p;
            try {
                loss = model.loss_and_backward(x, t, &p);
            } catch (const NonFiniteError& e) {
                throw TrainingDiverged(std::string("training diverged at epoch ") + std::to_string(epoch) + ": " + e.what(), history);
            }
            opt.step(model.params());
            loss_sum += loss;
            correct += count_correct(p, t);
            total += p.size();
        }
        EpochStats st;
        st.epoch = epoch;
        st.steps = steps;
        st.loss = loss_sum / static_cast<double>(steps);
        st.bit_accuracy = static_cast<double>(correct) / static_cast<double>(total);
        if (validation && !validation->empty()) {
            const EvalStats v = evaluate(model, *validation);
            st.val_loss = v.loss;
            st.val_bit_accuracy = v.bit_accuracy;
        }
        history.epochs.push_back(st);
        if (on_epoch) on_epoch(st);
    }
    return history;
}

} // namespace bluecast::nn
