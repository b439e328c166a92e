#include "ecgnet/train.hpp"

#include "ecgnet/error.hpp"
#include "ecgnet/sign_loss.hpp"

#include <cmath>
#include <numeric>

namespace ecgnet {

namespace {

// d mean-BCE / d logit = (sigmoid(z) - y) / batch.
Tensor bce_grad_logits(const Tensor& logits, const Tensor& targets, double* total) {
    const auto rows = logits.dim(0), cols = logits.dim(1);
    Tensor grad({rows, cols});
    double sum = 0.0;
    for (std::size_t b = 0; b < rows; ++b)
        for (std::size_t i = 0; i < cols; ++i) {
            const double p = clamp_probability(sigmoid(logits.at(b, i)));
            const double y = targets.at(b, i);
            sum += binary_cross_entropy(p, y);
            grad.at(b, i) = (sigmoid(logits.at(b, i)) - y) / static_cast<double>(rows);
        }
    *total = sum / static_cast<double>(rows);
    return grad;
}

} // namespace

Tensor batch_features(std::span<const Example> data, std::span<const std::size_t> indices) {
    std::vector<Tensor> items;
    items.reserve(indices.size());
    for (auto i : indices) items.push_back(data[i].features);
    return Tensor::stack(items);
}

TrainHistory train(SeResNet& model, std::span<const Example> data, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
    if (data.empty()) throw ValidationError("training set is empty");
    if (config.batch_size == 0 || config.epochs < 1) throw ConfigError("batch size and epoch count must be positive");

    auto refs = model.refs();
    Adam optimizer(refs.params, config.adam);
    Rng rng(mix_seed(config.seed, 0x7472));
    std::vector<std::size_t> order(data.size());
    TrainHistory history;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = config.schedule.lr_at(epoch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span(order));
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const auto count = std::min(config.batch_size, order.size() - start);
            const auto idx = std::span(order).subspan(start, count);
            const Tensor x = batch_features(data, idx);
            Tensor targets({count, kNumScored});
            for (std::size_t b = 0; b < count; ++b)
                for (std::size_t i = 0; i < kNumScored; ++i) targets.at(b, i) = data[idx[b]].labels[i];

            model.zero_grad();
            const Tensor logits = model.forward(x, Mode::train);
            double loss = 0.0;
            const Tensor grad = config.loss == LossKind::sign ? sign_loss_grad_logits(logits, targets, &loss)
                                                              : bce_grad_logits(logits, targets, &loss);
            if (!std::isfinite(loss) || !logits.all_finite())
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                                   std::to_string(start) + " (lr " + std::to_string(lr) + ")");
            model.backward(grad);
            optimizer.step(lr);
            loss_sum += loss * static_cast<double>(count);
        }
        EpochStats stats{epoch, lr, loss_sum / static_cast<double>(data.size())};
        history.epochs.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return history;
}

} // namespace ecgnet
