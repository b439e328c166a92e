#pragma once

#include "ecgnet/adam.hpp"
#include "ecgnet/model.hpp"
#include "ecgnet/preprocess.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ecgnet {

enum class LossKind { sign, bce };

struct TrainConfig {
    int epochs = 19;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0; // shuffling order
    StepLrSchedule schedule;
    AdamConfig adam;
    LossKind loss = LossKind::sign;
};

struct EpochStats {
    int epoch = 0; // 1-based
    double lr = 0.0;
    double mean_loss = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam over shuffled examples. Deterministic for a fixed model
/// seed and TrainConfig::seed. Throws NumericError on a non-finite loss.
TrainHistory train(SeResNet& model, std::span<const Example> data, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// Stacks example features into a [B x leads x T] batch.
Tensor batch_features(std::span<const Example> data, std::span<const std::size_t> indices);

} // namespace ecgnet
