#pragma once

#include "ecgnet/kv.hpp"
#include "ecgnet/layers.hpp"
#include "ecgnet/record_io.hpp"

#include <cstdint>
#include <vector>

namespace ecgnet {

struct SeResNetConfig {
    std::size_t input_leads = 8;
    std::size_t input_length = 15000;
    std::size_t stem_channels = 32;
    std::size_t stem_kernel = 15;
    std::size_t kernel_size = 7;
    std::vector<std::size_t> blocks_per_stage = {2, 2, 2, 2};
    std::vector<std::size_t> channels_per_stage = {32, 64, 128, 256};
    std::size_t se_reduction = 4;
    std::size_t n_classes = kNumScored;
    std::uint64_t seed = 0;

    /// Two single-block stages of 16 and 32 channels; trains in seconds.
    static SeResNetConfig small(std::size_t input_length);

    /// Throws ConfigError.
    void validate() const;
    KeyValues to_key_values() const;
    static SeResNetConfig from_key_values(const KeyValues& kv);
};

/// stem conv (stride 2) -> stages of residual SE blocks (stride 2 on entry
/// to each stage) -> BN -> ReLU -> global average pool -> dense logits.
class SeResNet {
public:
    explicit SeResNet(SeResNetConfig config);

    SeResNet(const SeResNet&) = delete;
    SeResNet& operator=(const SeResNet&) = delete;
    SeResNet(SeResNet&&) noexcept = default;
    SeResNet& operator=(SeResNet&&) noexcept = default;

    const SeResNetConfig& config() const noexcept { return config_; }

    /// x: [B x input_leads x input_length] -> logits [B x n_classes].
    Tensor forward(const Tensor& x, Mode mode);
    /// Back-propagates d loss / d logits of the most recent forward pass.
    void backward(const Tensor& grad_logits);

    void zero_grad();
    /// Stable, named views of every parameter and buffer (owned by the model).
    ParamRefs refs();
    std::size_t parameter_count();

    std::vector<ResidualBlock>& blocks() noexcept { return blocks_; }

private:
    SeResNetConfig config_;
    Conv1d stem_;
    std::vector<ResidualBlock> blocks_;
    BatchNorm1d final_bn_;
    Relu final_relu_;
    GlobalAvgPool pool_;
    Dense head_;
};

/// Sigmoid probabilities for a batch [B x leads x T] in eval mode.
std::vector<ProbVector> predict_probabilities(SeResNet& model, const Tensor& batch);

} // namespace ecgnet
