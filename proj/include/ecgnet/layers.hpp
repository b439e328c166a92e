#pragma once

#include "ecgnet/rng.hpp"
#include "ecgnet/tensor.hpp"

#include <string>
#include <vector>

namespace ecgnet {

enum class Mode { train, eval };

/// A trainable array and its accumulated gradient.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}
    void zero_grad() { grad.fill(0.0); }
};

/// Non-trainable persistent state (batch-norm running statistics).
struct Buffer {
    std::string name;
    Tensor value;
};

struct ParamRefs {
    std::vector<Param*> params;
    std::vector<Buffer*> buffers;
};

// Every layer caches what its backward pass needs during forward. backward()
// accumulates into parameter gradients and returns the input gradient.

class Conv1d {
public:
    Conv1d() = default;
    Conv1d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
           std::size_t stride, std::size_t padding, bool bias);

    void init_kaiming(Rng& rng);
    std::size_t output_length(std::size_t input_length) const;

    Tensor forward(const Tensor& x); // [B x C_in x T] -> [B x C_out x T']
    Tensor backward(const Tensor& grad_out);
    void collect(ParamRefs& refs);

    Param weight; // [C_out x C_in x K]
    Param bias;   // [C_out], empty when disabled

private:
    std::size_t in_ = 0, out_ = 0, kernel_ = 0, stride_ = 1, padding_ = 0;
    bool has_bias_ = false;
    Tensor input_;
};

class BatchNorm1d {
public:
    BatchNorm1d() = default;
    BatchNorm1d(std::string name, std::size_t channels);

    Tensor forward(const Tensor& x, Mode mode); // normalizes over batch and time per channel
    Tensor backward(const Tensor& grad_out);
    void collect(ParamRefs& refs);

    Param gamma, beta;
    Buffer running_mean, running_var;
    double momentum = 0.1;
    double eps = 1e-5;

private:
    Mode mode_ = Mode::train;
    Tensor normalized_;
    std::vector<double> inv_std_;
};

class Relu {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

private:
    Tensor input_;
};

class Dense {
public:
    Dense() = default;
    Dense(std::string name, std::size_t in_features, std::size_t out_features);

    void init_kaiming(Rng& rng);
    Tensor forward(const Tensor& x); // [B x in] -> [B x out]
    Tensor backward(const Tensor& grad_out);
    void collect(ParamRefs& refs);

    Param weight; // [out x in]
    Param bias;   // [out]

private:
    Tensor input_;
};

class GlobalAvgPool {
public:
    Tensor forward(const Tensor& x); // [B x C x T] -> [B x C]
    Tensor backward(const Tensor& grad_out);

private:
    std::size_t length_ = 0;
};

/// Squeeze-and-excitation: per-channel time mean -> dense(C -> C/r) -> ReLU
/// -> dense(C/r -> C) -> sigmoid, then scale each channel by its weight.
class SeBlock {
public:
    SeBlock() = default;
    SeBlock(std::string name, std::size_t channels, std::size_t reduction);

    void init(Rng& rng); // Kaiming-uniform weights, zero biases
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);
    void collect(ParamRefs& refs);

    /// Channel weights of the last forward pass, [B x C].
    const Tensor& channel_weights() const noexcept { return gate_; }
    /// Squeeze vector of the last forward pass, [B x C].
    const Tensor& squeezed() const noexcept { return squeeze_; }

    Dense reduce, expand;

private:
    Relu relu_;
    Tensor input_, squeeze_, gate_;
};

/// Pre-activation residual block ending in an SE block:
/// out = shortcut(x) + SE(conv2(relu(bn2(conv1(relu(bn1(x)))))))
class ResidualBlock {
public:
    ResidualBlock() = default;
    ResidualBlock(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, std::size_t se_reduction);

    void init(Rng& rng);
    Tensor forward(const Tensor& x, Mode mode);
    Tensor backward(const Tensor& grad_out);
    void collect(ParamRefs& refs);
    std::size_t output_length(std::size_t input_length) const { return conv1.output_length(input_length); }

    BatchNorm1d bn1, bn2;
    Conv1d conv1, conv2;
    SeBlock se;
    bool projected = false;
    Conv1d shortcut; // 1x1, used when shape changes

private:
    Relu relu1_, relu2_;
};

double sigmoid(double x) noexcept;

} // namespace ecgnet
