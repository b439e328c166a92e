#include "ecgnet/layers.hpp"

#include "ecgnet/error.hpp"

#include <algorithm>
#include <cmath>

namespace ecgnet {

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

void kaiming_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : t.data()) v = rng.uniform(-bound, bound);
}

void require_rank(const Tensor& x, std::size_t rank, const char* layer) {
    if (x.rank() != rank)
        throw ShapeError(std::string(layer) + " expects a rank-" + std::to_string(rank) + " input, got " + x.shape_string());
}

} // namespace

// ------------------------------------------------------------------ Conv1d

Conv1d::Conv1d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t stride, std::size_t padding, bool bias)
    : weight(name + ".weight", Tensor({out_channels, in_channels, kernel})),
      in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), padding_(padding), has_bias_(bias) {
    if (stride == 0 || kernel == 0) throw ConfigError("convolution kernel and stride must be positive");
    if (bias) this->bias = Param(name + ".bias", Tensor({out_channels}));
}

void Conv1d::init_kaiming(Rng& rng) {
    kaiming_uniform(weight.value, in_ * kernel_, rng);
    if (has_bias_) bias.value.fill(0.0);
}

std::size_t Conv1d::output_length(std::size_t input_length) const {
    const auto padded = input_length + 2 * padding_;
    if (padded < kernel_) throw ShapeError("convolution kernel longer than padded input");
    return (padded - kernel_) / stride_ + 1;
}

Tensor Conv1d::forward(const Tensor& x) {
    require_rank(x, 3, "conv1d");
    if (x.dim(1) != in_)
        throw ShapeError("conv1d expects " + std::to_string(in_) + " input channels, got " + x.shape_string());
    const auto batch = x.dim(0);
    const auto t_in = x.dim(2);
    const auto t_out = output_length(t_in);
    input_ = x;
    Tensor out({batch, out_, t_out});
    const auto pad = static_cast<std::ptrdiff_t>(padding_);
    const auto s = static_cast<std::ptrdiff_t>(stride_);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < out_; ++o) {
            auto y = out.row(b, o);
            if (has_bias_) std::fill(y.begin(), y.end(), bias.value[o]);
            for (std::size_t c = 0; c < in_; ++c) {
                const auto xr = x.row(b, c);
                const double* w = &weight.value.at(o, c, 0);
                for (std::size_t k = 0; k < kernel_; ++k) {
                    const double wk = w[k];
                    const auto shift = static_cast<std::ptrdiff_t>(k) - pad; // input index = t*s + shift
                    const auto t_lo = shift >= 0 ? 0 : (-shift + s - 1) / s;
                    const auto t_hi_excl = std::min<std::ptrdiff_t>(
                        static_cast<std::ptrdiff_t>(t_out), (static_cast<std::ptrdiff_t>(t_in) - shift + s - 1) / s);
                    if (s == 1) {
                        const double* xp = xr.data();
                        double* yp = y.data();
                        for (auto t = t_lo; t < t_hi_excl; ++t) yp[t] += wk * xp[t + shift];
                    } else {
                        for (auto t = t_lo; t < t_hi_excl; ++t)
                            y[static_cast<std::size_t>(t)] += wk * xr[static_cast<std::size_t>(t * s + shift)];
                    }
                }
            }
        }
    }
    return out;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
    const auto batch = input_.dim(0);
    const auto t_in = input_.dim(2);
    const auto t_out = grad_out.dim(2);
    Tensor grad_in({batch, in_, t_in});
    const auto pad = static_cast<std::ptrdiff_t>(padding_);
    const auto s = static_cast<std::ptrdiff_t>(stride_);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < out_; ++o) {
            const auto g = grad_out.row(b, o);
            if (has_bias_) {
                double acc = 0.0;
                for (double v : g) acc += v;
                bias.grad[o] += acc;
            }
            for (std::size_t c = 0; c < in_; ++c) {
                const auto xr = input_.row(b, c);
                auto gx = grad_in.row(b, c);
                const double* w = &weight.value.at(o, c, 0);
                double* gw = &weight.grad.at(o, c, 0);
                for (std::size_t k = 0; k < kernel_; ++k) {
                    const auto shift = static_cast<std::ptrdiff_t>(k) - pad;
                    const auto t_lo = shift >= 0 ? 0 : (-shift + s - 1) / s;
                    const auto t_hi_excl = std::min<std::ptrdiff_t>(
                        static_cast<std::ptrdiff_t>(t_out), (static_cast<std::ptrdiff_t>(t_in) - shift + s - 1) / s);
                    const double wk = w[k];
                    double acc = 0.0;
                    for (auto t = t_lo; t < t_hi_excl; ++t) {
                        const auto idx = static_cast<std::size_t>(t * s + shift);
                        const double gv = g[static_cast<std::size_t>(t)];
                        acc += gv * xr[idx];
                        gx[idx] += wk * gv;
                    }
                    gw[k] += acc;
                }
            }
        }
    }
    return grad_in;
}

void Conv1d::collect(ParamRefs& refs) {
    refs.params.push_back(&weight);
    if (has_bias_) refs.params.push_back(&bias);
}

// ------------------------------------------------------------- BatchNorm1d

BatchNorm1d::BatchNorm1d(std::string name, std::size_t channels)
    : gamma(name + ".gamma", Tensor({channels}, 1.0)), beta(name + ".beta", Tensor({channels})),
      running_mean{name + ".running_mean", Tensor({channels})},
      running_var{name + ".running_var", Tensor({channels}, 1.0)} {}

Tensor BatchNorm1d::forward(const Tensor& x, Mode mode) {
    require_rank(x, 3, "batch norm");
    const auto batch = x.dim(0);
    const auto channels = x.dim(1);
    const auto length = x.dim(2);
    if (channels != gamma.value.size()) throw ShapeError("batch norm channel mismatch: " + x.shape_string());
    mode_ = mode;
    normalized_ = Tensor(x.shape());
    inv_std_.assign(channels, 0.0);
    Tensor out(x.shape());
    const double count = static_cast<double>(batch * length);
    for (std::size_t c = 0; c < channels; ++c) {
        double mean, var;
        if (mode == Mode::train) {
            double sum = 0.0;
            for (std::size_t b = 0; b < batch; ++b)
                for (double v : x.row(b, c)) sum += v;
            mean = sum / count;
            double sq = 0.0;
            for (std::size_t b = 0; b < batch; ++b)
                for (double v : x.row(b, c)) sq += (v - mean) * (v - mean);
            var = sq / count;
            const double unbiased = count > 1 ? sq / (count - 1.0) : var;
            running_mean.value[c] = (1.0 - momentum) * running_mean.value[c] + momentum * mean;
            running_var.value[c] = (1.0 - momentum) * running_var.value[c] + momentum * unbiased;
        } else {
            mean = running_mean.value[c];
            var = running_var.value[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + eps);
        inv_std_[c] = inv_std;
        const double g = gamma.value[c], bt = beta.value[c];
        for (std::size_t b = 0; b < batch; ++b) {
            const auto xr = x.row(b, c);
            auto nr = normalized_.row(b, c);
            auto yr = out.row(b, c);
            for (std::size_t t = 0; t < length; ++t) {
                nr[t] = (xr[t] - mean) * inv_std;
                yr[t] = g * nr[t] + bt;
            }
        }
    }
    return out;
}

Tensor BatchNorm1d::backward(const Tensor& grad_out) {
    const auto batch = grad_out.dim(0);
    const auto channels = grad_out.dim(1);
    const auto length = grad_out.dim(2);
    Tensor grad_in(grad_out.shape());
    const double count = static_cast<double>(batch * length);
    for (std::size_t c = 0; c < channels; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const auto gr = grad_out.row(b, c);
            const auto nr = normalized_.row(b, c);
            for (std::size_t t = 0; t < length; ++t) {
                sum_g += gr[t];
                sum_gx += gr[t] * nr[t];
            }
        }
        gamma.grad[c] += sum_gx;
        beta.grad[c] += sum_g;
        const double g = gamma.value[c];
        const double inv_std = inv_std_[c];
        for (std::size_t b = 0; b < batch; ++b) {
            const auto gr = grad_out.row(b, c);
            const auto nr = normalized_.row(b, c);
            auto gi = grad_in.row(b, c);
            for (std::size_t t = 0; t < length; ++t) {
                if (mode_ == Mode::train)
                    gi[t] = g * inv_std * (gr[t] - sum_g / count - nr[t] * sum_gx / count);
                else
                    gi[t] = g * inv_std * gr[t];
            }
        }
    }
    return grad_in;
}

void BatchNorm1d::collect(ParamRefs& refs) {
    refs.params.push_back(&gamma);
    refs.params.push_back(&beta);
    refs.buffers.push_back(&running_mean);
    refs.buffers.push_back(&running_var);
}

// -------------------------------------------------------------------- Relu

Tensor Relu::forward(const Tensor& x) {
    input_ = x;
    Tensor out(x.shape());
    // NaN passes through; zeroing it would hide bad input
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] < 0.0 ? 0.0 : x[i];
    return out;
}

Tensor Relu::backward(const Tensor& grad_out) {
    Tensor grad_in(grad_out.shape());
    for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[i] = input_[i] > 0.0 ? grad_out[i] : 0.0;
    return grad_in;
}

// ------------------------------------------------------------------- Dense

Dense::Dense(std::string name, std::size_t in_features, std::size_t out_features)
    : weight(name + ".weight", Tensor({out_features, in_features})), bias(name + ".bias", Tensor({out_features})) {}

void Dense::init_kaiming(Rng& rng) {
    kaiming_uniform(weight.value, weight.value.dim(1), rng);
    bias.value.fill(0.0);
}

Tensor Dense::forward(const Tensor& x) {
    require_rank(x, 2, "dense");
    const auto batch = x.dim(0);
    const auto in = weight.value.dim(1);
    const auto out_f = weight.value.dim(0);
    if (x.dim(1) != in) throw ShapeError("dense expects " + std::to_string(in) + " features, got " + x.shape_string());
    input_ = x;
    Tensor out({batch, out_f});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < out_f; ++o) {
            double acc = bias.value[o];
            for (std::size_t i = 0; i < in; ++i) acc += weight.value.at(o, i) * x.at(b, i);
            out.at(b, o) = acc;
        }
    return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
    const auto batch = input_.dim(0);
    const auto in = weight.value.dim(1);
    const auto out_f = weight.value.dim(0);
    Tensor grad_in({batch, in});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < out_f; ++o) {
            const double g = grad_out.at(b, o);
            bias.grad[o] += g;
            for (std::size_t i = 0; i < in; ++i) {
                weight.grad.at(o, i) += g * input_.at(b, i);
                grad_in.at(b, i) += g * weight.value.at(o, i);
            }
        }
    return grad_in;
}

void Dense::collect(ParamRefs& refs) {
    refs.params.push_back(&weight);
    refs.params.push_back(&bias);
}

// ----------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x) {
    require_rank(x, 3, "global average pool");
    length_ = x.dim(2);
    Tensor out({x.dim(0), x.dim(1)});
    for (std::size_t b = 0; b < x.dim(0); ++b)
        for (std::size_t c = 0; c < x.dim(1); ++c) {
            double acc = 0.0;
            for (double v : x.row(b, c)) acc += v;
            out.at(b, c) = acc / static_cast<double>(length_);
        }
    return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
    Tensor grad_in({grad_out.dim(0), grad_out.dim(1), length_});
    for (std::size_t b = 0; b < grad_out.dim(0); ++b)
        for (std::size_t c = 0; c < grad_out.dim(1); ++c) {
            const double g = grad_out.at(b, c) / static_cast<double>(length_);
            for (auto& v : grad_in.row(b, c)) v = g;
        }
    return grad_in;
}

// ----------------------------------------------------------------- SeBlock

SeBlock::SeBlock(std::string name, std::size_t channels, std::size_t reduction) {
    if (reduction == 0 || channels % reduction != 0)
        throw ConfigError("SE reduction " + std::to_string(reduction) + " does not divide " + std::to_string(channels) +
                          " channels");
    reduce = Dense(name + ".reduce", channels, channels / reduction);
    expand = Dense(name + ".expand", channels / reduction, channels);
}

void SeBlock::init(Rng& rng) {
    reduce.init_kaiming(rng);
    expand.init_kaiming(rng);
}

Tensor SeBlock::forward(const Tensor& x) {
    require_rank(x, 3, "SE block");
    input_ = x;
    const auto batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
    squeeze_ = Tensor({batch, channels});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            double acc = 0.0;
            for (double v : x.row(b, c)) acc += v;
            squeeze_.at(b, c) = acc / static_cast<double>(length);
        }
    gate_ = expand.forward(relu_.forward(reduce.forward(squeeze_)));
    for (auto& v : gate_.data()) v = sigmoid(v);
    Tensor out(x.shape());
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            const double w = gate_.at(b, c);
            const auto xr = x.row(b, c);
            auto yr = out.row(b, c);
            for (std::size_t t = 0; t < length; ++t) yr[t] = w * xr[t];
        }
    return out;
}

Tensor SeBlock::backward(const Tensor& grad_out) {
    const auto batch = input_.dim(0), channels = input_.dim(1), length = input_.dim(2);
    Tensor grad_gate_logit({batch, channels});
    Tensor grad_in(input_.shape());
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            const auto gr = grad_out.row(b, c);
            const auto xr = input_.row(b, c);
            const double w = gate_.at(b, c);
            double dw = 0.0;
            auto gi = grad_in.row(b, c);
            for (std::size_t t = 0; t < length; ++t) {
                dw += gr[t] * xr[t];
                gi[t] = w * gr[t];
            }
            grad_gate_logit.at(b, c) = dw * w * (1.0 - w);
        }
    const Tensor grad_squeeze = reduce.backward(relu_.backward(expand.backward(grad_gate_logit)));
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            const double g = grad_squeeze.at(b, c) / static_cast<double>(length);
            for (auto& v : grad_in.row(b, c)) v += g;
        }
    return grad_in;
}

void SeBlock::collect(ParamRefs& refs) {
    reduce.collect(refs);
    expand.collect(refs);
}

// ----------------------------------------------------------- ResidualBlock

ResidualBlock::ResidualBlock(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                             std::size_t stride, std::size_t se_reduction)
    : bn1(name + ".bn1", in_channels), bn2(name + ".bn2", out_channels),
      conv1(name + ".conv1", in_channels, out_channels, kernel, stride, kernel / 2, false),
      conv2(name + ".conv2", out_channels, out_channels, kernel, 1, kernel / 2, false),
      se(name + ".se", out_channels, se_reduction), projected(stride != 1 || in_channels != out_channels) {
    if (kernel % 2 == 0) throw ConfigError("residual block kernels must be odd");
    if (projected) shortcut = Conv1d(name + ".shortcut", in_channels, out_channels, 1, stride, 0, false);
}

void ResidualBlock::init(Rng& rng) {
    conv1.init_kaiming(rng);
    conv2.init_kaiming(rng);
    se.init(rng);
    if (projected) shortcut.init_kaiming(rng);
}

Tensor ResidualBlock::forward(const Tensor& x, Mode mode) {
    Tensor h = relu1_.forward(bn1.forward(x, mode));
    h = conv1.forward(h);
    h = relu2_.forward(bn2.forward(h, mode));
    h = se.forward(conv2.forward(h));
    h += projected ? shortcut.forward(x) : x;
    return h;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
    Tensor g = conv2.backward(se.backward(grad_out));
    g = conv1.backward(bn2.backward(relu2_.backward(g)));
    g = bn1.backward(relu1_.backward(g));
    g += projected ? shortcut.backward(grad_out) : grad_out;
    return g;
}

void ResidualBlock::collect(ParamRefs& refs) {
    bn1.collect(refs);
    conv1.collect(refs);
    bn2.collect(refs);
    conv2.collect(refs);
    se.collect(refs);
    if (projected) shortcut.collect(refs);
}

} // namespace ecgnet
