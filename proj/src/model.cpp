#include "ecgnet/model.hpp"

#include "ecgnet/error.hpp"
#include "text_util.hpp"

#include <numeric>

namespace ecgnet {

namespace {

std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<std::size_t> parse_list(const std::string& key, std::string_view value) {
    std::vector<std::size_t> out;
    for (auto item : detail::split(value, ',')) {
        const auto v = detail::parse_number<std::size_t>(item);
        if (!v) throw ConfigError(key + ": not a list of integers: " + std::string(value));
        out.push_back(*v);
    }
    return out;
}

std::size_t parse_size(const std::string& key, std::string_view value) {
    const auto v = detail::parse_number<std::size_t>(value);
    if (!v) throw ConfigError(key + ": not a non-negative integer: " + std::string(value));
    return *v;
}

} // namespace

SeResNetConfig SeResNetConfig::small(std::size_t input_length) {
    SeResNetConfig c;
    c.input_length = input_length;
    c.stem_channels = 16;
    c.blocks_per_stage = {1, 1};
    c.channels_per_stage = {16, 32};
    return c;
}

void SeResNetConfig::validate() const {
    if (input_leads == 0 || input_length == 0) throw ConfigError("input shape must be non-empty");
    if (stem_channels == 0 || stem_kernel == 0 || stem_kernel % 2 == 0) throw ConfigError("stem kernel must be odd");
    if (kernel_size == 0 || kernel_size % 2 == 0) throw ConfigError("kernel_size must be odd");
    if (blocks_per_stage.empty() || blocks_per_stage.size() != channels_per_stage.size())
        throw ConfigError("blocks_per_stage and channels_per_stage must have the same non-zero length");
    if (se_reduction == 0) throw ConfigError("se_reduction must be positive");
    for (std::size_t i = 0; i < channels_per_stage.size(); ++i) {
        if (blocks_per_stage[i] == 0) throw ConfigError("every stage needs at least one block");
        if (channels_per_stage[i] % se_reduction != 0)
            throw ConfigError("se_reduction " + std::to_string(se_reduction) + " does not divide stage width " +
                              std::to_string(channels_per_stage[i]));
    }
    if (n_classes != kNumScored) throw ConfigError("n_classes must equal the class map size (27)");
}

KeyValues SeResNetConfig::to_key_values() const {
    return {
        {"blocks_per_stage", join(blocks_per_stage)},
        {"channels_per_stage", join(channels_per_stage)},
        {"input_leads", std::to_string(input_leads)},
        {"input_length", std::to_string(input_length)},
        {"kernel_size", std::to_string(kernel_size)},
        {"n_classes", std::to_string(n_classes)},
        {"se_reduction", std::to_string(se_reduction)},
        {"seed", std::to_string(seed)},
        {"stem_channels", std::to_string(stem_channels)},
        {"stem_kernel", std::to_string(stem_kernel)},
    };
}

SeResNetConfig SeResNetConfig::from_key_values(const KeyValues& kv) {
    SeResNetConfig c;
    for (const auto& [key, value] : kv) {
        if (key == "blocks_per_stage") c.blocks_per_stage = parse_list(key, value);
        else if (key == "channels_per_stage") c.channels_per_stage = parse_list(key, value);
        else if (key == "input_leads") c.input_leads = parse_size(key, value);
        else if (key == "input_length") c.input_length = parse_size(key, value);
        else if (key == "kernel_size") c.kernel_size = parse_size(key, value);
        else if (key == "n_classes") c.n_classes = parse_size(key, value);
        else if (key == "se_reduction") c.se_reduction = parse_size(key, value);
        else if (key == "seed") c.seed = parse_size(key, value);
        else if (key == "stem_channels") c.stem_channels = parse_size(key, value);
        else if (key == "stem_kernel") c.stem_kernel = parse_size(key, value);
        else throw ConfigError("unknown model key '" + key + "'");
    }
    c.validate();
    return c;
}

SeResNet::SeResNet(SeResNetConfig config) : config_(std::move(config)) {
    config_.validate();
    stem_ = Conv1d("stem", config_.input_leads, config_.stem_channels, config_.stem_kernel, 2, config_.stem_kernel / 2,
                   false);
    std::size_t channels = config_.stem_channels;
    for (std::size_t s = 0; s < config_.channels_per_stage.size(); ++s) {
        for (std::size_t b = 0; b < config_.blocks_per_stage[s]; ++b) {
            const auto name = "stage" + std::to_string(s) + ".block" + std::to_string(b);
            const std::size_t stride = b == 0 ? 2 : 1;
            blocks_.emplace_back(name, channels, config_.channels_per_stage[s], config_.kernel_size, stride,
                                 config_.se_reduction);
            channels = config_.channels_per_stage[s];
        }
    }
    final_bn_ = BatchNorm1d("final_bn", channels);
    head_ = Dense("head", channels, config_.n_classes);

    Rng rng(config_.seed);
    stem_.init_kaiming(rng);
    for (auto& block : blocks_) block.init(rng);
    head_.init_kaiming(rng);

    // Reject configurations whose input collapses before pooling.
    std::size_t t = stem_.output_length(config_.input_length);
    for (const auto& block : blocks_) t = block.output_length(t);
}

Tensor SeResNet::forward(const Tensor& x, Mode mode) {
    if (x.rank() != 3 || x.dim(1) != config_.input_leads || x.dim(2) != config_.input_length)
        throw ShapeError("model expects [B x " + std::to_string(config_.input_leads) + " x " +
                         std::to_string(config_.input_length) + "], got " + x.shape_string());
    Tensor h = stem_.forward(x);
    for (auto& block : blocks_) h = block.forward(h, mode);
    h = final_relu_.forward(final_bn_.forward(h, mode));
    return head_.forward(pool_.forward(h));
}

void SeResNet::backward(const Tensor& grad_logits) {
    Tensor g = pool_.backward(head_.backward(grad_logits));
    g = final_bn_.backward(final_relu_.backward(g));
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = it->backward(g);
    (void)stem_.backward(g);
}

void SeResNet::zero_grad() {
    for (auto* p : refs().params) p->zero_grad();
}

ParamRefs SeResNet::refs() {
    ParamRefs r;
    stem_.collect(r);
    for (auto& block : blocks_) block.collect(r);
    final_bn_.collect(r);
    head_.collect(r);
    return r;
}

std::size_t SeResNet::parameter_count() {
    std::size_t n = 0;
    for (const auto* p : refs().params) n += p->value.size();
    return n;
}

std::vector<ProbVector> predict_probabilities(SeResNet& model, const Tensor& batch) {
    if (model.config().n_classes != kNumScored) throw ShapeError("model does not emit 27 classes");
    const Tensor logits = model.forward(batch, Mode::eval);
    std::vector<ProbVector> out(logits.dim(0));
    for (std::size_t b = 0; b < logits.dim(0); ++b)
        for (std::size_t i = 0; i < kNumScored; ++i) out[b][i] = sigmoid(logits.at(b, i));
    return out;
}

} // namespace ecgnet
