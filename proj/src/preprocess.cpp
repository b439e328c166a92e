#include "ecgnet/preprocess.hpp"

#include "ecgnet/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ecgnet {

namespace {

// Whole-sample symmetric extension (x[-k] = x[k]).
inline double mirrored(std::span<const double> x, std::ptrdiff_t k) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    if (n == 1) return x[0];
    const auto period = 2 * (n - 1);
    k %= period;
    if (k < 0) k += period;
    if (k >= n) k = period - k;
    return x[static_cast<std::size_t>(k)];
}

std::vector<double> lowpass_kernel(int factor) {
    const int half = 16 * factor;
    const double cutoff = 0.45 / factor; // cycles per input sample
    std::vector<double> h(static_cast<std::size_t>(2 * half + 1));
    double sum = 0.0;
    for (int j = -half; j <= half; ++j) {
        const double x = 2.0 * cutoff * j;
        const double sinc = j == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
        const double window = 0.54 + 0.46 * std::cos(std::numbers::pi * j / half);
        const double v = 2.0 * cutoff * sinc * window;
        h[static_cast<std::size_t>(j + half)] = v;
        sum += v;
    }
    for (auto& v : h) v /= sum;
    return h;
}

} // namespace

void PreprocessConfig::validate() const {
    if (target_fs <= 0) throw ConfigError("target_fs must be positive");
    if (!(window_seconds > 0.0)) throw ConfigError("window_seconds must be positive");
    if (decomposition_level < 1) throw ConfigError("decomposition_level must be at least 1");
    const double samples = target_fs * window_seconds;
    if (std::abs(samples - std::round(samples)) > 1e-9) throw ConfigError("target_fs * window_seconds must be whole");
    (void)biorthogonal_wavelet(wavelet);
}

std::size_t PreprocessConfig::window_samples() const {
    return static_cast<std::size_t>(std::llround(target_fs * window_seconds));
}

KeyValues PreprocessConfig::to_key_values() const {
    return {
        {"decomposition_level", std::to_string(decomposition_level)},
        {"denoise_enabled", denoise_enabled ? "true" : "false"},
        {"target_fs", std::to_string(target_fs)},
        {"threshold", std::string(to_string(threshold))},
        {"wavelet", wavelet},
        {"window_seconds", detail::format_double(window_seconds)},
    };
}

PreprocessConfig PreprocessConfig::from_key_values(const KeyValues& kv) {
    PreprocessConfig c;
    for (const auto& [key, value] : kv) {
        if (key == "target_fs") {
            const auto v = detail::parse_number<int>(value);
            if (!v) throw ConfigError("target_fs: not an integer: " + value);
            c.target_fs = *v;
        } else if (key == "window_seconds") {
            const auto v = detail::parse_number<double>(value);
            if (!v) throw ConfigError("window_seconds: not a number: " + value);
            c.window_seconds = *v;
        } else if (key == "wavelet") {
            c.wavelet = value;
        } else if (key == "decomposition_level") {
            const auto v = detail::parse_number<int>(value);
            if (!v) throw ConfigError("decomposition_level: not an integer: " + value);
            c.decomposition_level = *v;
        } else if (key == "denoise_enabled") {
            if (value != "true" && value != "false") throw ConfigError("denoise_enabled must be true or false");
            c.denoise_enabled = value == "true";
        } else if (key == "threshold") {
            c.threshold = parse_threshold_mode(value);
        } else {
            throw ConfigError("unknown preprocess key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

std::vector<double> resample(std::span<const double> signal, int from_fs, int to_fs) {
    if (from_fs <= 0 || to_fs <= 0) throw ValidationError("sampling rates must be positive");
    if (from_fs % to_fs != 0)
        throw UnsupportedRatioError("cannot resample " + std::to_string(from_fs) + " Hz to " + std::to_string(to_fs) +
                                    " Hz: only integer decimation is supported");
    const int factor = from_fs / to_fs;
    if (factor == 1) return {signal.begin(), signal.end()};

    const auto h = lowpass_kernel(factor);
    const auto half = static_cast<std::ptrdiff_t>(h.size() / 2);
    const auto out_len = signal.size() / static_cast<std::size_t>(factor);
    std::vector<double> out(out_len);
    for (std::size_t m = 0; m < out_len; ++m) {
        const auto center = static_cast<std::ptrdiff_t>(m) * factor;
        double acc = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j)
            acc += h[j] * mirrored(signal, center + static_cast<std::ptrdiff_t>(j) - half);
        out[m] = acc;
    }
    return out;
}

std::vector<std::vector<double>> fix_length(const std::vector<std::vector<double>>& signals, int fs,
                                            double window_seconds) {
    if (fs <= 0) throw ValidationError("sampling frequency must be positive");
    const auto target = static_cast<std::size_t>(std::llround(fs * window_seconds));
    std::vector<std::vector<double>> out;
    out.reserve(signals.size());
    for (const auto& lead : signals) {
        std::vector<double> fixed(target, 0.0);
        std::copy_n(lead.begin(), std::min(target, lead.size()), fixed.begin());
        out.push_back(std::move(fixed));
    }
    return out;
}

std::vector<double> wavelet_denoise(std::span<const double> signal, const PreprocessConfig& config) {
    const auto w = biorthogonal_wavelet(config.wavelet);
    if (signal.empty()) return {};
    auto coeffs = wavedec(signal, w, config.decomposition_level);
    if (config.threshold != ThresholdMode::none) {
        const double thr = universal_threshold(coeffs.details.back(), signal.size());
        for (auto& level : coeffs.details) {
            for (auto& c : level) {
                if (config.threshold == ThresholdMode::soft) c = soft_threshold(c, thr);
                else if (std::abs(c) <= thr) c = 0.0;
            }
        }
    }
    return waverec(coeffs, w);
}

Example make_example(const EcgRecord& record, const PreprocessConfig& config, const ClassMap& map) {
    config.validate();
    const auto leads = select_training_leads(record);
    std::vector<std::vector<double>> processed;
    processed.reserve(leads.n_leads());
    for (const auto& lead : leads.signals) {
        auto x = resample(lead, leads.fs, config.target_fs);
        if (config.denoise_enabled) x = wavelet_denoise(x, config);
        processed.push_back(std::move(x));
    }
    processed = fix_length(processed, config.target_fs, config.window_seconds);

    Example ex;
    ex.record_id = record.record_id;
    const auto t = config.window_samples();
    ex.features = Tensor({processed.size(), t});
    for (std::size_t l = 0; l < processed.size(); ++l)
        std::copy(processed[l].begin(), processed[l].end(), ex.features.data().begin() + static_cast<std::ptrdiff_t>(l * t));
    ex.labels = labels_from_codes(record.dx_codes, map);
    return ex;
}

} // namespace ecgnet
