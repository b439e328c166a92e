#pragma once

#include "ecgnet/kv.hpp"
#include "ecgnet/record_io.hpp"
#include "ecgnet/tensor.hpp"
#include "ecgnet/wavelet.hpp"

#include <span>
#include <string>
#include <vector>

namespace ecgnet {

struct PreprocessConfig {
    int target_fs = 500;
    double window_seconds = 30.0;
    std::string wavelet = "bior2.6";
    int decomposition_level = 8;
    bool denoise_enabled = true;
    ThresholdMode threshold = ThresholdMode::soft;

    /// Throws ConfigError on an invalid field.
    void validate() const;
    std::size_t window_samples() const;

    KeyValues to_key_values() const;
    /// Missing keys keep their defaults; unknown keys are rejected.
    static PreprocessConfig from_key_values(const KeyValues& kv);
};

/// Integer-factor decimation behind a windowed-sinc anti-alias low-pass
/// (cutoff 0.45 * to_fs). Output length is floor(n * to_fs / from_fs).
std::vector<double> resample(std::span<const double> signal, int from_fs, int to_fs);

/// Keeps the first fs * window_seconds samples of each lead, right-padding
/// short leads with zeros.
std::vector<std::vector<double>> fix_length(const std::vector<std::vector<double>>& signals, int fs,
                                            double window_seconds);

/// Decompose, threshold detail coefficients per config.threshold, reconstruct.
std::vector<double> wavelet_denoise(std::span<const double> signal, const PreprocessConfig& config);

struct Example {
    std::string record_id;
    Tensor features; // [8 x target_fs * window_seconds]
    LabelVector labels{};
};

/// Training leads -> resample -> denoise (optional) -> fix_length.
Example make_example(const EcgRecord& record, const PreprocessConfig& config,
                     const ClassMap& map = ClassMap::standard());

} // namespace ecgnet
