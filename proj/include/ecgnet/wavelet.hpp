#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecgnet {

/// Analysis/synthesis filter bank of a Cohen-Daubechies-Feauveau
/// biorthogonal wavelet, laid out like PyWavelets (all four filters share
/// one even length).
struct WaveletFilters {
    std::string name;
    std::vector<double> dec_lo, dec_hi, rec_lo, rec_hi;
    int decomposition_moments = 0; // vanishing moments of the analysis wavelet
    int reconstruction_moments = 0; // vanishing moments of the synthesis wavelet

    std::size_t length() const noexcept { return dec_lo.size(); }
};

/// "biorN.M": the analysis wavelet has N vanishing moments and the synthesis
/// wavelet M (N spline order of the synthesis scaling function).
/// "rbioN.M" swaps the two filter pairs. Supported: N in {1,2,3}, N+M even,
/// M up to 9. Throws ConfigError for anything else.
WaveletFilters biorthogonal_wavelet(std::string_view name);

/// Single-level transform with symmetric (half-sample) extension. The
/// coefficient vectors have floor((n + L - 1) / 2) entries.
struct DwtLevel {
    std::vector<double> approximation;
    std::vector<double> detail;
};
DwtLevel dwt(std::span<const double> signal, const WaveletFilters& w);

/// Inverse of dwt; the result has 2 * len - L + 2 samples.
std::vector<double> idwt(std::span<const double> approximation, std::span<const double> detail,
                         const WaveletFilters& w);

struct WaveletDecomposition {
    std::vector<double> approximation;            // coarsest level
    std::vector<std::vector<double>> details;     // details[0] coarsest ... back() finest
    std::size_t signal_length = 0;
};

WaveletDecomposition wavedec(std::span<const double> signal, const WaveletFilters& w, int level);
std::vector<double> waverec(const WaveletDecomposition& coeffs, const WaveletFilters& w);

enum class ThresholdMode { none, soft, hard };

ThresholdMode parse_threshold_mode(std::string_view s);
std::string_view to_string(ThresholdMode mode);

/// sigma * sqrt(2 ln n), sigma = median(|finest detail|) / 0.6745.
double universal_threshold(std::span<const double> finest_detail, std::size_t signal_length);

double soft_threshold(double value, double threshold) noexcept;

} // namespace ecgnet
