#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ecgnet {

/// Pan-Tompkins constants. Defaults follow the 1985 formulation.
struct PanTompkinsConfig {
    double low_hz = 5.0;
    double high_hz = 15.0;
    double integration_ms = 150.0;
    double refractory_ms = 200.0;
    double learning_seconds = 2.0;
    double signal_rate = 0.125;       // SPKI running-estimate weight
    double noise_rate = 0.125;        // NPKI running-estimate weight
    double threshold_ratio = 0.25;    // THRESHOLD1 = NPKI + ratio * (SPKI - NPKI)
    double searchback_rr_factor = 1.66;
    double searchback_threshold_factor = 0.5; // THRESHOLD2 = factor * THRESHOLD1
    double locate_ms = 100.0;         // R-wave search half-window around an integrator peak
};

struct RPeakResult {
    std::vector<std::size_t> peak_indices;
    std::vector<double> rr_intervals; // seconds
    int fs = 0;
};

/// R-peaks of one lead. Needs fs in [100, 1000] and at least two seconds
/// of signal (SignalTooShortError otherwise). A flat signal has no peaks.
RPeakResult detect_rpeaks(std::span<const double> lead, int fs, const PanTompkinsConfig& config = {});

/// Intermediate Pan-Tompkins stages, exposed for inspection and tests.
struct PanTompkinsStages {
    std::vector<double> bandpassed;
    std::vector<double> integrated;
};
PanTompkinsStages pan_tompkins_stages(std::span<const double> lead, int fs, const PanTompkinsConfig& config = {});

/// RR intervals in seconds from ascending peak indices.
std::vector<double> rr_intervals(std::span<const std::size_t> peaks, int fs);

/// Bradycardia rule: at least half of the RR intervals lie in [1.0, 1.6] s.
/// An empty list is not bradycardia. Negative intervals throw ValidationError.
bool brady_rule(std::span<const double> rr_intervals_s);

/// The rule vetoes positive ensemble predictions; it never creates one.
constexpr bool final_brady(bool ensemble_brady, bool rule_brady) noexcept {
    if (!rule_brady) return false;
    return ensemble_brady;
}

} // namespace ecgnet
