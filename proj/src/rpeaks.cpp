#include "ecgnet/rpeaks.hpp"

#include "ecgnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>

namespace ecgnet {

namespace {

struct Biquad {
    double b0, b1, b2, a1, a2;

    // RBJ cookbook sections with Q = 1/sqrt(2), i.e. second-order Butterworth.
    static Biquad lowpass(double cutoff, double fs) {
        const double w0 = 2.0 * std::numbers::pi * cutoff / fs;
        const double alpha = std::sin(w0) / std::numbers::sqrt2;
        const double c = std::cos(w0);
        const double a0 = 1.0 + alpha;
        return {(1.0 - c) / 2.0 / a0, (1.0 - c) / a0, (1.0 - c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
    }
    static Biquad highpass(double cutoff, double fs) {
        const double w0 = 2.0 * std::numbers::pi * cutoff / fs;
        const double alpha = std::sin(w0) / std::numbers::sqrt2;
        const double c = std::cos(w0);
        const double a0 = 1.0 + alpha;
        return {(1.0 + c) / 2.0 / a0, -(1.0 + c) / a0, (1.0 + c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
    }

    void run(std::vector<double>& x) const {
        double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
        for (auto& v : x) {
            const double y = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
            x2 = x1;
            x1 = v;
            y2 = y1;
            y1 = y;
            v = y;
        }
    }
};

// Zero-phase filtering with odd-symmetric padding at both ends.
std::vector<double> filtfilt(const Biquad& f, std::span<const double> x, std::size_t pad) {
    const auto n = x.size();
    pad = std::min(pad, n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
    f.run(ext);
    std::reverse(ext.begin(), ext.end());
    f.run(ext);
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

void check_inputs(std::span<const double> lead, int fs) {
    if (fs < 100 || fs > 1000)
        throw ValidationError("R-peak detection needs fs in [100, 1000] Hz, got " + std::to_string(fs));
    if (lead.size() < static_cast<std::size_t>(2 * fs))
        throw SignalTooShortError("R-peak detection needs at least 2 s of signal, got " + std::to_string(lead.size()) +
                                  " samples at " + std::to_string(fs) + " Hz");
}

} // namespace

PanTompkinsStages pan_tompkins_stages(std::span<const double> lead, int fs, const PanTompkinsConfig& config) {
    check_inputs(lead, fs);
    const auto n = lead.size();
    const double mean = std::accumulate(lead.begin(), lead.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centered(n);
    std::transform(lead.begin(), lead.end(), centered.begin(), [mean](double v) { return v - mean; });

    PanTompkinsStages st;
    const auto pad = static_cast<std::size_t>(fs);
    st.bandpassed = filtfilt(Biquad::highpass(config.low_hz, fs), centered, pad);
    st.bandpassed = filtfilt(Biquad::lowpass(config.high_hz, fs), st.bandpassed, pad);

    // Five-point derivative, then squaring.
    const auto& bp = st.bandpassed;
    const auto at = [&](std::ptrdiff_t i) { return bp[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1))]; };
    std::vector<double> energy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::ptrdiff_t>(i);
        const double d = (2.0 * at(k + 1) + at(k + 2) - at(k - 2) - 2.0 * at(k - 1)) * fs / 8.0;
        energy[i] = d * d;
    }

    // Centered moving-window integration.
    const auto half = static_cast<std::ptrdiff_t>(std::lround(config.integration_ms * 1e-3 * fs / 2.0));
    const auto width = static_cast<double>(2 * half + 1);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + energy[i];
    st.integrated.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(i) - half);
        const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n), static_cast<std::ptrdiff_t>(i) + half + 1);
        st.integrated[i] = (prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)]) / width;
    }
    return st;
}

RPeakResult detect_rpeaks(std::span<const double> lead, int fs, const PanTompkinsConfig& config) {
    check_inputs(lead, fs);
    RPeakResult result;
    result.fs = fs;
    const auto [lo_it, hi_it] = std::minmax_element(lead.begin(), lead.end());
    if (*lo_it == *hi_it) return result;

    const auto st = pan_tompkins_stages(lead, fs, config);
    const auto& mwi = st.integrated;
    const auto n = mwi.size();

    struct Candidate {
        std::size_t index;
        double value;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1]) candidates.push_back({i, mwi[i]});

    const auto learn = std::min(n, static_cast<std::size_t>(config.learning_seconds * fs));
    const double learn_max = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn));
    const double learn_mean = std::accumulate(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn), 0.0) /
                              static_cast<double>(learn);
    double spki = learn_max / 3.0;
    double npki = learn_mean / 2.0;
    if (!(spki > 0.0)) return result;

    const auto refractory = static_cast<std::size_t>(std::lround(config.refractory_ms * 1e-3 * fs));
    std::vector<Candidate> qrs;
    std::vector<Candidate> noise; // below-threshold candidates since the last QRS
    std::vector<double> recent_rr;

    const auto threshold1 = [&] { return npki + config.threshold_ratio * (spki - npki); };
    const auto accept = [&](Candidate c, double rate) {
        if (!qrs.empty()) {
            recent_rr.push_back(static_cast<double>(c.index - qrs.back().index));
            if (recent_rr.size() > 8) recent_rr.erase(recent_rr.begin());
        }
        spki = rate * c.value + (1.0 - rate) * spki;
        qrs.push_back(c);
        std::erase_if(noise, [&](const Candidate& k) { return k.index <= c.index; });
    };
    // Missed-beat recovery: if the gap up to `until` is too long, promote
    // the strongest noise peak above THRESHOLD2.
    const auto search_back = [&](std::size_t until) {
        if (qrs.empty() || recent_rr.empty()) return;
        const double rr_avg = std::accumulate(recent_rr.begin(), recent_rr.end(), 0.0) / static_cast<double>(recent_rr.size());
        if (static_cast<double>(until - qrs.back().index) <= config.searchback_rr_factor * rr_avg) return;
        const double threshold2 = config.searchback_threshold_factor * threshold1();
        std::optional<Candidate> best;
        for (const auto& k : noise)
            if (k.index > qrs.back().index + refractory && k.index + refractory < until && k.value > threshold2 &&
                (!best || k.value > best->value))
                best = k;
        if (best) accept(*best, 0.25);
    };

    for (const auto& c : candidates) {
        if (!qrs.empty() && c.index - qrs.back().index < refractory) {
            if (c.value > qrs.back().value) qrs.back() = c; // same complex, larger hump
            continue;
        }
        search_back(c.index);
        if (!qrs.empty() && c.index - qrs.back().index < refractory) continue;
        if (c.value > threshold1()) {
            accept(c, config.signal_rate);
        } else {
            npki = config.noise_rate * c.value + (1.0 - config.noise_rate) * npki;
            noise.push_back(c);
        }
    }
    search_back(n);

    // Place each beat at the largest band-passed deflection near its integrator peak.
    const auto& bp = st.bandpassed;
    const auto reach = static_cast<std::size_t>(std::lround(config.locate_ms * 1e-3 * fs));
    std::vector<std::pair<std::size_t, double>> located;
    for (const auto& c : qrs) {
        const auto lo = c.index > reach ? c.index - reach : 0;
        const auto hi = std::min(n - 1, c.index + reach);
        std::size_t best = lo;
        for (std::size_t i = lo; i <= hi; ++i)
            if (std::abs(bp[i]) > std::abs(bp[best])) best = i;
        const double mag = std::abs(bp[best]);
        if (!located.empty() && best <= located.back().first + refractory) {
            if (mag > located.back().second) located.back() = {best, mag};
            continue;
        }
        located.emplace_back(best, mag);
    }
    for (const auto& [idx, mag] : located) result.peak_indices.push_back(idx);
    result.rr_intervals = rr_intervals(result.peak_indices, fs);
    return result;
}

std::vector<double> rr_intervals(std::span<const std::size_t> peaks, int fs) {
    std::vector<double> rr;
    for (std::size_t k = 1; k < peaks.size(); ++k)
        rr.push_back(static_cast<double>(peaks[k] - peaks[k - 1]) / fs);
    return rr;
}

bool brady_rule(std::span<const double> rr_intervals_s) {
    std::size_t brady_beats = 0;
    for (double rr : rr_intervals_s) {
        if (rr < 0.0 || std::isnan(rr)) throw ValidationError("RR intervals must be non-negative");
        if (rr >= 1.0 && rr <= 1.6) ++brady_beats;
    }
    if (rr_intervals_s.empty()) return false;
    return static_cast<double>(brady_beats) / static_cast<double>(rr_intervals_s.size()) >= 0.5;
}

} // namespace ecgnet
