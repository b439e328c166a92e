#include "ecgnet/wavelet.hpp"

#include "ecgnet/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>

namespace ecgnet {

namespace {

using Poly = std::vector<double>; // coefficient k multiplies z^k

Poly multiply(const Poly& a, const Poly& b) {
    Poly out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

Poly power(const Poly& p, int n) {
    Poly out{1.0};
    for (int i = 0; i < n; ++i) out = multiply(out, p);
    return out;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Synthesis scaling filter: sqrt(2) * ((1 + z) / 2)^order.
Poly spline_lowpass(int order) { return power({0.5, 0.5}, order); }

// Analysis scaling filter dual to the order-`spline` spline:
// ((1+z)/2)^dual * sum_{k<l} C(l-1+k, k) (-(1-z)^2 / 4z)^k, shifted to a polynomial.
Poly dual_lowpass(int spline, int dual) {
    const int l = (spline + dual) / 2;
    Poly sum(static_cast<std::size_t>(2 * (l - 1) + 1), 0.0);
    for (int k = 0; k < l; ++k) {
        Poly term = power({1.0, -1.0}, 2 * k);
        const double scale = binomial(l - 1 + k, k) * ((k % 2) ? -1.0 : 1.0) / std::pow(4.0, k);
        // multiply by z^(l-1-k)
        for (std::size_t i = 0; i < term.size(); ++i) sum[i + static_cast<std::size_t>(l - 1 - k)] += scale * term[i];
    }
    return multiply(power({0.5, 0.5}, dual), sum);
}

std::vector<double> place(const Poly& taps, std::size_t length, double center) {
    std::vector<double> out(length, 0.0);
    const double first = center - (static_cast<double>(taps.size()) - 1.0) / 2.0;
    const auto start = static_cast<std::size_t>(std::lround(first));
    for (std::size_t i = 0; i < taps.size(); ++i) out[start + i] = taps[i] * std::sqrt(2.0);
    return out;
}

// Index into a half-sample symmetric extension of a length-n signal.
inline std::size_t reflect(std::ptrdiff_t k, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    k %= period;
    if (k < 0) k += period;
    return k < static_cast<std::ptrdiff_t>(n) ? static_cast<std::size_t>(k) : static_cast<std::size_t>(period - 1 - k);
}

} // namespace

WaveletFilters biorthogonal_wavelet(std::string_view name) {
    bool reverse = false;
    std::string_view orders;
    if (name.starts_with("bior")) orders = name.substr(4);
    else if (name.starts_with("rbio")) {
        orders = name.substr(4);
        reverse = true;
    } else {
        throw ConfigError("unknown wavelet '" + std::string(name) + "' (expected biorN.M or rbioN.M)");
    }
    const auto dot = orders.find('.');
    const auto spline = dot == std::string_view::npos ? std::nullopt : detail::parse_number<int>(orders.substr(0, dot));
    const auto dual = dot == std::string_view::npos ? std::nullopt : detail::parse_number<int>(orders.substr(dot + 1));
    if (!spline || !dual || *spline < 1 || *spline > 3 || *dual < 1 || *dual > 9 || (*spline + *dual) % 2 != 0)
        throw ConfigError("unsupported biorthogonal wavelet '" + std::string(name) + "'");

    const Poly rec = spline_lowpass(*spline);
    const Poly dec = dual_lowpass(*spline, *dual);
    std::size_t length = std::max(rec.size(), dec.size());
    length += length % 2;

    WaveletFilters w;
    w.name = std::string(name);
    if (*spline % 2 == 0) {
        w.dec_lo = place(dec, length, static_cast<double>(length) / 2.0);
        w.rec_lo = place(rec, length, static_cast<double>(length) / 2.0 - 1.0);
    } else {
        w.dec_lo = place(dec, length, (static_cast<double>(length) - 1.0) / 2.0);
        w.rec_lo = place(rec, length, (static_cast<double>(length) - 1.0) / 2.0);
    }
    w.dec_hi.resize(length);
    w.rec_hi.resize(length);
    for (std::size_t k = 0; k < length; ++k) {
        w.dec_hi[k] = (k % 2 ? 1.0 : -1.0) * w.rec_lo[k];
        w.rec_hi[k] = (k % 2 ? -1.0 : 1.0) * w.dec_lo[k];
    }
    w.decomposition_moments = *spline;
    w.reconstruction_moments = *dual;

    if (reverse) {
        std::reverse(w.dec_lo.begin(), w.dec_lo.end());
        std::reverse(w.dec_hi.begin(), w.dec_hi.end());
        std::reverse(w.rec_lo.begin(), w.rec_lo.end());
        std::reverse(w.rec_hi.begin(), w.rec_hi.end());
        std::swap(w.dec_lo, w.rec_lo);
        std::swap(w.dec_hi, w.rec_hi);
        std::swap(w.decomposition_moments, w.reconstruction_moments);
    }
    return w;
}

DwtLevel dwt(std::span<const double> signal, const WaveletFilters& w) {
    const auto n = signal.size();
    if (n == 0) throw ValidationError("dwt of an empty signal");
    const auto taps = w.length();
    const auto out_len = (n + taps - 1) / 2;
    DwtLevel out;
    out.approximation.resize(out_len);
    out.detail.resize(out_len);
    for (std::size_t o = 0; o < out_len; ++o) {
        const auto i = static_cast<std::ptrdiff_t>(2 * o + 1);
        double a = 0.0, d = 0.0;
        for (std::size_t j = 0; j < taps; ++j) {
            const double x = signal[reflect(i - static_cast<std::ptrdiff_t>(j), n)];
            a += w.dec_lo[j] * x;
            d += w.dec_hi[j] * x;
        }
        out.approximation[o] = a;
        out.detail[o] = d;
    }
    return out;
}

std::vector<double> idwt(std::span<const double> approximation, std::span<const double> detail,
                         const WaveletFilters& w) {
    if (approximation.size() != detail.size()) throw ShapeError("idwt coefficient lengths differ");
    const auto m = static_cast<std::ptrdiff_t>(approximation.size());
    const auto taps = static_cast<std::ptrdiff_t>(w.length());
    const auto n = 2 * m - taps + 2;
    if (n <= 0) throw ShapeError("too few coefficients for the filter length");
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    // out[t] = sum_j rec[j] * up[t + taps - 2 - j], up[2k] = c[k], odd slots zero.
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        double s = 0.0;
        const auto base = t + taps - 2;
        for (std::ptrdiff_t j = base % 2; j < taps; j += 2) {
            const auto k = (base - j) / 2;
            if (k < 0 || k >= m) continue;
            s += w.rec_lo[static_cast<std::size_t>(j)] * approximation[static_cast<std::size_t>(k)] +
                 w.rec_hi[static_cast<std::size_t>(j)] * detail[static_cast<std::size_t>(k)];
        }
        out[static_cast<std::size_t>(t)] = s;
    }
    return out;
}

WaveletDecomposition wavedec(std::span<const double> signal, const WaveletFilters& w, int level) {
    if (level < 1) throw ConfigError("decomposition level must be at least 1");
    WaveletDecomposition out;
    out.signal_length = signal.size();
    std::vector<double> current(signal.begin(), signal.end());
    for (int l = 0; l < level; ++l) {
        auto step = dwt(current, w);
        out.details.push_back(std::move(step.detail));
        current = std::move(step.approximation);
    }
    std::reverse(out.details.begin(), out.details.end());
    out.approximation = std::move(current);
    return out;
}

std::vector<double> waverec(const WaveletDecomposition& coeffs, const WaveletFilters& w) {
    std::vector<double> current = coeffs.approximation;
    for (std::size_t l = 0; l < coeffs.details.size(); ++l) {
        const auto& d = coeffs.details[l];
        // Each reconstruction may overshoot the next level's length by one.
        if (current.size() == d.size() + 1) current.pop_back();
        current = idwt(current, d, w);
    }
    if (current.size() < coeffs.signal_length) throw ShapeError("reconstruction shorter than the signal");
    current.resize(coeffs.signal_length);
    return current;
}

ThresholdMode parse_threshold_mode(std::string_view s) {
    if (s == "none") return ThresholdMode::none;
    if (s == "soft") return ThresholdMode::soft;
    if (s == "hard") return ThresholdMode::hard;
    throw ConfigError("unknown threshold mode '" + std::string(s) + "' (none, soft, hard)");
}

std::string_view to_string(ThresholdMode mode) {
    switch (mode) {
    case ThresholdMode::none: return "none";
    case ThresholdMode::soft: return "soft";
    case ThresholdMode::hard: return "hard";
    }
    return "none";
}

double universal_threshold(std::span<const double> finest_detail, std::size_t signal_length) {
    if (finest_detail.empty() || signal_length < 2) return 0.0;
    std::vector<double> mags(finest_detail.size());
    std::transform(finest_detail.begin(), finest_detail.end(), mags.begin(), [](double v) { return std::abs(v); });
    const auto mid = mags.size() / 2;
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid), mags.end());
    double median = mags[mid];
    if (mags.size() % 2 == 0) {
        const double lower = *std::max_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    const double sigma = median / 0.6745;
    return sigma * std::sqrt(2.0 * std::log(static_cast<double>(signal_length)));
}

double soft_threshold(double value, double threshold) noexcept {
    const double mag = std::abs(value) - threshold;
    return mag > 0.0 ? std::copysign(mag, value) : 0.0;
}

} // namespace ecgnet
