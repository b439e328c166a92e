#include "ecgnet/synth.hpp"

#include "ecgnet/error.hpp"
#include "ecgnet/rng.hpp"

#include <cmath>

namespace ecgnet {

namespace {

struct Bump {
    double offset; // seconds relative to the R peak
    double width;  // Gaussian sigma, seconds
};

// P, Q, R, S, T
constexpr std::array<Bump, 5> kBumps = {{
    {-0.16, 0.025},
    {-0.025, 0.010},
    {0.0, 0.012},
    {0.030, 0.012},
    {0.28, 0.050},
}};

// Millivolt amplitudes per independent lead, same order as kBumps.
constexpr std::array<std::array<double, 5>, 8> kAmplitudes = {{
    {0.10, -0.08, 1.00, -0.15, 0.25}, // I
    {0.15, -0.10, 1.20, -0.20, 0.30}, // II
    {0.08, -0.05, 0.40, -1.00, -0.10}, // V1
    {0.10, -0.05, 0.60, -1.20, 0.35}, // V2
    {0.10, -0.10, 0.90, -0.80, 0.40}, // V3
    {0.10, -0.10, 1.30, -0.40, 0.40}, // V4
    {0.10, -0.10, 1.20, -0.20, 0.30}, // V5
    {0.10, -0.08, 1.00, -0.15, 0.25}, // V6
}};

constexpr std::array<std::string_view, 8> kGeneratedLeads = {"I", "II", "V1", "V2", "V3", "V4", "V5", "V6"};

void add_bump(std::vector<double>& x, double centre, double sigma, double amplitude, int fs) {
    const double c = centre * fs;
    const double s = sigma * fs;
    const auto lo = static_cast<long>(std::floor(c - 6.0 * s));
    const auto hi = static_cast<long>(std::ceil(c + 6.0 * s));
    for (long t = std::max(lo, 0L); t <= hi && t < static_cast<long>(x.size()); ++t) {
        const double z = (static_cast<double>(t) - c) / s;
        x[static_cast<std::size_t>(t)] += amplitude * std::exp(-0.5 * z * z);
    }
}

} // namespace

void SynthSpec::validate() const {
    if (!(bpm >= 20.0 && bpm <= 250.0)) throw ValidationError("bpm must lie in [20, 250]");
    if (fs <= 0) throw ValidationError("fs must be positive");
    if (!(duration >= 2.0)) throw ValidationError("duration must cover at least two seconds");
    if (!(ectopic_rate >= 0.0 && ectopic_rate <= 1.0)) throw ValidationError("ectopic_rate must lie in [0, 1]");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise_sigma must be >= 0");
    if (!(rr_jitter >= 0.0 && rr_jitter < 0.5)) throw ValidationError("rr_jitter must lie in [0, 0.5)");
    if (!(first_beat >= 0.0 && first_beat < duration)) throw ValidationError("first_beat must fall inside the record");
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) throw ValidationError("amplitude must be positive");
}

SynthRecord generate(const SynthSpec& spec, const ClassMap& map) {
    spec.validate();
    const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.fs));
    const double period = 60.0 / spec.bpm;

    Rng beat_rng(mix_seed(spec.seed, 1));
    Rng noise_rng(mix_seed(spec.seed, 2));

    SynthRecord out;
    std::vector<std::vector<double>> leads(kGeneratedLeads.size(), std::vector<double>(n, 0.0));

    for (std::size_t k = 0;; ++k) {
        double r = spec.first_beat + static_cast<double>(k) * period;
        if (spec.rr_jitter > 0.0) r += beat_rng.uniform(-spec.rr_jitter, spec.rr_jitter) * period;
        const bool ectopic = spec.ectopic_rate > 0.0 && k > 0 && beat_rng.bernoulli(spec.ectopic_rate);
        if (ectopic) r -= 0.25 * period;
        const auto index = static_cast<long>(std::llround(r * spec.fs));
        if (index >= static_cast<long>(n)) break;
        if (index < 0) continue;
        out.beat_indices.push_back(static_cast<std::size_t>(index));
        const double centre = static_cast<double>(index) / spec.fs;
        for (std::size_t l = 0; l < leads.size(); ++l) {
            for (std::size_t b = 0; b < kBumps.size(); ++b) {
                double amp = kAmplitudes[l][b] * spec.amplitude;
                double width = kBumps[b].width;
                double offset = kBumps[b].offset;
                if (ectopic) {
                    if (b == 0) continue; // no P wave
                    if (b >= 1 && b <= 3) {
                        width *= 3.0;
                        offset *= 3.0;
                        amp *= 1.3;
                    }
                    if (b == 4) amp = -amp;
                }
                add_bump(leads[l], centre + offset, width, amp, spec.fs);
            }
        }
    }

    if (spec.noise_sigma > 0.0)
        for (auto& lead : leads)
            for (auto& v : lead) v += spec.noise_sigma * noise_rng.normal();

    EcgRecord rec;
    rec.record_id = "synth" + std::to_string(spec.seed);
    rec.fs = spec.fs;
    for (std::size_t l = 0; l < leads.size(); ++l) {
        rec.lead_names.emplace_back(kGeneratedLeads[l]);
        rec.signals.push_back(std::move(leads[l]));
    }
    rec.calibration.assign(rec.signals.size(), LeadCalibration{});
    rec = derive_limb_leads(rec);

    LabelVector labels{};
    auto set = [&](std::string_view abbreviation) {
        const auto i = map.index_of_abbreviation(abbreviation);
        if (!i) throw ValidationError("class map lacks " + std::string(abbreviation));
        labels[*i] = 1;
    };
    if (spec.bpm < 60.0) {
        set("SB");
        if (period >= 1.0 && period <= 1.6) labels[map.bradycardia_index()] = 1;
    } else if (spec.bpm > 100.0) {
        set("STach");
    } else {
        labels[map.sinus_rhythm_index()] = 1;
    }
    if (spec.ectopic_rate > 0.0) set("PVC");
    rec.dx_codes = codes_from_labels(labels, map);
    rec.validate();

    out.record = std::move(rec);
    out.labels = labels;
    return out;
}

} // namespace ecgnet
