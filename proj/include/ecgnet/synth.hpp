#pragma once

#include "ecgnet/record_io.hpp"

#include <cstdint>
#include <vector>

namespace ecgnet {

struct SynthSpec {
    double bpm = 60.0;
    int fs = 500;
    double duration = 10.0;     // seconds
    double noise_sigma = 0.0;   // mV, white, per lead
    double ectopic_rate = 0.0;  // fraction of beats replaced by wide early beats
    std::uint64_t seed = 0;
    double first_beat = 0.25;   // seconds to the first R-peak
    double rr_jitter = 0.0;     // uniform beat-time jitter, fraction of the period
    double amplitude = 1.0;     // global scale of every waveform

    /// Throws ValidationError.
    void validate() const;
};

struct SynthRecord {
    EcgRecord record;
    std::vector<std::size_t> beat_indices; // true R-peak samples
    LabelVector labels{};
};

/// Twelve-lead record tiled from fixed P/QRS/T Gaussian templates. Limb
/// leads III, aVR, aVL, aVF are derived from I and II after noise is added.
/// Labels: bpm < 60 sets SB (and Brady when the period is in [1.0, 1.6] s),
/// bpm > 100 sets STach, otherwise NSR; a positive ectopic rate sets PVC.
SynthRecord generate(const SynthSpec& spec, const ClassMap& map = ClassMap::standard());

} // namespace ecgnet
