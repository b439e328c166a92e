#include "ecgnet/error.hpp"
#include "ecgnet/synth.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace ecgnet;

TEST_SUITE("synth") {

TEST_CASE("60 bpm without noise tiles one beat per second") {
    SynthSpec s;
    s.bpm = 60;
    s.fs = 500;
    s.duration = 10;
    const auto out = generate(s);
    REQUIRE(out.beat_indices.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) CHECK(out.beat_indices[k] == 125 + 500 * k);
    CHECK(out.record.n_leads() == 12);
    CHECK(out.record.n_samples() == 5000);
    for (std::size_t l = 0; l < 12; ++l) CHECK(out.record.lead_names[l] == kStandardLeads[l]);
    CHECK(out.labels == testing::labels_of({"NSR"}));
    CHECK(out.record.dx_codes == std::vector<std::string>{"426783006"});
}

TEST_CASE("the R wave dominates lead II at every beat") {
    SynthSpec s;
    s.bpm = 75;
    const auto out = generate(s);
    const auto lead = out.record.lead("II");
    for (auto b : out.beat_indices) {
        CHECK(lead[b] > 1.0);
        for (std::size_t d = 5; d < 30 && b >= d; d += 5) CHECK(lead[b - d] < lead[b]);
    }
}

TEST_CASE("same seed, same record") {
    SynthSpec s;
    s.noise_sigma = 0.05;
    s.rr_jitter = 0.05;
    s.ectopic_rate = 0.2;
    s.seed = 99;
    const auto a = generate(s), b = generate(s);
    CHECK(a.record.signals == b.record.signals);
    CHECK(a.beat_indices == b.beat_indices);
    s.seed = 100;
    CHECK(generate(s).record.signals != a.record.signals);
}

TEST_CASE("noise is zero-mean white with the requested sigma") {
    SynthSpec s;
    s.duration = 30;
    s.seed = 5;
    const auto clean = generate(s);
    s.noise_sigma = 0.1;
    const auto noisy = generate(s);
    const auto a = clean.record.lead("V3"), b = noisy.record.lead("V3");
    REQUIRE(a.size() == 15000);
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += (b[i] - a[i]) / 15000.0;
    for (std::size_t i = 0; i < a.size(); ++i) sq += (b[i] - a[i] - mean) * (b[i] - a[i] - mean);
    const double sd = std::sqrt(sq / 14999.0);
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(sd - 0.1) < 0.01);
}

TEST_CASE("beat count and spacing") {
    for (double bpm : {20.0, 37.0, 59.0, 88.0, 140.0, 250.0}) {
        for (double jitter : {0.0, 0.05}) {
            SynthSpec s;
            s.bpm = bpm;
            s.duration = 12;
            s.rr_jitter = jitter;
            s.seed = 3;
            const auto out = generate(s);
            const double expected = std::floor(s.duration * bpm / 60.0);
            CAPTURE(bpm);
            CHECK(std::abs(static_cast<double>(out.beat_indices.size()) - expected) <= 1.0);
            const double period = 60.0 / bpm * s.fs;
            for (std::size_t k = 1; k < out.beat_indices.size(); ++k) {
                const double gap = static_cast<double>(out.beat_indices[k] - out.beat_indices[k - 1]);
                CHECK(out.beat_indices[k] > out.beat_indices[k - 1]);
                CHECK(std::abs(gap - period) <= 2.0 * jitter * period + 1.0);
            }
        }
    }
}

TEST_CASE("labels follow the rate") {
    SynthSpec s;
    s.bpm = 50;
    CHECK(generate(s).labels == testing::labels_of({"SB", "Brady"}));
    s.bpm = 30;
    CHECK(generate(s).labels == testing::labels_of({"SB"}));
    s.bpm = 130;
    CHECK(generate(s).labels == testing::labels_of({"STach"}));
    s.bpm = 100;
    CHECK(generate(s).labels == testing::labels_of({"NSR"}));
    s.ectopic_rate = 0.3;
    CHECK(generate(s).labels == testing::labels_of({"NSR", "PVC"}));
}

TEST_CASE("limb leads are derived from I and II") {
    SynthSpec s;
    s.noise_sigma = 0.05;
    const auto r = generate(s).record;
    const auto i = r.lead("I"), ii = r.lead("II"), iii = r.lead("III"), avr = r.lead("aVR");
    for (std::size_t t = 0; t < r.n_samples(); t += 17) {
        CHECK(iii[t] == doctest::Approx(ii[t] - i[t]));
        CHECK(avr[t] == doctest::Approx(-(i[t] + ii[t]) / 2.0));
    }
}

TEST_CASE("invalid specs are rejected") {
    SynthSpec s;
    s.bpm = 19;
    CHECK_THROWS_AS(generate(s), ValidationError);
    s = SynthSpec{};
    s.bpm = 251;
    CHECK_THROWS_AS(generate(s), ValidationError);
    s = SynthSpec{};
    s.duration = 1.5;
    CHECK_THROWS_AS(generate(s), ValidationError);
    s = SynthSpec{};
    s.ectopic_rate = 1.2;
    CHECK_THROWS_AS(generate(s), ValidationError);
    s = SynthSpec{};
    s.fs = 0;
    CHECK_THROWS_AS(generate(s), ValidationError);
}

}
