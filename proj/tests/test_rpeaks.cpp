#include "ecgnet/error.hpp"
#include "ecgnet/rpeaks.hpp"
#include "ecgnet/synth.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <numeric>

using namespace ecgnet;

namespace {

SynthRecord synth(double bpm, double seconds = 10, int fs = 500, double noise = 0.0, std::uint64_t seed = 1) {
    SynthSpec s;
    s.bpm = bpm;
    s.duration = seconds;
    s.fs = fs;
    s.noise_sigma = noise;
    s.seed = seed;
    return generate(s);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Count-and-divide restatement of the bradycardia rule.
bool brute_force_brady(const std::vector<double>& rr) {
    if (rr.empty()) return false;
    int in_band = 0;
    for (double r : rr)
        if (r >= 1.0 && r <= 1.6) ++in_band;
    return 2 * in_band >= static_cast<int>(rr.size());
}

} // namespace

TEST_SUITE("rpeaks") {

TEST_CASE("60 bpm synthetic ECG") {
    const auto s = synth(60);
    const auto r = detect_rpeaks(s.record.lead("I"), 500);
    REQUIRE(r.peak_indices.size() == 10);
    REQUIRE(s.beat_indices.size() == 10);
    for (std::size_t k = 0; k < 10; ++k)
        CHECK(std::abs(static_cast<double>(r.peak_indices[k]) - static_cast<double>(s.beat_indices[k])) <= 25.0);
    CHECK(mean(r.rr_intervals) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.fs == 500);
}

TEST_CASE("120 bpm synthetic ECG") {
    const auto s = synth(120);
    const auto r = detect_rpeaks(s.record.lead("I"), 500);
    CHECK(std::abs(mean(r.rr_intervals) - 0.5) <= 0.02);
}

TEST_CASE("result invariants") {
    const auto s = synth(85, 12, 360, 0.03, 8);
    const auto r = detect_rpeaks(s.record.lead("I"), 360);
    REQUIRE(r.peak_indices.size() >= 2);
    REQUIRE(r.rr_intervals.size() == r.peak_indices.size() - 1);
    for (std::size_t k = 0; k + 1 < r.peak_indices.size(); ++k) {
        CHECK(r.peak_indices[k] < r.peak_indices[k + 1]);
        CHECK(r.rr_intervals[k] > 0.0);
        CHECK(r.rr_intervals[k] == static_cast<double>(r.peak_indices[k + 1] - r.peak_indices[k]) / 360.0);
    }
}

TEST_CASE("flat and short signals") {
    CHECK(detect_rpeaks(std::vector<double>(5000, 0.0), 500).peak_indices.empty());
    CHECK(detect_rpeaks(std::vector<double>(5000, 0.7), 500).peak_indices.empty());
    CHECK_THROWS_AS(detect_rpeaks(std::vector<double>(999, 0.0), 500), SignalTooShortError);
    CHECK_THROWS_AS(detect_rpeaks(std::vector<double>(999, 0.0), 500), ValidationError);
    CHECK_THROWS_AS(detect_rpeaks(std::vector<double>(5000, 0.0), 50), ValidationError);
    CHECK_THROWS_AS(detect_rpeaks(std::vector<double>(50000, 0.0), 2000), ValidationError);
}

TEST_CASE("peak count is invariant to amplitude scaling") {
    for (double bpm : {48.0, 75.0, 130.0}) {
        const auto s = synth(bpm, 10, 500, 0.02, 3);
        const auto lead = s.record.lead("I");
        const auto base = detect_rpeaks(lead, 500).peak_indices.size();
        for (double scale : {0.5, 1.7, 3.0, 5.0}) {
            std::vector<double> x(lead.begin(), lead.end());
            for (auto& v : x) v *= scale;
            CAPTURE(bpm);
            CAPTURE(scale);
            CHECK(detect_rpeaks(x, 500).peak_indices.size() == base);
        }
    }
}

TEST_CASE("pipeline stages are exposed") {
    const auto s = synth(70);
    const auto stages = pan_tompkins_stages(s.record.lead("I"), 500);
    CHECK(stages.bandpassed.size() == 5000);
    CHECK(stages.integrated.size() == 5000);
    for (double v : stages.integrated) CHECK(v >= 0.0);
}

TEST_CASE("rr_intervals") {
    const std::vector<std::size_t> peaks = {100, 600, 1350};
    CHECK(rr_intervals(peaks, 500) == std::vector<double>{1.0, 1.5});
    CHECK(rr_intervals(std::vector<std::size_t>{5}, 500).empty());
}

TEST_CASE("brady_rule worked examples") {
    CHECK(brady_rule(std::vector<double>(8, 1.2)));
    CHECK_FALSE(brady_rule(std::vector<double>(10, 0.8)));
    std::vector<double> mixed(4, 1.2);
    mixed.insert(mixed.end(), 6, 0.8);
    CHECK_FALSE(brady_rule(mixed));
    CHECK_FALSE(brady_rule(std::vector<double>(5, 2.0)));
    CHECK_FALSE(brady_rule(std::vector<double>{}));
}

TEST_CASE("brady_rule band edges are closed and the ratio test inclusive") {
    CHECK(brady_rule(std::vector<double>{1.0}));
    CHECK(brady_rule(std::vector<double>{1.6}));
    CHECK_FALSE(brady_rule(std::vector<double>{0.999999}));
    CHECK_FALSE(brady_rule(std::vector<double>{1.600001}));
    CHECK(brady_rule(std::vector<double>{1.2, 0.5}));
    CHECK_FALSE(brady_rule(std::vector<double>{1.2, 0.5, 0.5}));
    CHECK_THROWS_AS(brady_rule(std::vector<double>{1.2, -0.1}), ValidationError);
}

TEST_CASE("brady_rule agrees with a brute-force count") {
    Rng rng(77);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> rr(rng.below(51));
        for (auto& v : rr) v = rng.bernoulli(0.1) ? (rng.bernoulli(0.5) ? 1.0 : 1.6) : rng.uniform(0.0, 2.5);
        CHECK(brady_rule(rr) == brute_force_brady(rr));
    }
}

TEST_CASE("final_brady is a veto") {
    static_assert(!final_brady(true, false));
    static_assert(final_brady(true, true));
    static_assert(!final_brady(false, false));
    static_assert(!final_brady(false, true));
    for (bool a : {false, true})
        for (bool b : {false, true}) CHECK(final_brady(a, b) == (a && b));
}

TEST_CASE("a 50 bpm record satisfies the rule") {
    const auto s = synth(50, 10, 500, 0.02, 2);
    const auto r = detect_rpeaks(s.record.lead("I"), 500);
    CHECK(brady_rule(r.rr_intervals));
    CHECK(mean(r.rr_intervals) == doctest::Approx(1.2).epsilon(0.02));
}

}
