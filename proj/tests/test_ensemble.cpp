#include "ecgnet/ensemble.hpp"
#include "ecgnet/error.hpp"
#include "ecgnet/synth.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace ecgnet;

namespace {

ProbVector constant(double v) {
    ProbVector p;
    p.fill(v);
    return p;
}

std::size_t count(const LabelVector& v) {
    std::size_t n = 0;
    for (auto b : v) n += b;
    return n;
}

PredictionSet prediction(std::string id, std::initializer_list<std::pair<const char*, double>> probs) {
    PredictionSet p;
    p.record_id = std::move(id);
    for (const auto& [abbr, v] : probs) p.probs[testing::class_index(abbr)] = v;
    return p;
}

} // namespace

TEST_SUITE("ensemble") {

TEST_CASE("fuse is the arithmetic mean") {
    Rng rng(1);
    ProbVector p{};
    for (auto& v : p) v = rng.uniform();
    CHECK(fuse(p, p) == p);
    CHECK(fuse(constant(0.4), constant(0.6))[3] == doctest::Approx(0.5));
    CHECK(fuse(p, p) == fuse(fuse(p, p), p));
    CHECK(fuse(constant(0.2), constant(1.0), 0.75)[0] == doctest::Approx(0.4));
    CHECK_THROWS_AS(fuse(p, p, 1.5), ConfigError);

    const std::vector<double> a(27, 0.2), b(27, 0.6), shorter(26, 0.5);
    CHECK(fuse(a, b)[26] == doctest::Approx(0.4));
    CHECK_THROWS_AS(fuse(a, shorter), ShapeError);
}

TEST_CASE("binarize uses a closed lower bound") {
    auto p = constant(0.0);
    p[0] = 0.36;
    p[1] = 0.359;
    const auto labels = binarize(p);
    CHECK(labels[0] == 1);
    CHECK(labels[1] == 0);
    CHECK(count(binarize(constant(0.9))) == 27);
    CHECK_THROWS_AS(binarize(p, 1.0), ConfigError);
    CHECK_THROWS_AS(binarize(p, 0.0), ConfigError);
}

TEST_CASE("SNR post-processing") {
    const auto& map = ClassMap::standard();
    CHECK(snr_postprocess(LabelVector{}) == testing::labels_of({"NSR"}));
    const auto af = testing::labels_of({"AF"});
    CHECK(snr_postprocess(af) == af);
    CHECK(snr_postprocess(snr_postprocess(LabelVector{})) == snr_postprocess(LabelVector{}));
    CHECK(map.entries()[map.sinus_rhythm_index()].abbreviation == "NSR");
}

TEST_CASE("brady veto") {
    const auto brady = testing::labels_of({"Brady", "SB"});
    CHECK(apply_brady_veto(brady, false) == testing::labels_of({"SB"}));
    CHECK(apply_brady_veto(brady, true) == brady);
    const auto none = testing::labels_of({"AF"});
    CHECK(apply_brady_veto(none, true) == none);
    CHECK(apply_brady_veto(none, false) == none);
}

TEST_CASE("brady veto reads lead I of a record") {
    SynthSpec slow;
    slow.bpm = 50;
    slow.seed = 3;
    const auto brady = testing::labels_of({"Brady"});
    CHECK(apply_brady_veto(brady, generate(slow).record) == brady);
    SynthSpec fast = slow;
    fast.bpm = 90;
    CHECK(apply_brady_veto(brady, generate(fast).record) == LabelVector{});
    CHECK(rule_brady_for_record(generate(slow).record));
}

TEST_CASE("postprocess order: fuse, binarize, veto, SNR") {
    auto p = constant(0.0);
    p[testing::class_index("Brady")] = 0.9;
    // Vetoed to nothing, then SNR fills in.
    auto out = postprocess("r", p, std::nullopt, false);
    CHECK(out.labels == testing::labels_of({"NSR"}));
    out = postprocess("r", p, std::nullopt, true);
    CHECK(out.labels == testing::labels_of({"Brady"}));

    auto q = constant(0.0);
    q[testing::class_index("AF")] = 0.5;
    out = postprocess("r", q, constant(0.2), true);
    CHECK(out.probs[testing::class_index("AF")] == doctest::Approx(0.35));
    CHECK(out.labels == testing::labels_of({"NSR"}));

    CHECK_THROWS_AS(postprocess("r", p, std::nullopt, std::nullopt), ValidationError);
    PipelineConfig no_veto;
    no_veto.brady_veto = false;
    CHECK(postprocess("r", p, std::nullopt, std::nullopt, no_veto).labels == testing::labels_of({"Brady"}));
}

TEST_CASE("pseudo labels") {
    const auto original = cpsc_original_codes();
    CHECK(original.size() == 9);
    const std::vector<PredictionSet> preds = {
        prediction("a", {{"SB", 0.85}, {"STach", 0.75}, {"AF", 0.9}, {"LAD", 0.97}}),
        prediction("b", {{"TAb", 0.8}, {"RBBB", 0.99}, {"CRBBB", 0.81}}),
    };
    const auto added = relabel_pseudo(preds, original);
    REQUIRE(added.size() == 3);
    CHECK(added[0].record_id == "a");
    CHECK(added[0].code == "39732003"); // LAD, class-map order
    CHECK(added[0].needs_review);
    CHECK(added[1].code == "426177001"); // SB
    CHECK_FALSE(added[1].needs_review);
    CHECK(added[2].record_id == "b");
    CHECK(added[2].code == "713427006"); // CRBBB is not among the original codes, RBBB is

    // Lowering the threshold only adds labels.
    const auto more = relabel_pseudo(preds, original, ClassMap::standard(), 0.7);
    CHECK(more.size() > added.size());
    for (const auto& a : added) {
        const bool found = std::any_of(more.begin(), more.end(), [&](const PseudoLabel& m) {
            return m.record_id == a.record_id && m.code == a.code;
        });
        CHECK(found);
    }
}

TEST_CASE("applying pseudo labels never removes codes") {
    EcgRecord rec;
    rec.record_id = "a";
    rec.dx_codes = {"164889003", "999"};
    const std::vector<PseudoLabel> labels = {{"a", 0, "426177001", 0.9, false},
                                             {"a", 0, "164889003", 0.9, false},
                                             {"other", 0, "39732003", 0.9, false}};
    const auto out = apply_pseudo_labels(rec, labels);
    CHECK(out.dx_codes == std::vector<std::string>{"164889003", "999", "426177001"});
}

TEST_CASE("model-driven relabelling runs end to end") {
    SynthSpec s;
    s.duration = 4;
    s.fs = 250;
    std::vector<EcgRecord> records = {generate(s).record};
    PreprocessConfig pc;
    pc.target_fs = 250;
    pc.window_seconds = 4;
    pc.denoise_enabled = false;
    SeResNet model(SeResNetConfig::small(1000));
    // A fresh model sits near p = 0.5, below the pseudo-label threshold.
    CHECK(relabel_pseudo(model, records, pc, cpsc_original_codes()).empty());
    model.refs().params.back()->value.fill(5.0);
    CHECK(relabel_pseudo(model, records, pc, cpsc_original_codes()).size() == 27 - 6);
}

TEST_CASE("predictions CSV round trip") {
    std::vector<PredictionSet> preds = {prediction("x1", {{"AF", 0.7}}), prediction("x2", {{"NSR", 0.123456789}})};
    preds[0].labels = binarize(preds[0].probs);
    preds[1].labels = snr_postprocess(binarize(preds[1].probs));
    const auto text = write_predictions_csv(preds);
    CHECK(text.substr(0, 20) == "record_id,IAVB,AF,AF");
    const auto back = parse_predictions_csv(text);
    REQUIRE(back.size() == 2);
    CHECK(back[1].probs == preds[1].probs);
    CHECK(back[1].labels == preds[1].labels);
    CHECK(back[0].record_id == "x1");
    CHECK_THROWS_AS(parse_predictions_csv("record_id,AF\n"), ParseError);
}

}
