#include "ecgnet/ensemble.hpp"

#include "ecgnet/error.hpp"
#include "text_util.hpp"

#include <algorithm>

namespace ecgnet {

ProbVector fuse(const ProbVector& p_short, const ProbVector& p_long, double short_weight) {
    if (!(short_weight >= 0.0 && short_weight <= 1.0)) throw ConfigError("fusion weight must lie in [0, 1]");
    ProbVector out{};
    for (std::size_t i = 0; i < kNumScored; ++i)
        out[i] = short_weight * p_short[i] + (1.0 - short_weight) * p_long[i];
    return out;
}

std::vector<double> fuse(std::span<const double> p_short, std::span<const double> p_long, double short_weight) {
    if (p_short.size() != kNumScored || p_long.size() != kNumScored)
        throw ShapeError("fusion needs two probability vectors of length 27, got " + std::to_string(p_short.size()) +
                         " and " + std::to_string(p_long.size()));
    ProbVector a{}, b{};
    std::copy(p_short.begin(), p_short.end(), a.begin());
    std::copy(p_long.begin(), p_long.end(), b.begin());
    const auto fused = fuse(a, b, short_weight);
    return {fused.begin(), fused.end()};
}

LabelVector binarize(const ProbVector& probs, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    LabelVector labels{};
    for (std::size_t i = 0; i < kNumScored; ++i) labels[i] = probs[i] >= threshold ? 1 : 0;
    return labels;
}

LabelVector snr_postprocess(LabelVector labels, const ClassMap& map) {
    if (std::none_of(labels.begin(), labels.end(), [](std::uint8_t v) { return v != 0; }))
        labels[map.sinus_rhythm_index()] = 1;
    return labels;
}

LabelVector apply_brady_veto(LabelVector labels, bool rule_brady, const ClassMap& map) {
    auto& bit = labels[map.bradycardia_index()];
    bit = final_brady(bit != 0, rule_brady) ? 1 : 0;
    return labels;
}

bool rule_brady_for_record(const EcgRecord& record, const PanTompkinsConfig& pt) {
    const auto peaks = detect_rpeaks(record.lead("I"), record.fs, pt);
    return brady_rule(peaks.rr_intervals);
}

LabelVector apply_brady_veto(LabelVector labels, const EcgRecord& record, const ClassMap& map,
                             const PanTompkinsConfig& pt) {
    return apply_brady_veto(labels, rule_brady_for_record(record, pt), map);
}

PredictionSet postprocess(std::string record_id, const ProbVector& p_short, const std::optional<ProbVector>& p_long,
                          std::optional<bool> rule_brady, const PipelineConfig& config, const ClassMap& map) {
    PredictionSet out;
    out.record_id = std::move(record_id);
    out.probs = p_long ? fuse(p_short, *p_long, config.short_weight) : p_short;
    out.labels = binarize(out.probs, config.threshold);
    if (config.brady_veto) {
        if (!rule_brady) throw ValidationError("brady veto enabled but no rule result supplied");
        out.labels = apply_brady_veto(out.labels, *rule_brady, map);
    }
    out.labels = snr_postprocess(out.labels, map);
    return out;
}

std::vector<PseudoLabel> relabel_pseudo(std::span<const PredictionSet> predictions,
                                        std::span<const std::string> original_codes, const ClassMap& map,
                                        double threshold, double review_threshold) {
    std::vector<PseudoLabel> out;
    for (const auto& pred : predictions) {
        for (std::size_t i = 0; i < kNumScored; ++i) {
            const auto& entry = map.entries()[i];
            if (!(pred.probs[i] > threshold)) continue;
            if (std::find(original_codes.begin(), original_codes.end(), entry.code) != original_codes.end()) continue;
            out.push_back({pred.record_id, i, entry.code, pred.probs[i], pred.probs[i] > review_threshold});
        }
    }
    return out;
}

std::vector<PseudoLabel> relabel_pseudo(SeResNet& model, std::span<const EcgRecord> records,
                                        const PreprocessConfig& config, std::span<const std::string> original_codes,
                                        const ClassMap& map, double threshold, double review_threshold) {
    std::vector<PredictionSet> predictions;
    predictions.reserve(records.size());
    for (const auto& record : records) {
        const auto ex = make_example(record, config, map);
        const Tensor batch = Tensor::stack(std::span(&ex.features, 1));
        PredictionSet p;
        p.record_id = record.record_id;
        p.probs = predict_probabilities(model, batch).front();
        predictions.push_back(std::move(p));
    }
    return relabel_pseudo(predictions, original_codes, map, threshold, review_threshold);
}

EcgRecord apply_pseudo_labels(EcgRecord record, std::span<const PseudoLabel> labels) {
    for (const auto& label : labels) {
        if (label.record_id != record.record_id) continue;
        if (std::find(record.dx_codes.begin(), record.dx_codes.end(), label.code) == record.dx_codes.end())
            record.dx_codes.push_back(label.code);
    }
    return record;
}

std::vector<std::string> cpsc_original_codes() { return {kCpscOriginalCodes.begin(), kCpscOriginalCodes.end()}; }

std::string write_predictions_csv(std::span<const PredictionSet> predictions, const ClassMap& map) {
    std::string out = "record_id";
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& e : map.entries()) out += ',' + e.abbreviation;
    out += '\n';
    for (const auto& p : predictions) {
        out += p.record_id;
        for (auto v : p.labels) out += v ? ",1" : ",0";
        for (double v : p.probs) out += ',' + detail::format_double(v);
        out += '\n';
    }
    return out;
}

std::vector<PredictionSet> parse_predictions_csv(std::string_view text, const ClassMap& map) {
    const auto rows = detail::lines(text);
    if (rows.empty()) throw ParseError("empty predictions file", 1);
    const auto header = detail::split(rows[0], ',');
    if (header.size() != 1 + 2 * kNumScored) throw ParseError("predictions header needs record_id + 2 x 27 columns", 1);
    for (std::size_t i = 0; i < 2 * kNumScored; ++i)
        if (detail::trim(header[1 + i]) != map.entries()[i % kNumScored].abbreviation)
            throw ParseError("predictions column " + std::to_string(i + 2) + " is '" + std::string(header[1 + i]) +
                             "', expected " + map.entries()[i % kNumScored].abbreviation, 1);
    std::vector<PredictionSet> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (detail::trim(rows[r]).empty()) continue;
        const auto cells = detail::split(rows[r], ',');
        if (cells.size() != header.size()) throw ParseError("wrong number of columns", r + 1);
        PredictionSet p;
        p.record_id = std::string(detail::trim(cells[0]));
        for (std::size_t i = 0; i < kNumScored; ++i) {
            const auto label = detail::trim(cells[1 + i]);
            if (label != "0" && label != "1") throw ParseError("labels must be 0 or 1", r + 1);
            p.labels[i] = label == "1" ? 1 : 0;
            const auto prob = detail::parse_number<double>(cells[1 + kNumScored + i]);
            if (!prob || *prob < 0.0 || *prob > 1.0) throw ParseError("probability outside [0, 1]", r + 1);
            p.probs[i] = *prob;
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace ecgnet
