#include "ecgnet/scoring.hpp"

#include "ecgnet/error.hpp"
#include "text_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace ecgnet {

namespace {

std::set<std::string> member_set(std::string_view name) {
    std::set<std::string> out;
    for (auto part : detail::split(name, '|')) out.emplace(detail::trim(part));
    return out;
}

// Resolves a header name to a merged category by codes or abbreviations.
std::optional<std::size_t> merged_by_name(std::string_view name, const ClassMap& map) {
    const auto wanted = member_set(name);
    for (std::size_t m = 0; m < kNumMerged; ++m) {
        std::set<std::string> codes, abbrs;
        for (auto i : map.merged_members()[m]) {
            codes.insert(map.entries()[i].code);
            abbrs.insert(map.entries()[i].abbreviation);
        }
        if (wanted == codes || wanted == abbrs) return m;
    }
    return std::nullopt;
}

} // namespace

RewardMatrix RewardMatrix::from_values(const MergedMatrix& w) {
    for (std::size_t i = 0; i < kNumMerged; ++i)
        for (std::size_t j = 0; j < kNumMerged; ++j) {
            if (!std::isfinite(w[i][j]) || w[i][j] > 1.0)
                throw ValidationError("reward entries must be finite and at most 1");
            if (i == j && w[i][j] != 1.0) throw ValidationError("reward diagonal must be 1");
        }
    RewardMatrix r;
    r.w_ = w;
    return r;
}

RewardMatrix RewardMatrix::parse_csv(std::string_view text, const ClassMap& map) {
    const auto rows = detail::lines(text);
    if (rows.size() != kNumMerged + 1)
        throw ParseError("reward matrix needs a header and " + std::to_string(kNumMerged) + " rows");
    const auto header = detail::split(rows[0], ',');
    if (header.size() != kNumMerged + 1) throw ParseError("reward header needs 24 category columns", 1);
    std::array<std::size_t, kNumMerged> col_category{};
    std::set<std::size_t> seen_cols;
    for (std::size_t c = 0; c < kNumMerged; ++c) {
        const auto m = merged_by_name(header[c + 1], map);
        if (!m) throw ParseError("unknown reward category '" + std::string(header[c + 1]) + "'", 1);
        if (!seen_cols.insert(*m).second) throw ParseError("duplicate reward column " + std::string(header[c + 1]), 1);
        col_category[c] = *m;
    }
    MergedMatrix w{};
    std::set<std::size_t> seen_rows;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto cells = detail::split(rows[r], ',');
        if (cells.size() != kNumMerged + 1) throw ParseError("reward row needs 25 cells", r + 1);
        const auto row_m = merged_by_name(cells[0], map);
        if (!row_m) throw ParseError("unknown reward category '" + std::string(cells[0]) + "'", r + 1);
        if (!seen_rows.insert(*row_m).second) throw ParseError("duplicate reward row", r + 1);
        for (std::size_t c = 0; c < kNumMerged; ++c) {
            const auto v = detail::parse_number<double>(cells[c + 1]);
            if (!v) throw ParseError("non-numeric reward '" + std::string(cells[c + 1]) + "'", r + 1);
            w[*row_m][col_category[c]] = *v;
        }
    }
    return from_values(w);
}

RewardMatrix RewardMatrix::load(const std::filesystem::path& path, const ClassMap& map) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open reward matrix " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), map);
}

std::string RewardMatrix::to_csv(const ClassMap& map) const {
    std::string out;
    for (std::size_t m = 0; m < kNumMerged; ++m) out += ',' + map.merged_codes(m);
    out += '\n';
    for (std::size_t i = 0; i < kNumMerged; ++i) {
        out += map.merged_codes(i);
        for (std::size_t j = 0; j < kNumMerged; ++j) out += ',' + detail::format_double(w_[i][j]);
        out += '\n';
    }
    return out;
}

MergedLabels merge_pairs(const LabelVector& labels, const ClassMap& map) {
    MergedLabels merged{};
    for (std::size_t i = 0; i < kNumScored; ++i)
        if (labels[i]) merged[map.merged_index(i)] = 1;
    return merged;
}

Confusion confusion(std::span<const MergedLabels> predictions, std::span<const MergedLabels> truths) {
    if (predictions.size() != truths.size())
        throw ShapeError("confusion needs aligned records: " + std::to_string(predictions.size()) + " predictions, " +
                         std::to_string(truths.size()) + " truths");
    Confusion out;
    for (std::size_t r = 0; r < truths.size(); ++r) {
        const auto& p = predictions[r];
        const auto& g = truths[r];
        std::size_t n = 0;
        for (std::size_t k = 0; k < kNumMerged; ++k) n += (p[k] || g[k]) ? 1 : 0;
        if (n == 0) {
            ++out.skipped_records;
            continue;
        }
        const double share = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < kNumMerged; ++i) {
            if (!p[i]) continue;
            for (std::size_t j = 0; j < kNumMerged; ++j)
                if (g[j]) out.a[i][j] += share;
        }
    }
    return out;
}

double reward_sum(const MergedMatrix& a, const RewardMatrix& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < kNumMerged; ++i)
        for (std::size_t j = 0; j < kNumMerged; ++j) s += w.at(i, j) * a[i][j];
    return s;
}

ChallengeScore challenge_score(std::span<const LabelVector> predictions, std::span<const LabelVector> truths,
                               const RewardMatrix& w, const ClassMap& map) {
    if (predictions.size() != truths.size())
        throw ShapeError("score needs aligned records: " + std::to_string(predictions.size()) + " predictions, " +
                         std::to_string(truths.size()) + " truths");
    std::vector<MergedLabels> pred(predictions.size()), truth(truths.size()), inactive(truths.size());
    MergedLabels normal{};
    normal[map.merged_index(map.sinus_rhythm_index())] = 1;
    for (std::size_t r = 0; r < truths.size(); ++r) {
        pred[r] = merge_pairs(predictions[r], map);
        truth[r] = merge_pairs(truths[r], map);
        inactive[r] = normal;
    }
    ChallengeScore s;
    const auto observed = confusion(pred, truth);
    s.unnormalized = reward_sum(observed.a, w);
    s.skipped_records = observed.skipped_records;
    s.correct = reward_sum(confusion(truth, truth).a, w);
    s.inactive = reward_sum(confusion(inactive, truth).a, w);
    if (s.correct == s.inactive)
        throw ValidationError("degenerate dataset: the perfect and always-normal classifiers score the same");
    s.normalized = (s.unnormalized - s.inactive) / (s.correct - s.inactive);
    return s;
}

std::optional<double> auc(std::span<const double> scores, std::span<const std::uint8_t> truth) {
    if (scores.size() != truth.size()) throw ShapeError("AUC needs one score per truth label");
    const auto n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double positives = 0.0, rank_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (truth[k]) {
            positives += 1.0;
            rank_sum += rank[k];
        }
    const double negatives = static_cast<double>(n) - positives;
    if (positives == 0.0 || negatives == 0.0) return std::nullopt;
    return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

F1Result f1_score(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
    if (predicted.size() != truth.size()) throw ShapeError("F1 needs aligned label lists");
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (predicted[k] && truth[k]) tp += 1;
        else if (predicted[k]) fp += 1;
        else if (truth[k]) fn += 1;
    }
    F1Result r;
    if (tp + fp > 0) r.precision = tp / (tp + fp);
    else r.zero_denominator = true;
    if (tp + fn > 0) r.recall = tp / (tp + fn);
    else r.zero_denominator = true;
    if (2 * tp + fp + fn > 0) r.f1 = 2 * tp / (2 * tp + fp + fn);
    else r.zero_denominator = true;
    return r;
}

PerClassMetrics per_class_metrics(std::span<const PredictionSet> predictions, std::span<const LabelVector> truths,
                                  const ClassMap& map) {
    if (predictions.size() != truths.size()) throw ShapeError("per-class metrics need aligned records");
    PerClassMetrics out;
    const auto n = truths.size();
    std::vector<MergedLabels> pred(n), truth(n);
    for (std::size_t r = 0; r < n; ++r) {
        pred[r] = merge_pairs(predictions[r].labels, map);
        truth[r] = merge_pairs(truths[r], map);
    }
    for (std::size_t m = 0; m < kNumMerged; ++m) {
        std::vector<double> scores(n);
        std::vector<std::uint8_t> t(n), p(n);
        for (std::size_t r = 0; r < n; ++r) {
            double best = 0.0;
            for (auto i : map.merged_members()[m]) best = std::max(best, predictions[r].probs[i]);
            scores[r] = best;
            t[r] = truth[r][m];
            p[r] = pred[r][m];
        }
        out.names.push_back(map.merged_name(m));
        out.auc.push_back(auc(scores, t));
        out.f1.push_back(f1_score(p, t));
    }
    return out;
}

ScoreReport score_report(std::span<const PredictionSet> predictions, std::span<const LabelVector> truths,
                         const RewardMatrix& w, const ClassMap& map) {
    std::vector<LabelVector> labels;
    labels.reserve(predictions.size());
    for (const auto& p : predictions) labels.push_back(p.labels);
    return {challenge_score(labels, truths, w, map), per_class_metrics(predictions, truths, map)};
}

std::string score_report_json(const ScoreReport& report) {
    nlohmann::ordered_json j;
    j["unnormalized"] = report.score.unnormalized;
    j["inactive"] = report.score.inactive;
    j["correct"] = report.score.correct;
    j["normalized"] = report.score.normalized;
    j["skipped_records"] = report.score.skipped_records;
    auto& classes = j["per_class"] = nlohmann::ordered_json::array();
    for (std::size_t m = 0; m < report.per_class.names.size(); ++m) {
        nlohmann::ordered_json c;
        c["category"] = report.per_class.names[m];
        c["auc"] = report.per_class.auc[m] ? nlohmann::ordered_json(*report.per_class.auc[m]) : nlohmann::ordered_json();
        c["f1"] = report.per_class.f1[m].f1;
        c["precision"] = report.per_class.f1[m].precision;
        c["recall"] = report.per_class.f1[m].recall;
        c["f1_zero_denominator"] = report.per_class.f1[m].zero_denominator;
        classes.push_back(std::move(c));
    }
    return j.dump(2) + "\n";
}

std::string per_class_csv(const PerClassMetrics& metrics) {
    std::string out = "category,auc,f1,precision,recall\n";
    for (std::size_t m = 0; m < metrics.names.size(); ++m) {
        out += metrics.names[m] + ',';
        if (metrics.auc[m]) out += detail::format_fixed(*metrics.auc[m], 6);
        out += ',' + detail::format_fixed(metrics.f1[m].f1, 6) + ',' + detail::format_fixed(metrics.f1[m].precision, 6) +
               ',' + detail::format_fixed(metrics.f1[m].recall, 6) + '\n';
    }
    return out;
}

std::string per_class_plot_data(const PerClassMetrics& metrics) {
    std::string out = "# index category auc f1\n";
    for (std::size_t m = 0; m < metrics.names.size(); ++m) {
        out += std::to_string(m) + ' ' + metrics.names[m] + ' ' +
               (metrics.auc[m] ? detail::format_fixed(*metrics.auc[m], 6) : std::string("nan")) + ' ' +
               detail::format_fixed(metrics.f1[m].f1, 6) + '\n';
    }
    return out;
}

} // namespace ecgnet
