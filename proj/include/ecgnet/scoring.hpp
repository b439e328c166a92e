#pragma once

#include "ecgnet/ensemble.hpp"
#include "ecgnet/record_io.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecgnet {

using MergedMatrix = std::array<std::array<double, kNumMerged>, kNumMerged>;

/// Reward for predicting merged class i when j is true. Loaded from CSV:
/// a header row of category names, then one row per category starting with
/// its name. Names are '|'-joined codes or abbreviations of the merged
/// category (e.g. "713427006|59118001" or "CRBBB|RBBB"), in any member order.
class RewardMatrix {
public:
    static RewardMatrix parse_csv(std::string_view text, const ClassMap& map = ClassMap::standard());
    static RewardMatrix load(const std::filesystem::path& path, const ClassMap& map = ClassMap::standard());
    /// Throws ValidationError unless the diagonal is 1 and no entry exceeds 1.
    static RewardMatrix from_values(const MergedMatrix& w);

    double at(std::size_t predicted, std::size_t truth) const { return w_.at(predicted).at(truth); }
    const MergedMatrix& values() const noexcept { return w_; }

    std::string to_csv(const ClassMap& map = ClassMap::standard()) const;

private:
    MergedMatrix w_{};
};

/// OR within each equivalence group.
MergedLabels merge_pairs(const LabelVector& labels, const ClassMap& map = ClassMap::standard());

struct Confusion {
    MergedMatrix a{};
    std::size_t skipped_records = 0; // empty truth and empty prediction
};

/// a[i][j] += 1 / |G u P| for every predicted i and true j of each record.
Confusion confusion(std::span<const MergedLabels> predictions, std::span<const MergedLabels> truths);

double reward_sum(const MergedMatrix& a, const RewardMatrix& w);

struct ChallengeScore {
    double unnormalized = 0.0;
    double inactive = 0.0;
    double correct = 0.0;
    double normalized = 0.0;
    std::size_t skipped_records = 0;
};

/// Throws ShapeError on misaligned inputs and ValidationError when the
/// always-normal and perfect classifiers score the same.
ChallengeScore challenge_score(std::span<const LabelVector> predictions, std::span<const LabelVector> truths,
                               const RewardMatrix& w, const ClassMap& map = ClassMap::standard());

/// Rank-statistic AUC with midranks for ties; nullopt without both classes.
std::optional<double> auc(std::span<const double> scores, std::span<const std::uint8_t> truth);

struct F1Result {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool zero_denominator = false; // some ratio had 0/0 and reports 0
};
F1Result f1_score(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);

struct PerClassMetrics {
    std::vector<std::string> names;
    std::vector<std::optional<double>> auc;
    std::vector<F1Result> f1;
};

/// Over the 24 merged categories: a merged probability is the max of its
/// members, merged labels come from merge_pairs.
PerClassMetrics per_class_metrics(std::span<const PredictionSet> predictions, std::span<const LabelVector> truths,
                                  const ClassMap& map = ClassMap::standard());

struct ScoreReport {
    ChallengeScore score;
    PerClassMetrics per_class;
};

ScoreReport score_report(std::span<const PredictionSet> predictions, std::span<const LabelVector> truths,
                         const RewardMatrix& w, const ClassMap& map = ClassMap::standard());

std::string score_report_json(const ScoreReport& report);
/// `category,auc,f1,precision,recall` rows; undefined AUC is left empty.
std::string per_class_csv(const PerClassMetrics& metrics);
/// Whitespace-separated columns for bar charts: index, name, auc, f1.
std::string per_class_plot_data(const PerClassMetrics& metrics);

} // namespace ecgnet
