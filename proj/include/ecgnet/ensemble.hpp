#pragma once

#include "ecgnet/model.hpp"
#include "ecgnet/preprocess.hpp"
#include "ecgnet/record_io.hpp"
#include "ecgnet/rpeaks.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecgnet {

inline constexpr double kDefaultThreshold = 0.36;
inline constexpr double kPseudoLabelThreshold = 0.8;
inline constexpr double kPseudoLabelReviewThreshold = 0.95;

/// Diagnosis codes of the original nine-class CPSC 2018 annotation.
inline constexpr std::array<std::string_view, 9> kCpscOriginalCodes = {
    "426783006", // normal sinus rhythm
    "164889003", // atrial fibrillation
    "270492004", // first-degree AV block
    "164909002", // left bundle branch block
    "59118001",  // right bundle branch block
    "284470004", // premature atrial contraction
    "164884008", // ventricular ectopics
    "429622005", // ST depression
    "164931005", // ST elevation
};

struct PredictionSet {
    std::string record_id;
    ProbVector probs{};
    LabelVector labels{};
};

/// Weighted mean of the short- and long-window probabilities
/// (short_weight = 0.5 is the plain mean).
ProbVector fuse(const ProbVector& p_short, const ProbVector& p_long, double short_weight = 0.5);
/// Length-checked overload for untyped inputs; throws ShapeError.
std::vector<double> fuse(std::span<const double> p_short, std::span<const double> p_long, double short_weight = 0.5);

/// label = 1 iff prob >= threshold.
LabelVector binarize(const ProbVector& probs, double threshold = kDefaultThreshold);

/// Sets the sinus-rhythm bit when no label is positive.
LabelVector snr_postprocess(LabelVector labels, const ClassMap& map = ClassMap::standard());

/// Bradycardia bit := final_brady(bit, rule_brady).
LabelVector apply_brady_veto(LabelVector labels, bool rule_brady, const ClassMap& map = ClassMap::standard());
/// Runs the rule on lead I of `record` (R-peaks -> RR intervals -> brady_rule).
LabelVector apply_brady_veto(LabelVector labels, const EcgRecord& record, const ClassMap& map = ClassMap::standard(),
                             const PanTompkinsConfig& pt = {});
bool rule_brady_for_record(const EcgRecord& record, const PanTompkinsConfig& pt = {});

struct PipelineConfig {
    double threshold = kDefaultThreshold;
    double short_weight = 0.5;
    bool brady_veto = true;
    PanTompkinsConfig pan_tompkins;
};

/// fuse -> binarize -> brady veto -> SNR post-processing. `p_long` may be
/// absent for a single-model run; `rule_brady` is required when the veto is on.
PredictionSet postprocess(std::string record_id, const ProbVector& p_short, const std::optional<ProbVector>& p_long,
                          std::optional<bool> rule_brady, const PipelineConfig& config = {},
                          const ClassMap& map = ClassMap::standard());

struct PseudoLabel {
    std::string record_id;
    std::size_t class_index = 0;
    std::string code;
    double prob = 0.0;
    bool needs_review = false; // prob above the manual-review threshold
};

/// A class becomes a pseudo label iff prob > threshold, none of the class's
/// codes belong to `original_codes`, and the class is scored (all classes in
/// `probs` are). Never removes labels.
std::vector<PseudoLabel> relabel_pseudo(std::span<const PredictionSet> predictions,
                                        std::span<const std::string> original_codes,
                                        const ClassMap& map = ClassMap::standard(),
                                        double threshold = kPseudoLabelThreshold,
                                        double review_threshold = kPseudoLabelReviewThreshold);

/// Runs the model over the records first (preprocessing per `config`).
std::vector<PseudoLabel> relabel_pseudo(SeResNet& model, std::span<const EcgRecord> records,
                                        const PreprocessConfig& config, std::span<const std::string> original_codes,
                                        const ClassMap& map = ClassMap::standard(),
                                        double threshold = kPseudoLabelThreshold,
                                        double review_threshold = kPseudoLabelReviewThreshold);

/// Adds the record's pseudo-label codes to its dx_codes.
EcgRecord apply_pseudo_labels(EcgRecord record, std::span<const PseudoLabel> labels);

std::vector<std::string> cpsc_original_codes();

/// Predictions CSV: header `record_id`, the 27 abbreviations (labels), the
/// 27 abbreviations again (probabilities); one row per record.
std::string write_predictions_csv(std::span<const PredictionSet> predictions, const ClassMap& map = ClassMap::standard());
std::vector<PredictionSet> parse_predictions_csv(std::string_view text, const ClassMap& map = ClassMap::standard());

} // namespace ecgnet
