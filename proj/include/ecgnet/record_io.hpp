#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecgnet {

inline constexpr std::size_t kNumScored = 27;
inline constexpr std::size_t kNumMerged = 24;

using LabelVector = std::array<std::uint8_t, kNumScored>;
using ProbVector = std::array<double, kNumScored>;
using MergedLabels = std::array<std::uint8_t, kNumMerged>;

inline constexpr std::string_view kSinusRhythmCode = "426783006";
inline constexpr std::string_view kBradycardiaCode = "426627000";

/// The twelve standard lead names in conventional order.
inline constexpr std::array<std::string_view, 12> kStandardLeads = {
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"};

/// Leads kept for training: the four limb-derived leads are dropped.
inline constexpr std::array<std::string_view, 8> kTrainingLeads = {
    "I", "II", "V1", "V2", "V3", "V4", "V5", "V6"};

enum class Sex { unknown, male, female };

std::string_view to_string(Sex sex);

/// raw = millivolts * gain + offset
struct LeadCalibration {
    double gain = 1000.0;
    double offset = 0.0;
};

struct EcgRecord {
    std::string record_id;
    std::vector<std::string> lead_names;
    std::vector<std::vector<double>> signals; // [lead][sample], millivolts
    int fs = 0;
    std::optional<int> age;
    std::optional<Sex> sex;
    std::vector<std::string> dx_codes; // unique, in header order
    std::vector<LeadCalibration> calibration; // one per lead
    /// Header comment bodies (text after '#') in file order. Age/Sex/Dx
    /// lines are re-rendered from the fields above when writing.
    std::vector<std::string> comments;

    std::size_t n_leads() const noexcept { return signals.size(); }
    std::size_t n_samples() const noexcept { return signals.empty() ? 0 : signals.front().size(); }
    double duration_seconds() const noexcept { return fs > 0 ? double(n_samples()) / fs : 0.0; }

    std::optional<std::size_t> lead_index(std::string_view name) const;
    /// Throws ValidationError when the lead is absent.
    std::span<const double> lead(std::string_view name) const;

    /// Checks every EcgRecord invariant; throws ValidationError.
    void validate() const;
};

struct ClassEntry {
    std::string code;
    std::string abbreviation;
    int group = 0;
};

/// The scored classes, loaded from a `code,abbreviation,group` CSV.
/// Entries sharing a group number are scored as one merged category.
class ClassMap {
public:
    static ClassMap parse_csv(std::string_view text);
    static ClassMap load(const std::filesystem::path& path);
    /// The class table compiled into the library from data/class_map.csv,
    /// unless ECGNET_CLASS_MAP points at a replacement file.
    static const ClassMap& standard();

    const std::vector<ClassEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    std::optional<std::size_t> index_of_code(std::string_view code) const;
    std::optional<std::size_t> index_of_abbreviation(std::string_view abbreviation) const;
    /// Throws ValidationError when the code is not scored.
    std::size_t require_code(std::string_view code) const;

    std::size_t merged_index(std::size_t class_index) const { return merged_of_class_.at(class_index); }
    const std::vector<std::vector<std::size_t>>& merged_members() const noexcept { return merged_members_; }
    /// Abbreviations of a merged category joined with '|', e.g. "CRBBB|RBBB".
    std::string merged_name(std::size_t merged) const;
    /// Codes of a merged category joined with '|'.
    std::string merged_codes(std::size_t merged) const;

    std::size_t sinus_rhythm_index() const { return require_code(kSinusRhythmCode); }
    std::size_t bradycardia_index() const { return require_code(kBradycardiaCode); }

private:
    std::vector<ClassEntry> entries_;
    std::vector<std::size_t> merged_of_class_;
    std::vector<std::vector<std::size_t>> merged_members_;
};

/// Parses a header + int16 little-endian, lead-interleaved signal payload.
EcgRecord parse_record(std::string_view header_text, std::span<const std::byte> signal_bytes);

struct EncodedRecord {
    std::string header;
    std::vector<std::byte> signal;
};

/// Inverse of parse_record. Throws ValidationError if a sample does not fit
/// in int16 under the record's calibration.
EncodedRecord write_record(const EcgRecord& record);

/// Reads `<base>.hea` and `<base>.dat`.
EcgRecord read_record_files(const std::filesystem::path& base);
void write_record_files(const EcgRecord& record, const std::filesystem::path& base);
/// Record base paths (without extension) of every `.hea` in `dir`, sorted.
std::vector<std::filesystem::path> list_records(const std::filesystem::path& dir);

/// CSV fallback: a header row of lead names, then one row of millivolt
/// values per sample.
EcgRecord parse_csv_record(std::string_view text, int fs, std::string record_id);
std::string write_csv_record(const EcgRecord& record);

/// Bit i is set iff any code of class i appears. Unscored codes are ignored.
LabelVector labels_from_codes(std::span<const std::string> dx_codes, const ClassMap& map);
std::vector<std::string> codes_from_labels(const LabelVector& labels, const ClassMap& map);

/// Adds (or overwrites) III, aVR, aVL and aVF computed from I and II.
EcgRecord derive_limb_leads(const EcgRecord& record);

/// Keeps I, II, V1..V6 in their existing order.
EcgRecord select_training_leads(const EcgRecord& record);

} // namespace ecgnet
