#include "ecgnet/record_io.hpp"

#include "ecgnet/error.hpp"
#include "embedded_data.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace ecgnet {

using detail::format_double;
using detail::parse_number;
using detail::split;
using detail::split_ws;
using detail::trim;

std::string_view to_string(Sex sex) {
    switch (sex) {
    case Sex::male: return "Male";
    case Sex::female: return "Female";
    case Sex::unknown: break;
    }
    return "Unknown";
}

namespace {

std::optional<Sex> parse_sex(std::string_view s) {
    std::string lower(trim(s));
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "male" || lower == "m") return Sex::male;
    if (lower == "female" || lower == "f") return Sex::female;
    if (lower == "unknown" || lower.empty()) return Sex::unknown;
    return std::nullopt;
}

// Splits "Key: value" comment bodies. Returns nullopt for free-form comments.
std::optional<std::pair<std::string_view, std::string_view>> comment_key(std::string_view body) {
    body = trim(body);
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    return std::pair{trim(body.substr(0, colon)), trim(body.substr(colon + 1))};
}

std::string read_file(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::optional<std::size_t> EcgRecord::lead_index(std::string_view name) const {
    for (std::size_t i = 0; i < lead_names.size(); ++i)
        if (lead_names[i] == name) return i;
    return std::nullopt;
}

std::span<const double> EcgRecord::lead(std::string_view name) const {
    const auto idx = lead_index(name);
    if (!idx) throw ValidationError("record " + record_id + " has no lead " + std::string(name));
    return signals[*idx];
}

void EcgRecord::validate() const {
    if (fs <= 0) throw ValidationError("sampling frequency must be positive, got " + std::to_string(fs));
    if (signals.empty()) throw ValidationError("record " + record_id + " has no leads");
    if (lead_names.size() != signals.size())
        throw ValidationError("lead name count " + std::to_string(lead_names.size()) + " != signal rows " +
                              std::to_string(signals.size()));
    if (!calibration.empty() && calibration.size() != signals.size())
        throw ValidationError("calibration count does not match lead count");
    const auto n = signals.front().size();
    if (n == 0) throw ValidationError("record " + record_id + " has zero samples");
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < signals.size(); ++i) {
        if (!seen.insert(lead_names[i]).second) throw ValidationError("duplicate lead name " + lead_names[i]);
        if (signals[i].size() != n) throw ValidationError("lead " + lead_names[i] + " has a different length");
        for (double v : signals[i])
            if (!std::isfinite(v)) throw ValidationError("non-finite sample in lead " + lead_names[i]);
    }
    for (const auto& c : calibration)
        if (!(c.gain > 0.0) || !std::isfinite(c.offset)) throw ValidationError("lead gain must be positive");
}

// ---------------------------------------------------------------- ClassMap

ClassMap ClassMap::parse_csv(std::string_view text) {
    ClassMap map;
    const auto rows = detail::lines(text);
    std::size_t line_no = 0;
    for (auto row : rows) {
        ++line_no;
        row = trim(row);
        if (row.empty() || row.front() == '#') continue;
        const auto cells = split(row, ',');
        if (cells.size() != 3) throw ParseError("class map row needs code,abbreviation,group", line_no);
        if (trim(cells[0]) == "code") continue; // header
        const auto group = parse_number<int>(cells[2]);
        if (!group) throw ParseError("bad group number '" + std::string(cells[2]) + "'", line_no);
        map.entries_.push_back({std::string(trim(cells[0])), std::string(trim(cells[1])), *group});
    }

    if (map.entries_.size() != kNumScored)
        throw ValidationError("class map must have " + std::to_string(kNumScored) + " entries, got " +
                              std::to_string(map.entries_.size()));
    std::set<std::string> codes, abbreviations;
    for (const auto& e : map.entries_) {
        if (!codes.insert(e.code).second) throw ValidationError("duplicate class code " + e.code);
        if (!abbreviations.insert(e.abbreviation).second)
            throw ValidationError("duplicate class abbreviation " + e.abbreviation);
    }

    // Merged categories are numbered by first appearance of their group.
    std::map<int, std::size_t> merged_of_group;
    for (std::size_t i = 0; i < map.entries_.size(); ++i) {
        const auto [it, inserted] = merged_of_group.try_emplace(map.entries_[i].group, map.merged_members_.size());
        if (inserted) map.merged_members_.emplace_back();
        map.merged_members_[it->second].push_back(i);
        map.merged_of_class_.push_back(it->second);
    }
    std::size_t pairs = 0;
    for (const auto& members : map.merged_members_) {
        if (members.size() == 2) ++pairs;
        else if (members.size() != 1) throw ValidationError("equivalence groups must have one or two members");
    }
    if (pairs != kNumScored - kNumMerged || map.merged_members_.size() != kNumMerged)
        throw ValidationError("class map must define exactly 3 equivalence pairs (24 merged categories)");
    return map;
}

ClassMap ClassMap::load(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

const ClassMap& ClassMap::standard() {
    static const ClassMap map = [] {
        if (const char* override_path = std::getenv("ECGNET_CLASS_MAP"); override_path && *override_path)
            return load(override_path);
        return parse_csv(detail::kEmbeddedClassMap);
    }();
    return map;
}

std::optional<std::size_t> ClassMap::index_of_code(std::string_view code) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].code == code) return i;
    return std::nullopt;
}

std::optional<std::size_t> ClassMap::index_of_abbreviation(std::string_view abbreviation) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].abbreviation == abbreviation) return i;
    return std::nullopt;
}

std::size_t ClassMap::require_code(std::string_view code) const {
    const auto idx = index_of_code(code);
    if (!idx) throw ValidationError("class map has no entry for code " + std::string(code));
    return *idx;
}

std::string ClassMap::merged_name(std::size_t merged) const {
    std::string out;
    for (auto i : merged_members_.at(merged)) {
        if (!out.empty()) out += '|';
        out += entries_[i].abbreviation;
    }
    return out;
}

std::string ClassMap::merged_codes(std::size_t merged) const {
    std::string out;
    for (auto i : merged_members_.at(merged)) {
        if (!out.empty()) out += '|';
        out += entries_[i].code;
    }
    return out;
}

// ------------------------------------------------------------ header codec

EcgRecord parse_record(std::string_view header_text, std::span<const std::byte> signal_bytes) {
    const auto rows = detail::lines(header_text);
    EcgRecord rec;
    std::size_t declared_leads = 0;
    std::size_t declared_samples = 0;
    bool have_first = false;

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto line_no = i + 1;
        const auto row = rows[i];
        const auto trimmed = trim(row);
        if (trimmed.empty()) continue;
        if (trimmed.front() == '#') {
            const auto body = trimmed.substr(1);
            rec.comments.emplace_back(body);
            if (const auto kv = comment_key(body)) {
                const auto [key, value] = *kv;
                if (key == "Dx") {
                    for (auto code : split(value, ',')) {
                        code = trim(code);
                        if (code.empty()) continue;
                        if (std::find(rec.dx_codes.begin(), rec.dx_codes.end(), code) == rec.dx_codes.end())
                            rec.dx_codes.emplace_back(code);
                    }
                } else if (key == "Age") {
                    if (const auto age = parse_number<int>(value)) rec.age = *age;
                    else if (value != "NaN" && value != "unknown" && !value.empty())
                        throw ParseError("bad age '" + std::string(value) + "'", line_no);
                } else if (key == "Sex") {
                    const auto sex = parse_sex(value);
                    if (!sex) throw ParseError("bad sex '" + std::string(value) + "'", line_no);
                    rec.sex = *sex;
                }
            }
            continue;
        }

        const auto fields = split_ws(trimmed);
        if (!have_first) {
            if (fields.size() != 4) throw ParseError("expected 'record_id n_leads fs n_samples'", line_no);
            const auto n_leads = parse_number<long long>(fields[1]);
            const auto fs = parse_number<long long>(fields[2]);
            const auto n_samples = parse_number<long long>(fields[3]);
            if (!n_leads || !fs || !n_samples) throw ParseError("non-integer field in record line", line_no);
            if (*fs <= 0) throw ValidationError("sampling frequency must be positive, got " + std::to_string(*fs));
            if (*n_leads <= 0 || *n_samples <= 0)
                throw ParseError("lead and sample counts must be positive", line_no);
            if (*fs > std::numeric_limits<int>::max()) throw ParseError("sampling frequency out of range", line_no);
            rec.record_id = std::string(fields[0]);
            rec.fs = static_cast<int>(*fs);
            declared_leads = static_cast<std::size_t>(*n_leads);
            declared_samples = static_cast<std::size_t>(*n_samples);
            have_first = true;
            continue;
        }
        if (rec.lead_names.size() == declared_leads)
            throw ParseError("more lead lines than the declared " + std::to_string(declared_leads), line_no);
        if (fields.size() != 3) throw ParseError("expected 'gain offset lead_name'", line_no);
        const auto gain = parse_number<double>(fields[0]);
        const auto offset = parse_number<double>(fields[1]);
        if (!gain || !offset) throw ParseError("non-numeric gain or offset", line_no);
        if (!(*gain > 0.0) || !std::isfinite(*gain) || !std::isfinite(*offset))
            throw ParseError("gain must be positive and finite", line_no);
        rec.calibration.push_back({*gain, *offset});
        rec.lead_names.emplace_back(fields[2]);
    }
    if (!have_first) throw ParseError("empty header", 1);
    if (rec.lead_names.size() != declared_leads)
        throw ParseError("header declares " + std::to_string(declared_leads) + " leads but lists " +
                         std::to_string(rec.lead_names.size()), rows.size());

    const auto expected = declared_leads * declared_samples * 2;
    if (signal_bytes.size() != expected)
        throw TruncationError("record " + rec.record_id + ": expected " + std::to_string(expected) +
                              " signal bytes, got " + std::to_string(signal_bytes.size()));

    rec.signals.assign(declared_leads, std::vector<double>(declared_samples));
    for (std::size_t s = 0; s < declared_samples; ++s) {
        for (std::size_t l = 0; l < declared_leads; ++l) {
            const auto pos = 2 * (s * declared_leads + l);
            const auto lo = std::to_integer<std::uint16_t>(signal_bytes[pos]);
            const auto hi = std::to_integer<std::uint16_t>(signal_bytes[pos + 1]);
            const auto raw = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
            const auto& cal = rec.calibration[l];
            rec.signals[l][s] = (static_cast<double>(raw) - cal.offset) / cal.gain;
        }
    }
    rec.validate();
    return rec;
}

EncodedRecord write_record(const EcgRecord& record) {
    record.validate();
    const auto n_leads = record.n_leads();
    const auto n_samples = record.n_samples();
    std::vector<LeadCalibration> cal = record.calibration;
    if (cal.empty()) cal.assign(n_leads, LeadCalibration{});

    EncodedRecord out;
    std::string& h = out.header;
    h += record.record_id + ' ' + std::to_string(n_leads) + ' ' + std::to_string(record.fs) + ' ' +
         std::to_string(n_samples) + '\n';
    for (std::size_t l = 0; l < n_leads; ++l)
        h += format_double(cal[l].gain) + ' ' + format_double(cal[l].offset) + ' ' + record.lead_names[l] + '\n';

    const auto age_line = [&] { return std::string("# Age: ") + (record.age ? std::to_string(*record.age) : "NaN"); };
    const auto sex_line = [&] { return std::string("# Sex: ") + std::string(to_string(record.sex.value_or(Sex::unknown))); };
    const auto dx_line = [&] {
        std::string s = "# Dx: ";
        for (std::size_t i = 0; i < record.dx_codes.size(); ++i) s += (i ? "," : "") + record.dx_codes[i];
        return s;
    };
    bool wrote_age = false, wrote_sex = false, wrote_dx = false;
    for (const auto& body : record.comments) {
        const auto kv = comment_key(body);
        if (kv && kv->first == "Age") {
            if (!wrote_age) h += age_line() + '\n';
            wrote_age = true;
        } else if (kv && kv->first == "Sex") {
            if (!wrote_sex) h += sex_line() + '\n';
            wrote_sex = true;
        } else if (kv && kv->first == "Dx") {
            if (!wrote_dx) h += dx_line() + '\n';
            wrote_dx = true;
        } else {
            h += '#' + body + '\n';
        }
    }
    if (!wrote_age && record.age) h += age_line() + '\n';
    if (!wrote_sex && record.sex) h += sex_line() + '\n';
    if (!wrote_dx && !record.dx_codes.empty()) h += dx_line() + '\n';

    out.signal.resize(n_leads * n_samples * 2);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t l = 0; l < n_leads; ++l) {
            const double raw = std::round(record.signals[l][s] * cal[l].gain + cal[l].offset);
            if (raw < std::numeric_limits<std::int16_t>::min() || raw > std::numeric_limits<std::int16_t>::max())
                throw ValidationError("sample " + std::to_string(s) + " of lead " + record.lead_names[l] +
                                      " does not fit in int16");
            const auto bits = static_cast<std::uint16_t>(static_cast<std::int16_t>(raw));
            const auto pos = 2 * (s * n_leads + l);
            out.signal[pos] = static_cast<std::byte>(bits & 0xFF);
            out.signal[pos + 1] = static_cast<std::byte>(bits >> 8);
        }
    }
    return out;
}

EcgRecord read_record_files(const std::filesystem::path& base) {
    auto hea = base;
    hea += ".hea";
    auto dat = base;
    dat += ".dat";
    const auto header = read_file(hea);
    const auto payload = read_file(dat, std::ios::in | std::ios::binary);
    return parse_record(header, std::as_bytes(std::span(payload.data(), payload.size())));
}

void write_record_files(const EcgRecord& record, const std::filesystem::path& base) {
    const auto encoded = write_record(record);
    auto hea = base;
    hea += ".hea";
    auto dat = base;
    dat += ".dat";
    std::ofstream h(hea, std::ios::binary);
    std::ofstream d(dat, std::ios::binary);
    if (!h || !d) throw ValidationError("cannot write record files at " + base.string());
    h << encoded.header;
    d.write(reinterpret_cast<const char*>(encoded.signal.data()), static_cast<std::streamsize>(encoded.signal.size()));
}

std::vector<std::filesystem::path> list_records(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ValidationError(dir.string() + " is not a directory");
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".hea")
            out.push_back(entry.path().parent_path() / entry.path().stem());
    std::sort(out.begin(), out.end());
    return out;
}

// -------------------------------------------------------------- CSV codec

EcgRecord parse_csv_record(std::string_view text, int fs, std::string record_id) {
    const auto rows = detail::lines(text);
    if (rows.empty()) throw ParseError("empty CSV record", 1);
    EcgRecord rec;
    rec.record_id = std::move(record_id);
    rec.fs = fs;
    for (auto name : split(rows[0], ',')) rec.lead_names.emplace_back(trim(name));
    rec.signals.assign(rec.lead_names.size(), {});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (trim(rows[i]).empty()) continue;
        const auto cells = split(rows[i], ',');
        if (cells.size() != rec.lead_names.size())
            throw ParseError("expected " + std::to_string(rec.lead_names.size()) + " columns", i + 1);
        for (std::size_t l = 0; l < cells.size(); ++l) {
            const auto v = parse_number<double>(cells[l]);
            if (!v) throw ParseError("non-numeric sample '" + std::string(cells[l]) + "'", i + 1);
            rec.signals[l].push_back(*v);
        }
    }
    rec.calibration.assign(rec.lead_names.size(), LeadCalibration{});
    rec.validate();
    return rec;
}

std::string write_csv_record(const EcgRecord& record) {
    record.validate();
    std::string out;
    for (std::size_t l = 0; l < record.n_leads(); ++l) out += (l ? "," : "") + record.lead_names[l];
    out += '\n';
    for (std::size_t s = 0; s < record.n_samples(); ++s) {
        for (std::size_t l = 0; l < record.n_leads(); ++l) out += (l ? "," : "") + format_double(record.signals[l][s]);
        out += '\n';
    }
    return out;
}

// ------------------------------------------------------------- label maps

LabelVector labels_from_codes(std::span<const std::string> dx_codes, const ClassMap& map) {
    LabelVector labels{};
    for (const auto& code : dx_codes)
        if (const auto idx = map.index_of_code(code)) labels[*idx] = 1;
    return labels;
}

std::vector<std::string> codes_from_labels(const LabelVector& labels, const ClassMap& map) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kNumScored; ++i)
        if (labels[i]) out.push_back(map.entries()[i].code);
    return out;
}

// ----------------------------------------------------------- lead algebra

EcgRecord derive_limb_leads(const EcgRecord& record) {
    const auto i_idx = record.lead_index("I");
    const auto ii_idx = record.lead_index("II");
    if (!i_idx || !ii_idx) throw ValidationError("deriving limb leads needs leads I and II");

    const auto& lead_i = record.signals[*i_idx];
    const auto& lead_ii = record.signals[*ii_idx];
    const auto n = lead_i.size();
    std::array<std::vector<double>, 4> derived;
    for (auto& d : derived) d.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        derived[0][s] = lead_ii[s] - lead_i[s];
        derived[1][s] = -(lead_i[s] + lead_ii[s]) / 2.0;
        derived[2][s] = lead_i[s] - lead_ii[s] / 2.0;
        derived[3][s] = lead_ii[s] - lead_i[s] / 2.0;
    }

    EcgRecord out = record;
    const LeadCalibration cal = record.calibration.empty() ? LeadCalibration{} : record.calibration[*i_idx];
    // Missing leads go right after their predecessor in the limb sequence,
    // which yields the standard order for an I, II, V1..V6 record.
    for (std::size_t k = 0; k < 4; ++k) {
        const auto name = kStandardLeads[2 + k];
        if (const auto idx = out.lead_index(name)) {
            out.signals[*idx] = std::move(derived[k]);
            continue;
        }
        const auto prev = *out.lead_index(kStandardLeads[1 + k]);
        const auto pos = static_cast<std::ptrdiff_t>(prev + 1);
        out.lead_names.insert(out.lead_names.begin() + pos, std::string(name));
        out.signals.insert(out.signals.begin() + pos, std::move(derived[k]));
        if (!out.calibration.empty()) out.calibration.insert(out.calibration.begin() + pos, cal);
    }
    return out;
}

EcgRecord select_training_leads(const EcgRecord& record) {
    for (auto name : kTrainingLeads)
        if (!record.lead_index(name))
            throw ValidationError("record " + record.record_id + " is missing training lead " + std::string(name));
    EcgRecord out = record;
    out.lead_names.clear();
    out.signals.clear();
    out.calibration.clear();
    for (std::size_t l = 0; l < record.n_leads(); ++l) {
        const auto& name = record.lead_names[l];
        if (std::find(kTrainingLeads.begin(), kTrainingLeads.end(), name) == kTrainingLeads.end()) continue;
        out.lead_names.push_back(name);
        out.signals.push_back(record.signals[l]);
        if (!record.calibration.empty()) out.calibration.push_back(record.calibration[l]);
    }
    return out;
}

} // namespace ecgnet
