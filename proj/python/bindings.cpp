#include "ecgnet/ensemble.hpp"
#include "ecgnet/error.hpp"
#include "ecgnet/preprocess.hpp"
#include "ecgnet/rpeaks.hpp"
#include "ecgnet/scoring.hpp"
#include "ecgnet/sign_loss.hpp"
#include "ecgnet/synth.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ecgnet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    std::vector<std::size_t> shape(a.shape(), a.shape() + a.ndim());
    return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    Array out(t.shape());
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

std::span<const double> as_span(const Array& a) {
    if (a.ndim() != 1) throw ShapeError("expected a 1-D array");
    return {a.data(), static_cast<std::size_t>(a.size())};
}

Array signals_array(const EcgRecord& rec) {
    Array out({rec.n_leads(), rec.n_samples()});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t l = 0; l < rec.n_leads(); ++l)
        for (std::size_t t = 0; t < rec.n_samples(); ++t) m(l, t) = rec.signals[l][t];
    return out;
}

py::dict record_dict(const EcgRecord& rec) {
    py::dict d;
    d["record_id"] = rec.record_id;
    d["fs"] = rec.fs;
    d["lead_names"] = rec.lead_names;
    d["signals"] = signals_array(rec);
    d["dx_codes"] = rec.dx_codes;
    d["age"] = rec.age;
    return d;
}

template <std::size_t N, class T>
std::array<T, N> fixed(const std::vector<T>& v, const char* what) {
    if (v.size() != N) throw ShapeError(std::string(what) + ": expected " + std::to_string(N) + " entries");
    std::array<T, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

} // namespace

PYBIND11_MODULE(_ecgnet, m) {
    m.doc() = "Bindings for the ecgnet C++ core";

    auto base = py::register_exception<Error>(m, "EcgnetError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());

    m.attr("NUM_CLASSES") = kNumScored;
    m.attr("DEFAULT_THRESHOLD") = kDefaultThreshold;

    m.def("class_abbreviations", [] {
        std::vector<std::string> out;
        for (const auto& e : ClassMap::standard().entries()) out.push_back(e.abbreviation);
        return out;
    });
    m.def("class_codes", [] {
        std::vector<std::string> out;
        for (const auto& e : ClassMap::standard().entries()) out.push_back(e.code);
        return out;
    });

    m.def(
        "sign_loss",
        [](const Array& probs, const Array& targets) {
            const auto r = sign_loss({to_tensor(probs), to_tensor(targets)});
            return py::make_tuple(r.total, to_array(r.per_label));
        },
        py::arg("probs"), py::arg("targets"), "Batch-mean sign loss and the per-label terms, for [B x L] inputs.");
    m.def(
        "sign_loss_grad",
        [](const Array& probs, const Array& targets) { return to_array(sign_loss_grad({to_tensor(probs), to_tensor(targets)})); },
        py::arg("probs"), py::arg("targets"));

    m.def(
        "detect_rpeaks",
        [](const Array& lead, int fs) {
            const auto r = detect_rpeaks(as_span(lead), fs);
            return py::make_tuple(r.peak_indices, r.rr_intervals);
        },
        py::arg("lead"), py::arg("fs"), "R-peak sample indices and RR intervals in seconds.");
    m.def("brady_rule", [](const std::vector<double>& rr) { return brady_rule(rr); }, py::arg("rr_intervals"));
    m.def("final_brady", &final_brady, py::arg("ensemble_brady"), py::arg("rule_brady"));

    m.def(
        "wavelet_denoise",
        [](const Array& x, const std::string& wavelet, int level, const std::string& threshold) {
            PreprocessConfig c;
            c.wavelet = wavelet;
            c.decomposition_level = level;
            c.threshold = parse_threshold_mode(threshold);
            return wavelet_denoise(as_span(x), c);
        },
        py::arg("signal"), py::arg("wavelet") = "bior2.6", py::arg("level") = 8, py::arg("threshold") = "soft");

    m.def(
        "synth",
        [](double bpm, int fs, double duration, double noise, double ectopic, double jitter, std::uint64_t seed) {
            SynthSpec s;
            s.bpm = bpm;
            s.fs = fs;
            s.duration = duration;
            s.noise_sigma = noise;
            s.ectopic_rate = ectopic;
            s.rr_jitter = jitter;
            s.seed = seed;
            const auto out = generate(s);
            auto d = record_dict(out.record);
            d["beat_indices"] = out.beat_indices;
            return d;
        },
        py::arg("bpm") = 60.0, py::arg("fs") = 500, py::arg("duration") = 10.0, py::arg("noise") = 0.0,
        py::arg("ectopic") = 0.0, py::arg("jitter") = 0.0, py::arg("seed") = 0);

    m.def("read_record", [](const std::string& base) { return record_dict(read_record_files(base)); }, py::arg("path"),
          "Reads <path>.hea and <path>.dat.");

    m.def(
        "postprocess",
        [](const std::vector<double>& p_short, std::optional<std::vector<double>> p_long, std::optional<bool> rule_brady,
           double threshold) {
            PipelineConfig pc;
            pc.threshold = threshold;
            pc.brady_veto = rule_brady.has_value();
            std::optional<ProbVector> lp;
            if (p_long) lp = fixed<kNumScored>(*p_long, "p_long");
            const auto out = postprocess("", fixed<kNumScored>(p_short, "p_short"), lp, rule_brady, pc);
            return py::make_tuple(std::vector<double>(out.probs.begin(), out.probs.end()),
                                  std::vector<int>(out.labels.begin(), out.labels.end()));
        },
        py::arg("p_short"), py::arg("p_long") = py::none(), py::arg("rule_brady") = py::none(),
        py::arg("threshold") = kDefaultThreshold,
        "Fuse, binarize, veto (only when rule_brady is given) and fill in sinus rhythm.");

    m.def(
        "challenge_score",
        [](const std::vector<std::vector<int>>& predictions, const std::vector<std::vector<int>>& truths,
           std::optional<std::string> weights_csv) {
            const auto convert = [](const std::vector<std::vector<int>>& rows) {
                std::vector<LabelVector> out;
                for (const auto& r : rows) {
                    const auto a = fixed<kNumScored>(r, "label row");
                    LabelVector v{};
                    for (std::size_t i = 0; i < kNumScored; ++i) v[i] = a[i] != 0;
                    out.push_back(v);
                }
                return out;
            };
            RewardMatrix w;
            if (weights_csv) {
                w = RewardMatrix::load(*weights_csv);
            } else {
                MergedMatrix id{};
                for (std::size_t i = 0; i < kNumMerged; ++i) id[i][i] = 1.0;
                w = RewardMatrix::from_values(id);
            }
            const auto s = challenge_score(convert(predictions), convert(truths), w);
            py::dict d;
            d["unnormalized"] = s.unnormalized;
            d["inactive"] = s.inactive;
            d["correct"] = s.correct;
            d["normalized"] = s.normalized;
            d["skipped_records"] = s.skipped_records;
            return d;
        },
        py::arg("predictions"), py::arg("truths"), py::arg("weights_csv") = py::none(),
        "Normalized challenge score of 0/1 label rows; identity reward matrix unless a CSV is given.");
}
