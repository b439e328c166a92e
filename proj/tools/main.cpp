#include "ecgnet/checkpoint.hpp"
#include "ecgnet/ensemble.hpp"
#include "ecgnet/error.hpp"
#include "ecgnet/kv.hpp"
#include "ecgnet/preprocess.hpp"
#include "ecgnet/rpeaks.hpp"
#include "ecgnet/scoring.hpp"
#include "ecgnet/synth.hpp"
#include "ecgnet/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef ECGNET_VERSION
#define ECGNET_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace ecgnet;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

std::string shortest(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

void require_dir(const fs::path& p, const char* what) {
    if (!fs::is_directory(p)) throw ValidationError(std::string(what) + " is not a directory: " + p.string());
}

void require_file(const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) throw ValidationError(std::string(what) + " does not exist: " + p.string());
}

// Options every subcommand shares.
struct Common {
    std::string config;
    std::string manifest;
    std::uint64_t seed = 0;
};

struct Preprocess {
    int target_fs = 500;
    double window_seconds = 30.0;
    int window = 0; // 10 or 30; overrides window_seconds
    std::string wavelet = "bior2.6";
    int decomposition_level = 8;
    bool denoise_enabled = true;
    std::string threshold_mode = "soft";

    PreprocessConfig build() const {
        PreprocessConfig c;
        c.target_fs = target_fs;
        c.window_seconds = window ? window : window_seconds;
        c.wavelet = wavelet;
        c.decomposition_level = decomposition_level;
        c.denoise_enabled = denoise_enabled;
        c.threshold = parse_threshold_mode(threshold_mode);
        c.validate();
        return c;
    }
};

void add_preprocess_flags(CLI::App* sub, Preprocess& p) {
    sub->add_option("--target_fs", p.target_fs, "Resampling target in Hz");
    auto* ws = sub->add_option("--window_seconds", p.window_seconds, "Window length in seconds");
    sub->add_option("--window", p.window, "Standard window, 10 or 30 seconds")->check(CLI::IsMember({10, 30}))->excludes(ws);
    sub->add_option("--wavelet", p.wavelet, "Biorthogonal wavelet name");
    sub->add_option("--decomposition_level", p.decomposition_level, "Wavelet decomposition depth");
    sub->add_option("--denoise_enabled", p.denoise_enabled, "Wavelet denoising on or off");
    sub->add_option("--threshold_mode", p.threshold_mode, "Detail threshold: soft, hard or none")
        ->check(CLI::IsMember({"soft", "hard", "none"}));
}

std::vector<EcgRecord> load_records(const fs::path& dir) {
    require_dir(dir, "record directory");
    std::vector<EcgRecord> out;
    for (const auto& base : list_records(dir)) {
        try {
            out.push_back(read_record_files(base));
        } catch (const Error& e) {
            throw ValidationError(base.string() + ": " + e.what());
        }
    }
    if (out.empty()) throw ValidationError("no records (*.hea) in " + dir.string());
    return out;
}

// Config-file values become command-line arguments placed before the user's,
// so with last-wins options the user's flags take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
    std::string config_path;
    std::size_t sub_pos = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (sub_pos == args.size() && app.get_subcommand_no_throw(args[i])) sub_pos = i;
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty() || sub_pos == args.size()) return args;
    CLI::App* sub = app.get_subcommand(args[sub_pos]);
    const auto kv = parse_key_values(read_text(config_path));
    std::vector<std::string> injected;
    for (const auto& [key, value] : kv) {
        if (key == "config") throw ConfigError("config files cannot nest: " + config_path);
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (!opt || opt->get_positional()) throw ConfigError(config_path + ": unknown key for " + sub->get_name() + ": " + key);
        injected.push_back("--" + key + "=" + value);
    }
    std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1);
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, args.end());
    return out;
}

// Every option of the subcommand with its effective value, sorted by name.
nlohmann::ordered_json config_echo(const CLI::App& sub) {
    std::map<std::string, std::string> kv;
    for (const CLI::Option* opt : sub.get_options()) {
        std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config" || name == "manifest") continue;
        std::string value;
        if (opt->count() > 0) {
            const auto results = opt->reduced_results();
            for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
        } else {
            value = opt->get_default_str();
        }
        kv[name] = value;
    }
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : kv) j[k] = v;
    return j;
}

void write_manifest(const fs::path& path, const CLI::App& sub, const Common& common) {
    nlohmann::ordered_json j;
    j["tool"] = "ecgnet";
    j["version"] = ECGNET_VERSION;
    j["command"] = sub.get_name();
    j["seed"] = common.seed;
    j["config"] = config_echo(sub);
    write_text(path, j.dump(2) + "\n");
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
    std::string out;
    std::string prefix = "rec";
    std::size_t count = 1;
    double bpm = 60.0;
    double bpm_max = 0.0;
    int fs = 500;
    double duration = 10.0;
    double noise = 0.0;
    double ectopic = 0.0;
    double jitter = 0.0;
    double amplitude = 1.0;
};

void run_synth(const SynthArgs& a, const Common& c) {
    if (a.count == 0) throw ValidationError("--count must be positive");
    if (a.bpm_max != 0.0 && a.bpm_max < a.bpm) throw ValidationError("--bpm-max must be at least --bpm");
    fs::create_directories(a.out);
    Rng rate_rng(mix_seed(c.seed, 17));
    for (std::size_t i = 0; i < a.count; ++i) {
        SynthSpec s;
        s.bpm = a.bpm_max != 0.0 ? rate_rng.uniform(a.bpm, a.bpm_max) : a.bpm;
        s.fs = a.fs;
        s.duration = a.duration;
        s.noise_sigma = a.noise;
        s.ectopic_rate = a.ectopic;
        s.rr_jitter = a.jitter;
        s.amplitude = a.amplitude;
        s.seed = c.seed + i;
        auto out = generate(s);
        out.record.record_id = a.prefix + std::to_string(i);
        write_record_files(out.record, fs::path(a.out) / out.record.record_id);
    }
}

// ------------------------------------------------------------- preprocess

struct PreprocessArgs {
    std::string data, out;
    Preprocess pre;
};

void run_preprocess(const PreprocessArgs& a) {
    const auto config = a.pre.build();
    const auto records = load_records(a.data);
    fs::create_directories(a.out);
    for (const auto& rec : records) {
        const auto ex = make_example(rec, config);
        EcgRecord out;
        out.record_id = rec.record_id;
        out.fs = config.target_fs;
        out.age = rec.age;
        out.sex = rec.sex;
        out.dx_codes = rec.dx_codes;
        for (std::size_t l = 0; l < kTrainingLeads.size(); ++l) {
            out.lead_names.emplace_back(kTrainingLeads[l]);
            const auto row = ex.features.slice(l);
            out.signals.emplace_back(row.data().begin(), row.data().end());
        }
        out.calibration.assign(out.signals.size(), LeadCalibration{});
        write_record_files(out, fs::path(a.out) / rec.record_id);
    }
}

// ----------------------------------------------------------------- rpeaks

struct RpeaksArgs {
    std::string record;
    std::string lead = "I";
};

void run_rpeaks(const RpeaksArgs& a) {
    const auto rec = read_record_files(a.record);
    if (!rec.lead_index(a.lead)) throw ValidationError("record has no lead " + a.lead);
    const auto result = detect_rpeaks(rec.lead(a.lead), rec.fs);
    std::cout << "beat,sample,time_s,rr_s\n";
    for (std::size_t k = 0; k < result.peak_indices.size(); ++k) {
        const auto s = result.peak_indices[k];
        std::cout << k << "," << s << "," << shortest(static_cast<double>(s) / rec.fs) << ","
                  << (k ? shortest(result.rr_intervals[k - 1]) : "") << "\n";
    }
}

// ------------------------------------------------------------------ train

struct TrainArgs {
    std::string data, out;
    Preprocess pre;
    std::string arch = "small";
    std::string blocks_per_stage, channels_per_stage;
    std::size_t stem_channels = 0, se_reduction = 0;
    int epochs = 19;
    std::size_t batch_size = 16;
    std::string loss = "sign";
};

std::vector<Example> load_examples(const fs::path& dir, const PreprocessConfig& config) {
    std::vector<Example> out;
    for (const auto& rec : load_records(dir)) out.push_back(make_example(rec, config));
    return out;
}

KeyValues with_prefix(const KeyValues& kv, const std::string& prefix) {
    KeyValues out;
    for (const auto& [k, v] : kv) out[prefix + k] = v;
    return out;
}

KeyValues strip_prefix(const KeyValues& kv, const std::string& prefix) {
    KeyValues out;
    for (const auto& [k, v] : kv)
        if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
    return out;
}

void run_train(const TrainArgs& a, const Common& c) {
    const auto pre = a.pre.build();
    SeResNetConfig mc = a.arch == "small" ? SeResNetConfig::small(pre.window_samples()) : SeResNetConfig{};
    mc.input_length = pre.window_samples();
    mc.seed = c.seed;
    KeyValues overrides;
    if (!a.blocks_per_stage.empty()) overrides["blocks_per_stage"] = a.blocks_per_stage;
    if (!a.channels_per_stage.empty()) overrides["channels_per_stage"] = a.channels_per_stage;
    if (a.stem_channels) overrides["stem_channels"] = std::to_string(a.stem_channels);
    if (a.se_reduction) overrides["se_reduction"] = std::to_string(a.se_reduction);
    if (!overrides.empty()) {
        auto kv = mc.to_key_values();
        for (const auto& [k, v] : overrides) kv[k] = v;
        mc = SeResNetConfig::from_key_values(kv);
    }
    mc.validate();

    const auto data = load_examples(a.data, pre);
    TrainConfig tc;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch_size;
    tc.seed = c.seed;
    tc.loss = a.loss == "bce" ? LossKind::bce : LossKind::sign;
    SeResNet model(mc);
    fs::create_directories(a.out);
    std::string history = "epoch,lr,mean_loss\n";
    train(model, data, tc, [&](const EpochStats& e) {
        history += std::to_string(e.epoch) + "," + shortest(e.lr) + "," + shortest(e.mean_loss) + "\n";
        std::cerr << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.mean_loss << "\n";
    });
    auto extra = with_prefix(pre.to_key_values(), "preprocess.");
    extra["train.seed"] = std::to_string(c.seed);
    save_checkpoint(fs::path(a.out) / "model.ckpt", model, extra);
    write_text(fs::path(a.out) / "history.csv", history);
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
    std::string data, checkpoint, checkpoint_long, out;
    double threshold = kDefaultThreshold;
    double short_weight = 0.5;
    bool brady_veto = true;
};

std::vector<ProbVector> model_probs(LoadedCheckpoint& ck, const std::vector<EcgRecord>& records) {
    const auto pre = PreprocessConfig::from_key_values(strip_prefix(ck.extra, "preprocess."));
    std::vector<ProbVector> out;
    for (const auto& rec : records) {
        const auto ex = make_example(rec, pre);
        Tensor batch({1, ex.features.dim(0), ex.features.dim(1)}, ex.features.storage());
        out.push_back(predict_probabilities(ck.model, batch)[0]);
    }
    return out;
}

std::vector<PredictionSet> predict_all(const PredictArgs& a, const std::vector<EcgRecord>& records) {
    require_file(a.checkpoint, "--checkpoint");
    auto short_ck = load_checkpoint(a.checkpoint);
    const auto p_short = model_probs(short_ck, records);
    std::vector<ProbVector> p_long;
    if (!a.checkpoint_long.empty()) {
        require_file(a.checkpoint_long, "--checkpoint-long");
        auto long_ck = load_checkpoint(a.checkpoint_long);
        p_long = model_probs(long_ck, records);
    }
    PipelineConfig pc;
    pc.threshold = a.threshold;
    pc.short_weight = a.short_weight;
    pc.brady_veto = a.brady_veto;
    std::vector<PredictionSet> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::optional<bool> rule;
        if (a.brady_veto) rule = rule_brady_for_record(records[i], pc.pan_tompkins);
        std::optional<ProbVector> lp;
        if (!p_long.empty()) lp = p_long[i];
        out.push_back(postprocess(records[i].record_id, p_short[i], lp, rule, pc));
    }
    return out;
}

void run_predict(const PredictArgs& a) {
    const auto records = load_records(a.data);
    const auto preds = predict_all(a, records);
    write_text(fs::path(a.out) / "predictions.csv", write_predictions_csv(preds));
}

// ---------------------------------------------------------------- relabel

struct RelabelArgs {
    std::string data, checkpoint, out;
    std::vector<std::string> original_codes;
    double threshold = kPseudoLabelThreshold;
    double review_threshold = kPseudoLabelReviewThreshold;
    bool write_records = false;
};

void run_relabel(const RelabelArgs& a) {
    require_file(a.checkpoint, "--checkpoint");
    auto ck = load_checkpoint(a.checkpoint);
    const auto pre = PreprocessConfig::from_key_values(strip_prefix(ck.extra, "preprocess."));
    const auto records = load_records(a.data);
    const auto original = a.original_codes.empty() ? cpsc_original_codes() : a.original_codes;
    const auto labels =
        relabel_pseudo(ck.model, records, pre, original, ClassMap::standard(), a.threshold, a.review_threshold);
    const auto& map = ClassMap::standard();
    std::string csv = "record_id,code,abbreviation,prob,needs_review\n";
    for (const auto& l : labels)
        csv += l.record_id + "," + l.code + "," + map.entries()[l.class_index].abbreviation + "," + shortest(l.prob) +
               "," + (l.needs_review ? "1" : "0") + "\n";
    write_text(fs::path(a.out) / "pseudo_labels.csv", csv);
    if (a.write_records) {
        const auto dir = fs::path(a.out) / "records";
        fs::create_directories(dir);
        for (const auto& rec : records) write_record_files(apply_pseudo_labels(rec, labels), dir / rec.record_id);
    }
}

// ---------------------------------------------------------- score, report

struct ScoreArgs {
    std::string truth, pred, weights, out;
};

struct Aligned {
    std::vector<PredictionSet> preds;
    std::vector<LabelVector> truths;
};

Aligned align(const ScoreArgs& a) {
    require_file(a.pred, "--pred");
    const auto preds = parse_predictions_csv(read_text(a.pred));
    std::map<std::string, LabelVector> truth_by_id;
    for (const auto& rec : load_records(a.truth))
        truth_by_id[rec.record_id] = labels_from_codes(rec.dx_codes, ClassMap::standard());
    Aligned out;
    for (const auto& p : preds) {
        const auto it = truth_by_id.find(p.record_id);
        if (it == truth_by_id.end()) throw ValidationError("prediction for unknown record " + p.record_id);
        out.preds.push_back(p);
        out.truths.push_back(it->second);
    }
    if (out.preds.size() != truth_by_id.size())
        throw ValidationError(std::to_string(truth_by_id.size() - out.preds.size()) + " truth records have no prediction");
    return out;
}

RewardMatrix load_weights(const std::string& path) {
    if (!path.empty()) {
        require_file(path, "--weights");
        return RewardMatrix::load(path);
    }
    MergedMatrix identity{};
    for (std::size_t i = 0; i < kNumMerged; ++i) identity[i][i] = 1.0;
    return RewardMatrix::from_values(identity);
}

void run_score(const ScoreArgs& a) {
    const auto aligned = align(a);
    const auto report = score_report(aligned.preds, aligned.truths, load_weights(a.weights));
    const auto json = score_report_json(report);
    std::cout << json << "\n";
    if (!a.out.empty()) {
        write_text(fs::path(a.out) / "score.json", json + "\n");
        write_text(fs::path(a.out) / "per_class.csv", per_class_csv(report.per_class));
        write_text(fs::path(a.out) / "per_class_plot.dat", per_class_plot_data(report.per_class));
    }
}

constexpr std::string_view kGnuplotRecipe = R"(# gnuplot -e "set terminal png size 1200,500; set output 'per_class.png'" per_class.gp
set style data histograms
set style histogram clustered gap 1
set style fill solid 0.8
set yrange [0:1]
set xtics rotate by -60
set datafile missing "nan"
plot "per_class_plot.dat" using 3:xtic(2) title "AUC", "" using 4 title "F1"
)";

void run_report(const ScoreArgs& a) {
    const auto aligned = align(a);
    const auto metrics = per_class_metrics(aligned.preds, aligned.truths);
    write_text(fs::path(a.out) / "per_class.csv", per_class_csv(metrics));
    write_text(fs::path(a.out) / "per_class_plot.dat", per_class_plot_data(metrics));
    write_text(fs::path(a.out) / "per_class.gp", kGnuplotRecipe);
}

int fail(const char* kind, const std::string& what) {
    std::cerr << "ecgnet: error: " << kind << ": " << what << "\n";
    return kExitValidation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECG abnormality classification pipeline", "ecgnet"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", ECGNET_VERSION);

    Common common;
    const auto add_common = [&](CLI::App* sub, bool has_out_dir) {
        sub->add_option("--config", common.config, "key=value file; command-line flags win");
        sub->add_option("--seed", common.seed, "Seed for every random choice");
        sub->add_option("--manifest", common.manifest,
                        has_out_dir ? "Manifest path (default: <out>/manifest.json)"
                                    : "Manifest path (default: ./ecgnet-manifest.json)");
    };

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Write synthetic 12-lead records");
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--count", synth.count, "Number of records");
    s->add_option("--prefix", synth.prefix, "Record names are <prefix><index>");
    s->add_option("--bpm", synth.bpm, "Heart rate, or the lower bound with --bpm-max");
    s->add_option("--bpm-max", synth.bpm_max, "Draw each record's rate uniformly from [bpm, bpm-max]");
    s->add_option("--fs", synth.fs, "Sampling rate in Hz");
    s->add_option("--duration", synth.duration, "Seconds per record");
    s->add_option("--noise", synth.noise, "White noise sigma in mV");
    s->add_option("--ectopic", synth.ectopic, "Fraction of ectopic beats");
    s->add_option("--jitter", synth.jitter, "Beat-time jitter as a fraction of the period");
    s->add_option("--amplitude", synth.amplitude, "Waveform scale");
    add_common(s, true);

    PreprocessArgs pre;
    auto* p = app.add_subcommand("preprocess", "Resample, denoise and window records");
    p->add_option("--data", pre.data, "Input record directory")->required();
    p->add_option("--out", pre.out, "Output directory")->required();
    add_preprocess_flags(p, pre.pre);
    add_common(p, true);

    RpeaksArgs rp;
    auto* r = app.add_subcommand("rpeaks", "Print R-peaks and RR intervals of one record as CSV");
    r->add_option("record", rp.record, "Record path without extension")->required();
    r->add_option("--lead", rp.lead, "Lead to analyse");
    add_common(r, false);

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train an SE-ResNet on a record directory");
    t->add_option("--data", tr.data, "Training record directory")->required();
    t->add_option("--out", tr.out, "Output directory for model.ckpt and history.csv")->required();
    t->add_option("--arch", tr.arch, "Base architecture")->check(CLI::IsMember({"small", "default"}));
    t->add_option("--blocks_per_stage", tr.blocks_per_stage, "Comma list, overrides --arch");
    t->add_option("--channels_per_stage", tr.channels_per_stage, "Comma list, overrides --arch");
    t->add_option("--stem_channels", tr.stem_channels, "Overrides --arch");
    t->add_option("--se_reduction", tr.se_reduction, "Overrides --arch");
    t->add_option("--epochs", tr.epochs, "Epochs");
    t->add_option("--batch-size", tr.batch_size, "Mini-batch size");
    t->add_option("--loss", tr.loss, "Training loss")->check(CLI::IsMember({"sign", "bce"}));
    add_preprocess_flags(t, tr.pre);
    add_common(t, true);

    PredictArgs pr;
    auto* d = app.add_subcommand("predict", "Predict labels for a record directory");
    d->add_option("--data", pr.data, "Record directory")->required();
    d->add_option("--checkpoint", pr.checkpoint, "Short-window model")->required();
    d->add_option("--checkpoint-long", pr.checkpoint_long, "Optional long-window model to ensemble");
    d->add_option("--out", pr.out, "Output directory for predictions.csv")->required();
    d->add_option("--threshold", pr.threshold, "Positive-label probability threshold");
    d->add_option("--short-weight", pr.short_weight, "Short-window weight in the ensemble mean");
    d->add_option("--brady-veto", pr.brady_veto, "Veto model bradycardia without rule support");
    add_common(d, true);

    RelabelArgs rl;
    auto* l = app.add_subcommand("relabel", "Propose pseudo labels for codes the source never annotated");
    l->add_option("--data", rl.data, "Record directory")->required();
    l->add_option("--checkpoint", rl.checkpoint, "Model")->required();
    l->add_option("--out", rl.out, "Output directory")->required();
    l->add_option("--original-codes", rl.original_codes, "Codes the source labelled (default: CPSC list)")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    l->add_option("--threshold", rl.threshold, "Pseudo-label probability threshold");
    l->add_option("--review-threshold", rl.review_threshold, "Flag labels above this for review");
    l->add_flag("--write-records", rl.write_records, "Also write relabelled records to <out>/records");
    add_common(l, true);

    ScoreArgs sc;
    auto* c = app.add_subcommand("score", "Challenge score plus per-class metrics");
    c->add_option("--truth", sc.truth, "Labelled record directory")->required();
    c->add_option("--pred", sc.pred, "predictions.csv")->required();
    c->add_option("--weights", sc.weights, "Reward matrix CSV (default: identity)");
    c->add_option("--out", sc.out, "Directory for score.json, per_class.csv, per_class_plot.dat");
    add_common(c, true);

    ScoreArgs rep;
    auto* g = app.add_subcommand("report", "Per-class AUC/F1 table and plot data");
    g->add_option("--truth", rep.truth, "Labelled record directory")->required();
    g->add_option("--pred", rep.pred, "predictions.csv")->required();
    g->add_option("--out", rep.out, "Output directory")->required();
    add_common(g, true);

    if (argc < 2) {
        std::cerr << app.help();
        return kExitUsage;
    }
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = expand_config(args, app);
    } catch (const Error& e) {
        return fail("config", e.what());
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    std::string out_dir;
    for (const auto* opt : sub->get_options())
        if (opt->get_single_name() == "out" && opt->count() > 0) out_dir = opt->results().front();
    try {
        const std::string name = sub->get_name();
        if (name == "synth") run_synth(synth, common);
        else if (name == "preprocess") run_preprocess(pre);
        else if (name == "rpeaks") run_rpeaks(rp);
        else if (name == "train") run_train(tr, common);
        else if (name == "predict") run_predict(pr);
        else if (name == "relabel") run_relabel(rl);
        else if (name == "score") run_score(sc);
        else if (name == "report") run_report(rep);
        fs::path manifest = common.manifest;
        if (manifest.empty()) manifest = out_dir.empty() ? fs::path("ecgnet-manifest.json") : fs::path(out_dir) / "manifest.json";
        write_manifest(manifest, *sub, common);
    } catch (const ParseError& e) {
        return fail("parse", e.what());
    } catch (const TruncationError& e) {
        return fail("truncated record", e.what());
    } catch (const ConfigError& e) {
        return fail("config", e.what());
    } catch (const ShapeError& e) {
        return fail("shape", e.what());
    } catch (const NumericError& e) {
        return fail("numeric", e.what());
    } catch (const Error& e) {
        return fail("validation", e.what());
    } catch (const fs::filesystem_error& e) {
        return fail("filesystem", e.what());
    }
    return 0;
}
