#pragma once

#include "reage/cli/overrides.hpp"
#include "reage/cli/report.hpp"
#include "reage/metrics/evaluate.hpp"
#include "reage/synth/pipeline.hpp"
#include "reage/training/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef REAGE_VERSION
#define REAGE_VERSION "0.0.0"
#endif

namespace reage::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

inline std::string version_string() { return std::string("reage ") + REAGE_VERSION; }

inline std::string error_kind(const std::exception& e)
{
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const ValidationError*>(&e)) return "validation";
    if (dynamic_cast<const ManifestError*>(&e)) return "manifest";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    if (dynamic_cast<const MetricError*>(&e)) return "metric";
    if (dynamic_cast<const TrainingError*>(&e)) return "training";
    if (dynamic_cast<const BackendError*>(&e)) return "backend";
    return "runtime";
}

inline void write_error(std::ostream& err, const std::string& kind, const std::string& message, int code)
{
    err << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}}.dump() << '\n';
}

/// Every run records what it resolved before doing work.
inline void write_snapshot(const std::filesystem::path& out, const std::string& command, const nlohmann::json& config)
{
    std::filesystem::create_directories(out);
    write_json_file(out / "run_config.json", {{"command", command}, {"config", config}});
}

struct SynthArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::vector<std::string> set;
};

struct TrainArgs {
    std::string config, data, out, resume;
    std::optional<std::uint64_t> seed;
    std::optional<long long> iterations;
    std::vector<std::string> set;
};

struct InferArgs {
    std::string ckpt, input, out;
    std::optional<double> input_age;
    double target_age = 0.0;
    std::size_t interval = 1;
};

struct EvalArgs {
    std::string ckpt, data, out, targets = "65,75,85", t_age_mode = "expected_diff";
    std::optional<double> input_age;
    std::size_t dt = 1, interval = 1, max_frames = 0;
    bool debug_roi = false;
    int workers = 1;
};

struct ReportArgs {
    std::vector<std::string> inputs, labels;
    std::string out;
};

inline RunLog stderr_log(std::ostream& err)
{
    return RunLog([&err](LogLevel level, const std::string& m) { err << '[' << to_string(level) << "] " << m << '\n'; });
}

inline int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err)
{
    auto c = resolve_config<synth::PipelineConfig>(a.config, a.set);
    if (a.seed) c.seed = *a.seed;
    if (a.workers) c.workers = *a.workers;
    c.validate();
    write_snapshot(a.out, "synth", c);
    auto log = stderr_log(err);
    const auto m = synth::build_dataset(c, a.out, &log);
    out << nlohmann::json{{"subjects", m.subjects.size()},
                          {"rejected", m.rejected.size()},
                          {"frames_per_video", m.frames_per_video},
                          {"manifest", (std::filesystem::path(a.out) / "manifest.json").string()}}
               .dump()
        << '\n';
    return kExitOk;
}

inline int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err)
{
    auto c = resolve_config<train::TrainConfig>(a.config, a.set);
    if (a.seed) c.seed = *a.seed;
    if (a.iterations) c.iterations = *a.iterations;
    c.validate();
    const auto manifest = load_manifest(std::filesystem::path(a.data) / "manifest.json");
    write_snapshot(a.out, "train", c);
    auto log = stderr_log(err);
    train::Trainer t(c, manifest, a.data, a.out, &log);
    if (!a.resume.empty()) t.resume(a.resume);
    out << nlohmann::json(t.run()).dump() << '\n';
    return kExitOk;
}

/// Input and output side by side.
inline Frame side_by_side(const Frame& l, const Frame& r)
{
    Frame f(l.height(), l.width() + r.width(), l.channels());
    auto t = f.to_tensor<float>();
    for (int c = 0; c < l.channels(); ++c)
        for (int y = 0; y < l.height(); ++y) {
            for (int x = 0; x < l.width(); ++x) t.at(c, y, x) = l.at(c, y, x);
            for (int x = 0; x < r.width(); ++x) t.at(c, y, l.width() + x) = r.at(c, y, x);
        }
    return Frame::from_tensor(t);
}

inline int cmd_infer(const InferArgs& a, std::ostream& out, std::ostream& err)
{
    const VideoClip clip = load_clip(a.input);
    double in_age = 0.0;
    if (a.input_age)
        in_age = *a.input_age;
    else if (clip.apparent_age())
        in_age = clip.apparent_age()->years();
    else
        throw ConfigError("--input-age is required for clips without an apparent age");
    const nlohmann::json snap{{"ckpt", a.ckpt},     {"input", a.input},          {"input_age", in_age},
                              {"target_age", a.target_age}, {"interval", a.interval}};
    write_snapshot(a.out, "infer", snap);
    auto log = stderr_log(err);
    const auto g = train::load_generator(a.ckpt);
    const VideoClip result = g.generate_video(clip, AgeValue(in_age), AgeValue(a.target_age), a.interval, &log);
    const auto dir = std::filesystem::path(a.out);
    VideoClip saved = result;
    saved.set_apparent_age(AgeValue(a.target_age));
    save_clip(saved, dir / "clip");
    std::filesystem::create_directories(dir / "grid");
    double l1 = 0.0;
    for (std::size_t t = 0; t < clip.frame_count(); ++t) {
        save_frame_png(side_by_side(clip.frame(t), result.frame(t)), dir / "grid" / frame_filename(t));
        const auto& x = clip.frame(t).data();
        const auto& y = result.frame(t).data();
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(static_cast<double>(x[i]) - y[i]);
        l1 += s / static_cast<double>(x.size());
    }
    l1 /= static_cast<double>(clip.frame_count());
    const nlohmann::json summary{{"frames", clip.frame_count()}, {"input_age", in_age},   {"target_age", a.target_age},
                                 {"interval", a.interval},       {"l1_to_input", l1}};
    write_json_file(dir / "infer.json", summary);
    out << summary.dump() << '\n';
    return kExitOk;
}

inline std::vector<double> parse_ages(const std::string& s)
{
    std::vector<double> ages;
    for (const auto& part : split(s, ',')) {
        try {
            std::size_t used = 0;
            ages.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ConfigError("bad age list '" + s + "'");
        }
        (void)AgeValue(ages.back());
    }
    if (ages.empty()) throw ConfigError("empty age list");
    return ages;
}

inline int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err)
{
    metrics::EvalConfig c;
    c.targets = parse_ages(a.targets);
    c.input_age = a.input_age;
    c.trwc_interval = a.dt;
    c.generator_interval = a.interval;
    c.t_age_mode = metrics::parse_t_age_mode(a.t_age_mode);
    c.max_frames = a.max_frames;
    c.debug_roi = a.debug_roi;
    c.workers = a.workers;
    nlohmann::json snap = c;
    snap["ckpt"] = a.ckpt;
    snap["data"] = a.data;
    snap["debug_roi"] = a.debug_roi;
    write_snapshot(a.out, "eval", snap);

    const auto manifest = load_manifest(std::filesystem::path(a.data) / "manifest.json");
    const auto g = train::load_generator(a.ckpt);
    const train::GradientFeatureDistance<double> distance;
    const metrics::ClipLandmarks landmarks;
    const metrics::AnalyticAgeEstimator age;
    const metrics::ThumbnailEmbedding embed;
    auto log = stderr_log(err);
    const auto report =
        metrics::evaluate_corpus(manifest, a.data, g, c, {&distance, &landmarks, &age, &embed}, a.out, &log);
    out << report.summary().dump() << '\n';
    return kExitOk;
}

inline int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream&)
{
    if (!a.labels.empty() && a.labels.size() != a.inputs.size())
        throw ConfigError("--label must be given once per --in");
    std::vector<MethodRows> methods;
    for (std::size_t i = 0; i < a.inputs.size(); ++i) {
        std::filesystem::path p = a.inputs[i];
        if (std::filesystem::is_directory(p)) p /= "rows.csv";
        std::string label = a.labels.empty() ? std::filesystem::path(a.inputs[i]).filename().string() : a.labels[i];
        if (label.empty()) label = "method" + std::to_string(i);
        for (char& ch : label)
            if (ch == ',') ch = '_';
        methods.push_back({label, read_rows_csv(p)});
    }
    write_snapshot(a.out, "report", {{"inputs", a.inputs}, {"labels", a.labels}});
    write_report(methods, a.out);
    out << nlohmann::json{{"methods", methods.size()}, {"report", (std::filesystem::path(a.out) / "report.csv").string()}}
               .dump()
        << '\n';
    return kExitOk;
}

/// Parses and dispatches. Errors go to `err` as one JSON object; the return
/// value is the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Video face re-aging: synthetic data, training, inference and evaluation", "reage"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "Build a paired synthetic dataset");
    synth_cmd->add_option("--config", sa.config, "Pipeline config JSON");
    synth_cmd->add_option("--out", sa.out, "Dataset root")->required();
    synth_cmd->add_option("--seed", sa.seed, "Dataset seed");
    synth_cmd->add_option("--workers", sa.workers, "Parallel subjects")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--set", sa.set, "Override a config field: name=value");

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train the generator and discriminators");
    train_cmd->add_option("--config", ta.config, "Training config JSON");
    train_cmd->add_option("--data", ta.data, "Dataset root")->required();
    train_cmd->add_option("--out", ta.out, "Run directory")->required();
    train_cmd->add_option("--resume", ta.resume, "Checkpoint to continue from");
    train_cmd->add_option("--seed", ta.seed, "Training seed");
    train_cmd->add_option("--iterations", ta.iterations, "Total steps");
    train_cmd->add_option("--set", ta.set, "Override a config field: name=value");

    InferArgs ia;
    auto* infer_cmd = app.add_subcommand("infer", "Re-age one clip");
    infer_cmd->add_option("--ckpt", ia.ckpt, "Training checkpoint")->required();
    infer_cmd->add_option("--input", ia.input, "Clip directory")->required();
    infer_cmd->add_option("--input-age", ia.input_age, "Apparent age of the input (default: clip metadata)");
    infer_cmd->add_option("--target-age", ia.target_age, "Target age")->required();
    infer_cmd->add_option("--interval", ia.interval, "Frame interval between neighbours")->check(CLI::PositiveNumber);
    infer_cmd->add_option("--out", ia.out, "Output directory")->required();

    EvalArgs ea;
    auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset");
    eval_cmd->add_option("--ckpt", ea.ckpt, "Training checkpoint")->required();
    eval_cmd->add_option("--data", ea.data, "Dataset root")->required();
    eval_cmd->add_option("--targets", ea.targets, "Comma-separated target ages");
    eval_cmd->add_option("--input-age", ea.input_age, "Source age (default: farthest recorded age)");
    eval_cmd->add_option("--dt", ea.dt, "TRWC frame interval")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--interval", ea.interval, "Generator frame interval")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--t-age-mode", ea.t_age_mode, "expected_diff | cosine");
    eval_cmd->add_option("--max-frames", ea.max_frames, "Evaluate only the first N frames (0 = all)");
    eval_cmd->add_flag("--debug-roi", ea.debug_roi, "Write ROI overlay frames");
    eval_cmd->add_option("--workers", ea.workers, "Parallel clips")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--out", ea.out, "Report directory")->required();

    ReportArgs ra;
    auto* report_cmd = app.add_subcommand("report", "Tables and bar charts per target age");
    report_cmd->add_option("--in", ra.inputs, "Evaluation directory or rows.csv (repeatable)")->required();
    report_cmd->add_option("--label", ra.labels, "Method label per --in");
    report_cmd->add_option("--out", ra.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << version_string() << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        write_error(err, "usage", e.what(), kExitUsage);
        return kExitUsage;
    }

    try {
        if (*synth_cmd) return cmd_synth(sa, out, err);
        if (*train_cmd) return cmd_train(ta, out, err);
        if (*infer_cmd) return cmd_infer(ia, out, err);
        if (*eval_cmd) return cmd_eval(ea, out, err);
        if (*report_cmd) return cmd_report(ra, out, err);
    } catch (const ConfigError& e) {
        write_error(err, error_kind(e), e.what(), kExitUsage);
        return kExitUsage;
    } catch (const std::exception& e) {
        write_error(err, error_kind(e), e.what(), kExitRuntime);
        return kExitRuntime;
    }
    write_error(err, "usage", "no subcommand", kExitUsage);
    return kExitUsage;
}

} // namespace reage::cli
