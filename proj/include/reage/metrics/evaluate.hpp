#pragma once

#include "reage/core/log.hpp"
#include "reage/core/parallel.hpp"
#include "reage/datamodel/clip_io.hpp"
#include "reage/datamodel/manifest.hpp"
#include "reage/datamodel/png_io.hpp"
#include "reage/generator/generator.hpp"
#include "reage/metrics/age.hpp"
#include "reage/metrics/identity.hpp"
#include "reage/metrics/trwc.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

namespace reage::metrics {

struct EvalConfig {
    std::vector<double> targets{65.0, 75.0, 85.0};
    /// When unset, each subject's recorded age farthest from the target.
    std::optional<double> input_age;
    std::size_t trwc_interval = 1;
    std::size_t generator_interval = 1;
    TAgeMode t_age_mode = TAgeMode::ExpectedDiff;
    std::size_t max_frames = 0; ///< 0 keeps whole clips
    bool debug_roi = false;
    int workers = 1;
    TrwcOptions trwc{};
};

inline void to_json(nlohmann::json& j, const EvalConfig& c)
{
    j = {{"targets", c.targets},
         {"input_age", c.input_age ? nlohmann::json(*c.input_age) : nlohmann::json(nullptr)},
         {"trwc_interval", c.trwc_interval},
         {"generator_interval", c.generator_interval},
         {"t_age_mode", to_string(c.t_age_mode)},
         {"max_frames", c.max_frames},
         {"trwc_epsilon", c.trwc.epsilon},
         {"roi_side_fraction", c.trwc.roi.side_fraction}};
}

struct EvalBackends {
    const train::PerceptualDistance<double>* distance = nullptr;
    const LandmarkBackend* landmarks = nullptr;
    const AgeEstimator* age = nullptr;
    const EmbeddingBackend* embedding = nullptr;
};

struct EvalRow {
    std::string subject;
    double input_age = 0.0;
    double target_age = 0.0;
    std::size_t frames = 0;
    bool ok = false;
    std::string error;
    double trwc = 0.0;
    double trwc_skip_fraction = 0.0;
    double t_age = 0.0;
    double mae = 0.0;
    double identity = 0.0;
};

struct TargetAggregate {
    double target_age = 0.0;
    std::size_t rows = 0;
    std::size_t failed = 0;
    double trwc = 0.0;
    double t_age = 0.0;
    double mae = 0.0;
    double identity = 0.0;
};

inline void to_json(nlohmann::json& j, const TargetAggregate& a)
{
    j = {{"target_age", a.target_age}, {"rows", a.rows}, {"failed", a.failed}, {"trwc", a.trwc},
         {"t_age", a.t_age},           {"mae", a.mae},   {"identity", a.identity}};
}

struct EvalReport {
    std::vector<EvalRow> rows;
    std::vector<TargetAggregate> aggregates;
    nlohmann::json meta;

    static constexpr const char* kCsvHeader =
        "subject,input_age,target_age,frames,status,trwc,trwc_skip_fraction,t_age,mae,identity,error";

    std::string csv() const
    {
        std::string s = std::string(kCsvHeader) + "\n";
        char buf[512];
        for (const auto& r : rows) {
            std::string err = r.error;
            for (char& c : err)
                if (c == ',' || c == '\n' || c == '"') c = ' ';
            std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%zu,%s,%.9g,%.9g,%.9g,%.9g,%.9g,", r.subject.c_str(), r.input_age,
                          r.target_age, r.frames, r.ok ? "ok" : "failed", r.trwc, r.trwc_skip_fraction, r.t_age, r.mae,
                          r.identity);
            s += buf + err + "\n";
        }
        return s;
    }

    nlohmann::json summary() const
    {
        nlohmann::json j = meta;
        j["aggregates"] = aggregates;
        std::size_t failed = 0;
        for (const auto& r : rows) failed += !r.ok;
        j["rows"] = rows.size();
        j["failed"] = failed;
        return j;
    }

    void write(const std::filesystem::path& dir) const
    {
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "rows.csv", std::ios::binary) << csv();
        write_json_file(dir / "summary.json", summary());
    }
};

/// Recorded age of `subject` used as the source for `target`.
inline std::optional<double> source_age(const SubjectRecord& s, double target, const std::optional<double>& fixed)
{
    if (fixed) {
        if (s.video_for_age(*fixed)) return fixed;
        return std::nullopt;
    }
    std::optional<double> best;
    for (const auto& v : s.videos)
        if (!best || std::abs(v.age - target) > std::abs(*best - target)) best = v.age;
    return best;
}

/// Re-ages every subject's source clip to each target and scores the output.
/// Failures are kept as rows; aggregates cover successful rows only.
inline EvalReport evaluate_corpus(const DatasetManifest& manifest, const std::filesystem::path& data_root,
                                  const gen::Generator<float>& generator, const EvalConfig& config,
                                  const EvalBackends& backends, const std::filesystem::path& out_dir,
                                  RunLog* log = nullptr)
{
    if (manifest.subjects.empty()) throw MetricError("evaluation corpus is empty");
    if (config.targets.empty()) throw ConfigError("no target ages given");
    if (!backends.distance || !backends.landmarks || !backends.age || !backends.embedding)
        throw ConfigError("evaluation needs distance, landmark, age and embedding backends");
    for (double t : config.targets) AgeValue{t};

    EvalReport report;
    for (double target : config.targets)
        for (const auto& s : manifest.subjects) {
            EvalRow r;
            r.subject = s.subject_id;
            r.target_age = target;
            report.rows.push_back(r);
        }

    std::mutex io;
    parallel_for(report.rows.size(), config.workers, [&](std::size_t i) {
        EvalRow& r = report.rows[i];
        try {
            const auto* subj = manifest.find_subject(r.subject);
            const auto in_age = source_age(*subj, r.target_age, config.input_age);
            if (!in_age) throw ManifestError("subject has no video at input age " + std::to_string(*config.input_age));
            r.input_age = *in_age;
            VideoClip real = load_clip(data_root / subj->video_for_age(*in_age)->path);
            if (config.max_frames) real = real.head(config.max_frames);
            r.frames = real.frame_count();
            const VideoClip out =
                generator.generate_video(real, AgeValue(*in_age), AgeValue(r.target_age), config.generator_interval);
            const auto tr = trwc(out, real, config.trwc_interval, *backends.distance, *backends.landmarks, config.trwc);
            r.trwc = tr.value;
            r.trwc_skip_fraction = tr.skip_fraction();
            const auto est = estimate_clip(out, *backends.age);
            r.t_age = t_age(std::span<const AgeEstimate>(est), config.t_age_mode);
            double mae = 0.0;
            for (const auto& e : est) mae += std::abs(e.expected_age - r.target_age);
            r.mae = mae / static_cast<double>(est.size());
            r.identity = identity_similarity(out, real, *backends.embedding);
            r.ok = true;
            if (config.debug_roi) {
                const auto lm = backends.landmarks->landmarks(real);
                char name[128];
                std::snprintf(name, sizeof name, "%s_from%g_to%g", r.subject.c_str(), r.input_age, r.target_age);
                const auto dir = out_dir / "debug_roi" / name;
                std::filesystem::create_directories(dir);
                for (std::size_t t = 0; t < out.frame_count(); ++t)
                    save_frame_png(draw_boxes(out.frame(t), roi_boxes(lm[t], out.height(), out.width(), config.trwc.roi)),
                                   dir / frame_filename(t));
            }
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
            if (log) {
                std::lock_guard lock(io);
                log->warn("eval " + r.subject + " -> " + std::to_string(r.target_age) + " failed: " + e.what());
            }
        }
    });

    for (double target : config.targets) {
        TargetAggregate a;
        a.target_age = target;
        for (const auto& r : report.rows) {
            if (r.target_age != target) continue;
            if (!r.ok) {
                ++a.failed;
                continue;
            }
            ++a.rows;
            a.trwc += r.trwc;
            a.t_age += r.t_age;
            a.mae += r.mae;
            a.identity += r.identity;
        }
        if (a.rows) {
            const double n = static_cast<double>(a.rows);
            a.trwc /= n;
            a.t_age /= n;
            a.mae /= n;
            a.identity /= n;
        }
        report.aggregates.push_back(a);
    }

    report.meta = {{"config", config},
                   {"backends",
                    {{"distance", backends.distance->name()},
                     {"landmarks", backends.landmarks->name()},
                     {"age", backends.age->name()},
                     {"embedding", backends.embedding->name()}}}};
    report.write(out_dir);
    return report;
}

} // namespace reage::metrics
