#pragma once

#include "reage/core/log.hpp"
#include "reage/core/parallel.hpp"
#include "reage/datamodel/manifest.hpp"
#include "reage/synth/backends.hpp"
#include "reage/synth/interpolate.hpp"
#include "reage/synth/sharpness.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace reage::synth {

/// 14 evenly spaced ages from 18 to 85.
inline std::vector<double> paper_age_grid()
{
    std::vector<double> ages;
    for (int i = 0; i < 14; ++i) ages.push_back(18.0 + (85.0 - 18.0) * i / 13.0);
    return ages;
}

struct PipelineConfig {
    int subjects = 4;
    std::vector<double> ages{18.0, 50.0, 85.0};
    int keyframes_per_video = 8;
    int recursion_depth = 3;
    int resolution = 64;
    double sharpness_threshold = 0.5;
    std::uint64_t seed = 0;
    PoseBounds pose_bounds{};
    std::string interpolator = "pose_midpoint"; ///< or "linear_blend"
    int max_retries = 1;
    int workers = 1;

    std::size_t frames_per_video() const
    {
        return synth::frames_per_video(static_cast<std::size_t>(keyframes_per_video), recursion_depth);
    }

    void validate() const
    {
        if (subjects < 0) throw ConfigError("subjects must be >= 0");
        for (double a : ages) (void)AgeValue(a);
        if (keyframes_per_video < 2) throw ConfigError("keyframes_per_video must be >= 2");
        if (recursion_depth < 0 || recursion_depth > 16) throw ConfigError("recursion_depth must be in [0, 16]");
        Frame::validate_dims(resolution, resolution, 3);
        if (!(sharpness_threshold >= 0.0 && sharpness_threshold <= 1.0))
            throw ConfigError("sharpness_threshold must be in [0, 1]");
        if (interpolator != "pose_midpoint" && interpolator != "linear_blend")
            throw ConfigError("interpolator must be 'pose_midpoint' or 'linear_blend'");
        if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    }
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c)
{
    j = {{"subjects", c.subjects},
         {"ages", c.ages},
         {"keyframes_per_video", c.keyframes_per_video},
         {"recursion_depth", c.recursion_depth},
         {"frames_per_video", c.frames_per_video()},
         {"resolution", c.resolution},
         {"sharpness_threshold", c.sharpness_threshold},
         {"seed", c.seed},
         {"pose_bounds", c.pose_bounds},
         {"interpolator", c.interpolator},
         {"max_retries", c.max_retries},
         {"workers", c.workers}};
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c)
{
    const PipelineConfig d;
    c.subjects = j.value("subjects", d.subjects);
    c.ages = j.value("ages", d.ages);
    c.keyframes_per_video = j.value("keyframes_per_video", d.keyframes_per_video);
    c.recursion_depth = j.value("recursion_depth", d.recursion_depth);
    c.resolution = j.value("resolution", d.resolution);
    c.sharpness_threshold = j.value("sharpness_threshold", d.sharpness_threshold);
    c.seed = j.value("seed", d.seed);
    c.pose_bounds = j.value("pose_bounds", d.pose_bounds);
    c.interpolator = j.value("interpolator", d.interpolator);
    c.max_retries = j.value("max_retries", d.max_retries);
    c.workers = j.value("workers", d.workers);
}

struct SynthBackends {
    std::shared_ptr<const StillBackend> stills;
    std::shared_ptr<const KeyframeBackend> keyframes;
    std::shared_ptr<const InterpolationBackend> interpolator;
    std::shared_ptr<const SharpnessEstimator> sharpness;

    std::string describe() const
    {
        return stills->name() + "/" + keyframes->name() + "/" + interpolator->name() + "/" + sharpness->name();
    }
};

inline SynthBackends procedural_backends(const PipelineConfig& c)
{
    std::shared_ptr<const InterpolationBackend> interp;
    if (c.interpolator == "linear_blend")
        interp = std::make_shared<LinearBlendInterpolator>();
    else
        interp = std::make_shared<ProceduralPoseInterpolator>();
    return {std::make_shared<ProceduralStillBackend>(), std::make_shared<ProceduralKeyframeBackend>(c.pose_bounds),
            std::move(interp), std::make_shared<EdgeWidthSharpness>()};
}

inline std::string subject_name(int index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "subject_%04d", index);
    return buf;
}

inline std::string age_dir_name(double age)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "age_%.2f", age);
    return buf;
}

inline std::uint64_t identity_seed_for(std::uint64_t seed, int subject)
{
    return derive_seed(derive_seed(seed, "identity"), static_cast<std::uint64_t>(subject));
}

inline std::uint64_t motion_seed_for(std::uint64_t seed, int subject)
{
    return derive_seed(derive_seed(seed, "motion"), static_cast<std::uint64_t>(subject));
}

/// Renders one subject at one age into a clip (nothing is written to disk).
inline VideoClip render_subject_clip(const PipelineConfig& c, const SynthBackends& b, const AgedStill& still,
                                     const std::vector<PoseExpressionSample>& poses, const std::string& subject_id,
                                     std::uint64_t motion_seed)
{
    const auto keys = b.keyframes->keyframes(still, poses);
    if (keys.size() != poses.size())
        throw BackendError("keyframe backend returned " + std::to_string(keys.size()) + " frames for " +
                           std::to_string(poses.size()) + " poses");
    const auto states = interpolate_motion(keys, c.recursion_depth, *b.interpolator);
    std::vector<Frame> frames;
    std::vector<Landmarks> landmarks;
    nlohmann::json annotations = nlohmann::json::array();
    bool have_landmarks = true;
    for (const auto& s : states) {
        frames.push_back(s.frame);
        annotations.push_back(s.pose);
        if (s.landmarks)
            landmarks.push_back(*s.landmarks);
        else
            have_landmarks = false;
    }
    VideoClip clip(std::move(frames), subject_id, AgeValue(still.age));
    clip.set_motion_seed(motion_seed).set_annotations(std::move(annotations));
    if (have_landmarks) clip.set_landmarks(std::move(landmarks));
    return clip;
}

namespace detail {

struct SubjectOutcome {
    std::optional<SubjectRecord> record;
    std::vector<RejectedClip> rejected;
    std::vector<std::string> errata;
};

template <typename Fn>
auto with_retries(int retries, const std::string& what, RunLog* log, Fn&& fn) -> decltype(fn())
{
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const BackendError& e) {
            if (attempt >= retries) throw;
            if (log) log->warn(what + " failed (attempt " + std::to_string(attempt + 1) + "): " + e.what());
        }
    }
}

inline SubjectOutcome build_subject(const PipelineConfig& c, const SynthBackends& b, const std::filesystem::path& root,
                                    int index, RunLog* log)
{
    SubjectOutcome out;
    const std::string sid = subject_name(index);
    const auto subject_dir = root / sid;
    try {
        SubjectRecord rec;
        rec.subject_id = sid;
        rec.identity_seed = identity_seed_for(c.seed, index);
        rec.motion_seed = motion_seed_for(c.seed, index);
        rec.ages = c.ages;
        rec.sharpness = 1.0;
        const auto poses = sample_poses(rec.motion_seed, c.keyframes_per_video, c.pose_bounds);
        std::filesystem::remove_all(subject_dir);
        for (double age : c.ages) {
            const std::string what = sid + " age " + std::to_string(age);
            const AgedStill still =
                with_retries(c.max_retries, what + " still", log, [&] { return b.stills->still(rec.identity_seed, AgeValue(age), c.resolution); });
            const VideoClip clip = with_retries(c.max_retries, what + " video", log, [&] {
                return render_subject_clip(c, b, still, poses, sid, rec.motion_seed);
            });
            const auto verdict = sharpness_filter(clip, *b.sharpness, c.sharpness_threshold);
            if (!verdict.accepted) {
                out.rejected.push_back({sid, age, verdict.score, "sharpness below threshold"});
                continue;
            }
            const std::string rel = sid + "/" + age_dir_name(age);
            save_clip(clip, root / rel);
            rec.videos.push_back({age, rel, clip.frame_count(), rec.motion_seed, verdict.score});
            rec.sharpness = std::min(rec.sharpness, verdict.score);
        }
        if (!out.rejected.empty()) {
            std::filesystem::remove_all(subject_dir);
            out.errata.push_back(sid + ": dropped, " + std::to_string(out.rejected.size()) + " of " +
                                 std::to_string(c.ages.size()) + " videos below the sharpness threshold");
            return out;
        }
        out.record = std::move(rec);
    } catch (const std::exception& e) {
        std::filesystem::remove_all(subject_dir);
        out.errata.push_back(sid + ": skipped, " + e.what());
    }
    return out;
}

} // namespace detail

/// Generates every subject x age clip under `root` and writes
/// root/manifest.json. Subjects are independent; a subject with any failing
/// stage or rejected clip is left out and recorded in the errata.
inline DatasetManifest build_dataset(const PipelineConfig& c, const std::filesystem::path& root, const SynthBackends& b,
                                     RunLog* log = nullptr)
{
    c.validate();
    std::filesystem::create_directories(root);
    std::vector<detail::SubjectOutcome> outcomes(static_cast<std::size_t>(c.subjects));
    parallel_for(outcomes.size(), c.workers, [&](std::size_t i) {
        outcomes[i] = detail::build_subject(c, b, root, static_cast<int>(i), log);
        if (log) log->info(subject_name(static_cast<int>(i)) + (outcomes[i].record ? " done" : " left out"));
    });

    DatasetManifest m;
    m.resolution = c.resolution;
    m.keyframes_per_video = c.keyframes_per_video;
    m.recursion_depth = c.recursion_depth;
    m.frames_per_video = c.frames_per_video();
    m.sharpness_threshold = c.sharpness_threshold;
    m.seed = c.seed;
    m.backend = b.describe();
    for (auto& o : outcomes) {
        if (o.record) m.subjects.push_back(std::move(*o.record));
        for (auto& r : o.rejected) m.rejected.push_back(std::move(r));
        for (auto& e : o.errata) m.errata.push_back(std::move(e));
    }
    validate_manifest(m, root);
    save_manifest(m, root / "manifest.json");
    return m;
}

inline DatasetManifest build_dataset(const PipelineConfig& c, const std::filesystem::path& root, RunLog* log = nullptr)
{
    return build_dataset(c, root, procedural_backends(c), log);
}

/// Manifest bookkeeping for a configuration without rendering any media.
/// Sharpness is not measured; every entry carries the threshold value.
inline DatasetManifest declare_manifest(const PipelineConfig& c)
{
    c.validate();
    DatasetManifest m;
    m.resolution = c.resolution;
    m.keyframes_per_video = c.keyframes_per_video;
    m.recursion_depth = c.recursion_depth;
    m.frames_per_video = c.frames_per_video();
    m.sharpness_threshold = c.sharpness_threshold;
    m.seed = c.seed;
    m.backend = "declared";
    m.errata.push_back("declared only: no media generated, sharpness not measured");
    m.subjects.reserve(static_cast<std::size_t>(c.subjects));
    for (int i = 0; i < c.subjects; ++i) {
        SubjectRecord s;
        s.subject_id = subject_name(i);
        s.identity_seed = identity_seed_for(c.seed, i);
        s.motion_seed = motion_seed_for(c.seed, i);
        s.ages = c.ages;
        s.sharpness = c.sharpness_threshold;
        for (double a : c.ages)
            s.videos.push_back({a, s.subject_id + "/" + age_dir_name(a), m.frames_per_video, s.motion_seed, c.sharpness_threshold});
        m.subjects.push_back(std::move(s));
    }
    return m;
}

} // namespace reage::synth
