#pragma once

#include "reage/core/error.hpp"
#include "reage/datamodel/clip_io.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace reage {

struct VideoRecord {
    double age = 0.0;
    std::string path; ///< relative to the dataset root
    std::size_t frame_count = 0;
    std::uint64_t motion_seed = 0;
    double sharpness = 0.0;
};

struct SubjectRecord {
    std::string subject_id;
    std::uint64_t identity_seed = 0;
    std::uint64_t motion_seed = 0;
    std::vector<double> ages;
    std::vector<VideoRecord> videos;
    double sharpness = 0.0; ///< lowest per-video score

    const VideoRecord* video_for_age(double age) const
    {
        for (const auto& v : videos)
            if (v.age == age) return &v;
        return nullptr;
    }
};

struct RejectedClip {
    std::string subject_id;
    double age = 0.0;
    double sharpness = 0.0;
    std::string reason;
};

struct DatasetManifest {
    static constexpr int kVersion = 1;

    int resolution = 0;
    int keyframes_per_video = 0;
    int recursion_depth = 0;
    std::size_t frames_per_video = 0;
    double sharpness_threshold = 0.0;
    std::uint64_t seed = 0;
    std::string backend;
    std::vector<SubjectRecord> subjects;
    std::vector<RejectedClip> rejected;
    std::vector<std::string> errata;

    const SubjectRecord* find_subject(const std::string& id) const
    {
        for (const auto& s : subjects)
            if (s.subject_id == id) return &s;
        return nullptr;
    }
};

inline void to_json(nlohmann::json& j, const VideoRecord& v)
{
    j = {{"age", v.age},
         {"path", v.path},
         {"frame_count", v.frame_count},
         {"motion_seed", v.motion_seed},
         {"sharpness", v.sharpness}};
}

inline void from_json(const nlohmann::json& j, VideoRecord& v)
{
    v.age = j.at("age").get<double>();
    v.path = j.at("path").get<std::string>();
    v.frame_count = j.at("frame_count").get<std::size_t>();
    v.motion_seed = j.at("motion_seed").get<std::uint64_t>();
    v.sharpness = j.value("sharpness", 0.0);
}

inline void to_json(nlohmann::json& j, const SubjectRecord& s)
{
    j = {{"subject_id", s.subject_id}, {"identity_seed", s.identity_seed}, {"motion_seed", s.motion_seed},
         {"ages", s.ages},             {"videos", s.videos},               {"sharpness", s.sharpness}};
}

inline void from_json(const nlohmann::json& j, SubjectRecord& s)
{
    s.subject_id = j.at("subject_id").get<std::string>();
    s.identity_seed = j.at("identity_seed").get<std::uint64_t>();
    s.motion_seed = j.at("motion_seed").get<std::uint64_t>();
    s.ages = j.at("ages").get<std::vector<double>>();
    s.videos = j.at("videos").get<std::vector<VideoRecord>>();
    s.sharpness = j.value("sharpness", 0.0);
}

inline void to_json(nlohmann::json& j, const RejectedClip& r)
{
    j = {{"subject_id", r.subject_id}, {"age", r.age}, {"sharpness", r.sharpness}, {"reason", r.reason}};
}

inline void from_json(const nlohmann::json& j, RejectedClip& r)
{
    r.subject_id = j.at("subject_id").get<std::string>();
    r.age = j.at("age").get<double>();
    r.sharpness = j.value("sharpness", 0.0);
    r.reason = j.value("reason", std::string{});
}

inline void to_json(nlohmann::json& j, const DatasetManifest& m)
{
    j = {{"version", DatasetManifest::kVersion},
         {"resolution", m.resolution},
         {"keyframes_per_video", m.keyframes_per_video},
         {"recursion_depth", m.recursion_depth},
         {"frames_per_video", m.frames_per_video},
         {"sharpness_threshold", m.sharpness_threshold},
         {"seed", m.seed},
         {"backend", m.backend},
         {"subjects", m.subjects},
         {"rejected", m.rejected},
         {"errata", m.errata}};
}

inline void from_json(const nlohmann::json& j, DatasetManifest& m)
{
    if (j.value("version", 0) != DatasetManifest::kVersion)
        throw ManifestError("unsupported manifest version " + j.value("version", nlohmann::json()).dump());
    m.resolution = j.at("resolution").get<int>();
    m.keyframes_per_video = j.at("keyframes_per_video").get<int>();
    m.recursion_depth = j.at("recursion_depth").get<int>();
    m.frames_per_video = j.at("frames_per_video").get<std::size_t>();
    m.sharpness_threshold = j.at("sharpness_threshold").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.backend = j.value("backend", std::string{});
    m.subjects = j.at("subjects").get<std::vector<SubjectRecord>>();
    m.rejected = j.value("rejected", std::vector<RejectedClip>{});
    m.errata = j.value("errata", std::vector<std::string>{});
}

/// Checks the paired-video invariants. With `root` set, every referenced clip
/// directory is opened and its meta.json cross-checked as well.
inline void validate_manifest(const DatasetManifest& m, const std::optional<std::filesystem::path>& root = std::nullopt)
{
    for (const auto& s : m.subjects) {
        const std::string who = "subject " + s.subject_id + ": ";
        if (s.ages.empty()) throw ManifestError(who + "no ages listed");
        for (double age : s.ages)
            if (!s.video_for_age(age)) throw ManifestError(who + "missing video for age " + std::to_string(age));
        if (s.videos.size() != s.ages.size())
            throw ManifestError(who + "video count does not match age count");
        for (const auto& v : s.videos) {
            if (v.frame_count != s.videos.front().frame_count)
                throw ManifestError(who + "per-age videos differ in frame_count");
            if (v.frame_count != m.frames_per_video)
                throw ManifestError(who + "video frame_count " + std::to_string(v.frame_count) +
                                    " differs from manifest frames_per_video " + std::to_string(m.frames_per_video));
            if (v.motion_seed != s.motion_seed) throw ManifestError(who + "per-age videos differ in motion_seed");
            if (v.sharpness < m.sharpness_threshold)
                throw ManifestError(who + "accepted video below sharpness threshold");
            if (root) {
                const auto dir = *root / v.path;
                const auto meta = read_json_file(dir / "meta.json");
                if (meta.at("frame_count").get<std::size_t>() != v.frame_count)
                    throw ManifestError(who + "clip " + v.path + " frame_count differs from manifest");
                if (meta.at("motion_seed").get<std::uint64_t>() != v.motion_seed)
                    throw ManifestError(who + "clip " + v.path + " motion_seed differs from manifest");
                if (list_frame_files(dir).size() != v.frame_count)
                    throw ManifestError(who + "clip " + v.path + " has wrong number of frame files");
            }
        }
    }
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path)
{
    write_json_file(path, nlohmann::json(m));
}

inline DatasetManifest load_manifest(const std::filesystem::path& path)
{
    try {
        return read_json_file(path).get<DatasetManifest>();
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("malformed manifest " + path.string() + ": " + e.what());
    }
}

} // namespace reage
