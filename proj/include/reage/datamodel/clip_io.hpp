#pragma once

// Clip directory layout:
//
//   <clip>/frame_000001.png ... frame_NNNNNN.png   8-bit RGB, [-1, 1] mapped to [0, 255]
//   <clip>/meta.json                                subject_id, apparent_age, motion_seed,
//                                                   frame_count, optional landmarks/annotations

#include "reage/datamodel/clip.hpp"
#include "reage/datamodel/png_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace reage {

namespace fs = std::filesystem;

inline std::string frame_filename(std::size_t index_zero_based)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06zu.png", index_zero_based + 1);
    return buf;
}

inline void write_json_file(const fs::path& path, const nlohmann::json& j)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

inline nlohmann::json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

inline nlohmann::json clip_meta(const VideoClip& clip)
{
    nlohmann::json meta;
    meta["subject_id"] = clip.subject_id();
    meta["apparent_age"] = clip.apparent_age() ? nlohmann::json(clip.apparent_age()->years()) : nlohmann::json();
    meta["motion_seed"] = clip.motion_seed() ? nlohmann::json(*clip.motion_seed()) : nlohmann::json();
    meta["frame_count"] = clip.frame_count();
    if (!clip.landmarks().empty()) meta["landmarks"] = clip.landmarks();
    if (!clip.annotations().is_null()) meta["annotations"] = clip.annotations();
    return meta;
}

/// Writes frames and meta.json; stale frame files in the directory are removed.
inline void save_clip(const VideoClip& clip, const fs::path& dir)
{
    fs::create_directories(dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("frame_", 0) == 0 && entry.path().extension() == ".png") fs::remove(entry.path());
    }
    for (std::size_t i = 0; i < clip.frame_count(); ++i) save_frame_png(clip.frame(i), dir / frame_filename(i));
    write_json_file(dir / "meta.json", clip_meta(clip));
}

inline std::vector<fs::path> list_frame_files(const fs::path& dir)
{
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) throw IoError("clip directory " + dir.string() + " does not exist");
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("frame_", 0) == 0 && entry.path().extension() == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

inline VideoClip load_clip(const fs::path& dir)
{
    const auto files = list_frame_files(dir);
    if (files.empty()) throw IoError("no frames in " + dir.string());
    std::vector<Frame> frames;
    frames.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        try {
            frames.push_back(load_frame_png(files[i]));
        } catch (const Error& e) {
            throw IoError("frame " + std::to_string(i + 1) + " (" + files[i].filename().string() +
                          ") could not be ingested: " + e.what());
        }
        if (i > 0 && !frames[i].same_dims(frames[0]))
            throw IoError("frame " + std::to_string(i + 1) + " is " + frames[i].dims_string() + ", expected " +
                          frames[0].dims_string());
    }
    VideoClip clip(std::move(frames));
    const auto meta_path = dir / "meta.json";
    if (fs::exists(meta_path)) {
        const auto meta = read_json_file(meta_path);
        clip.set_subject_id(meta.value("subject_id", std::string{}));
        if (meta.contains("apparent_age") && !meta["apparent_age"].is_null())
            clip.set_apparent_age(AgeValue(meta["apparent_age"].get<double>()));
        if (meta.contains("motion_seed") && !meta["motion_seed"].is_null())
            clip.set_motion_seed(meta["motion_seed"].get<std::uint64_t>());
        if (meta.contains("frame_count") && meta["frame_count"].get<std::size_t>() != clip.frame_count())
            throw IoError("meta.json in " + dir.string() + " declares " + meta["frame_count"].dump() +
                          " frames but " + std::to_string(clip.frame_count()) + " were found");
        if (meta.contains("landmarks")) clip.set_landmarks(meta["landmarks"].get<std::vector<Landmarks>>());
        if (meta.contains("annotations")) clip.set_annotations(meta["annotations"]);
    }
    return clip;
}

} // namespace reage
