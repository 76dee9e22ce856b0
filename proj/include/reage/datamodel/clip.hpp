#pragma once

#include "reage/datamodel/age.hpp"
#include "reage/datamodel/frame.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace reage {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

/// Facial anchor points (pixel coordinates) used to place regions of interest.
struct Landmarks {
    Point2 left_eye_outer;
    Point2 right_eye_outer;
    Point2 mouth_left;
    Point2 mouth_right;
    bool operator==(const Landmarks&) const = default;
};

inline void to_json(nlohmann::json& j, const Landmarks& l)
{
    j = {{"left_eye_outer", {l.left_eye_outer.x, l.left_eye_outer.y}},
         {"right_eye_outer", {l.right_eye_outer.x, l.right_eye_outer.y}},
         {"mouth_left", {l.mouth_left.x, l.mouth_left.y}},
         {"mouth_right", {l.mouth_right.x, l.mouth_right.y}}};
}

inline void from_json(const nlohmann::json& j, Landmarks& l)
{
    auto pt = [&](const char* key) { return Point2{j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>()}; };
    l = {pt("left_eye_outer"), pt("right_eye_outer"), pt("mouth_left"), pt("mouth_right")};
}

/// Ordered frames of uniform size plus per-clip metadata.
class VideoClip {
public:
    VideoClip() = default;

    explicit VideoClip(std::vector<Frame> frames, std::string subject_id = {},
                       std::optional<AgeValue> apparent_age = std::nullopt)
        : frames_(std::move(frames)), subject_id_(std::move(subject_id)), apparent_age_(apparent_age)
    {
        if (frames_.empty()) throw ValidationError("clip has no frames");
        for (std::size_t i = 1; i < frames_.size(); ++i)
            if (!frames_[i].same_dims(frames_[0]))
                throw ValidationError("frame " + std::to_string(i) + " is " + frames_[i].dims_string() +
                                      ", expected " + frames_[0].dims_string());
    }

    const std::vector<Frame>& frames() const { return frames_; }
    const Frame& frame(std::size_t i) const { return frames_.at(i); }
    std::size_t frame_count() const { return frames_.size(); }
    int height() const { return frames_.empty() ? 0 : frames_[0].height(); }
    int width() const { return frames_.empty() ? 0 : frames_[0].width(); }
    int channels() const { return frames_.empty() ? 0 : frames_[0].channels(); }

    const std::string& subject_id() const { return subject_id_; }
    const std::optional<AgeValue>& apparent_age() const { return apparent_age_; }
    const std::optional<std::uint64_t>& motion_seed() const { return motion_seed_; }
    /// Per-frame landmarks; empty when unknown.
    const std::vector<Landmarks>& landmarks() const { return landmarks_; }
    /// Free-form per-frame annotations (pose parameters for synthetic clips).
    const nlohmann::json& annotations() const { return annotations_; }

    VideoClip& set_subject_id(std::string id)
    {
        subject_id_ = std::move(id);
        return *this;
    }
    VideoClip& set_apparent_age(std::optional<AgeValue> age)
    {
        apparent_age_ = age;
        return *this;
    }
    VideoClip& set_motion_seed(std::optional<std::uint64_t> seed)
    {
        motion_seed_ = seed;
        return *this;
    }
    VideoClip& set_landmarks(std::vector<Landmarks> lm)
    {
        if (!lm.empty() && lm.size() != frames_.size())
            throw ValidationError("landmark count " + std::to_string(lm.size()) + " does not match frame count " +
                                  std::to_string(frames_.size()));
        landmarks_ = std::move(lm);
        return *this;
    }
    VideoClip& set_annotations(nlohmann::json a)
    {
        annotations_ = std::move(a);
        return *this;
    }

    /// Same metadata, different pixels (used for generated outputs).
    VideoClip with_frames(std::vector<Frame> frames) const
    {
        VideoClip out(std::move(frames), subject_id_, apparent_age_);
        out.motion_seed_ = motion_seed_;
        if (out.frame_count() == frame_count()) {
            out.landmarks_ = landmarks_;
            out.annotations_ = annotations_;
        }
        return out;
    }

    /// Frames in reverse temporal order; annotations follow.
    VideoClip reversed() const
    {
        std::vector<Frame> f(frames_.rbegin(), frames_.rend());
        VideoClip out = with_frames(std::move(f));
        std::reverse(out.landmarks_.begin(), out.landmarks_.end());
        if (out.annotations_.is_array()) std::reverse(out.annotations_.begin(), out.annotations_.end());
        return out;
    }

    /// The first `n` frames (all if n >= frame_count); landmarks and
    /// annotations follow.
    VideoClip head(std::size_t n) const
    {
        if (n == 0) throw ValidationError("clip prefix must keep at least one frame");
        if (n >= frames_.size()) return *this;
        VideoClip out(std::vector<Frame>(frames_.begin(), frames_.begin() + static_cast<std::ptrdiff_t>(n)), subject_id_,
                      apparent_age_);
        out.motion_seed_ = motion_seed_;
        if (!landmarks_.empty()) out.landmarks_.assign(landmarks_.begin(), landmarks_.begin() + static_cast<std::ptrdiff_t>(n));
        if (annotations_.is_array() && annotations_.size() == frames_.size())
            out.annotations_ = nlohmann::json(std::vector<nlohmann::json>(annotations_.begin(), annotations_.begin() + static_cast<std::ptrdiff_t>(n)));
        else
            out.annotations_ = annotations_;
        return out;
    }

private:
    std::vector<Frame> frames_;
    std::string subject_id_;
    std::optional<AgeValue> apparent_age_;
    std::optional<std::uint64_t> motion_seed_;
    std::vector<Landmarks> landmarks_;
    nlohmann::json annotations_;
};

} // namespace reage
