#pragma once

#include "reage/datamodel/clip.hpp"
#include "reage/datamodel/luma.hpp"
#include "reage/nn/tensor.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace reage::metrics {

enum class Region { LeftEye, RightEye, Mouth };

inline constexpr std::array<Region, 3> kRegions{Region::LeftEye, Region::RightEye, Region::Mouth};

inline std::string to_string(Region r)
{
    switch (r) {
    case Region::LeftEye: return "left_eye";
    case Region::RightEye: return "right_eye";
    case Region::Mouth: return "mouth";
    }
    return "?";
}

/// Box geometry relative to the inter-ocular distance.
struct RoiConfig {
    double side_fraction = 0.25;
};

/// Square boxes centred on the outer eye corners and on the midpoint of the
/// mouth corners, clipped to the frame. Order follows kRegions.
inline std::array<PixelBox, 3> roi_boxes(const Landmarks& lm, int height, int width, const RoiConfig& c = {})
{
    const double iod = std::hypot(lm.right_eye_outer.x - lm.left_eye_outer.x, lm.right_eye_outer.y - lm.left_eye_outer.y);
    const double side = std::max(1.0, c.side_fraction * iod);
    const Point2 mouth{0.5 * (lm.mouth_left.x + lm.mouth_right.x), 0.5 * (lm.mouth_left.y + lm.mouth_right.y)};
    return {centred_box(lm.left_eye_outer.x, lm.left_eye_outer.y, side, height, width),
            centred_box(lm.right_eye_outer.x, lm.right_eye_outer.y, side, height, width),
            centred_box(mouth.x, mouth.y, side, height, width)};
}

/// Pixels of `f` inside `b` as a C x h x w tensor.
template <typename T = double>
nn::Tensor<T> crop(const Frame& f, const PixelBox& b)
{
    if (b.empty()) throw ValidationError("empty region of interest");
    nn::Tensor<T> out(f.channels(), b.height(), b.width());
    for (int c = 0; c < f.channels(); ++c)
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) out.at(c, y - b.y0, x - b.x0) = static_cast<T>(f.at(c, y, x));
    return out;
}

/// Supplies per-frame landmarks for a clip.
class LandmarkBackend {
public:
    virtual ~LandmarkBackend() = default;
    virtual std::string name() const = 0;
    virtual std::vector<Landmarks> landmarks(const VideoClip& clip) const = 0;
};

/// Landmarks stored with the clip (synthetic clips carry analytic ones).
class ClipLandmarks final : public LandmarkBackend {
public:
    std::string name() const override { return "clip"; }
    std::vector<Landmarks> landmarks(const VideoClip& clip) const override
    {
        if (clip.landmarks().size() != clip.frame_count())
            throw MetricError("clip '" + clip.subject_id() + "' carries no per-frame landmarks");
        return clip.landmarks();
    }
};

/// The same landmarks for every frame.
class FixedLandmarks final : public LandmarkBackend {
public:
    explicit FixedLandmarks(Landmarks lm) : lm_(lm) {}
    std::string name() const override { return "fixed"; }
    std::vector<Landmarks> landmarks(const VideoClip& clip) const override
    {
        return std::vector<Landmarks>(clip.frame_count(), lm_);
    }

private:
    Landmarks lm_;
};

/// Copy of `f` with the outline of each box drawn in white.
inline Frame draw_boxes(const Frame& f, const std::array<PixelBox, 3>& boxes)
{
    auto t = f.to_tensor<float>();
    for (const auto& b : boxes) {
        if (b.empty()) continue;
        for (int c = 0; c < t.channels(); ++c) {
            for (int x = b.x0; x < b.x1; ++x) {
                t.at(c, b.y0, x) = 1.0f;
                t.at(c, b.y1 - 1, x) = 1.0f;
            }
            for (int y = b.y0; y < b.y1; ++y) {
                t.at(c, y, b.x0) = 1.0f;
                t.at(c, y, b.x1 - 1) = 1.0f;
            }
        }
    }
    return Frame::from_tensor(t);
}

} // namespace reage::metrics
