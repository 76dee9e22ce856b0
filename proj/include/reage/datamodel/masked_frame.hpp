#pragma once

#include "reage/datamodel/age.hpp"
#include "reage/datamodel/frame.hpp"

namespace reage {

/// Spatially constant plane holding a normalized age.
class AgeMask {
public:
    AgeMask() = default;
    AgeMask(int height, int width, float value) : height_(height), width_(width), value_(value)
    {
        if (height <= 0 || width <= 0) throw ValidationError("age mask dimensions must be positive");
        if (!(value >= 0.0f && value <= 1.0f)) throw ValidationError("age mask value outside [0, 1]");
    }

    int height() const { return height_; }
    int width() const { return width_; }
    float value() const { return value_; }

    template <typename T = float>
    nn::Tensor<T> to_tensor() const
    {
        return nn::Tensor<T>(1, height_, width_, static_cast<T>(value_));
    }

private:
    int height_ = 0;
    int width_ = 0;
    float value_ = 0.0f;
};

inline AgeMask make_age_mask(AgeValue age, int height, int width)
{
    return AgeMask(height, width, static_cast<float>(age.normalized()));
}

/// RGB frame followed by the input-age and target-age planes (5 channels).
class MaskedFrame {
public:
    static constexpr int kChannels = 5;

    MaskedFrame(Frame frame, AgeMask input_mask, AgeMask target_mask)
        : frame_(std::move(frame)), input_(input_mask), target_(target_mask)
    {
        if (input_.height() != frame_.height() || input_.width() != frame_.width() ||
            target_.height() != frame_.height() || target_.width() != frame_.width())
            throw ValidationError("age mask size does not match frame " + frame_.dims_string());
    }

    const Frame& frame() const { return frame_; }
    const AgeMask& input_mask() const { return input_; }
    const AgeMask& target_mask() const { return target_; }
    int channels() const { return frame_.channels() + 2; }

    template <typename T = float>
    nn::Tensor<T> to_tensor() const
    {
        const auto rgb = frame_.to_tensor<T>();
        const auto mi = input_.to_tensor<T>();
        const auto mt = target_.to_tensor<T>();
        return nn::concat_channels<T>({&rgb, &mi, &mt});
    }

private:
    Frame frame_;
    AgeMask input_;
    AgeMask target_;
};

inline MaskedFrame mask_frame(const Frame& frame, AgeValue input_age, AgeValue target_age)
{
    return MaskedFrame(frame, make_age_mask(input_age, frame.height(), frame.width()),
                       make_age_mask(target_age, frame.height(), frame.width()));
}

/// Builds the 5-channel tensor directly from an RGB tensor.
template <typename T>
nn::Tensor<T> mask_tensor(const nn::Tensor<T>& rgb, AgeValue input_age, AgeValue target_age)
{
    const nn::Tensor<T> mi(1, rgb.height(), rgb.width(), static_cast<T>(static_cast<float>(input_age.normalized())));
    const nn::Tensor<T> mt(1, rgb.height(), rgb.width(), static_cast<T>(static_cast<float>(target_age.normalized())));
    return nn::concat_channels<T>({&rgb, &mi, &mt});
}

} // namespace reage
