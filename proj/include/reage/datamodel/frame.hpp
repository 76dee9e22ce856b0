#pragma once

#include "reage/core/error.hpp"
#include "reage/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace reage {

/// Spatial sizes must survive four halvings of the recurrent block.
inline constexpr int kFrameAlignment = 16;

/// Immutable image with values in [-1, 1], stored channel-major (CHW).
class Frame {
public:
    Frame() = default;

    Frame(int height, int width, int channels = 3, float fill = 0.0f)
        : Frame(height, width, channels,
                std::vector<float>(static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0) *
                                       std::max(channels, 0),
                                   fill))
    {}

    /// Values outside [-1, 1] are clamped.
    Frame(int height, int width, int channels, std::vector<float> data)
        : height_(height), width_(width), channels_(channels), data_(std::move(data))
    {
        validate_dims(height, width, channels);
        if (data_.size() != static_cast<std::size_t>(height) * width * channels)
            throw ValidationError("frame data size does not match " + dims_string());
        for (auto& v : data_) v = std::clamp(v, -1.0f, 1.0f);
    }

    template <typename T>
    static Frame from_tensor(const nn::Tensor<T>& t)
    {
        if (t.depth() != 1) throw ValidationError("frame tensor must be planar");
        std::vector<float> data(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) data[i] = static_cast<float>(t[i]);
        return Frame(t.height(), t.width(), t.channels(), std::move(data));
    }

    template <typename T = float>
    nn::Tensor<T> to_tensor() const
    {
        nn::Tensor<T> t(channels_, height_, width_);
        for (std::size_t i = 0; i < data_.size(); ++i) t[i] = static_cast<T>(data_[i]);
        return t;
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    std::span<const float> data() const { return data_; }

    float at(int c, int y, int x) const
    {
        return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
    }

    bool same_dims(const Frame& o) const
    {
        return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
    }

    std::string dims_string() const
    {
        return std::to_string(height_) + "x" + std::to_string(width_) + "x" + std::to_string(channels_);
    }

    bool operator==(const Frame&) const = default;

    static void validate_dims(int height, int width, int channels)
    {
        if (height <= 0 || width <= 0 || channels <= 0)
            throw ValidationError("frame dimensions must be positive");
        if (height % kFrameAlignment != 0 || width % kFrameAlignment != 0)
            throw ValidationError("frame size " + std::to_string(height) + "x" + std::to_string(width) +
                                  " is not divisible by " + std::to_string(kFrameAlignment));
    }

private:
    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Largest absolute per-sample difference between two equally sized frames.
inline float max_abs_diff(const Frame& a, const Frame& b)
{
    if (!a.same_dims(b)) throw ValidationError("frame size mismatch: " + a.dims_string() + " vs " + b.dims_string());
    float m = 0.0f;
    auto da = a.data(), db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
    return m;
}

/// Mean absolute difference.
inline double mean_abs_diff(const Frame& a, const Frame& b)
{
    if (!a.same_dims(b)) throw ValidationError("frame size mismatch: " + a.dims_string() + " vs " + b.dims_string());
    double s = 0.0;
    auto da = a.data(), db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) s += std::abs(static_cast<double>(da[i]) - db[i]);
    return s / static_cast<double>(da.size());
}

} // namespace reage
