#pragma once

#include "reage/datamodel/masked_frame.hpp"
#include "reage/discriminator/conv_stack.hpp"
#include "reage/nn/trace.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace reage::disc {

/// What the video discriminator looks at.
enum class VideoDiscInput { Outputs, Deltas };

inline std::string to_string(VideoDiscInput v) { return v == VideoDiscInput::Outputs ? "outputs" : "deltas"; }

inline VideoDiscInput parse_video_disc_input(const std::string& s)
{
    if (s == "outputs") return VideoDiscInput::Outputs;
    if (s == "deltas") return VideoDiscInput::Deltas;
    throw ConfigError("video_disc_input must be 'outputs' or 'deltas', got '" + s + "'");
}

/// PatchGAN image discriminator: three 4x4 stride-2 convolutions followed by
/// two 4x4 stride-1 convolutions, conditioned on the target-age mask.
struct ImageDiscConfig {
    static constexpr int kInChannels = 4;
    std::array<int, 4> widths{64, 128, 256, 512};
    double leaky_slope = 0.2;
    bool final_activation = true;

    std::vector<nn::ConvSpec> specs() const
    {
        std::vector<nn::ConvSpec> s;
        int in = kInChannels;
        for (int i = 0; i < 3; ++i) {
            s.push_back(nn::ConvSpec::planar(in, widths[i], 4, 2, nn::Pad{1, 1}));
            in = widths[i];
        }
        s.push_back(nn::ConvSpec::planar(in, widths[3], 4, 1, nn::same_pad(4)));
        s.push_back(nn::ConvSpec::planar(widths[3], 1, 4, 1, nn::same_pad(4)));
        return s;
    }
};

/// 3D-convolutional video discriminator over three consecutive frames. Kernels
/// are 4x4x4; the first layer pads time by 2 on both sides (3 -> 4 steps) and
/// later layers use same padding, so the time axis stays at 4.
struct VideoDiscConfig {
    static constexpr int kInChannels = 4;
    static constexpr int kTemporalExtent = 3;
    std::array<int, 4> widths{32, 64, 128, 256};
    double leaky_slope = 0.2;
    bool final_activation = true;
    VideoDiscInput input = VideoDiscInput::Outputs;

    std::vector<nn::ConvSpec> specs() const
    {
        std::vector<nn::ConvSpec> s;
        auto conv3d = [](int in, int out, int spatial_stride, nn::Pad time_pad) {
            const nn::Pad sp = spatial_stride == 2 ? nn::Pad{1, 1} : nn::same_pad(4);
            return nn::ConvSpec{in, out, 4, 4, 4, 1, spatial_stride, spatial_stride, time_pad, sp, sp, true};
        };
        s.push_back(conv3d(kInChannels, widths[0], 2, nn::Pad{2, 2}));
        s.push_back(conv3d(widths[0], widths[1], 2, nn::same_pad(4)));
        s.push_back(conv3d(widths[1], widths[2], 2, nn::same_pad(4)));
        s.push_back(conv3d(widths[2], widths[3], 1, nn::same_pad(4)));
        s.push_back(conv3d(widths[3], 1, 1, nn::same_pad(4)));
        return s;
    }
};

inline void to_json(nlohmann::json& j, const ImageDiscConfig& c)
{
    j = {{"widths", c.widths}, {"leaky_slope", c.leaky_slope}, {"final_activation", c.final_activation}};
}
inline void from_json(const nlohmann::json& j, ImageDiscConfig& c)
{
    const ImageDiscConfig d;
    c.widths = j.value("widths", d.widths);
    c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
    c.final_activation = j.value("final_activation", d.final_activation);
}
inline void to_json(nlohmann::json& j, const VideoDiscConfig& c)
{
    j = {{"widths", c.widths},
         {"leaky_slope", c.leaky_slope},
         {"final_activation", c.final_activation},
         {"video_disc_input", to_string(c.input)}};
}
inline void from_json(const nlohmann::json& j, VideoDiscConfig& c)
{
    const VideoDiscConfig d;
    c.widths = j.value("widths", d.widths);
    c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
    c.final_activation = j.value("final_activation", d.final_activation);
    c.input = parse_video_disc_input(j.value("video_disc_input", to_string(d.input)));
}

template <typename T>
class ImageDiscriminator {
public:
    using Cache = typename ConvStack<T>::Cache;

    ImageDiscriminator() = default;
    ImageDiscriminator(const ImageDiscConfig& config, std::uint64_t seed, nn::InitMode mode = nn::InitMode::FanInNormal)
        : config_(config), stack_("disc_image", config.specs(), config.leaky_slope, config.final_activation, mode, seed)
    {}

    const ImageDiscConfig& config() const { return config_; }
    ConvStack<T>& stack() { return stack_; }

    void visit(const nn::ParamVisitor<T>& fn) { stack_.visit(fn); }
    void zero_grad()
    {
        visit([](const std::string&, nn::Param<T>& p) { p.zero_grad(); });
    }

    /// Score map for a 3-channel image and a constant target-age plane.
    nn::Tensor<T> forward(const nn::Tensor<T>& rgb, float target_mask_value, Cache* cache = nullptr) const
    {
        const nn::Tensor<T> mask(1, rgb.height(), rgb.width(), static_cast<T>(target_mask_value));
        return stack_.forward(nn::concat_channels<T>({&rgb, &mask}), cache);
    }

    nn::Tensor<T> forward(const Frame& frame, const AgeMask& target_mask, Cache* cache = nullptr) const
    {
        if (frame.height() != target_mask.height() || frame.width() != target_mask.width())
            throw ValidationError("image discriminator: frame " + frame.dims_string() + " and age mask differ in size");
        return forward(frame.to_tensor<T>(), target_mask.value(), cache);
    }

    /// Returns dL/d(rgb input).
    nn::Tensor<T> backward(const Cache& cache, const nn::Tensor<T>& grad_scores, bool param_grads = true)
    {
        return nn::slice_channels(stack_.backward(cache, grad_scores, param_grads), 0, 3);
    }

    /// Shape rows for an input of the given resolution.
    nn::ShapeTrace trace(int resolution) const
    {
        nn::ShapeTrace rows{{"Video with Target Mask", {resolution, resolution, ImageDiscConfig::kInChannels}}};
        const char* labels[] = {"4x4 Conv", "4x4 Conv", "4x4 Conv", "4x4 Conv (Stride = 1)", "4x4 Conv (Stride = 1)"};
        const auto shapes = stack_.trace(nn::Shape{ImageDiscConfig::kInChannels, 1, resolution, resolution});
        for (std::size_t i = 0; i < shapes.size(); ++i) rows.push_back({labels[i], {shapes[i].h, shapes[i].w, shapes[i].c}});
        return rows;
    }

private:
    ImageDiscConfig config_{};
    ConvStack<T> stack_;
};

template <typename T>
class VideoDiscriminator {
public:
    using Cache = typename ConvStack<T>::Cache;

    VideoDiscriminator() = default;
    VideoDiscriminator(const VideoDiscConfig& config, std::uint64_t seed, nn::InitMode mode = nn::InitMode::FanInNormal)
        : config_(config), stack_("disc_video", config.specs(), config.leaky_slope, config.final_activation, mode, seed)
    {}

    const VideoDiscConfig& config() const { return config_; }
    ConvStack<T>& stack() { return stack_; }

    void visit(const nn::ParamVisitor<T>& fn) { stack_.visit(fn); }
    void zero_grad()
    {
        visit([](const std::string&, nn::Param<T>& p) { p.zero_grad(); });
    }

    /// Packs three 3-channel frames and the target mask into a 4 x 3 x H x W volume.
    static nn::Tensor<T> pack(std::span<const nn::Tensor<T>* const> frames, float target_mask_value)
    {
        if (frames.size() != VideoDiscConfig::kTemporalExtent)
            throw ValidationError("video discriminator needs exactly 3 frames, got " + std::to_string(frames.size()));
        const int h = frames[0]->height(), w = frames[0]->width();
        nn::Tensor<T> vol(nn::Shape{VideoDiscConfig::kInChannels, VideoDiscConfig::kTemporalExtent, h, w});
        for (int t = 0; t < VideoDiscConfig::kTemporalExtent; ++t) {
            const auto& f = *frames[static_cast<std::size_t>(t)];
            if (f.channels() != 3 || f.height() != h || f.width() != w)
                throw ValidationError("video discriminator frames must share one 3-channel size");
            for (int c = 0; c < 3; ++c)
                std::copy(f.channel(c), f.channel(c) + f.shape().plane(), &vol.at(c, t, 0, 0));
            std::fill(&vol.at(3, t, 0, 0), &vol.at(3, t, 0, 0) + f.shape().plane(), static_cast<T>(target_mask_value));
        }
        return vol;
    }

    nn::Tensor<T> forward(std::span<const nn::Tensor<T>* const> frames, float target_mask_value,
                          Cache* cache = nullptr) const
    {
        return stack_.forward(pack(frames, target_mask_value), cache);
    }

    nn::Tensor<T> forward(std::span<const Frame> frames, const AgeMask& target_mask, Cache* cache = nullptr) const
    {
        if (frames.size() != VideoDiscConfig::kTemporalExtent)
            throw ValidationError("video discriminator needs exactly 3 frames, got " + std::to_string(frames.size()));
        std::vector<nn::Tensor<T>> ts;
        for (const auto& f : frames) ts.push_back(f.to_tensor<T>());
        const std::array<const nn::Tensor<T>*, 3> ptrs{&ts[0], &ts[1], &ts[2]};
        return forward(ptrs, target_mask.value(), cache);
    }

    /// Returns dL/d(frame t) for t = 0..2.
    std::array<nn::Tensor<T>, 3> backward(const Cache& cache, const nn::Tensor<T>& grad_scores, bool param_grads = true)
    {
        const auto g = stack_.backward(cache, grad_scores, param_grads);
        std::array<nn::Tensor<T>, 3> out;
        for (int t = 0; t < 3; ++t) {
            out[static_cast<std::size_t>(t)] = nn::Tensor<T>(3, g.height(), g.width());
            for (int c = 0; c < 3; ++c)
                std::copy(&g.at(c, t, 0, 0), &g.at(c, t, 0, 0) + g.shape().plane(),
                          out[static_cast<std::size_t>(t)].channel(c));
        }
        return out;
    }

    /// Rows print (height, width, frames, channels) for the input and
    /// (height, width, channels, time) afterwards.
    nn::ShapeTrace trace(int resolution) const
    {
        nn::ShapeTrace rows{{"Video with Target Mask",
                             {resolution, resolution, VideoDiscConfig::kTemporalExtent, VideoDiscConfig::kInChannels}}};
        const char* labels[] = {"4x4 3D Conv", "4x4 3D Conv", "4x4 3D Conv", "4x4 3D Conv (Stride = 1)",
                                "4x4 3D Conv (Stride = 1)"};
        const auto shapes = stack_.trace(
            nn::Shape{VideoDiscConfig::kInChannels, VideoDiscConfig::kTemporalExtent, resolution, resolution});
        for (std::size_t i = 0; i < shapes.size(); ++i)
            rows.push_back({labels[i], {shapes[i].h, shapes[i].w, shapes[i].c, shapes[i].d}});
        return rows;
    }

private:
    VideoDiscConfig config_{};
    ConvStack<T> stack_;
};

} // namespace reage::disc
