#pragma once

#include "reage/core/log.hpp"
#include "reage/datamodel/clip.hpp"
#include "reage/datamodel/masked_frame.hpp"
#include "reage/generator/unet.hpp"

#include <array>
#include <string>
#include <vector>

namespace reage::gen {

/// Hidden feature map and previous output carried between time steps.
template <typename T>
struct RecurrentState {
    nn::Tensor<T> hidden;      ///< hidden_channels x H x W
    nn::Tensor<T> prev_output; ///< 3 x H x W

    /// Zero hidden state; the previous output starts as the first input frame.
    static RecurrentState initial(const GeneratorConfig& c, const nn::Tensor<T>& first_frame_rgb)
    {
        return {nn::Tensor<T>(c.hidden_channels, first_frame_rgb.height(), first_frame_rgb.width()), first_frame_rgb};
    }
};

/// Output of one recurrent-block evaluation.
template <typename T>
struct BlockOutput {
    nn::Tensor<T> hidden; ///< after the leaky activation
    nn::Tensor<T> delta;  ///< 3-channel residual, unbounded
    nn::Tensor<T> raw;    ///< linear network output (3 + hidden channels)
};

/// Element-wise input + delta, clamped to [-1, 1].
template <typename T>
nn::Tensor<T> compose_output(const nn::Tensor<T>& delta, const nn::Tensor<T>& input)
{
    delta.require_same_shape(input, "compose_output");
    nn::Tensor<T> out(input.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(delta[i] + input[i], T(-1), T(1));
    return out;
}

inline Frame compose_output(const nn::Tensor<float>& delta, const Frame& input)
{
    return Frame::from_tensor(compose_output(delta, input.to_tensor<float>()));
}

/// (previous, current, next) frame indices for every time step, with the
/// neighbours clamped into [0, n).
inline std::vector<std::array<std::size_t, 3>> neighbor_indices(std::size_t n, std::size_t interval)
{
    if (interval < 1) throw ValidationError("frame interval must be >= 1");
    std::vector<std::array<std::size_t, 3>> out(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = {t >= interval ? t - interval : 0, t, std::min(t + interval, n - 1)};
    return out;
}

/// Recurrent video generator: a shared U-Net block applied per time step.
template <typename T>
class Generator {
public:
    struct StepCache {
        typename UNet<T>::Cache unet;
        nn::Tensor<T> raw;
        nn::Tensor<T> composed_sum; ///< delta + input before clamping
    };

    /// Everything forward_sequence() retains for backward_sequence().
    struct Rollout {
        std::vector<StepCache> steps;
        std::vector<nn::Tensor<T>> outputs;
        std::vector<nn::Tensor<T>> deltas;
    };

    Generator() = default;
    Generator(const GeneratorConfig& config, std::uint64_t seed, nn::InitMode mode = nn::InitMode::FanInNormal)
        : config_(config), unet_(config, mode, seed)
    {}

    const GeneratorConfig& config() const { return config_; }
    UNet<T>& unet() { return unet_; }
    const UNet<T>& unet() const { return unet_; }

    void visit(const nn::ParamVisitor<T>& fn)
    {
        unet_.visit([&](const std::string& name, nn::Param<T>& p) { fn("gen/" + name, p); });
    }

    void zero_grad()
    {
        visit([](const std::string&, nn::Param<T>& p) { p.zero_grad(); });
    }

    std::size_t parameter_count() const { return unet_.parameter_count(); }

    /// One recurrent step: concatenates the three masked frames, the previous
    /// output and the hidden state, and splits the network output.
    BlockOutput<T> block_forward(const nn::Tensor<T>& prev_masked, const nn::Tensor<T>& curr_masked,
                                 const nn::Tensor<T>& next_masked, const RecurrentState<T>& state,
                                 typename UNet<T>::Cache* cache = nullptr) const
    {
        check_input(curr_masked);
        const auto x = nn::concat_channels<T>({&prev_masked, &curr_masked, &next_masked, &state.prev_output, &state.hidden});
        if (x.channels() != config_.input_channels())
            throw ValidationError("recurrent block input has " + std::to_string(x.channels()) + " channels, expected " +
                                  std::to_string(config_.input_channels()));
        BlockOutput<T> out;
        out.raw = unet_.forward(x, cache);
        out.delta = nn::slice_channels(out.raw, 0, GeneratorConfig::kFrameChannels);
        out.hidden = nn::leaky_relu(nn::slice_channels(out.raw, GeneratorConfig::kFrameChannels, config_.hidden_channels),
                                    config_.leaky_slope);
        return out;
    }

    /// Runs the recurrence over RGB frames (3 x H x W each). Neighbours are
    /// `interval` steps apart, clamped at the ends; the state threads through
    /// the frames in order. Pass `rollout` to enable backward_sequence().
    std::vector<nn::Tensor<T>> forward_sequence(const std::vector<nn::Tensor<T>>& frames, AgeValue input_age,
                                                AgeValue target_age, std::size_t interval,
                                                Rollout* rollout = nullptr) const
    {
        if (frames.empty()) throw ValidationError("cannot generate from an empty frame sequence");
        std::vector<nn::Tensor<T>> masked;
        masked.reserve(frames.size());
        for (const auto& f : frames) masked.push_back(mask_tensor(f, input_age, target_age));
        const auto idx = neighbor_indices(frames.size(), interval);

        if (rollout) *rollout = Rollout{};
        auto state = RecurrentState<T>::initial(config_, frames.front());
        std::vector<nn::Tensor<T>> outputs;
        outputs.reserve(frames.size());
        for (std::size_t t = 0; t < frames.size(); ++t) {
            StepCache step;
            auto res = block_forward(masked[idx[t][0]], masked[idx[t][1]], masked[idx[t][2]], state,
                                     rollout ? &step.unet : nullptr);
            nn::Tensor<T> sum(frames[t].shape());
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = res.delta[i] + frames[t][i];
            auto out = compose_output(res.delta, frames[t]);
            state.hidden = std::move(res.hidden);
            state.prev_output = out;
            if (rollout) {
                step.raw = std::move(res.raw);
                step.composed_sum = std::move(sum);
                rollout->steps.push_back(std::move(step));
                rollout->deltas.push_back(std::move(res.delta));
                rollout->outputs.push_back(out);
            }
            outputs.push_back(std::move(out));
        }
        return outputs;
    }

    /// Back-propagation through time. `grad_outputs[t]` is dL/d(output t);
    /// `grad_deltas` (optional, may be empty) adds dL/d(delta t). Parameter
    /// gradients are accumulated.
    void backward_sequence(const Rollout& r, const std::vector<nn::Tensor<T>>& grad_outputs,
                           const std::vector<nn::Tensor<T>>& grad_deltas = {})
    {
        const std::size_t n = r.steps.size();
        if (grad_outputs.size() != n) throw ValidationError("backward_sequence: gradient count mismatch");
        const int fc = GeneratorConfig::kFrameChannels;
        const int prev_out_offset = GeneratorConfig::kNeighbors * GeneratorConfig::kMaskedChannels;
        const int hidden_offset = prev_out_offset + fc;

        nn::Tensor<T> carry_out;    // dL/d(output t) arriving from step t+1
        nn::Tensor<T> carry_hidden; // dL/d(hidden t) arriving from step t+1
        for (std::size_t t = n; t-- > 0;) {
            const auto& step = r.steps[t];
            nn::Tensor<T> g_out = grad_outputs[t];
            if (!carry_out.empty()) g_out += carry_out;
            nn::Tensor<T> g_delta(g_out.shape());
            for (std::size_t i = 0; i < g_out.size(); ++i) {
                const T s = step.composed_sum[i];
                g_delta[i] = (s >= T(-1) && s <= T(1)) ? g_out[i] : T(0);
            }
            if (!grad_deltas.empty() && !grad_deltas[t].empty()) g_delta += grad_deltas[t];

            nn::Tensor<T> g_hidden_pre(nn::Shape{config_.hidden_channels, 1, step.raw.height(), step.raw.width()});
            if (!carry_hidden.empty())
                g_hidden_pre = nn::leaky_relu_backward(nn::slice_channels(step.raw, fc, config_.hidden_channels),
                                                       carry_hidden, config_.leaky_slope);
            const auto g_raw = nn::concat_channels<T>({&g_delta, &g_hidden_pre});
            const auto g_x = unet_.backward(step.unet, g_raw);
            carry_out = nn::slice_channels(g_x, prev_out_offset, fc);
            carry_hidden = nn::slice_channels(g_x, hidden_offset, config_.hidden_channels);
        }
    }

    /// Re-ages a clip. Frame t is produced from frames t - interval, t and
    /// t + interval (indices clamped into the clip).
    VideoClip generate_video(const VideoClip& clip, AgeValue input_age, AgeValue target_age, std::size_t interval = 1,
                             RunLog* log = nullptr) const
    {
        if (interval < 1) throw ValidationError("frame interval must be >= 1");
        if (interval >= clip.frame_count() && log)
            log->warn("frame interval " + std::to_string(interval) + " >= clip length " +
                      std::to_string(clip.frame_count()) + "; all neighbours clamp to the clip boundaries");
        std::vector<nn::Tensor<T>> frames;
        frames.reserve(clip.frame_count());
        for (const auto& f : clip.frames()) frames.push_back(f.to_tensor<T>());
        auto outs = forward_sequence(frames, input_age, target_age, interval);
        std::vector<Frame> result;
        result.reserve(outs.size());
        for (const auto& o : outs) result.push_back(Frame::from_tensor(o));
        return clip.with_frames(std::move(result)).set_apparent_age(target_age);
    }

    /// Architecture shape walk for one recurrent block at the configured
    /// resolution, followed by the whole-generator rows for an N-frame video.
    nn::ShapeTrace trace(int frames_in_video = 1) const
    {
        const int r = config_.resolution;
        nn::ShapeTrace rows;
        rows.push_back({"Input (Video)", {r, r, GeneratorConfig::kNeighbors, GeneratorConfig::kMaskedChannels}});
        rows.push_back({"Reshape", {r, r, GeneratorConfig::kNeighbors * GeneratorConfig::kMaskedChannels}});
        rows.push_back({"Previous Hidden State", {r, r, config_.hidden_channels}});
        rows.push_back({"Previous Output", {r, r, GeneratorConfig::kFrameChannels}});
        rows.push_back({"Concatenation", {r, r, config_.input_channels()}});
        for (auto& row : unet_.trace(nn::Shape{config_.input_channels(), 1, r, r})) rows.push_back(std::move(row));
        rows.push_back({"Output Delta Image", {r, r, GeneratorConfig::kFrameChannels}});
        rows.push_back({"Output Hidden State + LeakyReLU", {r, r, config_.hidden_channels}});
        rows.push_back({"Generator Input (Video)", {r, r, frames_in_video, GeneratorConfig::kFrameChannels}});
        rows.push_back({"Recurrent Blocks", {r, r, frames_in_video, config_.output_channels()}});
        rows.push_back({"Generator Output (Video)", {r, r, frames_in_video, GeneratorConfig::kFrameChannels}});
        return rows;
    }

private:
    void check_input(const nn::Tensor<T>& masked) const
    {
        const int div = 1 << config_.depth;
        if (masked.height() % div != 0 || masked.width() % div != 0)
            throw ConfigError("spatial size " + std::to_string(masked.height()) + "x" + std::to_string(masked.width()) +
                              " is not divisible by 2^" + std::to_string(config_.depth));
    }

    GeneratorConfig config_{};
    UNet<T> unet_;
};

} // namespace reage::gen
