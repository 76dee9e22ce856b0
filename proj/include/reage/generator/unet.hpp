#pragma once

#include "reage/generator/config.hpp"
#include "reage/nn/conv.hpp"
#include "reage/nn/ops.hpp"
#include "reage/nn/trace.hpp"

#include <string>
#include <vector>

namespace reage::gen {

/// U-Net body of the recurrent block.
///
/// Encoder: two 3x3 convolutions at full resolution, then `depth` stages of
/// MaxBlurPool + two 3x3 convolutions doubling the channels. Decoder: `depth`
/// stages of BlurUpSample + two 3x3 convolutions halving the channels, with the
/// same-resolution encoder output concatenated after the upsample when skips
/// are enabled. A final 1x1 convolution maps to output_channels(); its output
/// is left linear here (the block applies the hidden-state activation).
template <typename T>
class UNet {
public:
    /// Activations retained by forward() for backward().
    struct Cache {
        std::vector<nn::Tensor<T>> conv_in;  ///< input of each conv, in layer order
        std::vector<nn::Tensor<T>> conv_pre; ///< pre-activation output of each conv (except the last)
        std::vector<nn::Tensor<T>> skips;    ///< encoder stage outputs, index 0 = full resolution
        std::vector<nn::Tensor<T>> up_in;    ///< input of each BlurUpSample, decoder order
    };

    UNet() = default;

    UNet(const GeneratorConfig& config, nn::InitMode mode, std::uint64_t seed) : config_(config)
    {
        config_.validate();
        const int b = config_.base_channels;
        auto add = [&](std::string name, int in, int out) {
            convs_.emplace_back(std::move(name), nn::ConvSpec::planar(in, out, 3, 1, nn::Pad{1, 1}));
        };
        add("in0", config_.input_channels(), b);
        add("in1", b, b);
        int c = b;
        for (int i = 1; i <= config_.depth; ++i, c *= 2) {
            add("down" + std::to_string(i) + "/conv0", c, 2 * c);
            add("down" + std::to_string(i) + "/conv1", 2 * c, 2 * c);
        }
        for (int i = 1; i <= config_.depth; ++i, c /= 2) {
            const int in = config_.skip_connections ? c + c / 2 : c;
            add("up" + std::to_string(i) + "/conv0", in, c / 2);
            add("up" + std::to_string(i) + "/conv1", c / 2, c / 2);
        }
        convs_.emplace_back("out", nn::ConvSpec::planar(b, config_.output_channels(), 1, 1, nn::Pad{}));

        const double gain = nn::leaky_gain(config_.leaky_slope);
        for (std::size_t i = 0; i + 1 < convs_.size(); ++i) convs_[i].initialize(mode, gain, seed);
        auto final_mode = mode;
        if (config_.zero_final_layer && mode != nn::InitMode::Uninitialized) final_mode = nn::InitMode::Zeros;
        convs_.back().initialize(final_mode, config_.final_init_gain, seed);
    }

    const GeneratorConfig& config() const { return config_; }
    std::vector<nn::Conv<T>>& layers() { return convs_; }
    const std::vector<nn::Conv<T>>& layers() const { return convs_; }
    nn::Conv<T>& final_layer() { return convs_.back(); }

    const std::vector<nn::Conv<T>>& convs() const { return convs_; }

    void visit(const nn::ParamVisitor<T>& fn)
    {
        for (auto& conv : convs_) conv.visit(fn);
    }

    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for (const auto& conv : convs_) n += conv.parameter_count();
        return n;
    }

    nn::Tensor<T> forward(const nn::Tensor<T>& x, Cache* cache = nullptr) const
    {
        Cache local;
        Cache& k = cache ? *cache : local;
        k = Cache{};
        std::size_t li = 0;
        auto conv_act = [&](const nn::Tensor<T>& in) {
            auto pre = convs_[li++].forward(in);
            auto out = nn::leaky_relu(pre, config_.leaky_slope);
            if (cache) {
                k.conv_in.push_back(in);
                k.conv_pre.push_back(std::move(pre));
            }
            return out;
        };

        auto a = conv_act(conv_act(x));
        k.skips.push_back(a);
        for (int i = 1; i <= config_.depth; ++i) {
            a = conv_act(conv_act(nn::max_blur_pool(a)));
            k.skips.push_back(a);
        }
        nn::Tensor<T> y = std::move(a);
        for (int i = 1; i <= config_.depth; ++i) {
            auto up = nn::blur_upsample(y);
            if (cache) k.up_in.push_back(std::move(y));
            if (config_.skip_connections) {
                const auto& skip = k.skips[static_cast<std::size_t>(config_.depth - i)];
                up = nn::concat_channels<T>({&up, &skip});
            }
            y = conv_act(conv_act(up));
        }
        if (cache) k.conv_in.push_back(y);
        auto out = convs_[li].forward(y);
        if (!cache) k = Cache{};
        return out;
    }

    /// Back-propagates dL/d(output) and returns dL/d(input).
    nn::Tensor<T> backward(const Cache& k, const nn::Tensor<T>& grad_out)
    {
        std::size_t li = convs_.size() - 1;
        auto g = convs_[li].backward(k.conv_in[li], grad_out);
        auto conv_act_back = [&](const nn::Tensor<T>& grad) {
            --li;
            auto gpre = nn::leaky_relu_backward(k.conv_pre[li], grad, config_.leaky_slope);
            return convs_[li].backward(k.conv_in[li], gpre);
        };

        // Gradients arriving at encoder outputs through skip connections.
        std::vector<nn::Tensor<T>> skip_grads(k.skips.size());
        for (int i = config_.depth; i >= 1; --i) {
            g = conv_act_back(conv_act_back(g));
            const auto& y_in = k.up_in[static_cast<std::size_t>(i - 1)];
            const int up_c = y_in.channels();
            if (config_.skip_connections) {
                const auto sidx = static_cast<std::size_t>(config_.depth - i);
                skip_grads[sidx] = nn::slice_channels(g, up_c, g.channels() - up_c);
                g = nn::slice_channels(g, 0, up_c);
            }
            g = nn::blur_upsample_backward(y_in, g);
        }
        for (int i = config_.depth; i >= 1; --i) {
            const auto idx = static_cast<std::size_t>(i);
            if (!skip_grads[idx].empty()) g += skip_grads[idx];
            g = conv_act_back(conv_act_back(g));
            g = nn::max_blur_pool_backward(k.skips[idx - 1], g);
        }
        if (!skip_grads[0].empty()) g += skip_grads[0];
        return conv_act_back(conv_act_back(g));
    }

    /// Shape walk through the layer specs; needs no allocated parameters.
    /// Row labels: "conv in0", "down<i> ...", "up<i> ...", "conv out".
    nn::ShapeTrace trace(nn::Shape in) const
    {
        nn::ShapeTrace rows;
        auto planar = [](const std::string& label, const nn::Shape& s) { return nn::ShapeRow{label, {s.h, s.w, s.c}}; };
        std::size_t li = 0;
        auto conv = [&](const nn::Shape& s, const std::string& label) {
            auto o = convs_[li++].output_shape(s);
            rows.push_back(planar(label, o));
            return o;
        };
        auto s = conv(conv(in, "3x3 Conv + LeakyReLU"), "3x3 Conv + LeakyReLU");
        std::vector<nn::Shape> skips{s};
        for (int i = 1; i <= config_.depth; ++i) {
            const std::string p = "down" + std::to_string(i) + " ";
            rows.push_back(planar(p + "Input", s));
            s = nn::max_blur_pool_shape(s);
            rows.push_back(planar(p + "MaxBlurPool", s));
            s = conv(s, p + "3x3 Conv + LeakyReLU");
            s = conv(s, p + "3x3 Conv + LeakyReLU");
            rows.push_back(planar(p + "Output", s));
            rows.push_back(planar("DownSampleLayer", s));
            skips.push_back(s);
        }
        for (int i = 1; i <= config_.depth; ++i) {
            const std::string p = "up" + std::to_string(i) + " ";
            rows.push_back(planar(p + "Input", s));
            s = nn::blur_upsample_shape(s);
            rows.push_back(planar(p + "BlurUpSample", s));
            if (config_.skip_connections) s.c += skips[static_cast<std::size_t>(config_.depth - i)].c;
            s = conv(s, p + "3x3 Conv + LeakyReLU");
            s = conv(s, p + "3x3 Conv + LeakyReLU");
            rows.push_back(planar(p + "Output", s));
            rows.push_back(planar("UpSampleLayer", s));
        }
        conv(s, "1x1 Conv");
        return rows;
    }

private:
    GeneratorConfig config_{};
    std::vector<nn::Conv<T>> convs_;
};

} // namespace reage::gen
