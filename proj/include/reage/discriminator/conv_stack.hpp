#pragma once

#include "reage/nn/conv.hpp"
#include "reage/nn/ops.hpp"

#include <string>
#include <vector>

namespace reage::disc {

/// Plain chain of convolutions, each followed by a leaky rectifier (the last
/// one optionally linear).
template <typename T>
class ConvStack {
public:
    struct Cache {
        std::vector<nn::Tensor<T>> inputs;
        std::vector<nn::Tensor<T>> pre;
    };

    ConvStack() = default;
    ConvStack(std::string prefix, std::vector<nn::ConvSpec> specs, double slope, bool final_activation,
              nn::InitMode mode, std::uint64_t seed)
        : slope_(slope), final_activation_(final_activation)
    {
        for (std::size_t i = 0; i < specs.size(); ++i) {
            layers_.emplace_back(prefix + "/conv" + std::to_string(i), specs[i]);
            const bool act = i + 1 < specs.size() || final_activation;
            layers_.back().initialize(mode, act ? nn::leaky_gain(slope) : 1.0, seed);
        }
    }

    std::vector<nn::Conv<T>>& layers() { return layers_; }
    const std::vector<nn::Conv<T>>& layers() const { return layers_; }

    void visit(const nn::ParamVisitor<T>& fn)
    {
        for (auto& l : layers_) l.visit(fn);
    }

    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.parameter_count();
        return n;
    }

    nn::Tensor<T> forward(const nn::Tensor<T>& x, Cache* cache = nullptr) const
    {
        if (cache) *cache = Cache{};
        nn::Tensor<T> a = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            auto pre = layers_[i].forward(a);
            if (cache) cache->inputs.push_back(std::move(a));
            if (activated(i)) {
                a = nn::leaky_relu(pre, slope_);
                if (cache) cache->pre.push_back(std::move(pre));
            } else {
                a = std::move(pre);
                if (cache) cache->pre.emplace_back();
            }
        }
        return a;
    }

    nn::Tensor<T> backward(const Cache& cache, nn::Tensor<T> grad, bool param_grads = true)
    {
        for (std::size_t i = layers_.size(); i-- > 0;) {
            if (activated(i)) grad = nn::leaky_relu_backward(cache.pre[i], std::move(grad), slope_);
            grad = layers_[i].backward(cache.inputs[i], grad, param_grads);
        }
        return grad;
    }

    std::vector<nn::Shape> trace(nn::Shape in) const
    {
        std::vector<nn::Shape> out;
        for (const auto& l : layers_) out.push_back(in = l.output_shape(in));
        return out;
    }

private:
    bool activated(std::size_t i) const { return i + 1 < layers_.size() || final_activation_; }

    double slope_ = 0.2;
    bool final_activation_ = true;
    std::vector<nn::Conv<T>> layers_;
};

} // namespace reage::disc
