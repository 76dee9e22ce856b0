#pragma once

#include "reage/core/random.hpp"
#include "reage/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <string>

namespace reage::nn {

/// A learnable array with its gradient accumulator.
template <typename T>
struct Param {
    Tensor<T> value;
    Tensor<T> grad;

    Param() = default;
    explicit Param(Shape shape) : value(shape), grad(shape) {}

    void zero_grad() { grad.zero(); }
};

template <typename T>
using ParamVisitor = std::function<void(const std::string& name, Param<T>& param)>;

template <typename T>
using ConstParamVisitor = std::function<void(const std::string& name, const Param<T>& param)>;

/// Weight initialization. FanInNormal draws N(0, gain^2 / fan_in) from a
/// stream derived from (seed, parameter name), so a layer's weights do not
/// depend on construction order.
enum class InitMode { FanInNormal, Zeros, Uninitialized };

template <typename T>
void init_fan_in_normal(Param<T>& p, int fan_in, double gain, std::uint64_t seed, const std::string& name)
{
    Rng rng(derive_seed(seed, name));
    const double stddev = gain / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
    for (auto& v : p.value.storage()) v = static_cast<T>(stddev * standard_normal(rng));
}

/// Gain that preserves activation variance through a leaky rectifier.
inline double leaky_gain(double slope) { return std::sqrt(2.0 / (1.0 + slope * slope)); }

} // namespace reage::nn
