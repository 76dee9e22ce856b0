#pragma once

#include "reage/nn/param.hpp"

#include <cmath>
#include <map>
#include <string>

namespace reage::nn {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. State is keyed by parameter name so it can be
/// checkpointed alongside the weights.
template <typename T>
class Adam {
public:
    struct Moments {
        Tensor<T> m;
        Tensor<T> v;
    };

    Adam() = default;
    explicit Adam(AdamConfig config) : config_(config) {}

    const AdamConfig& config() const { return config_; }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }
    long long steps() const { return steps_; }
    void set_steps(long long s) { steps_ = s; }
    std::map<std::string, Moments>& moments() { return moments_; }
    const std::map<std::string, Moments>& moments() const { return moments_; }

    /// Call once per optimization step before apply() on each parameter.
    void begin_step() { ++steps_; }

    void apply(const std::string& name, Param<T>& p)
    {
        auto& st = moments_[name];
        if (st.m.empty()) {
            st.m = Tensor<T>(p.value.shape());
            st.v = Tensor<T>(p.value.shape());
        }
        const double b1 = config_.beta1, b2 = config_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
        const double lr = config_.learning_rate;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            const double m = b1 * st.m[i] + (1.0 - b1) * g;
            const double v = b2 * st.v[i] + (1.0 - b2) * g * g;
            st.m[i] = static_cast<T>(m);
            st.v[i] = static_cast<T>(v);
            if (lr != 0.0) p.value[i] -= static_cast<T>(lr * (m / c1) / (std::sqrt(v / c2) + config_.epsilon));
        }
    }

private:
    AdamConfig config_{};
    long long steps_ = 0;
    std::map<std::string, Moments> moments_;
};

} // namespace reage::nn
