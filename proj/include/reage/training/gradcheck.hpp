#pragma once

#include "reage/generator/generator.hpp"
#include "reage/training/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace reage::train {

struct GradCheckResult {
    std::vector<double> analytic;
    std::vector<double> numeric;
    std::vector<double> rel_errors;
    double max_rel_error = 0.0;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps parameters with
/// vanishing gradient from dividing rounding noise by ~0.
inline double relative_error(double a, double n, double floor = 1e-6)
{
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Compares back-propagated gradients of the generator loss (adversarial
/// weights zeroed) with central differences on `samples` parameters drawn
/// uniformly over all scalar weights. Runs in double precision on a
/// 16x16, depth-2, base-4 generator over a 3-frame clip.
inline GradCheckResult generator_loss_gradient_check(std::uint64_t seed, int samples = 50, double step = 1e-6)
{
    gen::GeneratorConfig c;
    c.resolution = 16;
    c.depth = 2;
    c.base_channels = 4;
    c.hidden_channels = 4;
    gen::Generator<double> g(c, derive_seed(seed, "gradcheck/generator"));

    Rng rng(derive_seed(seed, "gradcheck/data"));
    auto random_frame = [&] {
        nn::Tensor<double> t(3, 16, 16);
        for (auto& v : t.storage()) v = uniform(rng, -0.5, 0.5);
        return t;
    };
    std::vector<nn::Tensor<double>> input, target;
    for (int i = 0; i < 3; ++i) input.push_back(random_frame());
    for (int i = 0; i < 3; ++i) target.push_back(random_frame());

    LossWeights w;
    w.adv_image = 0.0;
    w.adv_video = 0.0;
    const GradientFeatureDistance<double> perceptual;
    const AgeValue in_age(30), tar_age(70);

    auto loss = [&] {
        const auto out = g.forward_sequence(input, in_age, tar_age, 1);
        return total_generator_loss<double>(out, target, {}, {}, w, perceptual).total;
    };

    typename gen::Generator<double>::Rollout r;
    g.zero_grad();
    const auto out = g.forward_sequence(input, in_age, tar_age, 1, &r);
    GeneratorLossGrads<double> grads;
    total_generator_loss<double>(out, target, {}, {}, w, perceptual, &grads);
    g.backward_sequence(r, grads.outputs);

    std::vector<nn::Param<double>*> params;
    std::vector<std::size_t> offsets{0};
    g.visit([&](const std::string&, nn::Param<double>& p) {
        params.push_back(&p);
        offsets.push_back(offsets.back() + p.value.size());
    });

    GradCheckResult res;
    for (int k = 0; k < samples; ++k) {
        const std::size_t flat = uniform_index(rng, offsets.back());
        const auto pi = static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin()) - 1;
        auto& p = *params[pi];
        const std::size_t i = flat - offsets[pi];
        const double orig = p.value[i];
        p.value[i] = orig + step;
        const double fp = loss();
        p.value[i] = orig - step;
        const double fm = loss();
        p.value[i] = orig;
        const double fd = (fp - fm) / (2.0 * step);
        res.analytic.push_back(p.grad[i]);
        res.numeric.push_back(fd);
        res.rel_errors.push_back(relative_error(p.grad[i], fd));
        res.max_rel_error = std::max(res.max_rel_error, res.rel_errors.back());
    }
    return res;
}

} // namespace reage::train
