#pragma once

#include "reage/core/error.hpp"
#include "reage/nn/tensor.hpp"
#include "reage/training/perceptual.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace reage::train {

struct LossWeights {
    double l1 = 1.0;
    double perceptual = 1.0;
    double adv_image = 0.025;
    double adv_video = 0.025;

    void validate() const
    {
        for (double w : {l1, perceptual, adv_image, adv_video})
            if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and non-negative");
    }
};

inline void to_json(nlohmann::json& j, const LossWeights& w)
{
    j = {{"lambda_l1", w.l1}, {"lambda_perceptual", w.perceptual}, {"lambda_adv_image", w.adv_image},
         {"lambda_adv_video", w.adv_video}};
}

inline void from_json(const nlohmann::json& j, LossWeights& w)
{
    const LossWeights d;
    w.l1 = j.value("lambda_l1", d.l1);
    w.perceptual = j.value("lambda_perceptual", d.perceptual);
    w.adv_image = j.value("lambda_adv_image", d.adv_image);
    w.adv_video = j.value("lambda_adv_video", d.adv_video);
}

template <typename T>
double mean(const nn::Tensor<T>& t)
{
    if (t.empty()) throw ValidationError("mean of an empty tensor");
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += static_cast<double>(t[i]);
    return s / static_cast<double>(t.size());
}

/// max(0, x) that propagates NaN (std::max would return 0).
inline double hinge(double x) { return x < 0.0 ? 0.0 : x; }

/// Discriminator hinge loss: mean(max(0, 1 - real)) + mean(max(0, 1 + fake)).
template <typename T>
double hinge_d_loss(const nn::Tensor<T>& real, const nn::Tensor<T>& fake)
{
    real.require_same_shape(fake, "hinge_d_loss");
    double r = 0.0, f = 0.0;
    for (std::size_t i = 0; i < real.size(); ++i) {
        r += hinge(1.0 - static_cast<double>(real[i]));
        f += hinge(1.0 + static_cast<double>(fake[i]));
    }
    const double n = static_cast<double>(real.size());
    return r / n + f / n;
}

/// Gradients of hinge_d_loss with respect to the real and fake scores, scaled by `scale`.
template <typename T>
std::pair<nn::Tensor<T>, nn::Tensor<T>> hinge_d_grads(const nn::Tensor<T>& real, const nn::Tensor<T>& fake,
                                                       double scale = 1.0)
{
    real.require_same_shape(fake, "hinge_d_grads");
    const double k = scale / static_cast<double>(real.size());
    nn::Tensor<T> gr(real.shape()), gf(fake.shape());
    for (std::size_t i = 0; i < real.size(); ++i) {
        gr[i] = static_cast<T>(1.0 - static_cast<double>(real[i]) > 0.0 ? -k : 0.0);
        gf[i] = static_cast<T>(1.0 + static_cast<double>(fake[i]) > 0.0 ? k : 0.0);
    }
    return {std::move(gr), std::move(gf)};
}

/// Generator hinge loss: -mean(fake).
template <typename T>
double hinge_g_loss(const nn::Tensor<T>& fake)
{
    return -mean(fake);
}

template <typename T>
nn::Tensor<T> hinge_g_grad(const nn::Tensor<T>& fake, double scale = 1.0)
{
    return nn::Tensor<T>(fake.shape(), static_cast<T>(-scale / static_cast<double>(fake.size())));
}

template <typename T>
double l1_loss(const nn::Tensor<T>& a, const nn::Tensor<T>& b)
{
    a.require_same_shape(b, "l1_loss");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return s / static_cast<double>(a.size());
}

/// d l1_loss / d a, scaled by `scale`; zero where a == b.
template <typename T>
nn::Tensor<T> l1_grad(const nn::Tensor<T>& a, const nn::Tensor<T>& b, double scale = 1.0)
{
    a.require_same_shape(b, "l1_grad");
    const double k = scale / static_cast<double>(a.size());
    nn::Tensor<T> g(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const T d = a[i] - b[i];
        g[i] = static_cast<T>(d > T(0) ? k : (d < T(0) ? -k : 0.0));
    }
    return g;
}

/// Unweighted components and the weighted total.
struct LossBreakdown {
    double l1 = 0.0;
    double perceptual = 0.0;
    double adv_image = 0.0;
    double adv_video = 0.0;
    double total = 0.0;

    double weighted_sum(const LossWeights& w) const
    {
        return w.l1 * l1 + w.perceptual * perceptual + w.adv_image * adv_image + w.adv_video * adv_video;
    }
};

inline void to_json(nlohmann::json& j, const LossBreakdown& b)
{
    j = {{"l1", b.l1}, {"perceptual", b.perceptual}, {"adv_image", b.adv_image}, {"adv_video", b.adv_video},
         {"total", b.total}};
}

/// Gradients of the weighted generator loss with respect to its inputs.
template <typename T>
struct GeneratorLossGrads {
    std::vector<nn::Tensor<T>> outputs;
    std::vector<nn::Tensor<T>> image_scores;
    std::vector<nn::Tensor<T>> video_scores;
};

/// Weighted sum of the per-frame-averaged L1 and perceptual distances between
/// output and ground-truth frames and the generator hinge terms of both
/// discriminators (each averaged over its score maps). Empty score lists
/// contribute zero. When `grads` is given it receives the gradients of the
/// total.
template <typename T>
LossBreakdown total_generator_loss(const std::vector<nn::Tensor<T>>& outputs, const std::vector<nn::Tensor<T>>& targets,
                                   const std::vector<nn::Tensor<T>>& image_scores,
                                   const std::vector<nn::Tensor<T>>& video_scores, const LossWeights& weights,
                                   const PerceptualDistance<T>& perceptual, GeneratorLossGrads<T>* grads = nullptr)
{
    if (outputs.size() != targets.size())
        throw ValidationError("generator loss: " + std::to_string(outputs.size()) + " output frames vs " +
                              std::to_string(targets.size()) + " ground-truth frames");
    if (outputs.empty()) throw ValidationError("generator loss on an empty clip");
    if (grads && weights.perceptual != 0.0 && !perceptual.differentiable())
        throw ConfigError("perceptual backend '" + perceptual.name() + "' cannot be used for training");

    LossBreakdown b;
    const double nf = static_cast<double>(outputs.size());
    if (grads) *grads = GeneratorLossGrads<T>{};
    for (std::size_t t = 0; t < outputs.size(); ++t) {
        b.l1 += l1_loss(outputs[t], targets[t]) / nf;
        b.perceptual += perceptual.distance(outputs[t], targets[t]) / nf;
        if (grads) {
            auto g = l1_grad(outputs[t], targets[t], weights.l1 / nf);
            if (weights.perceptual != 0.0) {
                const auto gp = perceptual.gradient(outputs[t], targets[t]);
                const T k = static_cast<T>(weights.perceptual / nf);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * gp[i];
            }
            grads->outputs.push_back(std::move(g));
        }
    }
    auto adversarial = [&](const std::vector<nn::Tensor<T>>& scores, double weight, double& component,
                           std::vector<nn::Tensor<T>>* out_grads) {
        if (scores.empty()) return;
        const double ns = static_cast<double>(scores.size());
        for (const auto& s : scores) {
            component += hinge_g_loss(s) / ns;
            if (out_grads) out_grads->push_back(hinge_g_grad(s, weight / ns));
        }
    };
    adversarial(image_scores, weights.adv_image, b.adv_image, grads ? &grads->image_scores : nullptr);
    adversarial(video_scores, weights.adv_video, b.adv_video, grads ? &grads->video_scores : nullptr);
    b.total = b.weighted_sum(weights);
    return b;
}

} // namespace reage::train
