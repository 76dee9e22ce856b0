#pragma once

#include "reage/core/error.hpp"
#include "reage/datamodel/clip.hpp"
#include "reage/synth/procedural.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace reage::metrics {

/// Estimator output: weights over integer ages 0..100.
struct AgeEstimate {
    static constexpr int kBins = 101;
    std::array<double, kBins> distribution{};
    double expected_age = 0.0;

    /// Normalizes `weights` and fills the expectation.
    static AgeEstimate from_weights(const std::array<double, kBins>& weights)
    {
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw MetricError("age weights must be finite and non-negative");
            total += w;
        }
        if (total <= 0.0) throw MetricError("age weights sum to zero");
        AgeEstimate e;
        for (int a = 0; a < kBins; ++a) {
            e.distribution[a] = weights[a] / total;
            e.expected_age += a * e.distribution[a];
        }
        return e;
    }

    /// All mass on one integer age.
    static AgeEstimate point(int age)
    {
        if (age < 0 || age >= kBins) throw MetricError("age " + std::to_string(age) + " outside [0, 100]");
        std::array<double, kBins> w{};
        w[age] = 1.0;
        return from_weights(w);
    }

    /// Discretized normal centred at `mean`.
    static AgeEstimate gaussian(double mean, double sigma)
    {
        if (!(sigma > 0.0)) throw MetricError("age spread must be positive");
        std::array<double, kBins> w{};
        for (int a = 0; a < kBins; ++a) {
            const double z = (a - mean) / sigma;
            w[a] = std::exp(-0.5 * z * z);
        }
        return from_weights(w);
    }
};

class AgeEstimator {
public:
    virtual ~AgeEstimator() = default;
    virtual std::string name() const = 0;
    /// `lm` is null when the clip carries no landmarks.
    virtual AgeEstimate estimate(const Frame& f, const Landmarks* lm) const = 0;
};

inline std::vector<AgeEstimate> estimate_clip(const VideoClip& clip, const AgeEstimator& est)
{
    const bool has_lm = clip.landmarks().size() == clip.frame_count();
    std::vector<AgeEstimate> out;
    out.reserve(clip.frame_count());
    for (std::size_t t = 0; t < clip.frame_count(); ++t)
        out.push_back(est.estimate(clip.frame(t), has_lm ? &clip.landmarks()[t] : nullptr));
    return out;
}

struct AnalyticEstimatorConfig {
    int identities = 8;  ///< procedural faces averaged per calibration age
    int age_points = 16; ///< calibration ages spread over the wrinkle ramp
    double sigma = 3.0;  ///< spread of the reported distribution, years
    std::uint64_t seed = 0x5eed;
};

/// Maps wrinkle-band energy to age by inverting the mean energy-versus-age
/// curve of frontal procedural faces, measured once per frame size.
/// Ages outside the wrinkle ramp are indistinguishable and clamp to its ends.
class AnalyticAgeEstimator final : public AgeEstimator {
public:
    explicit AnalyticAgeEstimator(AnalyticEstimatorConfig c = {}) : c_(c)
    {
        if (c_.identities < 1 || c_.age_points < 2) throw ConfigError("analytic estimator needs identities >= 1, age_points >= 2");
    }

    std::string name() const override { return "analytic-wrinkle"; }

    AgeEstimate estimate(const Frame& f, const Landmarks* lm) const override
    {
        if (lm == nullptr) throw MetricError("analytic age estimator needs landmarks");
        return AgeEstimate::gaussian(age_for_energy(synth::wrinkle_band_energy(f, *lm), f.height()), c_.sigma);
    }

    /// Point estimate before the distribution is spread.
    double age_for_energy(double energy, int resolution) const
    {
        const auto& curve = calibration(resolution);
        if (energy <= curve.front().second) return curve.front().first;
        if (energy >= curve.back().second) return curve.back().first;
        for (std::size_t i = 1; i < curve.size(); ++i) {
            const auto [a1, e1] = curve[i];
            if (energy > e1) continue;
            const auto [a0, e0] = curve[i - 1];
            return e1 > e0 ? a0 + (a1 - a0) * (energy - e0) / (e1 - e0) : 0.5 * (a0 + a1);
        }
        return curve.back().first;
    }

    /// (age, mean energy) pairs, energy made non-decreasing.
    const std::vector<std::pair<double, double>>& calibration(int resolution) const
    {
        std::lock_guard lock(mu_);
        auto it = curves_.find(resolution);
        if (it != curves_.end()) return it->second;
        const synth::ProceduralFace face;
        const synth::PoseExpressionSample frontal;
        std::vector<synth::FaceIdentity> ids;
        for (int i = 0; i < c_.identities; ++i)
            ids.push_back(synth::FaceIdentity::from_seed(derive_seed(c_.seed, "calibration/" + std::to_string(i))));
        std::vector<std::pair<double, double>> curve;
        for (int k = 0; k < c_.age_points; ++k) {
            const double age = synth::kWrinkleOnsetAge +
                               (synth::kWrinkleFullAge - synth::kWrinkleOnsetAge) * k / (c_.age_points - 1);
            double e = 0.0;
            for (const auto& id : ids)
                e += synth::wrinkle_band_energy(face.render(id, age, frontal, resolution),
                                                face.landmarks(id, frontal, resolution));
            e /= static_cast<double>(ids.size());
            if (!curve.empty()) e = std::max(e, curve.back().second);
            curve.emplace_back(age, e);
        }
        return curves_.emplace(resolution, std::move(curve)).first->second;
    }

private:
    AnalyticEstimatorConfig c_;
    mutable std::mutex mu_;
    mutable std::map<int, std::vector<std::pair<double, double>>> curves_;
};

enum class TAgeMode { ExpectedDiff, Cosine };

inline std::string to_string(TAgeMode m) { return m == TAgeMode::Cosine ? "cosine" : "expected_diff"; }

inline TAgeMode parse_t_age_mode(const std::string& s)
{
    if (s == "expected_diff") return TAgeMode::ExpectedDiff;
    if (s == "cosine") return TAgeMode::Cosine;
    throw ConfigError("unknown T-Age mode '" + s + "' (expected_diff | cosine)");
}

/// Mean over adjacent frames of the change in estimator output.
inline double t_age(std::span<const AgeEstimate> est, TAgeMode mode = TAgeMode::ExpectedDiff)
{
    if (est.size() < 2) throw MetricError("T-Age needs at least 2 frames");
    double sum = 0.0;
    for (std::size_t t = 0; t + 1 < est.size(); ++t) {
        const auto& a = est[t];
        const auto& b = est[t + 1];
        if (mode == TAgeMode::ExpectedDiff) {
            sum += std::abs(a.expected_age - b.expected_age);
            continue;
        }
        if (a.distribution == b.distribution) continue; // exact 0, not 1 - (1 - ulp)
        double dot = 0, na = 0, nb = 0;
        for (int k = 0; k < AgeEstimate::kBins; ++k) {
            dot += a.distribution[k] * b.distribution[k];
            na += a.distribution[k] * a.distribution[k];
            nb += b.distribution[k] * b.distribution[k];
        }
        sum += 1.0 - dot / std::sqrt(na * nb);
    }
    return sum / static_cast<double>(est.size() - 1);
}

inline double t_age(const VideoClip& clip, const AgeEstimator& est, TAgeMode mode = TAgeMode::ExpectedDiff)
{
    if (clip.frame_count() < 2) throw MetricError("T-Age needs at least 2 frames");
    const auto e = estimate_clip(clip, est);
    return t_age(std::span<const AgeEstimate>(e), mode);
}

/// Mean over every frame of every clip of |E[age] - target|.
inline double age_mae(std::span<const VideoClip> clips, AgeValue target, const AgeEstimator& est)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : clips)
        for (const auto& e : estimate_clip(c, est)) {
            sum += std::abs(e.expected_age - target.years());
            ++n;
        }
    if (n == 0) throw MetricError("age MAE over an empty set");
    return sum / static_cast<double>(n);
}

inline double age_mae(const VideoClip& clip, AgeValue target, const AgeEstimator& est)
{
    return age_mae(std::span<const VideoClip>(&clip, 1), target, est);
}

} // namespace reage::metrics
