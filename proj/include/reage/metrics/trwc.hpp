#pragma once

#include "reage/metrics/roi.hpp"
#include "reage/training/perceptual.hpp"

#include <nlohmann/json.hpp>

namespace reage::metrics {

struct TrwcResult {
    double value = 0.0;
    std::size_t terms = 0;   ///< (region, t) pairs that entered the mean
    std::size_t skipped = 0; ///< pairs whose real-clip distance was below epsilon
    std::size_t interval = 1;

    double skip_fraction() const
    {
        const auto n = terms + skipped;
        return n == 0 ? 0.0 : static_cast<double>(skipped) / static_cast<double>(n);
    }
};

inline void to_json(nlohmann::json& j, const TrwcResult& r)
{
    j = {{"value", r.value}, {"terms", r.terms}, {"skipped", r.skipped}, {"skip_fraction", r.skip_fraction()},
         {"interval", r.interval}};
}

struct TrwcOptions {
    double epsilon = 1e-6;
    RoiConfig roi{};
};

/// Temporal regional wrinkle consistency: the mean over the three regions and
/// the N - dt frame pairs (t, t + dt) of
///   dist(generated ROI_t, generated ROI_{t+dt}) / dist(real ROI_t, real ROI_{t+dt}).
/// Regions come from the real clip's landmarks. Pairs whose denominator is
/// below epsilon are skipped and counted.
inline TrwcResult trwc(const VideoClip& generated, const VideoClip& real, std::size_t dt,
                       const train::PerceptualDistance<double>& dist, const LandmarkBackend& landmarks,
                       const TrwcOptions& opt = {})
{
    if (dt < 1) throw MetricError("TRWC interval must be >= 1");
    if (generated.frame_count() != real.frame_count())
        throw MetricError("TRWC needs frame-aligned clips: " + std::to_string(generated.frame_count()) + " vs " +
                          std::to_string(real.frame_count()) + " frames");
    if (generated.height() != real.height() || generated.width() != real.width())
        throw MetricError("TRWC needs clips of equal frame size");
    const std::size_t n = real.frame_count();
    if (n <= dt)
        throw MetricError("TRWC with interval " + std::to_string(dt) + " needs more than " + std::to_string(dt) +
                          " frames, clip has " + std::to_string(n));
    const auto lm = landmarks.landmarks(real);
    if (lm.size() != n) throw MetricError("landmark backend returned the wrong number of frames");

    TrwcResult r;
    r.interval = dt;
    double sum = 0.0;
    for (std::size_t t = 0; t + dt < n; ++t) {
        const auto boxes = roi_boxes(lm[t], real.height(), real.width(), opt.roi);
        for (const auto& box : boxes) {
            const double den = dist.distance(crop(real.frame(t), box), crop(real.frame(t + dt), box));
            if (den < opt.epsilon) {
                ++r.skipped;
                continue;
            }
            const double num = dist.distance(crop(generated.frame(t), box), crop(generated.frame(t + dt), box));
            sum += num / den;
            ++r.terms;
        }
    }
    if (r.terms == 0)
        throw MetricError("TRWC undefined: all " + std::to_string(r.skipped) +
                          " frame pairs have a static real reference");
    r.value = sum / static_cast<double>(r.terms);
    return r;
}

} // namespace reage::metrics
