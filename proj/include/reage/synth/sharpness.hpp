#pragma once

#include "reage/datamodel/clip.hpp"
#include "reage/datamodel/luma.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace reage::synth {

/// Per-frame no-reference sharpness score in [0, 1].
class SharpnessEstimator {
public:
    virtual ~SharpnessEstimator() = default;
    virtual std::string name() const = 0;
    virtual double frame_score(const Frame& frame) const = 0;

    double clip_score(const VideoClip& clip) const
    {
        double s = 0;
        for (const auto& f : clip.frames()) s += frame_score(f);
        return s / static_cast<double>(clip.frame_count());
    }
};

/// Edge-width blur statistic in the style of CPBD. Edges are local maxima of
/// the horizontal luma gradient above `gradient_threshold`; each edge's width
/// is the extent of the monotone intensity run through it, where the run ends
/// once a step falls below `run_fraction` of the edge's peak step (so slow
/// shading next to an edge does not count as blur). An edge counts as
/// sharp when its blur-detection probability 1 - exp(-(w / w_jnb)^beta) stays
/// at or below 0.63, with w_jnb = 5 for local contrast <= 50 and 3 otherwise.
/// The score is the fraction of sharp edges; a frame without edges scores 0.
class EdgeWidthSharpness final : public SharpnessEstimator {
public:
    double gradient_threshold = 12.0; ///< luma units (0..255) per pixel
    double beta = 3.6;
    double probability_jnb = 0.63;
    double run_fraction = 0.1;

    std::string name() const override { return "edge_width"; }

    double frame_score(const Frame& frame) const override
    {
        const GrayImage g = luma255(frame);
        std::size_t edges = 0, sharp = 0;
        for (int y = 0; y < g.height; ++y) {
            for (int x = 1; x + 1 < g.width; ++x) {
                const double gx = 0.5 * (g.at(y, x + 1) - g.at(y, x - 1));
                const double mag = std::abs(gx);
                if (mag < gradient_threshold) continue;
                const double left = x > 1 ? std::abs(0.5 * (g.at(y, x) - g.at(y, x - 2))) : 0.0;
                const double right = x + 2 < g.width ? std::abs(0.5 * (g.at(y, x + 2) - g.at(y, x))) : 0.0;
                if (mag < left || mag <= right) continue;
                ++edges;
                const double dir = gx > 0 ? 1.0 : -1.0;
                const double peak = std::max(dir * (g.at(y, x + 1) - g.at(y, x)), dir * (g.at(y, x) - g.at(y, x - 1)));
                const double min_step = std::max(run_fraction * peak, 1e-9);
                int l = x, r = x;
                while (l > 0 && dir * (g.at(y, l) - g.at(y, l - 1)) > min_step) --l;
                while (r + 1 < g.width && dir * (g.at(y, r + 1) - g.at(y, r)) > min_step) ++r;
                const double width = std::max(1, r - l);
                const double contrast = std::abs(g.at(y, r) - g.at(y, l));
                const double w_jnb = contrast <= 50.0 ? 5.0 : 3.0;
                const double p = 1.0 - std::exp(-std::pow(width / w_jnb, beta));
                if (p <= probability_jnb) ++sharp;
            }
        }
        return edges == 0 ? 0.0 : static_cast<double>(sharp) / static_cast<double>(edges);
    }
};

struct SharpnessVerdict {
    bool accepted = false;
    double score = 0.0;
};

/// Accepts a clip when its mean per-frame score reaches the threshold.
inline SharpnessVerdict sharpness_filter(const VideoClip& clip, const SharpnessEstimator& estimator, double threshold)
{
    const double s = estimator.clip_score(clip);
    return {s >= threshold, s};
}

} // namespace reage::synth
