#pragma once

#include "reage/datamodel/frame.hpp"
#include "reage/nn/tensor.hpp"

#include <string>
#include <vector>

namespace reage::train {

/// Distance between two equally shaped images (C x H x W). Implementations
/// must be non-negative and zero on identical inputs. `gradient` returns
/// d distance / d a; backends that cannot differentiate report
/// differentiable() == false and can only be used for evaluation.
template <typename T>
class PerceptualDistance {
public:
    virtual ~PerceptualDistance() = default;
    virtual std::string name() const = 0;
    virtual bool differentiable() const { return true; }
    virtual double distance(const nn::Tensor<T>& a, const nn::Tensor<T>& b) const = 0;
    virtual nn::Tensor<T> gradient(const nn::Tensor<T>& a, const nn::Tensor<T>& b) const = 0;

    double distance(const Frame& a, const Frame& b) const { return distance(a.to_tensor<T>(), b.to_tensor<T>()); }
};

/// Multi-scale finite-difference feature distance. At each scale the image
/// difference is differentiated horizontally and vertically; the distance is
/// the mean over scales of the mean squared feature. Scales are produced by
/// 2x2 average pooling while both sides stay >= 2. Invariant to adding a
/// constant to both inputs.
template <typename T>
class GradientFeatureDistance final : public PerceptualDistance<T> {
public:
    explicit GradientFeatureDistance(int scales = 3) : scales_(scales)
    {
        if (scales < 1) throw ConfigError("gradient-feature distance needs at least one scale");
    }

    std::string name() const override { return "gradient_feature"; }

    double distance(const nn::Tensor<T>& a, const nn::Tensor<T>& b) const override
    {
        auto levels = pyramid(difference(a, b));
        double total = 0.0;
        for (const auto& d : levels) total += feature_energy(d);
        return total / static_cast<double>(levels.size());
    }

    nn::Tensor<T> gradient(const nn::Tensor<T>& a, const nn::Tensor<T>& b) const override
    {
        const auto levels = pyramid(difference(a, b));
        const double inv_levels = 1.0 / static_cast<double>(levels.size());
        // Walk back from the coarsest level, pushing each level's gradient
        // through the pooling that produced it.
        Level carry;
        for (std::size_t s = levels.size(); s-- > 0;) {
            Level g = feature_energy_grad(levels[s], inv_levels);
            if (!carry.v.empty()) add(g, unpool(carry, levels[s]));
            carry = std::move(g);
        }
        nn::Tensor<T> out(a.shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(carry.v[i]);
        return out;
    }

private:
    struct Level {
        int c = 0, h = 0, w = 0;
        std::vector<double> v;
        double& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
        double at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    };

    static Level difference(const nn::Tensor<T>& a, const nn::Tensor<T>& b)
    {
        a.require_same_shape(b, "perceptual distance");
        if (a.depth() != 1) throw ValidationError("perceptual distance expects planar images");
        Level d{a.channels(), a.height(), a.width(), std::vector<double>(a.size())};
        for (std::size_t i = 0; i < a.size(); ++i) d.v[i] = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        return d;
    }

    std::vector<Level> pyramid(Level base) const
    {
        std::vector<Level> levels{std::move(base)};
        while (static_cast<int>(levels.size()) < scales_ && levels.back().h >= 4 && levels.back().w >= 4)
            levels.push_back(pool(levels.back()));
        return levels;
    }

    static Level pool(const Level& in)
    {
        Level out{in.c, in.h / 2, in.w / 2, {}};
        out.v.assign(static_cast<std::size_t>(out.c) * out.h * out.w, 0.0);
        for (int c = 0; c < in.c; ++c)
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x)
                    out.at(c, y, x) = 0.25 * (in.at(c, 2 * y, 2 * x) + in.at(c, 2 * y, 2 * x + 1) +
                                              in.at(c, 2 * y + 1, 2 * x) + in.at(c, 2 * y + 1, 2 * x + 1));
        return out;
    }

    /// Adjoint of pool(): spreads each coarse gradient over its 2x2 source block.
    static Level unpool(const Level& g, const Level& like)
    {
        Level out{like.c, like.h, like.w, std::vector<double>(like.v.size(), 0.0)};
        for (int c = 0; c < g.c; ++c)
            for (int y = 0; y < g.h; ++y)
                for (int x = 0; x < g.w; ++x) {
                    const double q = 0.25 * g.at(c, y, x);
                    out.at(c, 2 * y, 2 * x) += q;
                    out.at(c, 2 * y, 2 * x + 1) += q;
                    out.at(c, 2 * y + 1, 2 * x) += q;
                    out.at(c, 2 * y + 1, 2 * x + 1) += q;
                }
        return out;
    }

    static void add(Level& dst, const Level& src)
    {
        for (std::size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
    }

    /// Mean squared horizontal plus mean squared vertical difference.
    static double feature_energy(const Level& d)
    {
        double sx = 0.0, sy = 0.0;
        const std::size_t nx = static_cast<std::size_t>(d.c) * d.h * std::max(d.w - 1, 0);
        const std::size_t ny = static_cast<std::size_t>(d.c) * std::max(d.h - 1, 0) * d.w;
        for (int c = 0; c < d.c; ++c)
            for (int y = 0; y < d.h; ++y)
                for (int x = 0; x < d.w; ++x) {
                    if (x + 1 < d.w) sx += sq(d.at(c, y, x + 1) - d.at(c, y, x));
                    if (y + 1 < d.h) sy += sq(d.at(c, y + 1, x) - d.at(c, y, x));
                }
        return (nx ? sx / static_cast<double>(nx) : 0.0) + (ny ? sy / static_cast<double>(ny) : 0.0);
    }

    static Level feature_energy_grad(const Level& d, double scale)
    {
        Level g{d.c, d.h, d.w, std::vector<double>(d.v.size(), 0.0)};
        const std::size_t nx = static_cast<std::size_t>(d.c) * d.h * std::max(d.w - 1, 0);
        const std::size_t ny = static_cast<std::size_t>(d.c) * std::max(d.h - 1, 0) * d.w;
        const double kx = nx ? 2.0 * scale / static_cast<double>(nx) : 0.0;
        const double ky = ny ? 2.0 * scale / static_cast<double>(ny) : 0.0;
        for (int c = 0; c < d.c; ++c)
            for (int y = 0; y < d.h; ++y)
                for (int x = 0; x < d.w; ++x) {
                    if (x + 1 < d.w) {
                        const double e = kx * (d.at(c, y, x + 1) - d.at(c, y, x));
                        g.at(c, y, x + 1) += e;
                        g.at(c, y, x) -= e;
                    }
                    if (y + 1 < d.h) {
                        const double e = ky * (d.at(c, y + 1, x) - d.at(c, y, x));
                        g.at(c, y + 1, x) += e;
                        g.at(c, y, x) -= e;
                    }
                }
        return g;
    }

    static double sq(double x) { return x * x; }

    int scales_;
};

} // namespace reage::train
