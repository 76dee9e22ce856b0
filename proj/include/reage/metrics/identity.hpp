#pragma once

#include "reage/core/error.hpp"
#include "reage/datamodel/clip.hpp"
#include "reage/datamodel/luma.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace reage::metrics {

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::string name() const = 0;
    virtual std::vector<double> embed(const Frame& f) const = 0;
};

/// Mean-removed luma thumbnail (box-averaged to grid x grid). Only a desk
/// stand-in for a face-recognition network.
class ThumbnailEmbedding final : public EmbeddingBackend {
public:
    explicit ThumbnailEmbedding(int grid = 8) : grid_(grid)
    {
        if (grid < 1) throw ConfigError("thumbnail grid must be >= 1");
    }
    std::string name() const override { return "thumbnail"; }

    std::vector<double> embed(const Frame& f) const override
    {
        const GrayImage g = luma255(f);
        std::vector<double> v(static_cast<std::size_t>(grid_) * grid_, 0.0);
        std::vector<int> n(v.size(), 0);
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x) {
                const auto k = static_cast<std::size_t>((y * grid_ / g.height) * grid_ + x * grid_ / g.width);
                v[k] += g.at(y, x);
                ++n[k];
            }
        double mean = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
            v[k] = n[k] ? v[k] / n[k] : 0.0;
            mean += v[k];
        }
        mean /= static_cast<double>(v.size());
        for (double& x : v) x -= mean;
        return v;
    }

private:
    int grid_;
};

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size()) throw MetricError("embeddings differ in length");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw MetricError("zero-vector embedding cannot be normalized");
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

/// Mean frame-wise cosine similarity of the embeddings of two aligned clips.
inline double identity_similarity(const VideoClip& a, const VideoClip& b, const EmbeddingBackend& embed)
{
    if (a.frame_count() != b.frame_count())
        throw MetricError("identity similarity needs frame-aligned clips");
    if (a.frame_count() == 0) throw MetricError("identity similarity over an empty clip");
    double sum = 0.0;
    for (std::size_t t = 0; t < a.frame_count(); ++t) sum += cosine_similarity(embed.embed(a.frame(t)), embed.embed(b.frame(t)));
    return sum / static_cast<double>(a.frame_count());
}

} // namespace reage::metrics
