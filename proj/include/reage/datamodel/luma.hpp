#pragma once

#include "reage/datamodel/frame.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace reage {

/// Single-channel image (row-major) used by the analysis code.
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Rec. 601 luma on the 0..255 scale.
inline GrayImage luma255(const Frame& f)
{
    GrayImage g{f.height(), f.width(), std::vector<double>(static_cast<std::size_t>(f.height()) * f.width())};
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) {
            const double r = f.at(0, y, x), gr = f.at(1, y, x), b = f.at(2, y, x);
            g.at(y, x) = (0.299 * r + 0.587 * gr + 0.114 * b + 1.0) * 127.5;
        }
    return g;
}

/// Separable [1 4 6 4 1]/16 smoothing with clamped borders.
inline GrayImage binomial5(const GrayImage& in)
{
    static constexpr double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    GrayImage tmp = in, out = in;
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double s = 0;
            for (int i = -2; i <= 2; ++i) s += k[i + 2] * in.at(y, std::clamp(x + i, 0, in.width - 1));
            tmp.at(y, x) = s;
        }
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double s = 0;
            for (int i = -2; i <= 2; ++i) s += k[i + 2] * tmp.at(std::clamp(y + i, 0, in.height - 1), x);
            out.at(y, x) = s;
        }
    return out;
}

/// Image minus its binomial smoothing: keeps the fine texture band.
inline GrayImage high_pass(const GrayImage& in)
{
    GrayImage lo = binomial5(in);
    for (std::size_t i = 0; i < lo.data.size(); ++i) lo.data[i] = in.data[i] - lo.data[i];
    return lo;
}

struct PixelBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0; ///< half-open [x0, x1) x [y0, y1)

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    bool operator==(const PixelBox&) const = default;
};

/// Square box of side `side` centred on (cx, cy), clipped to the image.
inline PixelBox centred_box(double cx, double cy, double side, int height, int width)
{
    const double half = side / 2.0;
    PixelBox b{static_cast<int>(std::lround(cx - half + 0.5)), static_cast<int>(std::lround(cy - half + 0.5)), 0, 0};
    const int s = std::max(1, static_cast<int>(std::lround(side)));
    b.x1 = b.x0 + s;
    b.y1 = b.y0 + s;
    b.x0 = std::clamp(b.x0, 0, width);
    b.y0 = std::clamp(b.y0, 0, height);
    b.x1 = std::clamp(b.x1, 0, width);
    b.y1 = std::clamp(b.y1, 0, height);
    return b;
}

/// Mean squared value of `img` inside the box (0 for an empty box).
inline double mean_square(const GrayImage& img, const PixelBox& b)
{
    if (b.empty()) return 0.0;
    double s = 0;
    for (int y = b.y0; y < b.y1; ++y)
        for (int x = b.x0; x < b.x1; ++x) s += img.at(y, x) * img.at(y, x);
    return s / (static_cast<double>(b.width()) * b.height());
}

} // namespace reage
