#pragma once

#include "reage/nn/tensor.hpp"

#include <array>

namespace reage::nn {

// ---------------------------------------------------------------------------
// Leaky rectifier

template <typename T>
Tensor<T> leaky_relu(Tensor<T> x, double slope)
{
    const T s = static_cast<T>(slope);
    for (auto& v : x.storage()) v = v > T(0) ? v : s * v;
    return x;
}

/// dL/dx given the pre-activation input.
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& pre, Tensor<T> grad, double slope)
{
    pre.require_same_shape(grad, "leaky_relu_backward");
    const T s = static_cast<T>(slope);
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!(pre[i] > T(0))) grad[i] *= s;
    return grad;
}

// ---------------------------------------------------------------------------
// Binomial anti-aliasing filter [1, 2, 1] / 4 per axis (3x3 kernel / 16).

namespace detail {

inline constexpr std::array<double, 3> kBinomial{0.25, 0.5, 0.25};

/// Mirror index into [0, n) without repeating the edge sample.
constexpr int reflect(int i, int n)
{
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

/// out[i] = sum_a k[a] * in[reflect(i * stride + a - 1)] along one axis of a
/// (rows x cols) plane. Axis 0 filters along columns, axis 1 along rows.
template <typename T>
void blur_pass(const T* in, int rows, int cols, int axis, int stride, T* out)
{
    const T k0 = static_cast<T>(kBinomial[0]), k1 = static_cast<T>(kBinomial[1]), k2 = static_cast<T>(kBinomial[2]);
    if (axis == 1) {
        const int out_cols = cols / stride;
        for (int r = 0; r < rows; ++r) {
            const T* src = in + static_cast<std::size_t>(r) * cols;
            T* dst = out + static_cast<std::size_t>(r) * out_cols;
            for (int i = 0; i < out_cols; ++i) {
                const int c = i * stride;
                dst[i] = k0 * src[reflect(c - 1, cols)] + k1 * src[c] + k2 * src[reflect(c + 1, cols)];
            }
        }
    } else {
        const int out_rows = rows / stride;
        for (int i = 0; i < out_rows; ++i) {
            const int r = i * stride;
            const T* a = in + static_cast<std::size_t>(reflect(r - 1, rows)) * cols;
            const T* b = in + static_cast<std::size_t>(r) * cols;
            const T* c = in + static_cast<std::size_t>(reflect(r + 1, rows)) * cols;
            T* dst = out + static_cast<std::size_t>(i) * cols;
            for (int x = 0; x < cols; ++x) dst[x] = k0 * a[x] + k1 * b[x] + k2 * c[x];
        }
    }
}

/// Adjoint of blur_pass: accumulates into `in_grad`.
template <typename T>
void blur_pass_adjoint(const T* out_grad, int rows, int cols, int axis, int stride, T* in_grad)
{
    const T k0 = static_cast<T>(kBinomial[0]), k1 = static_cast<T>(kBinomial[1]), k2 = static_cast<T>(kBinomial[2]);
    if (axis == 1) {
        const int out_cols = cols / stride;
        for (int r = 0; r < rows; ++r) {
            const T* g = out_grad + static_cast<std::size_t>(r) * out_cols;
            T* dst = in_grad + static_cast<std::size_t>(r) * cols;
            for (int i = 0; i < out_cols; ++i) {
                const int c = i * stride;
                dst[reflect(c - 1, cols)] += k0 * g[i];
                dst[c] += k1 * g[i];
                dst[reflect(c + 1, cols)] += k2 * g[i];
            }
        }
    } else {
        const int out_rows = rows / stride;
        for (int i = 0; i < out_rows; ++i) {
            const int r = i * stride;
            T* a = in_grad + static_cast<std::size_t>(reflect(r - 1, rows)) * cols;
            T* b = in_grad + static_cast<std::size_t>(r) * cols;
            T* c = in_grad + static_cast<std::size_t>(reflect(r + 1, rows)) * cols;
            const T* g = out_grad + static_cast<std::size_t>(i) * cols;
            for (int x = 0; x < cols; ++x) {
                a[x] += k0 * g[x];
                b[x] += k1 * g[x];
                c[x] += k2 * g[x];
            }
        }
    }
}

inline void require_planar_even(const Shape& s, const char* what)
{
    if (s.d != 1) throw ValidationError(std::string(what) + " expects a planar tensor");
    if (s.h % 2 != 0 || s.w % 2 != 0)
        throw ValidationError(std::string(what) + " requires even spatial size, got " + s.str());
}

} // namespace detail

/// Shape produced by max_blur_pool.
constexpr Shape max_blur_pool_shape(Shape s) { return {s.c, s.d, s.h / 2, s.w / 2}; }
/// Shape produced by blur_upsample.
constexpr Shape blur_upsample_shape(Shape s) { return {s.c, s.d, s.h * 2, s.w * 2}; }

/// Anti-aliased max pooling: dense 2x2 max (stride 1, window clipped at the
/// far edges), binomial blur, then subsampling by 2.
template <typename T>
Tensor<T> max_blur_pool(const Tensor<T>& x)
{
    detail::require_planar_even(x.shape(), "max_blur_pool");
    const int H = x.height(), W = x.width();
    Tensor<T> y(max_blur_pool_shape(x.shape()));
    std::vector<T> m(static_cast<std::size_t>(H) * W), tmp(static_cast<std::size_t>(H) * (W / 2));
    for (int c = 0; c < x.channels(); ++c) {
        const T* src = x.channel(c);
        for (int r = 0; r < H; ++r) {
            const T* r0 = src + static_cast<std::size_t>(r) * W;
            const T* r1 = src + static_cast<std::size_t>(std::min(r + 1, H - 1)) * W;
            T* dst = m.data() + static_cast<std::size_t>(r) * W;
            for (int q = 0; q < W; ++q) {
                const int q1 = std::min(q + 1, W - 1);
                dst[q] = std::max(std::max(r0[q], r0[q1]), std::max(r1[q], r1[q1]));
            }
        }
        detail::blur_pass(m.data(), H, W, 1, 2, tmp.data());
        detail::blur_pass(tmp.data(), H, W / 2, 0, 2, y.channel(c));
    }
    return y;
}

template <typename T>
Tensor<T> max_blur_pool_backward(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    const int H = x.height(), W = x.width();
    if (!(grad_out.shape() == max_blur_pool_shape(x.shape())))
        throw ValidationError("max_blur_pool_backward: gradient shape mismatch");
    Tensor<T> dx(x.shape());
    std::vector<T> gm(static_cast<std::size_t>(H) * W), gtmp(static_cast<std::size_t>(H) * (W / 2));
    for (int c = 0; c < x.channels(); ++c) {
        std::fill(gm.begin(), gm.end(), T(0));
        std::fill(gtmp.begin(), gtmp.end(), T(0));
        detail::blur_pass_adjoint(grad_out.channel(c), H, W / 2, 0, 2, gtmp.data());
        detail::blur_pass_adjoint(gtmp.data(), H, W, 1, 2, gm.data());
        const T* src = x.channel(c);
        T* dst = dx.channel(c);
        for (int r = 0; r < H; ++r) {
            const int r1 = std::min(r + 1, H - 1);
            for (int q = 0; q < W; ++q) {
                const int q1 = std::min(q + 1, W - 1);
                // First maximum in scan order receives the gradient.
                std::size_t best = static_cast<std::size_t>(r) * W + q;
                for (std::size_t cand : {static_cast<std::size_t>(r) * W + q1, static_cast<std::size_t>(r1) * W + q,
                                         static_cast<std::size_t>(r1) * W + q1})
                    if (src[cand] > src[best]) best = cand;
                dst[best] += gm[static_cast<std::size_t>(r) * W + q];
            }
        }
    }
    return dx;
}

/// Nearest-neighbour 2x upsampling followed by the binomial blur.
template <typename T>
Tensor<T> blur_upsample(const Tensor<T>& x)
{
    if (x.depth() != 1) throw ValidationError("blur_upsample expects a planar tensor");
    const int H = x.height(), W = x.width(), H2 = 2 * H, W2 = 2 * W;
    Tensor<T> y(blur_upsample_shape(x.shape()));
    std::vector<T> up(static_cast<std::size_t>(H2) * W2), tmp(up.size());
    for (int c = 0; c < x.channels(); ++c) {
        const T* src = x.channel(c);
        for (int r = 0; r < H2; ++r)
            for (int q = 0; q < W2; ++q)
                up[static_cast<std::size_t>(r) * W2 + q] = src[static_cast<std::size_t>(r / 2) * W + q / 2];
        detail::blur_pass(up.data(), H2, W2, 1, 1, tmp.data());
        detail::blur_pass(tmp.data(), H2, W2, 0, 1, y.channel(c));
    }
    return y;
}

template <typename T>
Tensor<T> blur_upsample_backward(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    if (!(grad_out.shape() == blur_upsample_shape(x.shape())))
        throw ValidationError("blur_upsample_backward: gradient shape mismatch");
    const int H = x.height(), W = x.width(), H2 = 2 * H, W2 = 2 * W;
    Tensor<T> dx(x.shape());
    std::vector<T> gtmp(static_cast<std::size_t>(H2) * W2), gup(gtmp.size());
    for (int c = 0; c < x.channels(); ++c) {
        std::fill(gtmp.begin(), gtmp.end(), T(0));
        std::fill(gup.begin(), gup.end(), T(0));
        detail::blur_pass_adjoint(grad_out.channel(c), H2, W2, 0, 1, gtmp.data());
        detail::blur_pass_adjoint(gtmp.data(), H2, W2, 1, 1, gup.data());
        T* dst = dx.channel(c);
        for (int r = 0; r < H2; ++r)
            for (int q = 0; q < W2; ++q)
                dst[static_cast<std::size_t>(r / 2) * W + q / 2] += gup[static_cast<std::size_t>(r) * W2 + q];
    }
    return dx;
}

} // namespace reage::nn
