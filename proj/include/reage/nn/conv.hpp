#pragma once

#include "reage/nn/param.hpp"
#include "reage/nn/tensor.hpp"

#include <Eigen/Core>

#include <string>

namespace reage::nn {

/// Zero padding before/after one axis.
struct Pad {
    int before = 0;
    int after = 0;
    constexpr bool operator==(const Pad&) const = default;
};

/// "Same" padding for a stride-1 kernel; even kernels put the extra pixel after.
constexpr Pad same_pad(int kernel) { return {(kernel - 1) / 2, kernel / 2}; }

/// Convolution over (depth, height, width). Planar convolutions set
/// kernel_d = 1, stride_d = 1 and no depth padding.
struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel_d = 1, kernel_h = 3, kernel_w = 3;
    int stride_d = 1, stride_h = 1, stride_w = 1;
    Pad pad_d{}, pad_h{1, 1}, pad_w{1, 1};
    bool bias = true;

    static ConvSpec planar(int in, int out, int kernel, int stride, Pad pad)
    {
        return {in, out, 1, kernel, kernel, 1, stride, stride, Pad{}, pad, pad, true};
    }

    int fan_in() const { return in_channels * kernel_d * kernel_h * kernel_w; }

    Shape output_shape(const Shape& in) const
    {
        if (in.c != in_channels)
            throw ValidationError("conv expects " + std::to_string(in_channels) + " input channels, got " +
                                  std::to_string(in.c));
        auto out_dim = [](int n, int k, int s, Pad p) { return (n + p.before + p.after - k) / s + 1; };
        Shape out{out_channels, out_dim(in.d, kernel_d, stride_d, pad_d), out_dim(in.h, kernel_h, stride_h, pad_h),
                  out_dim(in.w, kernel_w, stride_w, pad_w)};
        if (out.d <= 0 || out.h <= 0 || out.w <= 0)
            throw ValidationError("conv input " + in.str() + " too small for kernel");
        return out;
    }
};

namespace detail {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

inline bool is_pointwise(const ConvSpec& s)
{
    return s.kernel_d == 1 && s.kernel_h == 1 && s.kernel_w == 1 && s.stride_d == 1 && s.stride_h == 1 &&
           s.stride_w == 1 && s.pad_d == Pad{} && s.pad_h == Pad{} && s.pad_w == Pad{};
}

/// Gathers receptive fields into a (C*kd*kh*kw) x (Do*Ho*Wo) matrix; when
/// `scatter` is set the transpose runs instead, accumulating `col` into `x`.
template <typename T, bool Scatter>
void im2col_impl(const ConvSpec& s, const Shape& in, const Shape& out, std::conditional_t<Scatter, T*, const T*> x,
                 std::conditional_t<Scatter, const T*, T*> col)
{
    const std::size_t cols = out.volume();
    std::size_t row = 0;
    for (int c = 0; c < in.c; ++c) {
        for (int kz = 0; kz < s.kernel_d; ++kz) {
            for (int ky = 0; ky < s.kernel_h; ++ky) {
                for (int kx = 0; kx < s.kernel_w; ++kx, ++row) {
                    auto* crow = col + row * cols;
                    // Valid output-x range for this kx, shared by every row.
                    int ox_lo = 0, ox_hi = out.w;
                    while (ox_lo < out.w && ox_lo * s.stride_w - s.pad_w.before + kx < 0) ++ox_lo;
                    while (ox_hi > ox_lo && (ox_hi - 1) * s.stride_w - s.pad_w.before + kx >= in.w) --ox_hi;
                    std::size_t idx = 0;
                    for (int oz = 0; oz < out.d; ++oz) {
                        const int iz = oz * s.stride_d - s.pad_d.before + kz;
                        const bool z_ok = iz >= 0 && iz < in.d;
                        for (int oy = 0; oy < out.h; ++oy, idx += out.w) {
                            const int iy = oy * s.stride_h - s.pad_h.before + ky;
                            if (!z_ok || iy < 0 || iy >= in.h) {
                                if constexpr (!Scatter) std::fill(crow + idx, crow + idx + out.w, T(0));
                                continue;
                            }
                            auto* xrow = x + ((static_cast<std::size_t>(c) * in.d + iz) * in.h + iy) * in.w;
                            const int x0 = -s.pad_w.before + kx;
                            if constexpr (!Scatter) {
                                for (int ox = 0; ox < ox_lo; ++ox) crow[idx + ox] = T(0);
                                if (s.stride_w == 1) {
                                    std::copy(xrow + ox_lo + x0, xrow + ox_hi + x0, crow + idx + ox_lo);
                                } else {
                                    for (int ox = ox_lo; ox < ox_hi; ++ox) crow[idx + ox] = xrow[ox * s.stride_w + x0];
                                }
                                for (int ox = ox_hi; ox < out.w; ++ox) crow[idx + ox] = T(0);
                            } else {
                                for (int ox = ox_lo; ox < ox_hi; ++ox) xrow[ox * s.stride_w + x0] += crow[idx + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

} // namespace detail

/// Convolution layer with fan-in scaled initialization. Forward is const and
/// reentrant; backward accumulates into the parameter gradients.
template <typename T>
class Conv {
public:
    Conv() = default;
    Conv(std::string name, ConvSpec spec) : name_(std::move(name)), spec_(spec) {}

    const std::string& name() const { return name_; }
    const ConvSpec& spec() const { return spec_; }
    Shape output_shape(const Shape& in) const { return spec_.output_shape(in); }
    bool allocated() const { return !weight_.value.empty(); }

    void initialize(InitMode mode, double gain, std::uint64_t seed)
    {
        if (mode == InitMode::Uninitialized) {
            weight_ = {};
            bias_ = {};
            return;
        }
        weight_ = Param<T>(Shape{spec_.out_channels, 1, 1, spec_.fan_in()});
        if (spec_.bias) bias_ = Param<T>(Shape{spec_.out_channels, 1, 1, 1});
        if (mode == InitMode::FanInNormal) init_fan_in_normal(weight_, spec_.fan_in(), gain, seed, name_ + "/weight");
    }

    Param<T>& weight() { return weight_; }
    const Param<T>& weight() const { return weight_; }
    Param<T>& bias() { return bias_; }
    const Param<T>& bias() const { return bias_; }

    void visit(const ParamVisitor<T>& fn)
    {
        fn(name_ + "/weight", weight_);
        if (spec_.bias) fn(name_ + "/bias", bias_);
    }

    std::size_t parameter_count() const
    {
        return static_cast<std::size_t>(spec_.fan_in()) * spec_.out_channels + (spec_.bias ? spec_.out_channels : 0);
    }

    Tensor<T> forward(const Tensor<T>& x) const
    {
        require_allocated();
        const Shape out_shape = output_shape(x.shape());
        Tensor<T> y(out_shape);
        const auto K = static_cast<Eigen::Index>(spec_.fan_in());
        const auto P = static_cast<Eigen::Index>(out_shape.volume());
        detail::ConstMatMap<T> w(weight_.value.data(), spec_.out_channels, K);
        detail::MatMap<T> ym(y.data(), spec_.out_channels, P);
        if (detail::is_pointwise(spec_)) {
            ym.noalias() = w * detail::ConstMatMap<T>(x.data(), K, P);
        } else {
            AlignedVector<T> col(static_cast<std::size_t>(K) * P);
            detail::im2col_impl<T, false>(spec_, x.shape(), out_shape, x.data(), col.data());
            ym.noalias() = w * detail::ConstMatMap<T>(col.data(), K, P);
        }
        if (spec_.bias) {
            for (int o = 0; o < spec_.out_channels; ++o) ym.row(o).array() += bias_.value[o];
        }
        return y;
    }

    /// Returns dL/dx for the input `x` used in forward. Parameter gradients are
    /// accumulated unless `param_grads` is false.
    Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& grad_out, bool param_grads = true)
    {
        require_allocated();
        const Shape out_shape = output_shape(x.shape());
        if (!(grad_out.shape() == out_shape)) throw ValidationError("conv backward: gradient shape mismatch");
        const auto K = static_cast<Eigen::Index>(spec_.fan_in());
        const auto P = static_cast<Eigen::Index>(out_shape.volume());
        detail::ConstMatMap<T> w(weight_.value.data(), spec_.out_channels, K);
        detail::ConstMatMap<T> g(grad_out.data(), spec_.out_channels, P);
        Tensor<T> dx(x.shape());
        const bool pointwise = detail::is_pointwise(spec_);

        if (param_grads) {
            detail::MatMap<T> dw(weight_.grad.data(), spec_.out_channels, K);
            if (pointwise) {
                dw.noalias() += g * detail::ConstMatMap<T>(x.data(), K, P).transpose();
            } else {
                AlignedVector<T> col(static_cast<std::size_t>(K) * P);
                detail::im2col_impl<T, false>(spec_, x.shape(), out_shape, x.data(), col.data());
                dw.noalias() += g * detail::ConstMatMap<T>(col.data(), K, P).transpose();
            }
            if (spec_.bias) {
                for (int o = 0; o < spec_.out_channels; ++o) bias_.grad[o] += g.row(o).sum();
            }
        }

        if (pointwise) {
            detail::MatMap<T>(dx.data(), K, P).noalias() = w.transpose() * g;
        } else {
            AlignedVector<T> dcol(static_cast<std::size_t>(K) * P);
            detail::MatMap<T>(dcol.data(), K, P).noalias() = w.transpose() * g;
            detail::im2col_impl<T, true>(spec_, x.shape(), out_shape, dx.data(), dcol.data());
        }
        return dx;
    }

private:
    void require_allocated() const
    {
        if (!allocated()) throw ValidationError("layer " + name_ + " has no allocated parameters");
    }

    std::string name_;
    ConvSpec spec_{};
    Param<T> weight_;
    Param<T> bias_;
};

} // namespace reage::nn
