#pragma once

#include "reage/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <new>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace reage::nn {

/// 64-byte aligned storage. Eigen's vectorized kernels peel differently for
/// differently aligned buffers, which changes summation order; fixing the
/// alignment keeps results independent of where the heap places an array.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept
    {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept
    {
        return true;
    }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Channel-major shape: channels x depth (time) x height x width.
/// Planar feature maps use depth == 1.
struct Shape {
    int c = 0;
    int d = 1;
    int h = 0;
    int w = 0;

    constexpr std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    constexpr std::size_t volume() const { return static_cast<std::size_t>(d) * plane(); }
    constexpr std::size_t size() const { return static_cast<std::size_t>(c) * volume(); }
    constexpr bool operator==(const Shape&) const = default;

    /// "h × w × c" for planar maps and "h × w × c × d" for volumes, the
    /// convention used by the architecture tables.
    std::string str() const
    {
        std::string s = std::to_string(h) + " × " + std::to_string(w) + " × " + std::to_string(c);
        if (d != 1) s += " × " + std::to_string(d);
        return s;
    }
};

inline std::ostream& operator<<(std::ostream& os, const Shape& s) { return os << s.str(); }

template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(checked_size(shape), fill) {}
    Tensor(int c, int h, int w, T fill = T(0)) : Tensor(Shape{c, 1, h, w}, fill) {}

    const Shape& shape() const { return shape_; }
    int channels() const { return shape_.c; }
    int depth() const { return shape_.d; }
    int height() const { return shape_.h; }
    int width() const { return shape_.w; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> span() { return data_; }
    std::span<const T> span() const { return data_; }
    AlignedVector<T>& storage() { return data_; }
    const AlignedVector<T>& storage() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(int c, int y, int x) { return data_[index(c, 0, y, x)]; }
    const T& at(int c, int y, int x) const { return data_[index(c, 0, y, x)]; }
    T& at(int c, int z, int y, int x) { return data_[index(c, z, y, x)]; }
    const T& at(int c, int z, int y, int x) const { return data_[index(c, z, y, x)]; }

    /// Pointer to the start of channel c.
    T* channel(int c) { return data_.data() + static_cast<std::size_t>(c) * shape_.volume(); }
    const T* channel(int c) const { return data_.data() + static_cast<std::size_t>(c) * shape_.volume(); }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(T(0)); }

    Tensor& operator+=(const Tensor& o)
    {
        require_same_shape(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    template <typename U>
    Tensor<U> cast() const
    {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    void require_same_shape(const Tensor& o, const char* what) const
    {
        if (!(o.shape_ == shape_))
            throw ValidationError(std::string("tensor shape mismatch in ") + what + ": " + shape_.str() +
                                  " vs " + o.shape_.str());
    }

private:
    static std::size_t checked_size(Shape s)
    {
        if (s.c < 0 || s.d < 1 || s.h < 0 || s.w < 0) throw ValidationError("invalid tensor shape " + s.str());
        return s.size();
    }

    std::size_t index(int c, int z, int y, int x) const
    {
        return ((static_cast<std::size_t>(c) * shape_.d + z) * shape_.h + y) * shape_.w + x;
    }

    Shape shape_{};
    AlignedVector<T> data_;
};

/// Concatenates planar or volumetric tensors along the channel axis.
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>* const> parts)
{
    if (parts.empty()) throw ValidationError("concat_channels: no inputs");
    Shape s = parts.front()->shape();
    s.c = 0;
    for (const auto* p : parts) {
        const auto& ps = p->shape();
        if (ps.d != s.d || ps.h != s.h || ps.w != s.w)
            throw ValidationError("concat_channels: spatial mismatch " + ps.str() + " vs " +
                                  parts.front()->shape().str());
        s.c += ps.c;
    }
    Tensor<T> out(s);
    T* dst = out.data();
    for (const auto* p : parts) dst = std::copy(p->data(), p->data() + p->size(), dst);
    return out;
}

template <typename T>
Tensor<T> concat_channels(std::initializer_list<const Tensor<T>*> parts)
{
    return concat_channels<T>(std::span<const Tensor<T>* const>(parts.begin(), parts.size()));
}

/// Copies channels [first, first + count) into a new tensor.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& t, int first, int count)
{
    if (first < 0 || count < 0 || first + count > t.channels())
        throw ValidationError("slice_channels: range out of bounds");
    Shape s = t.shape();
    s.c = count;
    Tensor<T> out(s);
    std::copy(t.channel(first), t.channel(first) + out.size(), out.data());
    return out;
}

/// Adds `src` into channels [first, first + src.channels()) of `dst`.
template <typename T>
void accumulate_channels(Tensor<T>& dst, int first, const Tensor<T>& src)
{
    T* d = dst.channel(first);
    for (std::size_t i = 0; i < src.size(); ++i) d[i] += src[i];
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b)
{
    a.require_same_shape(b, "max_abs_diff");
    T m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace reage::nn
