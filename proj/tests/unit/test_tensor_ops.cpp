#include "test_helpers.hpp"

#include "reage/nn/adam.hpp"
#include "reage/nn/archive.hpp"
#include "reage/nn/conv.hpp"
#include "reage/nn/ops.hpp"

#include <gtest/gtest.h>

using namespace reage;
using namespace reage::nn;
using reage::test::dot;
using reage::test::random_tensor;

namespace {

// Direct-summation convolution, independent of the im2col path.
Tensor<double> naive_conv(const ConvSpec& s, const Tensor<double>& x, const Tensor<double>& w,
                          const Tensor<double>& b)
{
    const Shape out = s.output_shape(x.shape());
    Tensor<double> y(out);
    for (int o = 0; o < out.c; ++o)
        for (int oz = 0; oz < out.d; ++oz)
            for (int oy = 0; oy < out.h; ++oy)
                for (int ox = 0; ox < out.w; ++ox) {
                    double acc = s.bias ? b[o] : 0.0;
                    std::size_t k = 0;
                    for (int c = 0; c < s.in_channels; ++c)
                        for (int kz = 0; kz < s.kernel_d; ++kz)
                            for (int ky = 0; ky < s.kernel_h; ++ky)
                                for (int kx = 0; kx < s.kernel_w; ++kx, ++k) {
                                    const int iz = oz * s.stride_d - s.pad_d.before + kz;
                                    const int iy = oy * s.stride_h - s.pad_h.before + ky;
                                    const int ix = ox * s.stride_w - s.pad_w.before + kx;
                                    if (iz < 0 || iy < 0 || ix < 0 || iz >= x.depth() || iy >= x.height() ||
                                        ix >= x.width())
                                        continue;
                                    acc += w[static_cast<std::size_t>(o) * s.fan_in() + k] * x.at(c, iz, iy, ix);
                                }
                    y.at(o, oz, oy, ox) = acc;
                }
    return y;
}

struct ConvCase {
    ConvSpec spec;
    Shape input;
};

std::vector<ConvCase> conv_cases()
{
    return {
        {ConvSpec::planar(3, 4, 3, 1, Pad{1, 1}), Shape{3, 1, 8, 8}},
        {ConvSpec::planar(2, 3, 4, 2, Pad{1, 1}), Shape{2, 1, 8, 8}},
        {ConvSpec::planar(2, 2, 4, 1, same_pad(4)), Shape{2, 1, 6, 6}},
        {ConvSpec::planar(5, 3, 1, 1, Pad{}), Shape{5, 1, 4, 4}},
        {ConvSpec{2, 3, 4, 4, 4, 1, 2, 2, Pad{2, 2}, Pad{1, 1}, Pad{1, 1}, true}, Shape{2, 3, 8, 8}},
        {ConvSpec{2, 2, 4, 4, 4, 1, 1, 1, same_pad(4), same_pad(4), same_pad(4), true}, Shape{2, 4, 4, 4}},
    };
}

} // namespace

TEST(Conv, MatchesDirectSummation)
{
    for (const auto& [spec, in] : conv_cases()) {
        Conv<double> conv("c", spec);
        conv.initialize(InitMode::FanInNormal, 1.0, 7);
        for (auto& v : conv.bias().value.storage()) v = 0.3;
        const auto x = random_tensor<double>(in, 11);
        const auto got = conv.forward(x);
        const auto want = naive_conv(spec, x, conv.weight().value, conv.bias().value);
        ASSERT_EQ(got.shape(), want.shape());
        EXPECT_LT(max_abs_diff(got, want), 1e-12);
    }
}

TEST(Conv, BackwardMatchesFiniteDifferences)
{
    for (const auto& [spec, in] : conv_cases()) {
        Conv<double> conv("c", spec);
        conv.initialize(InitMode::FanInNormal, 1.0, 3);
        const auto x = random_tensor<double>(in, 5);
        const auto probe = random_tensor<double>(spec.output_shape(in), 9);
        // L = <probe, conv(x)>
        conv.weight().zero_grad();
        conv.bias().zero_grad();
        const auto dx = conv.backward(x, probe);
        const double h = 1e-6;
        for (std::size_t i = 0; i < x.size(); i += 7) {
            auto xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (dot(probe, conv.forward(xp)) - dot(probe, conv.forward(xm))) / (2 * h);
            EXPECT_NEAR(dx[i], fd, 1e-7);
        }
        auto& w = conv.weight();
        for (std::size_t i = 0; i < w.value.size(); i += 5) {
            const double orig = w.value[i];
            w.value[i] = orig + h;
            const double fp = dot(probe, conv.forward(x));
            w.value[i] = orig - h;
            const double fm = dot(probe, conv.forward(x));
            w.value[i] = orig;
            EXPECT_NEAR(w.grad[i], (fp - fm) / (2 * h), 1e-7);
        }
        double bias_fd = 0;
        for (std::size_t i = 0; i < probe.size() / static_cast<std::size_t>(spec.out_channels); ++i) bias_fd += probe[i];
        EXPECT_NEAR(conv.bias().grad[0], bias_fd, 1e-9);
    }
}

TEST(Conv, ZeroWeightsGiveZeroOutput)
{
    Conv<float> conv("c", ConvSpec::planar(3, 2, 3, 1, Pad{1, 1}));
    conv.initialize(InitMode::Zeros, 1.0, 0);
    const auto y = conv.forward(random_tensor<float>(Shape{3, 1, 8, 8}, 1));
    for (float v : y.storage()) EXPECT_EQ(v, 0.0f);
}

TEST(Conv, UninitializedLayerStillReportsShapes)
{
    Conv<float> conv("c", ConvSpec::planar(82, 64, 3, 1, Pad{1, 1}));
    conv.initialize(InitMode::Uninitialized, 1.0, 0);
    EXPECT_FALSE(conv.allocated());
    EXPECT_EQ(conv.output_shape(Shape{82, 1, 512, 512}), (Shape{64, 1, 512, 512}));
    EXPECT_THROW(conv.forward(Tensor<float>(Shape{82, 1, 16, 16})), ValidationError);
    EXPECT_THROW(conv.output_shape(Shape{81, 1, 16, 16}), ValidationError);
}

TEST(Conv, InitializationIsSeedDeterministic)
{
    Conv<float> a("layer", ConvSpec::planar(4, 4, 3, 1, Pad{1, 1}));
    Conv<float> b("layer", ConvSpec::planar(4, 4, 3, 1, Pad{1, 1}));
    a.initialize(InitMode::FanInNormal, 1.0, 42);
    b.initialize(InitMode::FanInNormal, 1.0, 42);
    EXPECT_EQ(a.weight().value.storage(), b.weight().value.storage());
    b.initialize(InitMode::FanInNormal, 1.0, 43);
    EXPECT_NE(a.weight().value.storage(), b.weight().value.storage());
}

TEST(BlurOps, Shapes)
{
    EXPECT_EQ(max_blur_pool_shape(Shape{64, 1, 512, 512}), (Shape{64, 1, 256, 256}));
    EXPECT_EQ(blur_upsample_shape(Shape{1024, 1, 32, 32}), (Shape{1024, 1, 64, 64}));
    EXPECT_THROW(max_blur_pool(Tensor<float>(Shape{1, 1, 5, 4})), ValidationError);
}

TEST(BlurOps, ConstantMapsArePreserved)
{
    const Tensor<double> x(Shape{2, 1, 8, 8}, 0.37);
    const auto pooled = max_blur_pool(x);
    const auto upsampled = blur_upsample(x);
    for (double v : pooled.storage()) EXPECT_NEAR(v, 0.37, 1e-15);
    for (double v : upsampled.storage()) EXPECT_NEAR(v, 0.37, 1e-15);
}

TEST(BlurOps, BinomialKernelOnImpulse)
{
    // Upsampling an impulse and blurring spreads it with [1,2,1]/4 per axis.
    Tensor<double> x(Shape{1, 1, 4, 4});
    x.at(0, 1, 1) = 1.0;
    const auto y = blur_upsample(x);
    // Nearest upsample gives a 2x2 block at rows/cols 2..3; per axis the blur
    // yields 0.75 at index 2 and 0.25 at index 1.
    EXPECT_NEAR(y.at(0, 2, 2), 0.75 * 0.75, 1e-15);
    EXPECT_NEAR(y.at(0, 1, 2), 0.25 * 0.75, 1e-15);
    EXPECT_NEAR(y.at(0, 1, 1), 0.25 * 0.25, 1e-15);
    EXPECT_NEAR(y.at(0, 0, 0), 0.0, 1e-15);
}

TEST(BlurOps, BackwardIsAdjoint)
{
    const auto x = random_tensor<double>(Shape{3, 1, 8, 6}, 21);
    const auto gy = random_tensor<double>(Shape{3, 1, 16, 12}, 22);
    // Linear map: <A x, g> == <x, A^T g>.
    EXPECT_NEAR(dot(blur_upsample(x), gy), dot(x, blur_upsample_backward(x, gy)), 1e-12);

    // Max-blur-pool is piecewise linear; check against finite differences.
    const auto gp = random_tensor<double>(Shape{3, 1, 4, 3}, 23);
    const auto dx = max_blur_pool_backward(x, gp);
    const double h = 1e-7;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        EXPECT_NEAR(dx[i], (dot(max_blur_pool(xp), gp) - dot(max_blur_pool(xm), gp)) / (2 * h), 1e-6);
    }
}

TEST(LeakyRelu, ForwardBackward)
{
    Tensor<double> x(Shape{1, 1, 1, 4});
    x[0] = -2;
    x[1] = -0.5;
    x[2] = 0.5;
    x[3] = 3;
    const auto y = leaky_relu(x, 0.2);
    EXPECT_DOUBLE_EQ(y[0], -0.4);
    EXPECT_DOUBLE_EQ(y[3], 3.0);
    const auto g = leaky_relu_backward(x, Tensor<double>(x.shape(), 1.0), 0.2);
    EXPECT_DOUBLE_EQ(g[1], 0.2);
    EXPECT_DOUBLE_EQ(g[2], 1.0);
}

TEST(Tensor, ConcatAndSlice)
{
    const auto a = random_tensor<float>(Shape{2, 1, 4, 4}, 1);
    const auto b = random_tensor<float>(Shape{3, 1, 4, 4}, 2);
    const auto c = concat_channels<float>({&a, &b});
    EXPECT_EQ(c.channels(), 5);
    EXPECT_EQ(slice_channels(c, 0, 2).storage(), a.storage());
    EXPECT_EQ(slice_channels(c, 2, 3).storage(), b.storage());
    const Tensor<float> wrong(Shape{1, 1, 4, 5});
    EXPECT_THROW((concat_channels<float>({&a, &wrong})), ValidationError);
}

TEST(Adam, ZeroLearningRateLeavesParametersUnchanged)
{
    Param<float> p(Shape{1, 1, 1, 16});
    for (std::size_t i = 0; i < 16; ++i) {
        p.value[i] = static_cast<float>(i) * 0.1f;
        p.grad[i] = 1.0f - static_cast<float>(i) * 0.2f;
    }
    const auto before = p.value.storage();
    Adam<float> adam(AdamConfig{0.0});
    adam.begin_step();
    adam.apply("p", p);
    EXPECT_EQ(p.value.storage(), before);
}

TEST(Adam, FirstStepMovesByLearningRate)
{
    Param<double> p(Shape{1, 1, 1, 2});
    p.grad[0] = 3.0;
    p.grad[1] = -0.01;
    Adam<double> adam(AdamConfig{0.1});
    adam.begin_step();
    adam.apply("p", p);
    // Bias-corrected first step is lr * sign(g) (up to epsilon).
    EXPECT_NEAR(p.value[0], -0.1, 1e-6);
    EXPECT_NEAR(p.value[1], 0.1, 1e-5);
}

TEST(ArrayArchive, RoundTripAndErrors)
{
    const auto dir = reage::test::scratch_dir("archive");
    ArrayArchive ar;
    ar.meta()["kind"] = "test";
    ar.put("b/x", random_tensor<float>(Shape{2, 1, 3, 4}, 1));
    ar.put("a/y", random_tensor<double>(Shape{1, 2, 2, 2}, 2));
    ar.save(dir / "x.bin");
    const auto back = ArrayArchive::load(dir / "x.bin");
    EXPECT_EQ(back.meta()["kind"], "test");
    EXPECT_EQ(back.get("b/x").storage(), ar.get("b/x").storage());
    EXPECT_EQ(back.get("a/y").shape(), (Shape{1, 2, 2, 2}));
    EXPECT_THROW(back.get("missing"), IoError);

    std::ofstream(dir / "bad.bin") << "not an archive";
    EXPECT_THROW(ArrayArchive::load(dir / "bad.bin"), IoError);
}
