#include "test_helpers.hpp"

#include "reage/datamodel/clip_io.hpp"
#include "reage/datamodel/manifest.hpp"
#include "reage/datamodel/masked_frame.hpp"
#include "reage/datamodel/png_io.hpp"

#include <gtest/gtest.h>

using namespace reage;
using reage::test::random_clip;
using reage::test::random_frame;
using reage::test::scratch_dir;

TEST(AgeValue, RangeIsClosedZeroToHundred)
{
    EXPECT_NO_THROW(AgeValue(0));
    EXPECT_NO_THROW(AgeValue(100));
    EXPECT_THROW(AgeValue(-0.5), ValidationError);
    EXPECT_THROW(AgeValue(100.01), ValidationError);
    EXPECT_THROW(AgeValue(std::nan("")), ValidationError);
}

TEST(AgeMask, NormalizedValues)
{
    EXPECT_EQ(make_age_mask(AgeValue(0), 16, 16).value(), 0.0f);
    EXPECT_EQ(make_age_mask(AgeValue(100), 16, 16).value(), 1.0f);
    EXPECT_EQ(make_age_mask(AgeValue(85), 16, 16).value(), 0.85f);
    const auto t = make_age_mask(AgeValue(85), 16, 32).to_tensor();
    EXPECT_EQ(t.shape(), (nn::Shape{1, 1, 16, 32}));
    for (float v : t.storage()) EXPECT_EQ(v, 0.85f);
    EXPECT_THROW(AgeMask(16, 16, 1.5f), ValidationError);
    EXPECT_THROW(AgeMask(0, 16, 0.5f), ValidationError);
}

TEST(AgeMask, NormalizationIsMonotone)
{
    float last = -1.0f;
    for (int a = 0; a <= 100; ++a) {
        const float v = make_age_mask(AgeValue(a), 16, 16).value();
        EXPECT_GT(v, last);
        last = v;
    }
}

TEST(MaskedFrame, ChannelLayout)
{
    const auto f = random_frame(32, 16, 3);
    const auto mf = mask_frame(f, AgeValue(20), AgeValue(70));
    EXPECT_EQ(mf.channels(), 5);
    const auto t = mf.to_tensor();
    EXPECT_EQ(t.shape(), (nn::Shape{5, 1, 32, 16}));
    EXPECT_EQ(Frame::from_tensor(nn::slice_channels(t, 0, 3)), f);
    EXPECT_EQ(t.at(3, 5, 5), 0.2f);
    EXPECT_EQ(t.at(4, 31, 15), 0.7f);
    EXPECT_EQ(mask_tensor(f.to_tensor(), AgeValue(20), AgeValue(70)).storage(), t.storage());
    EXPECT_THROW(MaskedFrame(f, AgeMask(16, 16, 0.2f), AgeMask(32, 16, 0.7f)), ValidationError);
}

TEST(Frame, ClampsAndValidatesSize)
{
    const Frame f(16, 16, 3, std::vector<float>(16 * 16 * 3, 4.0f));
    EXPECT_EQ(f.at(0, 0, 0), 1.0f);
    EXPECT_THROW(Frame(20, 16), ValidationError);
    EXPECT_THROW(Frame(16, 16, 3, std::vector<float>(5)), ValidationError);
}

TEST(PngIo, QuantizationRoundTripWithinHalfStep)
{
    for (int q = 0; q < 256; ++q) EXPECT_EQ(quantize_unit(dequantize_unit(static_cast<std::uint8_t>(q))), q);
    EXPECT_EQ(quantize_unit(-1.0f), 0);
    EXPECT_EQ(quantize_unit(1.0f), 255);
}

TEST(ClipIo, SaveLoadRoundTrip)
{
    const auto dir = scratch_dir("clip_roundtrip");
    auto clip = random_clip(3, 64, 11);
    clip.set_subject_id("s0").set_apparent_age(AgeValue(42)).set_motion_seed(99u);
    save_clip(clip, dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "frame_000001.png"));
    EXPECT_TRUE(std::filesystem::exists(dir / "frame_000003.png"));

    const auto back = load_clip(dir);
    ASSERT_EQ(back.frame_count(), 3u);
    EXPECT_EQ(back.subject_id(), "s0");
    EXPECT_EQ(back.apparent_age()->years(), 42.0);
    EXPECT_EQ(*back.motion_seed(), 99u);
    for (std::size_t t = 0; t < 3; ++t) {
        EXPECT_EQ(back.frame(t).height(), 64);
        EXPECT_LE(max_abs_diff(back.frame(t), clip.frame(t)), 1.0f / 127.5f);
    }
}

TEST(ClipIo, SavingFewerFramesRemovesStaleFiles)
{
    const auto dir = scratch_dir("clip_stale");
    save_clip(random_clip(4, 16, 1), dir);
    save_clip(random_clip(2, 16, 2), dir);
    EXPECT_EQ(list_frame_files(dir).size(), 2u);
    EXPECT_EQ(load_clip(dir).frame_count(), 2u);
}

TEST(ClipIo, RejectsMixedFrameSizes)
{
    const auto dir = scratch_dir("clip_mixed");
    save_clip(random_clip(2, 32, 3), dir);
    save_frame_png(random_frame(16, 16, 4), dir / frame_filename(2));
    try {
        load_clip(dir);
        FAIL() << "expected a size mismatch error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("frame 3"), std::string::npos) << e.what();
    }
}

TEST(ClipIo, RejectsEmptyDirectoryAndUnreadableFrame)
{
    const auto dir = scratch_dir("clip_empty");
    EXPECT_THROW(load_clip(dir), IoError);
    const auto bad = scratch_dir("clip_corrupt");
    save_clip(random_clip(2, 16, 5), bad);
    {
        std::ofstream(bad / frame_filename(1), std::ios::binary) << "not a png";
    }
    EXPECT_THROW(load_clip(bad), IoError);
}

TEST(VideoClip, ConstructionInvariants)
{
    EXPECT_THROW(VideoClip(std::vector<Frame>{}), ValidationError);
    EXPECT_THROW(VideoClip({random_frame(16, 16, 1), random_frame(32, 16, 2)}), ValidationError);
    auto clip = random_clip(3, 16, 6);
    EXPECT_THROW(clip.set_landmarks(std::vector<Landmarks>(2)), ValidationError);
    clip.set_annotations(nlohmann::json::array({1, 2, 3}));
    const auto r = clip.reversed();
    EXPECT_EQ(r.frame(0), clip.frame(2));
    EXPECT_EQ(r.annotations(), nlohmann::json::array({3, 2, 1}));
}

namespace {

DatasetManifest small_manifest()
{
    DatasetManifest m;
    m.resolution = 16;
    m.keyframes_per_video = 2;
    m.recursion_depth = 1;
    m.frames_per_video = 3;
    m.sharpness_threshold = 0.5;
    m.backend = "test";
    SubjectRecord s;
    s.subject_id = "s0";
    s.motion_seed = 7;
    s.ages = {18, 85};
    s.videos = {{18, "s0/age_18", 3, 7, 0.9}, {85, "s0/age_85", 3, 7, 0.8}};
    s.sharpness = 0.8;
    m.subjects.push_back(s);
    return m;
}

} // namespace

TEST(Manifest, ValidPairedManifestPasses)
{
    EXPECT_NO_THROW(validate_manifest(small_manifest()));
}

TEST(Manifest, RejectsMismatchedFrameCounts)
{
    auto m = small_manifest();
    m.subjects[0].videos[1].frame_count = 4;
    EXPECT_THROW(validate_manifest(m), ManifestError);
}

TEST(Manifest, RejectsOtherBrokenInvariants)
{
    auto missing = small_manifest();
    missing.subjects[0].videos.pop_back();
    EXPECT_THROW(validate_manifest(missing), ManifestError);

    auto motion = small_manifest();
    motion.subjects[0].videos[0].motion_seed = 8;
    EXPECT_THROW(validate_manifest(motion), ManifestError);

    auto blurry = small_manifest();
    blurry.subjects[0].videos[0].sharpness = 0.1;
    EXPECT_THROW(validate_manifest(blurry), ManifestError);
}

TEST(Manifest, JsonRoundTripAndOnDiskCheck)
{
    const auto root = scratch_dir("manifest");
    auto m = small_manifest();
    for (const auto& v : m.subjects[0].videos) {
        auto clip = random_clip(3, 16, static_cast<std::uint64_t>(v.age));
        clip.set_motion_seed(7u);
        save_clip(clip, root / v.path);
    }
    save_manifest(m, root / "manifest.json");
    const auto back = load_manifest(root / "manifest.json");
    EXPECT_EQ(nlohmann::json(back), nlohmann::json(m));
    EXPECT_NO_THROW(validate_manifest(back, root));

    save_clip(random_clip(2, 16, 9).set_motion_seed(7u), root / "s0/age_85");
    EXPECT_THROW(validate_manifest(back, root), ManifestError);

    std::ofstream(root / "broken.json") << "{\"subjects\": 3}";
    EXPECT_THROW(load_manifest(root / "broken.json"), ManifestError);
}
