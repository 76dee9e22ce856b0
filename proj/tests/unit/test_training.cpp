#include "test_helpers.hpp"

#include "reage/synth/pipeline.hpp"
#include "reage/training/trainer.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

using namespace reage;
using namespace reage::train;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Two subjects at ages 20 and 80, 13 frames of 32x32 each.
const std::filesystem::path& tiny_dataset()
{
    static const std::filesystem::path root = [] {
        auto dir = reage::test::scratch_dir("training_data");
        synth::PipelineConfig c;
        c.subjects = 2;
        c.ages = {20.0, 80.0};
        c.keyframes_per_video = 4;
        c.recursion_depth = 2;
        c.resolution = 32;
        c.sharpness_threshold = 0.0;
        c.seed = 3;
        synth::build_dataset(c, dir);
        return dir;
    }();
    return root;
}

TrainConfig tiny_config()
{
    TrainConfig c;
    c.generator.resolution = 32;
    c.generator.base_channels = 4;
    c.generator.hidden_channels = 4;
    c.generator.depth = 2;
    c.image_disc.widths = {4, 8, 8, 8};
    c.video_disc.widths = {4, 4, 8, 8};
    c.dt_choices = {1, 2, 3};
    c.iterations = 4;
    c.checkpoint_every = 2;
    c.probe_frames = 2;
    c.seed = 11;
    return c;
}

DatasetManifest tiny_manifest() { return load_manifest(tiny_dataset() / "manifest.json"); }

/// A manifest with three ages per subject and 57-frame clips (bookkeeping only).
DatasetManifest declared_manifest()
{
    synth::PipelineConfig c;
    c.subjects = 5;
    return synth::declare_manifest(c);
}

std::map<std::string, std::vector<float>> snapshot(TrainState<float>& s)
{
    std::map<std::string, std::vector<float>> out;
    auto take = [&](const std::string& n, nn::Param<float>& p) { out[n].assign(p.value.storage().begin(), p.value.storage().end()); };
    s.generator.visit(take);
    s.visit_discriminators(take);
    return out;
}

} // namespace

TEST(TrainConfig, DefaultsAndValidation)
{
    const TrainConfig d;
    EXPECT_EQ(d.learning_rate, 1e-4);
    EXPECT_EQ(d.batch_size, 2);
    EXPECT_EQ(d.dt_choices, (std::vector<int>{3, 5, 7}));
    EXPECT_EQ(d.reverse_prob, 0.5);
    EXPECT_EQ(TrainConfig::paper().iterations, 250000);
    EXPECT_EQ(TrainConfig::paper().batch_size, 4);
    EXPECT_NO_THROW(d.validate());
    auto bad = d;
    bad.dt_choices.clear();
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = d;
    bad.reverse_prob = 1.5;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = d;
    bad.weights.adv_video = -1.0;
    EXPECT_THROW(bad.validate(), ConfigError);

    const auto round = nlohmann::json(d).get<TrainConfig>();
    EXPECT_EQ(nlohmann::json(round), nlohmann::json(d));
}

TEST(Sampler, SeededDrawsRepeat)
{
    const auto m = declared_manifest();
    const TrainConfig c;
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_training_pair(m, a, c), sample_training_pair(m, b, c));
}

TEST(Sampler, AugmentationStatisticsOver10000Draws)
{
    const auto m = declared_manifest();
    const TrainConfig c;
    Rng rng(2024);
    std::map<int, int> dt_counts;
    int reversed = 0, same_age = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto s = sample_training_pair(m, rng, c);
        ++dt_counts[s.dt];
        reversed += s.reversed;
        same_age += s.input_age == s.target_age;
        const std::size_t span = static_cast<std::size_t>(3 * s.dt + 1);
        ASSERT_LE(s.start + span, m.frames_per_video);
    }
    EXPECT_EQ(dt_counts.size(), 3u);
    for (int dt : {3, 5, 7}) EXPECT_NEAR(dt_counts[dt] / double(n), 1.0 / 3.0, 0.02) << "dt " << dt;
    EXPECT_NEAR(reversed / double(n), 0.5, 0.03);
    // Three ages per subject: equal input and target ages one time in three.
    EXPECT_NEAR(same_age / double(n), 1.0 / 3.0, 0.03);
}

TEST(Sampler, WindowIndicesAndReversal)
{
    SampleSpec s;
    s.start = 4;
    s.dt = 5;
    EXPECT_EQ(s.frame_indices(4), (std::vector<std::size_t>{4, 9, 14, 19}));
    s.reversed = true;
    EXPECT_EQ(s.frame_indices(4), (std::vector<std::size_t>{19, 14, 9, 4}));
}

TEST(Sampler, PairsShareSubjectAndMotion)
{
    const auto m = tiny_manifest();
    ClipCache cache(tiny_dataset());
    auto c = tiny_config();
    c.reverse_prob = 1.0;
    Rng rng(9);
    for (int i = 0; i < 10; ++i) {
        const auto spec = sample_training_pair(m, rng, c);
        ASSERT_TRUE(spec.reversed);
        const auto p = load_training_pair<float>(m, cache, spec, c.window_frames);
        const auto& subj = m.subjects[spec.subject];
        const auto in = load_clip(tiny_dataset() / subj.video_for_age(spec.input_age)->path);
        const auto tar = load_clip(tiny_dataset() / subj.video_for_age(spec.target_age)->path);
        EXPECT_EQ(in.motion_seed(), tar.motion_seed());
        const auto idx = spec.frame_indices(c.window_frames);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            EXPECT_EQ(Frame::from_tensor(p.input[k]), in.frame(idx[k]));
            EXPECT_EQ(Frame::from_tensor(p.target[k]), tar.frame(idx[k]));
            EXPECT_EQ(in.annotations()[idx[k]], tar.annotations()[idx[k]]);
        }
    }
}

TEST(Sampler, MissingAgeVideoIsManifestError)
{
    auto m = declared_manifest();
    for (auto& s : m.subjects) s.videos.pop_back();
    const TrainConfig c;
    Rng rng(1);
    EXPECT_THROW(
        {
            for (int i = 0; i < 50; ++i) sample_training_pair(m, rng, c);
        },
        ManifestError);
    EXPECT_THROW(sample_training_pair(DatasetManifest{}, rng, c), ManifestError);
}

TEST(TrainStep, ZeroLearningRateLeavesParametersBitExact)
{
    auto c = tiny_config();
    c.learning_rate = 0.0;
    Trainer t(c, tiny_manifest(), tiny_dataset(), reage::test::scratch_dir("train_lr0"));
    const auto before = snapshot(t.state());
    for (int i = 0; i < 2; ++i) {
        const auto r = t.step();
        EXPECT_TRUE(r.finite());
        EXPECT_GT(r.g.l1, 0.0);
    }
    EXPECT_EQ(snapshot(t.state()), before);
    EXPECT_EQ(t.state().step, 2);
}

TEST(TrainStep, UpdatesBothNetworks)
{
    Trainer t(tiny_config(), tiny_manifest(), tiny_dataset(), reage::test::scratch_dir("train_update"));
    const auto before = snapshot(t.state());
    t.step();
    const auto after = snapshot(t.state());
    bool gen_changed = false, disc_image_changed = false, disc_video_changed = false;
    for (const auto& [name, v] : after) {
        if (v == before.at(name)) continue;
        gen_changed |= name.rfind("gen/", 0) == 0;
        disc_image_changed |= name.rfind("disc_image/", 0) == 0;
        disc_video_changed |= name.rfind("disc_video/", 0) == 0;
    }
    EXPECT_TRUE(gen_changed);
    EXPECT_TRUE(disc_image_changed);
    EXPECT_TRUE(disc_video_changed);
}

TEST(Trainer, SameSeedGivesIdenticalRuns)
{
    const auto a = reage::test::scratch_dir("train_det_a");
    const auto b = reage::test::scratch_dir("train_det_b");
    Trainer(tiny_config(), tiny_manifest(), tiny_dataset(), a).run();
    Trainer(tiny_config(), tiny_manifest(), tiny_dataset(), b).run();
    for (const char* f : {"log.csv", "summary.json", "config.json", "ckpt_000004.bin"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    std::istringstream log(slurp(a / "log.csv"));
    std::string line;
    int rows = 0;
    std::getline(log, line);
    EXPECT_EQ(line, Trainer::kLogHeader);
    while (std::getline(log, line)) ++rows;
    EXPECT_EQ(rows, 4);
}

TEST(Trainer, ResumeReproducesUninterruptedRun)
{
    const auto full = reage::test::scratch_dir("train_full");
    const auto split = reage::test::scratch_dir("train_split");
    Trainer(tiny_config(), tiny_manifest(), tiny_dataset(), full).run();

    auto first = tiny_config();
    first.iterations = 2;
    Trainer(first, tiny_manifest(), tiny_dataset(), split).run();
    std::filesystem::remove(split / "summary.json");
    Trainer resumed(tiny_config(), tiny_manifest(), tiny_dataset(), split);
    resumed.resume(split / "ckpt_000002.bin");
    resumed.run();
    for (const char* f : {"log.csv", "summary.json", "ckpt_000004.bin"}) EXPECT_EQ(slurp(full / f), slurp(split / f)) << f;

    auto other = tiny_config();
    other.learning_rate = 1e-3;
    Trainer mismatch(other, tiny_manifest(), tiny_dataset(), split);
    EXPECT_THROW(mismatch.resume(split / "ckpt_000002.bin"), ConfigError);
}

TEST(Trainer, CheckpointRestoresGenerator)
{
    const auto dir = reage::test::scratch_dir("train_ckpt");
    Trainer t(tiny_config(), tiny_manifest(), tiny_dataset(), dir);
    const auto summary = t.run();
    EXPECT_EQ(summary.checkpoint, "ckpt_000004.bin");
    const auto g = load_generator(dir / summary.checkpoint);
    const auto clip = load_clip(tiny_dataset() / tiny_manifest().subjects[0].videos[0].path);
    EXPECT_EQ(g.generate_video(clip, AgeValue(20), AgeValue(80)).frames(),
              t.state().generator.generate_video(clip, AgeValue(20), AgeValue(80)).frames());
    EXPECT_THROW(load_generator(dir / "missing.bin"), IoError);
}

TEST(Trainer, NonFiniteLossWritesDiagnostics)
{
    TrainState<float> s = TrainState<float>::create(tiny_config());
    TrainingPair<float> p;
    p.spec.input_age = 20;
    p.spec.target_age = 20;
    for (int i = 0; i < 4; ++i) {
        p.input.push_back(reage::test::random_tensor<float>(nn::Shape{3, 1, 32, 32}, i));
        p.target.push_back(p.input.back());
    }
    p.target[1][5] = std::numeric_limits<float>::quiet_NaN();
    const GradientFeatureDistance<float> perc;
    const auto before = snapshot(s);
    EXPECT_THROW(train_step<float>({p}, s, tiny_config(), perc), NonFiniteLoss);
    EXPECT_EQ(snapshot(s), before); // aborted before any update
    EXPECT_EQ(s.step, 0);

    struct NanDistance final : PerceptualDistance<float> {
        std::string name() const override { return "nan"; }
        double distance(const nn::Tensor<float>&, const nn::Tensor<float>&) const override
        {
            return std::numeric_limits<double>::quiet_NaN();
        }
        nn::Tensor<float> gradient(const nn::Tensor<float>& a, const nn::Tensor<float>&) const override
        {
            return nn::Tensor<float>(a.shape());
        }
    };
    const auto dir = reage::test::scratch_dir("train_nan");
    Trainer t(tiny_config(), tiny_manifest(), tiny_dataset(), dir);
    t.set_perceptual(std::make_shared<NanDistance>());
    EXPECT_THROW(t.step(), NonFiniteLoss);
    const auto diag = read_json_file(dir / "diagnostics.json");
    EXPECT_EQ(diag.at("record").at("step").get<long long>(), 1);
    EXPECT_EQ(diag.at("record").at("samples").size(), 2u);
}

TEST(Trainer, SummaryRecordsReconstructionThreshold)
{
    const auto dir = reage::test::scratch_dir("train_summary");
    auto c = tiny_config();
    c.iterations = 2;
    const auto s = Trainer(c, tiny_manifest(), tiny_dataset(), dir).run();
    const auto j = read_json_file(dir / "summary.json");
    EXPECT_EQ(j.at("steps").get<long long>(), 2);
    EXPECT_DOUBLE_EQ(j.at("self_recon_threshold").get<double>(), s.untrained_self_l1 / 2.0);
    EXPECT_GT(s.untrained_self_l1, 0.0);
    EXPECT_TRUE(j.at("l1_at_step_10").is_null());
    EXPECT_EQ(read_json_file(dir / "config.json"), nlohmann::json(c));
}
