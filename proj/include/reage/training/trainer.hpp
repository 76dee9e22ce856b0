#pragma once

#include "reage/core/log.hpp"
#include "reage/generator/generator.hpp"
#include "reage/nn/adam.hpp"
#include "reage/nn/archive.hpp"
#include "reage/training/sampler.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace reage::train {

/// Networks and optimizer state of a GAN run.
template <typename T>
struct TrainState {
    gen::Generator<T> generator;
    disc::ImageDiscriminator<T> image_disc;
    disc::VideoDiscriminator<T> video_disc;
    nn::Adam<T> gen_opt;
    nn::Adam<T> disc_opt;
    long long step = 0;

    static TrainState create(const TrainConfig& c, nn::InitMode mode = nn::InitMode::FanInNormal)
    {
        const nn::AdamConfig adam{c.learning_rate, 0.9, 0.999, 1e-8};
        return {gen::Generator<T>(c.generator, derive_seed(c.seed, "generator"), mode),
                disc::ImageDiscriminator<T>(c.image_disc, derive_seed(c.seed, "image_disc"), mode),
                disc::VideoDiscriminator<T>(c.video_disc, derive_seed(c.seed, "video_disc"), mode),
                nn::Adam<T>(adam), nn::Adam<T>(adam), 0};
    }

    void visit_discriminators(const nn::ParamVisitor<T>& fn)
    {
        image_disc.visit(fn);
        video_disc.visit(fn);
    }

    void set_learning_rate(double lr)
    {
        gen_opt.set_learning_rate(lr);
        disc_opt.set_learning_rate(lr);
    }
};

/// Losses of one train_step, averaged over the batch. The generator
/// breakdown is measured against the discriminators after their update.
struct StepRecord {
    long long step = 0;
    double d_image = 0.0;
    double d_video = 0.0;
    LossBreakdown g{};
    std::vector<SampleSpec> samples;

    bool finite() const
    {
        for (double v : {d_image, d_video, g.l1, g.perceptual, g.adv_image, g.adv_video, g.total})
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void to_json(nlohmann::json& j, const StepRecord& r)
{
    j = {{"step", r.step}, {"d_image", r.d_image}, {"d_video", r.d_video}, {"generator", r.g}, {"samples", r.samples}};
}

class NonFiniteLoss : public TrainingError {
public:
    NonFiniteLoss(const std::string& phase, StepRecord record)
        : TrainingError("non-finite " + phase + " loss at step " + std::to_string(record.step)),
          record_(std::move(record))
    {}
    const StepRecord& record() const { return record_; }

private:
    StepRecord record_;
};

namespace detail {

template <typename T>
void scale_in_place(nn::Tensor<T>& t, double k)
{
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(t[i] * k);
}

template <typename T>
nn::Tensor<T> minus(const nn::Tensor<T>& a, const nn::Tensor<T>& b)
{
    a.require_same_shape(b, "minus");
    nn::Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

/// Frames the video discriminator sees: the frames themselves or their
/// difference from the input frames.
template <typename T>
std::vector<nn::Tensor<T>> video_disc_frames(const std::vector<nn::Tensor<T>>& frames,
                                             const std::vector<nn::Tensor<T>>& input, disc::VideoDiscInput mode)
{
    if (mode == disc::VideoDiscInput::Outputs) return frames;
    std::vector<nn::Tensor<T>> out;
    for (std::size_t i = 0; i < frames.size(); ++i) out.push_back(minus(frames[i], input[i]));
    return out;
}

template <typename T>
std::array<const nn::Tensor<T>*, 3> triplet(const std::vector<nn::Tensor<T>>& f, std::size_t j)
{
    return {&f[j], &f[j + 1], &f[j + 2]};
}

template <typename T>
void adam_step(nn::Adam<T>& opt, const std::function<void(const nn::ParamVisitor<T>&)>& visit)
{
    opt.begin_step();
    visit([&](const std::string& name, nn::Param<T>& p) { opt.apply(name, p); });
}

} // namespace detail

/// One discriminator update (both discriminators, hinge loss) followed by
/// one generator update, both with Adam. The generator is unrolled over each
/// window with frame interval 1 (window frames are already dt apart).
template <typename T>
StepRecord train_step(const std::vector<TrainingPair<T>>& batch, TrainState<T>& s, const TrainConfig& c,
                      const PerceptualDistance<T>& perceptual)
{
    if (batch.empty()) throw ValidationError("train_step on an empty batch");
    StepRecord rec;
    rec.step = s.step + 1;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const auto vmode = c.video_disc.input;

    std::vector<typename gen::Generator<T>::Rollout> rollouts(batch.size());
    std::vector<std::vector<nn::Tensor<T>>> outputs(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        rec.samples.push_back(batch[b].spec);
        outputs[b] = s.generator.forward_sequence(batch[b].input, AgeValue(batch[b].spec.input_age),
                                                  AgeValue(batch[b].spec.target_age), 1, &rollouts[b]);
    }

    // Discriminator update.
    s.image_disc.zero_grad();
    s.video_disc.zero_grad();
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& item = batch[b];
        const float mask = static_cast<float>(AgeValue(item.spec.target_age).normalized());
        const std::size_t w = item.target.size();
        const double k_img = inv_b / static_cast<double>(w);
        for (std::size_t t = 0; t < w; ++t) {
            typename disc::ImageDiscriminator<T>::Cache cr, cf;
            const auto real = s.image_disc.forward(item.target[t], mask, &cr);
            const auto fake = s.image_disc.forward(outputs[b][t], mask, &cf);
            rec.d_image += k_img * hinge_d_loss(real, fake);
            const auto [gr, gf] = hinge_d_grads(real, fake, k_img);
            s.image_disc.backward(cr, gr);
            s.image_disc.backward(cf, gf);
        }
        const auto vreal = detail::video_disc_frames(item.target, item.input, vmode);
        const auto vfake = detail::video_disc_frames(outputs[b], item.input, vmode);
        const std::size_t nv = w - 2;
        const double k_vid = inv_b / static_cast<double>(nv);
        for (std::size_t j = 0; j < nv; ++j) {
            typename disc::VideoDiscriminator<T>::Cache cr, cf;
            const auto real = s.video_disc.forward(detail::triplet(vreal, j), mask, &cr);
            const auto fake = s.video_disc.forward(detail::triplet(vfake, j), mask, &cf);
            rec.d_video += k_vid * hinge_d_loss(real, fake);
            const auto [gr, gf] = hinge_d_grads(real, fake, k_vid);
            s.video_disc.backward(cr, gr);
            s.video_disc.backward(cf, gf);
        }
    }
    if (!std::isfinite(rec.d_image) || !std::isfinite(rec.d_video)) throw NonFiniteLoss("discriminator", rec);
    detail::adam_step<T>(s.disc_opt, [&](const nn::ParamVisitor<T>& fn) { s.visit_discriminators(fn); });

    // Generator update against the refreshed discriminators.
    s.generator.zero_grad();
    std::vector<std::vector<nn::Tensor<T>>> grad_outputs(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& item = batch[b];
        const float mask = static_cast<float>(AgeValue(item.spec.target_age).normalized());
        const std::size_t w = item.target.size();
        std::vector<typename disc::ImageDiscriminator<T>::Cache> icache(w);
        std::vector<nn::Tensor<T>> iscores;
        for (std::size_t t = 0; t < w; ++t) iscores.push_back(s.image_disc.forward(outputs[b][t], mask, &icache[t]));
        const auto vfake = detail::video_disc_frames(outputs[b], item.input, vmode);
        std::vector<typename disc::VideoDiscriminator<T>::Cache> vcache(w - 2);
        std::vector<nn::Tensor<T>> vscores;
        for (std::size_t j = 0; j + 2 < w; ++j) vscores.push_back(s.video_disc.forward(detail::triplet(vfake, j), mask, &vcache[j]));

        GeneratorLossGrads<T> g;
        const auto loss = total_generator_loss(outputs[b], item.target, iscores, vscores, c.weights, perceptual, &g);
        rec.g.l1 += inv_b * loss.l1;
        rec.g.perceptual += inv_b * loss.perceptual;
        rec.g.adv_image += inv_b * loss.adv_image;
        rec.g.adv_video += inv_b * loss.adv_video;

        auto& go = grad_outputs[b];
        go = std::move(g.outputs);
        for (std::size_t t = 0; t < w; ++t) go[t] += s.image_disc.backward(icache[t], g.image_scores[t], false);
        for (std::size_t j = 0; j + 2 < w; ++j) {
            const auto gv = s.video_disc.backward(vcache[j], g.video_scores[j], false);
            for (std::size_t i = 0; i < 3; ++i) go[j + i] += gv[i];
        }
        for (auto& t : go) detail::scale_in_place(t, inv_b);
    }
    rec.g.total = rec.g.weighted_sum(c.weights);
    if (!rec.finite()) throw NonFiniteLoss("generator", rec);
    for (std::size_t b = 0; b < batch.size(); ++b) s.generator.backward_sequence(rollouts[b], grad_outputs[b]);
    detail::adam_step<T>(s.gen_opt, [&](const nn::ParamVisitor<T>& fn) { s.generator.visit(fn); });
    s.step = rec.step;
    return rec;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline std::string checkpoint_name(long long step)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "ckpt_%06lld.bin", step);
    return buf;
}

template <typename T>
void save_checkpoint(TrainState<T>& s, const TrainConfig& c, const nlohmann::json& extra,
                     const std::filesystem::path& path)
{
    nn::ArrayArchive ar;
    auto put_params = [&](const std::string& name, nn::Param<T>& p) { ar.put(name, p.value); };
    s.generator.visit(put_params);
    s.visit_discriminators(put_params);
    auto put_moments = [&](const std::string& prefix, const nn::Adam<T>& opt) {
        for (const auto& [name, m] : opt.moments()) {
            ar.put(prefix + "/m/" + name, m.m);
            ar.put(prefix + "/v/" + name, m.v);
        }
    };
    put_moments("adam_gen", s.gen_opt);
    put_moments("adam_disc", s.disc_opt);
    ar.meta() = extra;
    ar.meta()["kind"] = "reage-train";
    ar.meta()["step"] = s.step;
    ar.meta()["config"] = c;
    ar.meta()["adam_gen_steps"] = s.gen_opt.steps();
    ar.meta()["adam_disc_steps"] = s.disc_opt.steps();
    ar.save(path);
}

template <typename T>
struct LoadedCheckpoint {
    TrainConfig config;
    TrainState<T> state;
    nlohmann::json meta;
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path)
{
    const auto ar = nn::ArrayArchive::load(path);
    if (ar.meta().value("kind", std::string{}) != "reage-train")
        throw IoError(path.string() + " is not a training checkpoint");
    LoadedCheckpoint<T> out;
    try {
        out.config = ar.meta().at("config").get<TrainConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint " + path.string() + " has an unreadable config: " + e.what());
    }
    out.state = TrainState<T>::create(out.config, nn::InitMode::Zeros);
    auto read = [&](const std::string& name, nn::Param<T>& p) { ar.read_into(name, p.value); };
    out.state.generator.visit(read);
    out.state.visit_discriminators(read);
    auto read_moments = [&](const std::string& prefix, nn::Adam<T>& opt,
                            const std::function<void(const nn::ParamVisitor<T>&)>& visit) {
        visit([&](const std::string& name, nn::Param<T>& p) {
            if (!ar.contains(prefix + "/m/" + name)) return;
            auto& m = opt.moments()[name];
            m.m = nn::Tensor<T>(p.value.shape());
            m.v = nn::Tensor<T>(p.value.shape());
            ar.read_into(prefix + "/m/" + name, m.m);
            ar.read_into(prefix + "/v/" + name, m.v);
        });
    };
    auto& st = out.state;
    read_moments("adam_gen", st.gen_opt, [&](const nn::ParamVisitor<T>& fn) { st.generator.visit(fn); });
    read_moments("adam_disc", st.disc_opt, [&](const nn::ParamVisitor<T>& fn) { st.visit_discriminators(fn); });
    st.gen_opt.set_steps(ar.meta().value("adam_gen_steps", 0LL));
    st.disc_opt.set_steps(ar.meta().value("adam_disc_steps", 0LL));
    st.step = ar.meta().value("step", 0LL);
    out.meta = ar.meta();
    return out;
}

/// Generator weights and config from a training checkpoint.
inline gen::Generator<float> load_generator(const std::filesystem::path& path)
{
    return std::move(load_checkpoint<float>(path).state.generator);
}

/// Mean L1 between same-age reconstructions and their inputs over the first
/// `frames` frames of every video in the manifest.
template <typename T>
double self_reconstruction_l1(const gen::Generator<T>& g, const DatasetManifest& m, ClipCache& cache, int frames)
{
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& subj : m.subjects)
        for (const auto& v : subj.videos) {
            const auto clip = cache.get(v.path);
            std::vector<nn::Tensor<T>> in;
            for (std::size_t i = 0; i < std::min<std::size_t>(clip->frame_count(), static_cast<std::size_t>(frames)); ++i)
                in.push_back(clip->frame(i).template to_tensor<T>());
            const AgeValue age(v.age);
            const auto out = g.forward_sequence(in, age, age, 1);
            for (std::size_t i = 0; i < out.size(); ++i) total += l1_loss(out[i], in[i]);
            n += out.size();
        }
    if (n == 0) throw ManifestError("no frames available to measure reconstruction");
    return total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Run loop

struct TrainSummary {
    long long steps = 0;
    double untrained_self_l1 = 0.0;
    double trained_self_l1 = 0.0;
    /// Same-age inference must beat this L1 to count as a reconstruction.
    double self_recon_threshold = 0.0;
    std::optional<double> l1_at_10;
    double l1_final = 0.0;
    std::string checkpoint;
};

inline void to_json(nlohmann::json& j, const TrainSummary& s)
{
    j = {{"steps", s.steps},
         {"untrained_self_l1", s.untrained_self_l1},
         {"trained_self_l1", s.trained_self_l1},
         {"self_recon_threshold", s.self_recon_threshold},
         {"l1_at_step_10", s.l1_at_10 ? nlohmann::json(*s.l1_at_10) : nlohmann::json()},
         {"l1_final", s.l1_final},
         {"checkpoint", s.checkpoint}};
}

/// Drives train_step over a manifest and owns the run directory:
/// config.json, log.csv (one row per step), ckpt_<step>.bin, summary.json and,
/// on a non-finite loss, diagnostics.json.
class Trainer {
public:
    static constexpr const char* kLogHeader = "step,d_image,d_video,g_total,l1,perceptual,adv_image,adv_video";

    Trainer(TrainConfig config, DatasetManifest manifest, std::filesystem::path data_root, std::filesystem::path run_dir,
            RunLog* log = nullptr)
        : config_(std::move(config)), manifest_(std::move(manifest)), cache_(std::move(data_root)),
          run_dir_(std::move(run_dir)), log_(log)
    {
        config_.validate();
        if (manifest_.resolution != 0 && manifest_.resolution != config_.generator.resolution)
            throw ConfigError("dataset resolution " + std::to_string(manifest_.resolution) +
                              " does not match generator resolution " + std::to_string(config_.generator.resolution));
        state_ = TrainState<float>::create(config_);
        rng_.seed(derive_seed(config_.seed, "sampler"));
    }

    const TrainConfig& config() const { return config_; }
    TrainState<float>& state() { return state_; }
    const std::filesystem::path& run_dir() const { return run_dir_; }
    void set_perceptual(std::shared_ptr<const PerceptualDistance<float>> p) { perceptual_ = std::move(p); }

    /// Restores networks, optimizer state and sampler position; log rows past
    /// the checkpoint step are discarded.
    void resume(const std::filesystem::path& checkpoint)
    {
        auto loaded = load_checkpoint<float>(checkpoint);
        auto saved = loaded.config;
        saved.iterations = config_.iterations;
        saved.checkpoint_every = config_.checkpoint_every;
        if (nlohmann::json(saved) != nlohmann::json(config_))
            throw ConfigError("checkpoint " + checkpoint.string() + " was written with a different configuration");
        state_ = std::move(loaded.state);
        deserialize_rng(rng_, loaded.meta.at("rng").get<std::string>());
        untrained_self_l1_ = loaded.meta.value("untrained_self_l1", std::numeric_limits<double>::quiet_NaN());
        if (loaded.meta.contains("l1_at_step_10") && !loaded.meta["l1_at_step_10"].is_null())
            l1_at_10_ = loaded.meta["l1_at_step_10"].get<double>();
        truncate_log(state_.step);
        info("resumed from " + checkpoint.filename().string() + " at step " + std::to_string(state_.step));
    }

    /// Samples a batch and runs one train_step. On a non-finite loss the
    /// record is written to diagnostics.json before the error propagates.
    StepRecord step()
    {
        std::vector<TrainingPair<float>> batch;
        for (int b = 0; b < config_.batch_size; ++b)
            batch.push_back(load_training_pair<float>(manifest_, cache_, sample_training_pair(manifest_, rng_, config_),
                                                      config_.window_frames));
        try {
            return train_step(batch, state_, config_, perceptual());
        } catch (const NonFiniteLoss& e) {
            write_json_file(run_dir_ / "diagnostics.json",
                            {{"error", e.what()}, {"record", e.record()}, {"config", config_}});
            throw;
        }
    }

    TrainSummary run()
    {
        std::filesystem::create_directories(run_dir_);
        write_json_file(run_dir_ / "config.json", config_);
        if (state_.step == 0) {
            untrained_self_l1_ = self_reconstruction_l1(state_.generator, manifest_, cache_, config_.probe_frames);
            std::ofstream(run_dir_ / "log.csv", std::ios::trunc) << kLogHeader << '\n';
        }
        info("training from step " + std::to_string(state_.step) + " to " + std::to_string(config_.iterations));
        StepRecord last;
        const auto t0 = std::chrono::steady_clock::now();
        while (state_.step < config_.iterations) {
            last = step();
            append_log(last);
            if (last.step == 10) l1_at_10_ = last.g.l1;
            if (config_.checkpoint_every > 0 && last.step % config_.checkpoint_every == 0) checkpoint();
            if (last.step % 50 == 0 || last.step == config_.iterations) {
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                info("step " + std::to_string(last.step) + " l1 " + std::to_string(last.g.l1) + " d " +
                     std::to_string(last.d_image + last.d_video) + " (" + std::to_string(secs) + " s)");
            }
        }
        TrainSummary s;
        s.steps = state_.step;
        s.untrained_self_l1 = untrained_self_l1_;
        s.trained_self_l1 = self_reconstruction_l1(state_.generator, manifest_, cache_, config_.probe_frames);
        s.self_recon_threshold = untrained_self_l1_ / 2.0;
        s.l1_at_10 = l1_at_10_;
        s.l1_final = last.step > 0 ? last.g.l1 : 0.0;
        s.checkpoint = checkpoint().filename().string();
        write_json_file(run_dir_ / "summary.json", s);
        return s;
    }

    /// Writes ckpt_<step>.bin and returns its path.
    std::filesystem::path checkpoint()
    {
        const auto path = run_dir_ / checkpoint_name(state_.step);
        nlohmann::json extra{{"rng", serialize_rng(rng_)}, {"untrained_self_l1", untrained_self_l1_}};
        extra["l1_at_step_10"] = l1_at_10_ ? nlohmann::json(*l1_at_10_) : nlohmann::json();
        save_checkpoint(state_, config_, extra, path);
        return path;
    }

private:
    const PerceptualDistance<float>& perceptual()
    {
        if (!perceptual_) perceptual_ = std::make_shared<GradientFeatureDistance<float>>();
        return *perceptual_;
    }

    void info(const std::string& msg)
    {
        if (log_) log_->info(msg);
    }

    void append_log(const StepRecord& r)
    {
        std::ofstream out(run_dir_ / "log.csv", std::ios::app);
        char buf[512];
        std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.step, r.d_image, r.d_video, r.g.total,
                      r.g.l1, r.g.perceptual, r.g.adv_image, r.g.adv_video);
        out << buf;
        if (!out) throw IoError("failed writing " + (run_dir_ / "log.csv").string());
    }

    void truncate_log(long long step)
    {
        const auto path = run_dir_ / "log.csv";
        std::vector<std::string> keep{kLogHeader};
        if (std::ifstream in(path); in) {
            std::string line;
            std::getline(in, line);
            while (std::getline(in, line))
                if (!line.empty() && std::stoll(line.substr(0, line.find(','))) <= step) keep.push_back(line);
        }
        std::filesystem::create_directories(run_dir_);
        std::ofstream out(path, std::ios::trunc);
        for (const auto& l : keep) out << l << '\n';
    }

    TrainConfig config_;
    DatasetManifest manifest_;
    ClipCache cache_;
    std::filesystem::path run_dir_;
    RunLog* log_;
    TrainState<float> state_;
    Rng rng_;
    std::shared_ptr<const PerceptualDistance<float>> perceptual_;
    double untrained_self_l1_ = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> l1_at_10_;
};

} // namespace reage::train
