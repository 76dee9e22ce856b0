#pragma once

#include "reage/discriminator/discriminators.hpp"
#include "reage/generator/config.hpp"
#include "reage/training/losses.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace reage::train {

struct TrainConfig {
    double learning_rate = 1e-4;
    int iterations = 500;
    int batch_size = 2;
    std::vector<int> dt_choices{3, 5, 7};
    double reverse_prob = 0.5;
    /// Frames fed to the generator per sample; consecutive frames are dt apart
    /// in the source clip, so a window spans (window_frames - 1) * dt + 1 frames.
    int window_frames = 4;
    std::uint64_t seed = 0;
    int checkpoint_every = 100;
    /// Frames per clip used when measuring same-age reconstruction.
    int probe_frames = 8;

    gen::GeneratorConfig generator = desk_generator();
    disc::ImageDiscConfig image_disc = desk_image_disc();
    disc::VideoDiscConfig video_disc = desk_video_disc();
    LossWeights weights{};

    static gen::GeneratorConfig desk_generator()
    {
        gen::GeneratorConfig g;
        g.resolution = 64;
        g.base_channels = 16;
        g.hidden_channels = 16;
        g.depth = 4;
        return g;
    }
    static disc::ImageDiscConfig desk_image_disc()
    {
        disc::ImageDiscConfig c;
        c.widths = {16, 32, 64, 128};
        return c;
    }
    static disc::VideoDiscConfig desk_video_disc()
    {
        disc::VideoDiscConfig c;
        c.widths = {8, 16, 32, 64};
        return c;
    }

    /// Paper-scale networks (512 px, full widths) with batch size 4.
    static TrainConfig paper()
    {
        TrainConfig c;
        c.iterations = 250000;
        c.batch_size = 4;
        c.generator = gen::GeneratorConfig{};
        c.image_disc = disc::ImageDiscConfig{};
        c.video_disc = disc::VideoDiscConfig{};
        return c;
    }

    void validate() const
    {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
        if (iterations < 0) throw ConfigError("iterations must be >= 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (dt_choices.empty()) throw ConfigError("dt_choices must not be empty");
        for (int d : dt_choices)
            if (d < 1) throw ConfigError("dt_choices entries must be >= 1");
        if (!(reverse_prob >= 0.0 && reverse_prob <= 1.0)) throw ConfigError("reverse_prob must be in [0, 1]");
        if (window_frames < disc::VideoDiscConfig::kTemporalExtent)
            throw ConfigError("window_frames must be >= " + std::to_string(disc::VideoDiscConfig::kTemporalExtent));
        if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
        if (probe_frames < 1) throw ConfigError("probe_frames must be >= 1");
        generator.validate();
        weights.validate();
    }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c)
{
    j = {{"learning_rate", c.learning_rate},
         {"iterations", c.iterations},
         {"batch_size", c.batch_size},
         {"dt_choices", c.dt_choices},
         {"reverse_prob", c.reverse_prob},
         {"window_frames", c.window_frames},
         {"seed", c.seed},
         {"checkpoint_every", c.checkpoint_every},
         {"probe_frames", c.probe_frames},
         {"generator", c.generator},
         {"image_disc", c.image_disc},
         {"video_disc", c.video_disc},
         {"loss_weights", c.weights}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c)
{
    const TrainConfig d;
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.iterations = j.value("iterations", d.iterations);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.dt_choices = j.value("dt_choices", d.dt_choices);
    c.reverse_prob = j.value("reverse_prob", d.reverse_prob);
    c.window_frames = j.value("window_frames", d.window_frames);
    c.seed = j.value("seed", d.seed);
    c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
    c.probe_frames = j.value("probe_frames", d.probe_frames);
    c.generator = j.value("generator", d.generator);
    c.image_disc = j.value("image_disc", d.image_disc);
    c.video_disc = j.value("video_disc", d.video_disc);
    c.weights = j.value("loss_weights", d.weights);
}

} // namespace reage::train
