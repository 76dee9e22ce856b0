#pragma once

#include "reage/core/error.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace reage::gen {

/// Hyperparameters of the recurrent U-Net generator.
struct GeneratorConfig {
    int resolution = 512;
    int base_channels = 64;
    int hidden_channels = 64;
    int depth = 4;
    double leaky_slope = 0.2;
    bool skip_connections = true;
    /// Initialize the final 1x1 convolution to zero (identity generator).
    bool zero_final_layer = false;
    /// Gain of the fan-in normal init for the final 1x1 convolution.
    double final_init_gain = 1.0;

    static constexpr int kFrameChannels = 3;
    static constexpr int kMaskedChannels = 5;
    static constexpr int kNeighbors = 3;

    int input_channels() const { return kNeighbors * kMaskedChannels + hidden_channels + kFrameChannels; }
    int output_channels() const { return kFrameChannels + hidden_channels; }
    int bottleneck_channels() const { return base_channels << depth; }

    void validate() const
    {
        if (depth < 0 || depth > 8) throw ConfigError("generator depth must be in [0, 8]");
        if (base_channels <= 0 || hidden_channels <= 0) throw ConfigError("generator channel counts must be positive");
        if (resolution <= 0 || resolution % (1 << depth) != 0)
            throw ConfigError("resolution " + std::to_string(resolution) + " is not divisible by 2^" +
                              std::to_string(depth));
        if (leaky_slope < 0.0 || leaky_slope >= 1.0) throw ConfigError("leaky_slope must be in [0, 1)");
    }
};

inline void to_json(nlohmann::json& j, const GeneratorConfig& c)
{
    j = {{"resolution", c.resolution},
         {"base_channels", c.base_channels},
         {"hidden_channels", c.hidden_channels},
         {"depth", c.depth},
         {"leaky_slope", c.leaky_slope},
         {"skip_connections", c.skip_connections},
         {"zero_final_layer", c.zero_final_layer},
         {"final_init_gain", c.final_init_gain}};
}

inline void from_json(const nlohmann::json& j, GeneratorConfig& c)
{
    const GeneratorConfig d;
    c.resolution = j.value("resolution", d.resolution);
    c.base_channels = j.value("base_channels", d.base_channels);
    c.hidden_channels = j.value("hidden_channels", d.hidden_channels);
    c.depth = j.value("depth", d.depth);
    c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
    c.skip_connections = j.value("skip_connections", d.skip_connections);
    c.zero_final_layer = j.value("zero_final_layer", d.zero_final_layer);
    c.final_init_gain = j.value("final_init_gain", d.final_init_gain);
}

} // namespace reage::gen
