#pragma once

#include "reage/core/error.hpp"
#include "reage/core/random.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace reage::synth {

/// Head pose (yaw, pitch, roll in radians), in-plane translation as a
/// fraction of the frame, and expression coefficients.
struct PoseExpressionSample {
    std::array<double, 3> rotation{};
    std::array<double, 2> translation{};
    std::vector<double> expression;

    bool is_identity() const
    {
        for (double v : rotation)
            if (v != 0.0) return false;
        for (double v : translation)
            if (v != 0.0) return false;
        for (double v : expression)
            if (v != 0.0) return false;
        return true;
    }

    bool operator==(const PoseExpressionSample&) const = default;
};

struct PoseBounds {
    double rotation = 0.35;
    double translation = 0.05;
    double expression = 1.0;
    int expression_dims = 4;

    void validate(const PoseExpressionSample& s) const
    {
        auto check = [](double v, double bound, const char* what) {
            if (!std::isfinite(v) || std::abs(v) > bound)
                throw ValidationError(std::string(what) + " value " + std::to_string(v) + " outside +/-" +
                                      std::to_string(bound));
        };
        for (double v : s.rotation) check(v, rotation, "rotation");
        for (double v : s.translation) check(v, translation, "translation");
        if (static_cast<int>(s.expression.size()) != expression_dims)
            throw ValidationError("expected " + std::to_string(expression_dims) + " expression coefficients, got " +
                                  std::to_string(s.expression.size()));
        for (double v : s.expression) check(v, expression, "expression");
    }
};

inline PoseExpressionSample identity_pose(int expression_dims)
{
    PoseExpressionSample s;
    s.expression.assign(static_cast<std::size_t>(expression_dims), 0.0);
    return s;
}

/// Draws `count` samples uniformly inside the bounds. The sequence depends
/// only on `motion_seed`, so every age of a subject reuses the same motion.
inline std::vector<PoseExpressionSample> sample_poses(std::uint64_t motion_seed, int count, const PoseBounds& b)
{
    Rng rng(motion_seed);
    std::vector<PoseExpressionSample> out(static_cast<std::size_t>(count));
    for (auto& s : out) {
        for (auto& v : s.rotation) v = uniform(rng, -b.rotation, b.rotation);
        for (auto& v : s.translation) v = uniform(rng, -b.translation, b.translation);
        s.expression.resize(static_cast<std::size_t>(b.expression_dims));
        for (auto& v : s.expression) v = uniform(rng, -b.expression, b.expression);
    }
    return out;
}

/// Component-wise average; used as the pose of an interpolated midpoint.
inline PoseExpressionSample midpoint(const PoseExpressionSample& a, const PoseExpressionSample& b)
{
    if (a.expression.size() != b.expression.size())
        throw ValidationError("cannot interpolate poses with different expression sizes");
    PoseExpressionSample m;
    for (int i = 0; i < 3; ++i) m.rotation[i] = 0.5 * (a.rotation[i] + b.rotation[i]);
    for (int i = 0; i < 2; ++i) m.translation[i] = 0.5 * (a.translation[i] + b.translation[i]);
    m.expression.resize(a.expression.size());
    for (std::size_t i = 0; i < a.expression.size(); ++i) m.expression[i] = 0.5 * (a.expression[i] + b.expression[i]);
    return m;
}

inline void to_json(nlohmann::json& j, const PoseExpressionSample& s)
{
    j = {{"rotation", s.rotation}, {"translation", s.translation}, {"expression", s.expression}};
}

inline void from_json(const nlohmann::json& j, PoseExpressionSample& s)
{
    s.rotation = j.at("rotation").get<std::array<double, 3>>();
    s.translation = j.at("translation").get<std::array<double, 2>>();
    s.expression = j.at("expression").get<std::vector<double>>();
}

inline void to_json(nlohmann::json& j, const PoseBounds& b)
{
    j = {{"rotation", b.rotation},
         {"translation", b.translation},
         {"expression", b.expression},
         {"expression_dims", b.expression_dims}};
}

inline void from_json(const nlohmann::json& j, PoseBounds& b)
{
    const PoseBounds d;
    b.rotation = j.value("rotation", d.rotation);
    b.translation = j.value("translation", d.translation);
    b.expression = j.value("expression", d.expression);
    b.expression_dims = j.value("expression_dims", d.expression_dims);
    if (b.rotation < 0 || b.translation < 0 || b.expression < 0 || b.expression_dims < 0)
        throw ConfigError("pose bounds must be non-negative");
}

} // namespace reage::synth
