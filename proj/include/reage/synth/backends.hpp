#pragma once

#include "reage/datamodel/age.hpp"
#include "reage/datamodel/clip.hpp"
#include "reage/datamodel/clip_io.hpp"
#include "reage/synth/pose.hpp"
#include "reage/synth/procedural.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <memory>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reage::synth {

/// One synthesized portrait of a subject at one age, in the neutral pose.
struct AgedStill {
    Frame frame;
    std::uint64_t identity_seed = 0;
    double age = 0.0;
};

/// A frame on the motion path together with the pose it depicts.
struct KeyState {
    Frame frame;
    PoseExpressionSample pose;
    std::optional<Landmarks> landmarks;
    std::uint64_t identity_seed = 0;
    double age = 0.0;
};

/// Stage 1: identity seed and ages to stills of one identity.
class StillBackend {
public:
    virtual ~StillBackend() = default;
    virtual std::string name() const = 0;
    virtual AgedStill still(std::uint64_t identity_seed, AgeValue age, int resolution) const = 0;
};

/// Stage 2: a still and pose samples to one keyframe per sample.
class KeyframeBackend {
public:
    virtual ~KeyframeBackend() = default;
    virtual std::string name() const = 0;
    virtual std::vector<KeyState> keyframes(const AgedStill& still, std::span<const PoseExpressionSample> samples) const = 0;
};

/// Stage 3: the frame halfway between two frames.
class InterpolationBackend {
public:
    virtual ~InterpolationBackend() = default;
    virtual std::string name() const = 0;
    virtual KeyState midpoint(const KeyState& a, const KeyState& b) const = 0;
};

/// One still per requested age; an empty age list gives an empty map.
inline std::map<double, AgedStill> synthesize_aged_stills(std::uint64_t identity_seed, const std::vector<AgeValue>& ages,
                                                          int resolution, const StillBackend& backend)
{
    std::map<double, AgedStill> out;
    for (const auto& a : ages) out.emplace(a.years(), backend.still(identity_seed, a, resolution));
    return out;
}

class ProceduralStillBackend final : public StillBackend {
public:
    std::string name() const override { return "procedural"; }

    AgedStill still(std::uint64_t identity_seed, AgeValue age, int resolution) const override
    {
        Frame::validate_dims(resolution, resolution, 3);
        const auto id = FaceIdentity::from_seed(identity_seed);
        return {renderer_.render(id, age.years(), identity_pose(PoseBounds{}.expression_dims), resolution), identity_seed,
                age.years()};
    }

private:
    ProceduralFace renderer_;
};

/// Re-renders the subject under each pose. Needs stills from the procedural
/// still backend (it re-derives the face from the identity seed).
class ProceduralKeyframeBackend final : public KeyframeBackend {
public:
    explicit ProceduralKeyframeBackend(PoseBounds bounds = {}) : bounds_(bounds) {}

    std::string name() const override { return "procedural"; }

    std::vector<KeyState> keyframes(const AgedStill& still, std::span<const PoseExpressionSample> samples) const override
    {
        for (const auto& s : samples) bounds_.validate(s);
        const auto id = FaceIdentity::from_seed(still.identity_seed);
        const int res = still.frame.height();
        std::vector<KeyState> out;
        out.reserve(samples.size());
        for (const auto& s : samples)
            out.push_back({renderer_.render(id, still.age, s, res), s, renderer_.landmarks(id, s, res), still.identity_seed,
                           still.age});
        return out;
    }

private:
    PoseBounds bounds_;
    ProceduralFace renderer_;
};

/// Averages the two poses and renders the face at the averaged pose, so
/// intermediate frames stay as sharp as keyframes.
class ProceduralPoseInterpolator final : public InterpolationBackend {
public:
    std::string name() const override { return "pose_midpoint"; }

    KeyState midpoint(const KeyState& a, const KeyState& b) const override
    {
        if (a.identity_seed != b.identity_seed || a.age != b.age)
            throw BackendError("pose interpolation across different subjects or ages");
        const auto id = FaceIdentity::from_seed(a.identity_seed);
        const auto pose = synth::midpoint(a.pose, b.pose);
        const int res = a.frame.height();
        return {renderer_.render(id, a.age, pose, res), pose, renderer_.landmarks(id, pose, res), a.identity_seed, a.age};
    }

private:
    ProceduralFace renderer_;
};

/// Per-pixel average of the two frames. The pose recorded for the result is
/// the average pose, landmarks are averaged when both ends have them.
class LinearBlendInterpolator final : public InterpolationBackend {
public:
    std::string name() const override { return "linear_blend"; }

    KeyState midpoint(const KeyState& a, const KeyState& b) const override
    {
        if (!a.frame.same_dims(b.frame)) throw BackendError("blend of frames with different sizes");
        std::vector<float> data(a.frame.size());
        for (std::size_t i = 0; i < data.size(); ++i) data[i] = 0.5f * (a.frame.data()[i] + b.frame.data()[i]);
        KeyState m{Frame(a.frame.height(), a.frame.width(), a.frame.channels(), std::move(data)), synth::midpoint(a.pose, b.pose),
                   std::nullopt, a.identity_seed, a.age};
        if (a.landmarks && b.landmarks) {
            auto avg = [](Point2 p, Point2 q) { return Point2{0.5 * (p.x + q.x), 0.5 * (p.y + q.y)}; };
            m.landmarks = Landmarks{avg(a.landmarks->left_eye_outer, b.landmarks->left_eye_outer),
                                    avg(a.landmarks->right_eye_outer, b.landmarks->right_eye_outer),
                                    avg(a.landmarks->mouth_left, b.landmarks->mouth_left),
                                    avg(a.landmarks->mouth_right, b.landmarks->mouth_right)};
        }
        return m;
    }
};

/// Runs one stage through an external program.
///
/// Contract: the command is run as `<command> <request.json>`. The request has
/// keys "stage" ("still" | "keyframes" | "interpolate"), "inputs" (PNG paths,
/// possibly empty), "params" (stage parameters) and "output_dir". The program
/// writes frame_000001.png, frame_000002.png, ... into output_dir and exits 0.
/// Frames use the same 8-bit encoding as clip directories.
class SubprocessStage {
public:
    SubprocessStage(std::string command, std::filesystem::path work_dir)
        : command_(std::move(command)), work_dir_(std::move(work_dir))
    {}

    std::vector<Frame> run(const std::string& stage, std::span<const Frame> inputs, const nlohmann::json& params,
                           std::size_t expected_outputs) const
    {
        namespace fs = std::filesystem;
        const fs::path dir = work_dir_ / (stage + "_" + std::to_string((*counter_)++));
        fs::remove_all(dir);
        fs::create_directories(dir / "in");
        fs::create_directories(dir / "out");
        nlohmann::json req{{"stage", stage}, {"params", params}, {"output_dir", (dir / "out").string()}};
        req["inputs"] = nlohmann::json::array();
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const auto p = dir / "in" / frame_filename(i);
            save_frame_png(inputs[i], p);
            req["inputs"].push_back(p.string());
        }
        write_json_file(dir / "request.json", req);
        const std::string cmd = command_ + " '" + (dir / "request.json").string() + "'";
        if (const int rc = std::system(cmd.c_str()); rc != 0)
            throw BackendError("external " + stage + " stage exited with status " + std::to_string(rc));
        const auto files = list_frame_files(dir / "out");
        if (files.size() != expected_outputs)
            throw BackendError("external " + stage + " stage produced " + std::to_string(files.size()) + " frames, expected " +
                               std::to_string(expected_outputs));
        std::vector<Frame> out;
        for (const auto& f : files) out.push_back(load_frame_png(f));
        fs::remove_all(dir);
        return out;
    }

private:
    std::string command_;
    std::filesystem::path work_dir_;
    std::shared_ptr<std::atomic<std::size_t>> counter_ = std::make_shared<std::atomic<std::size_t>>(0);
};

class SubprocessStillBackend final : public StillBackend {
public:
    explicit SubprocessStillBackend(SubprocessStage stage) : stage_(std::move(stage)) {}
    std::string name() const override { return "subprocess"; }

    AgedStill still(std::uint64_t identity_seed, AgeValue age, int resolution) const override
    {
        const auto f = stage_.run("still", {}, {{"identity_seed", identity_seed}, {"age", age.years()}, {"resolution", resolution}}, 1);
        return {f.front(), identity_seed, age.years()};
    }

private:
    SubprocessStage stage_;
};

class SubprocessKeyframeBackend final : public KeyframeBackend {
public:
    explicit SubprocessKeyframeBackend(SubprocessStage stage) : stage_(std::move(stage)) {}
    std::string name() const override { return "subprocess"; }

    std::vector<KeyState> keyframes(const AgedStill& still, std::span<const PoseExpressionSample> samples) const override
    {
        const std::vector<Frame> in{still.frame};
        const auto frames = stage_.run("keyframes", in, {{"poses", std::vector<PoseExpressionSample>(samples.begin(), samples.end())}},
                                       samples.size());
        std::vector<KeyState> out;
        for (std::size_t i = 0; i < frames.size(); ++i)
            out.push_back({frames[i], samples[i], std::nullopt, still.identity_seed, still.age});
        return out;
    }

private:
    SubprocessStage stage_;
};

class SubprocessInterpolator final : public InterpolationBackend {
public:
    explicit SubprocessInterpolator(SubprocessStage stage) : stage_(std::move(stage)) {}
    std::string name() const override { return "subprocess"; }

    KeyState midpoint(const KeyState& a, const KeyState& b) const override
    {
        const std::vector<Frame> in{a.frame, b.frame};
        const auto f = stage_.run("interpolate", in, nlohmann::json::object(), 1);
        return {f.front(), synth::midpoint(a.pose, b.pose), std::nullopt, a.identity_seed, a.age};
    }

private:
    SubprocessStage stage_;
};

} // namespace reage::synth
