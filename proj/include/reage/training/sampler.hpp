#pragma once

#include "reage/core/random.hpp"
#include "reage/datamodel/clip_io.hpp"
#include "reage/datamodel/manifest.hpp"
#include "reage/training/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace reage::train {

/// Which frames of which clips one training sample uses.
struct SampleSpec {
    std::size_t subject = 0; ///< index into manifest.subjects
    double input_age = 0.0;
    double target_age = 0.0;
    int dt = 1;
    std::size_t start = 0; ///< first source frame of the window
    bool reversed = false;

    /// Source frame indices in presentation order.
    std::vector<std::size_t> frame_indices(int window_frames) const
    {
        std::vector<std::size_t> idx;
        for (int k = 0; k < window_frames; ++k) idx.push_back(start + static_cast<std::size_t>(k * dt));
        if (reversed) std::reverse(idx.begin(), idx.end());
        return idx;
    }

    bool operator==(const SampleSpec&) const = default;
};

inline void to_json(nlohmann::json& j, const SampleSpec& s)
{
    j = {{"subject", s.subject}, {"input_age", s.input_age}, {"target_age", s.target_age},
         {"dt", s.dt},           {"start", s.start},         {"reversed", s.reversed}};
}

/// Draws a subject, independent input and target ages from that subject's
/// ages (equal ages allowed), a frame interval from `dt_choices`, a window
/// start and a reversal flag, in that order.
inline SampleSpec sample_training_pair(const DatasetManifest& manifest, Rng& rng, const TrainConfig& c)
{
    if (manifest.subjects.empty()) throw ManifestError("manifest has no subjects to train on");
    SampleSpec s;
    s.subject = uniform_index(rng, manifest.subjects.size());
    const auto& subj = manifest.subjects[s.subject];
    if (subj.ages.empty()) throw ManifestError(subj.subject_id + " lists no ages");
    s.input_age = subj.ages[uniform_index(rng, subj.ages.size())];
    s.target_age = subj.ages[uniform_index(rng, subj.ages.size())];
    for (double a : {s.input_age, s.target_age})
        if (!subj.video_for_age(a))
            throw ManifestError(subj.subject_id + " has no video for age " + std::to_string(a));
    s.dt = c.dt_choices[uniform_index(rng, c.dt_choices.size())];
    const std::size_t span = static_cast<std::size_t>((c.window_frames - 1) * s.dt + 1);
    const std::size_t n = std::min(subj.video_for_age(s.input_age)->frame_count, subj.video_for_age(s.target_age)->frame_count);
    if (n < span)
        throw ManifestError(subj.subject_id + ": clips have " + std::to_string(n) + " frames, a window with dt " +
                            std::to_string(s.dt) + " needs " + std::to_string(span));
    s.start = uniform_index(rng, n - span + 1);
    s.reversed = bernoulli(rng, c.reverse_prob);
    return s;
}

/// Loads clips on first use and keeps them in memory. Thread-safe.
class ClipCache {
public:
    explicit ClipCache(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const { return root_; }

    std::shared_ptr<const VideoClip> get(const std::string& relative_path)
    {
        std::lock_guard lock(mutex_);
        auto it = clips_.find(relative_path);
        if (it != clips_.end()) return it->second;
        auto clip = std::make_shared<const VideoClip>(load_clip(root_ / relative_path));
        clips_.emplace(relative_path, clip);
        return clip;
    }

private:
    std::filesystem::path root_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const VideoClip>> clips_;
};

/// A materialized sample: aligned input and ground-truth frame windows.
template <typename T>
struct TrainingPair {
    SampleSpec spec;
    std::vector<nn::Tensor<T>> input;
    std::vector<nn::Tensor<T>> target;
};

template <typename T>
TrainingPair<T> load_training_pair(const DatasetManifest& manifest, ClipCache& cache, const SampleSpec& spec,
                                   int window_frames)
{
    const auto& subj = manifest.subjects.at(spec.subject);
    const auto* vin = subj.video_for_age(spec.input_age);
    const auto* vtar = subj.video_for_age(spec.target_age);
    if (!vin || !vtar) throw ManifestError(subj.subject_id + " is missing a video for the sampled ages");
    const auto in_clip = cache.get(vin->path);
    const auto tar_clip = cache.get(vtar->path);
    TrainingPair<T> p{spec, {}, {}};
    for (auto i : spec.frame_indices(window_frames)) {
        p.input.push_back(in_clip->frame(i).template to_tensor<T>());
        p.target.push_back(tar_clip->frame(i).template to_tensor<T>());
    }
    return p;
}

} // namespace reage::train
