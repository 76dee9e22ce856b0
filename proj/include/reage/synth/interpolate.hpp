#pragma once

#include "reage/synth/backends.hpp"

#include <string>
#include <vector>

// GCC 11 at -O3 clones these functions during interprocedural constant
// propagation and binds the clone to the wrong backend object.
#if defined(__GNUC__) && !defined(__clang__)
#define REAGE_NO_IPA [[gnu::noipa]]
#else
#define REAGE_NO_IPA
#endif

namespace reage::synth {

/// Frames produced by recursive midpoint interpolation of `keyframes`
/// anchors at `depth`: (k - 1)(2^d - 1) + k.
inline std::size_t frames_per_video(std::size_t keyframes, int depth)
{
    if (keyframes == 0) return 0;
    return (keyframes - 1) * ((std::size_t{1} << depth) - 1) + keyframes;
}

namespace detail {

REAGE_NO_IPA inline void fill_between(const KeyState& a, const KeyState& b, int depth, const InterpolationBackend& backend,
                         std::vector<KeyState>& out)
{
    if (depth == 0) return;
    KeyState mid = backend.midpoint(a, b);
    fill_between(a, mid, depth - 1, backend, out);
    out.push_back(mid);
    fill_between(mid, b, depth - 1, backend, out);
}

} // namespace detail

/// Inserts 2^depth - 1 frames between each consecutive keyframe pair by
/// recursive midpoints. Keyframe i lands at index i * 2^depth. A backend
/// failure aborts the whole clip.
REAGE_NO_IPA inline std::vector<KeyState> interpolate_motion(const std::vector<KeyState>& keyframes, int depth,
                                                const InterpolationBackend& backend)
{
    if (keyframes.size() < 2) throw ValidationError("motion interpolation needs at least 2 keyframes");
    if (depth < 0 || depth > 16) throw ValidationError("recursion depth must be in [0, 16]");
    std::vector<KeyState> out;
    out.reserve(frames_per_video(keyframes.size(), depth));
    out.push_back(keyframes.front());
    for (std::size_t i = 0; i + 1 < keyframes.size(); ++i) {
        try {
            detail::fill_between(keyframes[i], keyframes[i + 1], depth, backend, out);
        } catch (const std::exception& e) {
            throw BackendError("interpolation between keyframes " + std::to_string(i + 1) + " and " +
                               std::to_string(i + 2) + " failed: " + e.what());
        }
        out.push_back(keyframes[i + 1]);
    }
    return out;
}

} // namespace reage::synth
