#pragma once

#include <occtrack/config.hpp>
#include <occtrack/sequence.hpp>

#include <cstdint>

namespace occtrack {

/// Procedural sequence: a textured target drifting on a textured background,
/// an optional occluder sweeping across the target, optional camera zoom about
/// the target's starting center, and per-frame pixel noise.
struct SynthSpec {
    int width = 320;
    int height = 240;
    int frames = 100;
    double target_w = 40;
    double target_h = 40;
    double motion_amplitude = 30; // px, horizontal; vertical is half
    double motion_period = 200;   // frames
    double zoom = 1.0;            // camera zoom factor per frame
    bool occluder = false;
    int occluder_start = 40;      // first and last frame with nonzero overlap
    int occluder_end = 60;
    double occluder_w = 60;
    double occluder_h = 70;
    double occluder_contrast = 25; // gray-level span of the occluder texture
    double noise = 2.0;           // per-pixel noise std, gray levels
    bool color = true;
    double target_texture = 6;    // value-noise cell size, px
    double background_texture = 16;

    /// Throws BadSpec.
    void validate() const;
};

SynthSpec synth_spec_from(const ConfigMap &kv, SynthSpec base = {});
SynthSpec load_synth_spec(const std::filesystem::path &path);

/// Deterministic in (spec, seed).
Sequence synth_sequence(const SynthSpec &spec, std::uint64_t seed);

/// 100 frames, occluder crossing frames 40-60.
SynthSpec occlusion_suite_spec();
/// 50 frames at 1.01x zoom per frame, static target.
SynthSpec zoom_spec();
/// Static target, static camera, no occluder.
SynthSpec static_spec(int frames = 50);

} // namespace occtrack
