#include <occtrack/synth.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace occtrack {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

double lattice(std::uint64_t seed, std::int64_t x, std::int64_t y) {
    return unit(splitmix(seed ^ splitmix(static_cast<std::uint64_t>(x) * 0x632be59bd9b4e019ULL +
                                         static_cast<std::uint64_t>(y))));
}

double value_noise(std::uint64_t seed, double x, double y) {
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    double tx = x - fx, ty = y - fy;
    tx = tx * tx * (3 - 2 * tx);
    ty = ty * ty * (3 - 2 * ty);
    const double a = lattice(seed, ix, iy), b = lattice(seed, ix + 1, iy);
    const double c = lattice(seed, ix, iy + 1), d = lattice(seed, ix + 1, iy + 1);
    return (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
}

double texture(std::uint64_t seed, double x, double y, double cell) {
    return 0.65 * value_noise(seed, x / cell, y / cell) + 0.35 * value_noise(seed + 1, 2 * x / cell, 2 * y / cell);
}

using Rgb = std::array<double, 3>;

struct Palette {
    Rgb lo, hi;
    Rgb at(double t) const {
        t = std::clamp((t - 0.2) / 0.6, 0.0, 1.0);
        return {lo[0] + t * (hi[0] - lo[0]), lo[1] + t * (hi[1] - lo[1]), lo[2] + t * (hi[2] - lo[2])};
    }
};

Palette pick(std::uint64_t seed, const std::array<Palette, 3> &options) {
    return options[splitmix(seed) % options.size()];
}

struct Rect {
    double cx, cy, w, h;
    bool contains(double x, double y) const {
        return std::abs(x - cx) <= w / 2 && std::abs(y - cy) <= h / 2;
    }
};

double overlap_fraction(const Rect &target, const Rect &occ) {
    const double ix = std::max(0.0, std::min(target.cx + target.w / 2, occ.cx + occ.w / 2) -
                                        std::max(target.cx - target.w / 2, occ.cx - occ.w / 2));
    const double iy = std::max(0.0, std::min(target.cy + target.h / 2, occ.cy + occ.h / 2) -
                                        std::max(target.cy - target.h / 2, occ.cy - occ.h / 2));
    return std::clamp(ix * iy / (target.w * target.h), 0.0, 1.0);
}

} // namespace

void SynthSpec::validate() const {
    auto bad = [](const std::string &why) { throw Error(ErrorCode::BadSpec, why); };
    if (width < 128 || height < 128) bad("frame must be at least 128x128");
    if (target_w < 24 || target_h < 24) bad("target must be at least 24x24");
    if (frames < 10 || frames > 500) bad("frame count must lie in [10, 500]");
    if (!(zoom >= 0.9 && zoom <= 1.1)) bad("zoom per frame must lie in [0.9, 1.1]");
    if (!(motion_period > 0) || motion_amplitude < 0 || noise < 0) bad("motion and noise must be nonnegative");
    if (!(target_texture > 0) || !(background_texture > 0)) bad("texture scales must be positive");
    const double reach_x = motion_amplitude + target_w / 2;
    const double reach_y = motion_amplitude / 2 + target_h / 2;
    const double final_zoom = std::pow(zoom, frames - 1);
    if (reach_x * std::max(1.0, final_zoom) > width / 2.0 || reach_y * std::max(1.0, final_zoom) > height / 2.0) {
        bad("target leaves the frame");
    }
    if (occluder) {
        if (occluder_w > width || occluder_h > height) bad("occluder larger than the frame");
        if (!(occluder_w > 0) || !(occluder_h > 0)) bad("occluder must have positive size");
        if (!(occluder_contrast >= 0 && occluder_contrast <= 200)) bad("occluder contrast must lie in [0, 200]");
        if (occluder_start < 1 || occluder_end >= frames || occluder_end <= occluder_start) {
            bad("occluder interval must lie inside the sequence after frame 0");
        }
    }
}

SynthSpec synth_spec_from(const ConfigMap &kv, SynthSpec s) {
    using namespace config_detail;
    for (const auto &[k, v] : kv) {
        if (k == "width") s.width = to_int(k, v);
        else if (k == "height") s.height = to_int(k, v);
        else if (k == "frames") s.frames = to_int(k, v);
        else if (k == "target_w") s.target_w = to_double(k, v);
        else if (k == "target_h") s.target_h = to_double(k, v);
        else if (k == "motion_amplitude") s.motion_amplitude = to_double(k, v);
        else if (k == "motion_period") s.motion_period = to_double(k, v);
        else if (k == "zoom") s.zoom = to_double(k, v);
        else if (k == "occluder") s.occluder = to_bool(k, v);
        else if (k == "occluder_start") s.occluder_start = to_int(k, v);
        else if (k == "occluder_end") s.occluder_end = to_int(k, v);
        else if (k == "occluder_w") s.occluder_w = to_double(k, v);
        else if (k == "occluder_h") s.occluder_h = to_double(k, v);
        else if (k == "occluder_contrast") s.occluder_contrast = to_double(k, v);
        else if (k == "noise") s.noise = to_double(k, v);
        else if (k == "color") s.color = to_bool(k, v);
        else if (k == "target_texture") s.target_texture = to_double(k, v);
        else if (k == "background_texture") s.background_texture = to_double(k, v);
        else throw Error(ErrorCode::ParseError, "unknown synth key '" + k + "'");
    }
    s.validate();
    return s;
}

SynthSpec load_synth_spec(const std::filesystem::path &path) { return synth_spec_from(read_config_file(path)); }

SynthSpec occlusion_suite_spec() {
    SynthSpec s;
    s.occluder = true;
    return s;
}

SynthSpec zoom_spec() {
    SynthSpec s;
    s.frames = 51;
    s.zoom = 1.01;
    s.motion_amplitude = 0;
    return s;
}

SynthSpec static_spec(int frames) {
    SynthSpec s;
    s.frames = frames;
    s.motion_amplitude = 0;
    return s;
}

Sequence synth_sequence(const SynthSpec &spec, std::uint64_t seed) {
    spec.validate();
    const std::uint64_t base = splitmix(seed ^ 0x5eed5eed5eedULL);
    const std::uint64_t bg_seed = splitmix(base + 1);
    const std::uint64_t tg_seed = splitmix(base + 2);
    const std::uint64_t oc_seed = splitmix(base + 3);
    const std::uint64_t px_seed = splitmix(base + 4);

    // Warm target, cool background, neutral occluder.
    const Palette tg_pal = pick(base + 5, {{{{{150, 20, 10}}, {{255, 190, 40}}},
                                           {{{120, 10, 60}}, {{250, 120, 90}}},
                                           {{{170, 70, 0}}, {{255, 230, 120}}}}});
    const Palette bg_pal = pick(base + 6, {{{{{10, 60, 30}}, {{90, 170, 120}}},
                                           {{{20, 40, 90}}, {{100, 150, 210}}},
                                           {{{30, 80, 80}}, {{120, 190, 170}}}}});
    // Flat grey board with faint texture.
    const Rgb oc_mid = std::array<Rgb, 3>{{{120, 120, 120}, {160, 160, 165}, {85, 85, 90}}}[splitmix(base + 7) % 3];
    Palette oc_pal{oc_mid, oc_mid};
    for (int k = 0; k < 3; ++k) {
        oc_pal.lo[k] -= spec.occluder_contrast / 2;
        oc_pal.hi[k] += spec.occluder_contrast / 2;
    }
    const double phase_x = 2 * std::numbers::pi * unit(splitmix(base + 8));
    const double phase_y = 2 * std::numbers::pi * unit(splitmix(base + 9));

    const double cam_x = spec.width / 2.0;
    const double cam_y = spec.height / 2.0;
    const double noise_scale = spec.noise * std::sqrt(3.0); // sum of 4 uniforms has std 1/sqrt(3)
    const int nc = spec.color ? 3 : 1;

    std::vector<Image> frames;
    std::vector<BBox> gt;
    std::vector<OcclusionEntry> schedule;
    frames.reserve(spec.frames);
    for (int t = 0; t < spec.frames; ++t) {
        const double z = std::pow(spec.zoom, t);
        const double w = 2 * std::numbers::pi * t / spec.motion_period;
        const Rect target{cam_x + spec.motion_amplitude * std::sin(w + phase_x) -
                              spec.motion_amplitude * std::sin(phase_x),
                          cam_y + 0.5 * spec.motion_amplitude * (std::sin(0.7 * w + phase_y) - std::sin(phase_y)),
                          spec.target_w, spec.target_h};
        bool occ_on = spec.occluder && t >= spec.occluder_start && t <= spec.occluder_end;
        Rect occ{0, 0, spec.occluder_w, spec.occluder_h};
        if (occ_on) {
            const double d = (spec.occluder_w + spec.target_w) / 2;
            const double u = static_cast<double>(t - spec.occluder_start) / (spec.occluder_end - spec.occluder_start);
            occ.cx = target.cx - d + 1 + (2 * d - 2) * u;
            occ.cy = target.cy;
            schedule.push_back({t, overlap_fraction(target, occ)});
        }

        Image img(spec.width, spec.height, nc);
        for (int y = 0; y < spec.height; ++y) {
            const double wy = cam_y + (y + 0.5 - cam_y) / z;
            for (int x = 0; x < spec.width; ++x) {
                const double wx = cam_x + (x + 0.5 - cam_x) / z;
                Rgb c;
                if (occ_on && occ.contains(wx, wy)) {
                    c = oc_pal.at(texture(oc_seed, wx - occ.cx + 500, wy - occ.cy + 500, spec.target_texture * 1.5));
                } else if (target.contains(wx, wy)) {
                    c = tg_pal.at(texture(tg_seed, wx - target.cx + 500, wy - target.cy + 500, spec.target_texture));
                } else {
                    c = bg_pal.at(texture(bg_seed, wx, wy, spec.background_texture));
                }
                const std::uint64_t h = splitmix(px_seed ^ (static_cast<std::uint64_t>(t) << 40) ^
                                                 (static_cast<std::uint64_t>(y) << 20) ^ static_cast<std::uint64_t>(x));
                const double n = (unit(h) + unit(splitmix(h)) + unit(splitmix(h + 1)) + unit(splitmix(h + 2)) - 2.0) *
                                 noise_scale;
                if (nc == 1) {
                    const double g = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2] + n;
                    img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(g), 0L, 255L));
                } else {
                    for (int k = 0; k < 3; ++k) {
                        img.at(x, y, k) = static_cast<std::uint8_t>(std::clamp(std::lround(c[k] + n), 0L, 255L));
                    }
                }
            }
        }
        frames.push_back(std::move(img));
        gt.push_back({cam_x + (target.cx - cam_x) * z, cam_y + (target.cy - cam_y) * z, target.w * z, target.h * z});
    }
    return Sequence(std::move(frames), std::move(gt), std::move(schedule));
}

} // namespace occtrack
