#pragma once

#include <occtrack/colornames.hpp>
#include <occtrack/imaging.hpp>

#include <optional>
#include <vector>

namespace occtrack {

/// Multi-channel feature tensor; every channel shares one shape.
class FeatureStack {
public:
    FeatureStack() = default;
    FeatureStack(std::vector<RealGrid> channels, int cell_size, BBox origin_box = {});

    int rows() const noexcept { return channels_.empty() ? 0 : channels_.front().rows(); }
    int cols() const noexcept { return channels_.empty() ? 0 : channels_.front().cols(); }
    std::size_t size() const noexcept { return channels_.size(); }
    int cell_size() const noexcept { return cell_size_; }
    const BBox &origin_box() const noexcept { return origin_box_; }

    const RealGrid &operator[](std::size_t i) const { return channels_[i]; }
    const std::vector<RealGrid> &channels() const noexcept { return channels_; }

    bool operator==(const FeatureStack &) const = default;

private:
    std::vector<RealGrid> channels_;
    int cell_size_ = 1;
    BBox origin_box_{};
};

struct FeatureConfig {
    int cell_size = 4;
    int hog_bins = 9;
    bool use_color_names = true;
    bool center_channels = true; // subtract each channel's mean before windowing
};

/// Per-cell unsigned-orientation histograms (bin centers at k*pi/n_bins, linear
/// interpolation between neighbouring bins), each cell normalized by the L2
/// energy of the 2x2-cell blocks that contain it and clipped at 0.2.
FeatureStack extract_hog(const Image &patch, int cell_size, int n_bins);

/// Per-cell mean of the 11 color-name probabilities. Throws NeedsColor on gray input.
FeatureStack extract_colornames(const Image &patch, int cell_size,
                                const ColorNameTable &table = ColorNameTable::builtin());

/// Concatenates HOG and (optionally) color names, multiplying every channel by `window`.
FeatureStack assemble(const FeatureStack &hog, const std::optional<FeatureStack> &cn, const RealGrid &window);

/// Subtracts each channel's mean.
FeatureStack center_channels(const FeatureStack &u);

/// Full pipeline used by the tracker: HOG, color names when the patch is RGB,
/// optional centering, windowing.
FeatureStack extract_features(const Image &patch, const FeatureConfig &cfg, const RealGrid &window,
                              const ColorNameTable &table = ColorNameTable::builtin());

/// Bilinear resampling of a real grid (used to align channel resolutions).
RealGrid resize_grid(const RealGrid &g, int rows, int cols);

} // namespace occtrack
