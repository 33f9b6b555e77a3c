#pragma once

// Discriminative correlation filter with a spatial reliability mask, learned
// by ADMM between a Fourier-domain and a masked spatial-domain closed form.
//
// Conventions:
//   * spectra hold f^ such that the response is ifft2(sum_d w_d * u^_d * conj(f^_d)),
//     i.e. circular cross-correlation of the features with the filter;
//   * the data term is || u^ (.) conj(f^_c) - g^ ||^2, so the unconstrained
//     ridge optimum is u^ conj(g^) / (|u^|^2 + lambda/(2D)), D = rows*cols.

#include <occtrack/features.hpp>
#include <occtrack/imaging.hpp>
#include <occtrack/response.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace occtrack {

struct AdmmParams {
    double lambda_reg = 0.01;
    double mu0 = 5.0;
    double mu_scale = 3.0;
    double mu_max = 20.0;
    int iterations = 4;

    void validate() const;
};

class FilterModel {
public:
    FilterModel() = default;
    FilterModel(std::vector<ComplexGrid> spectra, RealGrid mask, std::vector<double> channel_weights,
                int cell_size);

    int rows() const noexcept { return mask_.rows(); }
    int cols() const noexcept { return mask_.cols(); }
    std::size_t channels() const noexcept { return spectra_.size(); }
    int cell_size() const noexcept { return cell_size_; }
    bool empty() const noexcept { return spectra_.empty(); }

    const std::vector<ComplexGrid> &spectra() const noexcept { return spectra_; }
    const RealGrid &mask() const noexcept { return mask_; }
    const std::vector<double> &channel_weights() const noexcept { return weights_; }

    FilterModel with_weights(std::vector<double> weights) const;

    bool same_layout(const FilterModel &o) const noexcept {
        return rows() == o.rows() && cols() == o.cols() && channels() == o.channels();
    }
    bool operator==(const FilterModel &) const = default;

private:
    std::vector<ComplexGrid> spectra_;
    RealGrid mask_;
    std::vector<double> weights_;
    int cell_size_ = 1;
};

struct MaskParams {
    int hist_bins = 16;
    /// Minimum mask area as a fraction of the box area before falling back to the box.
    double min_area_fraction = 0.05;
};

/// Binary per-cell reliability mask. `box` is given in patch pixel coordinates.
/// Cells outside the box and on the grid border are always 0; the result is
/// never empty (falls back to the box mask).
RealGrid compute_spatial_mask(const Image &patch, const BBox &box, int cell_size, const MaskParams &params = {});

/// Box mask at cell resolution with the grid border cleared.
RealGrid box_mask(int rows, int cols, const BBox &box, int cell_size);

/// Per-iteration ADMM diagnostics. Objective values are the augmented Lagrangian
/// evaluated with the multipliers and mu in effect during that iteration.
struct AdmmTrace {
    struct Step {
        double objective_start = 0;
        double objective_after_fc = 0;
        double objective_after_f = 0;
        double residual = 0; // ||f^_c - f^_m|| / ||f^_m||, summed over channels
    };
    std::vector<Step> steps;
};

FilterModel learn_filter(const FeatureStack &u, const RealGrid &mask, const RealGrid &label, const AdmmParams &p,
                         AdmmTrace *trace = nullptr);

/// Same as learn_filter but with precomputed label spectrum and feature spectra.
FilterModel learn_filter_spectral(const std::vector<ComplexGrid> &u_hat, const RealGrid &mask,
                                  const ComplexGrid &label_hat, int cell_size, const AdmmParams &p,
                                  AdmmTrace *trace = nullptr);

/// w_d proportional to the clipped maximum of each channel's response, summing to 1.
std::vector<double> channel_weights(const FeatureStack &u, const FilterModel &f);
std::vector<double> channel_weights_spectral(const std::vector<ComplexGrid> &u_hat, const FilterModel &f);

ResponseMap compute_response(const FilterModel &f, const FeatureStack &u);
ResponseMap compute_response_spectral(const FilterModel &f, const std::vector<ComplexGrid> &u_hat);

std::vector<ComplexGrid> feature_spectra(const FeatureStack &u);

/// Spatial-domain filter of one channel (real part of ifft2 of its spectrum).
RealGrid spatial_filter(const FilterModel &f, std::size_t channel);

/// Versioned little-endian blob: header, mask bitmap, interleaved complex spectra, weights.
std::vector<std::uint8_t> serialize(const FilterModel &f);
FilterModel deserialize_filter(std::span<const std::uint8_t> blob);
void save_filter(const std::filesystem::path &path, const FilterModel &f);
FilterModel load_filter(const std::filesystem::path &path);

} // namespace occtrack
