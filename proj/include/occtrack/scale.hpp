#pragma once

// Scale estimation: a 1-D correlation filter over a scale pyramid fused with
// log-polar phase correlation, S = theta * S_d + (1 - theta) * S_p.

#include <occtrack/imaging.hpp>

#include <vector>

namespace occtrack {

enum class ScaleMode { Fused, PyramidOnly, LogPolarOnly, Off };

struct ScaleConfig {
    double theta = 0.2;
    double scale_step = 1.05;
    int n_scales = 17;
    int logpolar_rows = 64; // log-radius samples (M)
    int logpolar_cols = 64; // angle samples (N)
    double clamp_min = 0.8; // per-frame relative scale change
    double clamp_max = 1.25;
    ScaleMode mode = ScaleMode::Fused;
    /// Fused mode drops S_p (falls back to 1) when it differs from S_d by more
    /// than this many pyramid steps.
    double fusion_tolerance = 2.0;

    // Pyramid filter internals.
    double model_max_area = 512;
    int cell_size = 4;
    double lambda = 0.01;
    double learning_rate = 0.025;
    double sigma_factor = 0.25;

    // Log-polar internals.
    double logpolar_padding = 2.0; // window side relative to max(w, h)
    int logpolar_patch = 64;       // resampled window side; r_max is half of it
    double min_confidence = 0.15;
    int logpolar_iterations = 3;   // resample at the running estimate and re-correlate

    void validate() const;
};

/// 1-D correlation filter over n_scales samples at sizes box * step^k.
class PyramidScaleFilter {
public:
    PyramidScaleFilter() = default;
    PyramidScaleFilter(const Image &frame, const BBox &box, const ScaleConfig &cfg);

    struct Estimate {
        double factor = 1.0; // S_d = step^k*
        int k_star = 0;
        std::vector<double> response;
    };

    Estimate estimate(const Image &frame, const BBox &box) const;
    /// Linear interpolation of the filter towards a sample taken at `box`.
    void update(const Image &frame, const BBox &box);

    bool initialized() const noexcept { return !num_.empty(); }
    const std::vector<double> &factors() const noexcept { return factors_; }

private:
    struct Samples {
        std::vector<std::vector<double>> rows; // one feature row per dimension, n_scales columns
        std::vector<bool> degenerate;
    };
    Samples sample(const Image &frame, const BBox &box) const;
    void train(const Samples &s, std::vector<std::vector<Complex>> &num, std::vector<double> &den) const;

    ScaleConfig cfg_;
    double base_w_ = 0;
    double base_h_ = 0;
    int model_w_ = 0;
    int model_h_ = 0;
    std::vector<double> factors_;
    std::vector<double> window_;
    std::vector<Complex> label_hat_;
    std::vector<std::vector<Complex>> num_;
    std::vector<double> den_;
};

/// Samples `gray` at radius r_max^(i/rows) and angle 2*pi*j/cols around (cx, cy),
/// bilinearly. Scaling the source about the center shifts the result along rows.
RealGrid logpolar_transform(const RealGrid &gray, double cx, double cy, int rows, int cols, double r_max);
RealGrid logpolar_transform(const Image &patch, int rows, int cols);

struct PhaseShift {
    double shift_r = 0;
    double shift_c = 0;
    double confidence = 0;
};

/// Circular shift s with b(x) ~ a(x - s), from the peak of the normalized
/// cross-power spectrum (Gaussian-smoothed so the peak is refined by a quadratic
/// fit of its log-values). Confidence is 1 for identical inputs.
PhaseShift phase_correlation(const RealGrid &a, const RealGrid &b);

/// Log-polar scale change against a reference patch.
class LogPolarScaleEstimator {
public:
    LogPolarScaleEstimator() = default;
    LogPolarScaleEstimator(const Image &frame, const BBox &box, const ScaleConfig &cfg);

    struct Estimate {
        double factor = 1.0; // S_p
        double confidence = 0;
        bool reliable = false;
        double rotation = 0; // radians; measured, unused
    };

    Estimate estimate(const Image &frame, const BBox &box) const;
    void update_reference(const Image &frame, const BBox &box);
    bool initialized() const noexcept { return !reference_.empty(); }
    double r_max() const noexcept { return cfg_.logpolar_patch / 2.0; }

    /// Windowed log-polar image of the square window around `box`.
    RealGrid logpolar_patch(const Image &frame, const BBox &box) const;

private:
    ScaleConfig cfg_;
    RealGrid reference_;
};

/// theta * s_d + (1 - theta) * s_p.
double fuse_scale(double s_d, double s_p, double theta);

struct ScaleStepResult {
    double s_d = 1.0;
    double s_p = 1.0;
    double s = 1.0;
    double confidence = 0;
};

/// Fused estimator with a cumulative scale relative to the initial box.
class ScaleState {
public:
    ScaleState() = default;
    ScaleState(const Image &frame, const BBox &box, const ScaleConfig &cfg);

    /// Estimates the relative change at `box`; does not modify state.
    ScaleStepResult estimate(const Image &frame, const BBox &box) const;
    /// Applies a relative change and refreshes the models at the resized box.
    void commit(const Image &frame, const BBox &resized_box, double relative);

    double cumulative() const noexcept { return cumulative_; }
    const ScaleConfig &config() const noexcept { return cfg_; }

private:
    ScaleConfig cfg_;
    PyramidScaleFilter pyramid_;
    LogPolarScaleEstimator logpolar_;
    double cumulative_ = 1.0;
};

} // namespace occtrack
