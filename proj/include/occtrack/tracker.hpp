#pragma once

// Occlusion-aware tracker. Per frame:
//   normal:    Q_f from the tracking filter f_t; if the sudden-drop trigger
//              does not fire, move, estimate scale and update f_t.
//   entering:  trigger fired; build d_t from f_0 and f_t, move with the better
//              of f_t / d_t, freeze every model.
//   occluded:  delta_t += 1, rebuild d_t; leave when f_t is confident again,
//              otherwise move with d_t while it is confident, else hold still.

#include <occtrack/dcf.hpp>
#include <occtrack/features.hpp>
#include <occtrack/quality.hpp>
#include <occtrack/scale.hpp>

#include <memory>
#include <string>

namespace occtrack {

struct TrackerConfig {
    FeatureConfig features;
    AdmmParams admm;              // used at initialization
    int update_iterations = 2;    // ADMM iterations on updates
    MaskParams mask;
    bool use_mask = true;
    double padding = 2.5;         // search region relative to the box
    double template_side = 128;   // sqrt of the template area in pixels
    double label_sigma_factor = 0.1;
    double eta = 0.02;            // tracking-filter learning rate
    double alpha_d = 0.05;        // decay of the occlusion filter towards f_0
    QualityParams quality;
    ScaleConfig scale;
    bool occlusion_handling = true;
    bool redetect = false;
    int redetect_after = 10;
    double redetect_factor = 1.5;

    void validate() const;
};

enum class ActiveModel { Tracking, Occlusion, Frozen };
std::string_view to_string(ActiveModel m);

struct FrameDiagnostics {
    int frame = 0;
    BBox box;
    ActiveModel model = ActiveModel::Tracking;
    bool occluded = false;         // state after this frame
    bool entered_occlusion = false;
    bool left_occlusion = false;
    bool updated = false;          // f_t was updated
    double q_f = 0;
    double q_d = 0;                // NaN when d_t was not evaluated
    double mean_q_f = 0;           // history means before this frame
    double mean_q_d = 0;
    double ratio_f = 0;
    double ratio_d = 0;
    bool trigger_f = false;
    bool trigger_d = false;
    int delta_t = 0;
    double xi = 0;                 // NaN outside occlusion
    double s_d = 1;
    double s_p = 1;
    double s = 1;
    double scale_confidence = 0;
    double cumulative_scale = 1;
    std::string error;

    std::string to_json() const;
};

/// Full tracker state. Filters are shared immutable snapshots, so copying a
/// state is cheap and never aliases mutable data.
struct TrackerState {
    TrackerConfig config;
    BBox box;
    int frame_index = 0;

    int tmpl_w = 0; // template size in pixels (multiples of the cell size)
    int tmpl_h = 0;
    RealGrid window;
    ComplexGrid label_hat;

    std::shared_ptr<const FilterModel> f_t;
    std::shared_ptr<const FilterModel> f_0;
    std::shared_ptr<const FilterModel> d_t;
    int delta_t = 0;
    bool occluded = false;
    int frozen_frames = 0;
    QualityHistory hist_f{100};
    QualityHistory hist_d{100};
    ScaleState scale;

    double cumulative_scale() const noexcept { return scale.cumulative(); }
};

/// Throws InitFailed when the box is degenerate, outside the frame, or the
/// patch carries no features.
TrackerState init(const Image &frame, const BBox &box, const TrackerConfig &cfg);

struct StepResult {
    BBox box;
    FrameDiagnostics diagnostics;
};

/// Advances the state by one frame. Never throws on frame-level failures:
/// the previous box is returned and the error is recorded in the diagnostics.
StepResult step(TrackerState &state, const Image &frame);

/// (1 - eta) * prev + eta * fresh for spectra and weights; masks are blended
/// and re-binarized at 0.5.
FilterModel update_tracking_filter(const FilterModel &prev, const FilterModel &fresh, double eta);

/// xi = exp(-alpha_d * delta_t^2); d = (1 - xi) * f_0 + xi * f_t.
FilterModel build_occlusion_filter(const FilterModel &f0, const FilterModel &ft, int delta_t, double alpha_d);

/// Tracking filter unless the occlusion filter has strictly higher quality.
ActiveModel select_model(double q_f, double q_d);

} // namespace occtrack
