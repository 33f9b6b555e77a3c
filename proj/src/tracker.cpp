#include <occtrack/tracker.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace occtrack {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Observation {
    Image patch; // template resolution
    std::vector<ComplexGrid> spectra;
    double sx = 1; // frame pixels per template pixel
    double sy = 1;
};

struct Localization {
    ResponseMap response;
    double q = 0;
    double dx = 0; // frame pixels
    double dy = 0;
};

Observation observe(const TrackerState &s, const Image &frame, const BBox &box) {
    const Image raw = extract_patch(frame, box, s.config.padding);
    Observation o;
    o.sx = static_cast<double>(raw.width()) / s.tmpl_w;
    o.sy = static_cast<double>(raw.height()) / s.tmpl_h;
    o.patch = resize(raw, s.tmpl_w, s.tmpl_h);
    o.spectra = feature_spectra(extract_features(o.patch, s.config.features, s.window));
    return o;
}

double subcell(double lo, double mid, double hi) {
    const double den = lo - 2 * mid + hi;
    if (!(den < 0)) {
        return 0.0;
    }
    return std::clamp(0.5 * (lo - hi) / den, -0.5, 0.5);
}

Localization locate(const TrackerState &s, const FilterModel &f, const Observation &o) {
    Localization l;
    l.response = compute_response_spectral(f, o.spectra);
    const RealGrid &g = l.response.grid;
    const int rows = g.rows();
    const int cols = g.cols();
    const int pr = l.response.peak_row;
    const int pc = l.response.peak_col;
    const double fr = pr + subcell(g((pr + rows - 1) % rows, pc), g(pr, pc), g((pr + 1) % rows, pc));
    const double fc = pc + subcell(g(pr, (pc + cols - 1) % cols), g(pr, pc), g(pr, (pc + 1) % cols));
    // The label peaks at cell (0, 0), so the filter support sits under the mask.
    const int cell = s.config.features.cell_size;
    l.dx = (fc > cols / 2.0 ? fc - cols : fc) * cell * o.sx;
    l.dy = (fr > rows / 2.0 ? fr - rows : fr) * cell * o.sy;
    // Quality is judged on the map shifted so zero displacement sits at the center.
    RealGrid centered(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            centered(r, c) = g((r - rows / 2 + rows) % rows, (c - cols / 2 + cols) % cols);
        }
    }
    try {
        l.q = localization_quality(ResponseMap::from_grid(std::move(centered)), s.config.quality);
    } catch (const Error &e) {
        if (e.code() != ErrorCode::DegenerateResponse) {
            throw;
        }
        l.q = 0.0; // degenerate responses always trigger
    }
    if (!std::isfinite(l.q)) {
        l.q = 0.0;
    }
    return l;
}

BBox moved(const BBox &box, const Localization &l, const Image &frame) {
    BBox b = box;
    b.cx = std::clamp(box.cx + l.dx, 0.0, static_cast<double>(frame.width()));
    b.cy = std::clamp(box.cy + l.dy, 0.0, static_cast<double>(frame.height()));
    return b;
}

FilterModel learn(const TrackerState &s, const Observation &o, const AdmmParams &p) {
    const int cell = s.config.features.cell_size;
    const int rows = s.tmpl_h / cell;
    const int cols = s.tmpl_w / cell;
    const BBox target{s.tmpl_w / 2.0, s.tmpl_h / 2.0, s.box.w / o.sx, s.box.h / o.sy};
    const RealGrid mask = s.config.use_mask ? compute_spatial_mask(o.patch, target, cell, s.config.mask)
                                            : box_mask(rows, cols, target, cell);
    return learn_filter_spectral(o.spectra, mask, s.label_hat, cell, p);
}

std::vector<double> blend_weights(const std::vector<double> &a, const std::vector<double> &b, double t) {
    std::vector<double> w(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        w[i] = std::max(0.0, (1 - t) * a[i] + t * b[i]);
    }
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(sum > 0)) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
        return w;
    }
    for (double &v : w) {
        v /= sum;
    }
    w.back() = std::max(0.0, w.back() + 1.0 - std::accumulate(w.begin(), w.end(), 0.0));
    return w;
}

FilterModel blend(const FilterModel &a, const FilterModel &b, double t) {
    if (!a.same_layout(b) || a.cell_size() != b.cell_size()) {
        throw Error(ErrorCode::ShapeMismatch, "cannot interpolate filters with different layouts");
    }
    if (t == 0) {
        return a;
    }
    if (t == 1) {
        return b;
    }
    std::vector<ComplexGrid> spectra;
    spectra.reserve(a.channels());
    for (std::size_t d = 0; d < a.channels(); ++d) {
        ComplexGrid s(a.rows(), a.cols());
        const auto &sa = a.spectra()[d];
        const auto &sb = b.spectra()[d];
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = (1 - t) * sa[i] + t * sb[i];
        }
        spectra.push_back(std::move(s));
    }
    RealGrid mask(a.rows(), a.cols());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = (1 - t) * a.mask()[i] + t * b.mask()[i] >= 0.5 ? 1.0 : 0.0;
    }
    return FilterModel(std::move(spectra), std::move(mask), blend_weights(a.channel_weights(), b.channel_weights(), t),
                       a.cell_size());
}

// Confident frame: move, rescale, update f_t. Histories receive Q_f.
BBox confident_update(TrackerState &s, const Image &frame, const Localization &lf, const Localization *chosen,
                      FrameDiagnostics &diag) {
    BBox box = moved(s.box, chosen ? *chosen : lf, frame);
    if (s.config.scale.mode != ScaleMode::Off) {
        const ScaleStepResult sc = s.scale.estimate(frame, box);
        diag.s_d = sc.s_d;
        diag.s_p = sc.s_p;
        diag.s = sc.s;
        diag.scale_confidence = sc.confidence;
        box = box.scaled(sc.s);
        s.scale.commit(frame, box, sc.s);
    }
    s.box = box;
    const Observation fresh = observe(s, frame, box);
    AdmmParams p = s.config.admm;
    p.iterations = s.config.update_iterations;
    s.f_t = std::make_shared<const FilterModel>(update_tracking_filter(*s.f_t, learn(s, fresh, p), s.config.eta));
    s.d_t = s.f_t;
    if (!diag.trigger_f) {
        s.hist_f.push(lf.q);
        s.hist_d.push(lf.q);
    }
    diag.updated = true;
    return box;
}

} // namespace

void TrackerConfig::validate() const {
    admm.validate();
    quality.validate();
    scale.validate();
    if (update_iterations < 1 || !(padding >= 1) || !(template_side >= 16) || !(label_sigma_factor > 0)) {
        throw Error(ErrorCode::InvalidArgument, "tracker geometry parameters out of range");
    }
    if (!(eta >= 0 && eta <= 1) || !(alpha_d >= 0)) {
        throw Error(ErrorCode::InvalidArgument, "eta must lie in [0, 1] and alpha_d must be nonnegative");
    }
    if (features.cell_size < 1 || features.hog_bins < 1 || redetect_after < 1 || !(redetect_factor >= 1)) {
        throw Error(ErrorCode::InvalidArgument, "feature or re-detection parameters out of range");
    }
}

std::string_view to_string(ActiveModel m) {
    switch (m) {
    case ActiveModel::Tracking: return "f";
    case ActiveModel::Occlusion: return "d";
    case ActiveModel::Frozen: return "frozen";
    }
    return "?";
}

std::string FrameDiagnostics::to_json() const {
    nlohmann::json j;
    j["frame"] = frame;
    j["box"] = {box.left(), box.top(), box.w, box.h};
    j["model"] = std::string(to_string(model));
    j["occluded"] = occluded;
    j["entered_occlusion"] = entered_occlusion;
    j["left_occlusion"] = left_occlusion;
    j["updated"] = updated;
    j["q_f"] = q_f;
    j["q_d"] = q_d;
    j["mean_q_f"] = mean_q_f;
    j["mean_q_d"] = mean_q_d;
    j["ratio_f"] = ratio_f;
    j["ratio_d"] = ratio_d;
    j["trigger_f"] = trigger_f;
    j["trigger_d"] = trigger_d;
    j["delta_t"] = delta_t;
    j["xi"] = xi;
    j["s_d"] = s_d;
    j["s_p"] = s_p;
    j["s"] = s;
    j["scale_confidence"] = scale_confidence;
    j["scale"] = cumulative_scale;
    if (!error.empty()) {
        j["error"] = error;
    }
    return j.dump();
}

FilterModel update_tracking_filter(const FilterModel &prev, const FilterModel &fresh, double eta) {
    if (!(eta >= 0 && eta <= 1)) {
        throw Error(ErrorCode::InvalidArgument, "eta must lie in [0, 1]");
    }
    return blend(prev, fresh, eta);
}

FilterModel build_occlusion_filter(const FilterModel &f0, const FilterModel &ft, int delta_t, double alpha_d) {
    if (delta_t < 0 || !(alpha_d >= 0)) {
        throw Error(ErrorCode::InvalidArgument, "delta_t and alpha_d must be nonnegative");
    }
    const double xi = std::exp(-alpha_d * static_cast<double>(delta_t) * delta_t);
    return blend(f0, ft, xi);
}

ActiveModel select_model(double q_f, double q_d) {
    return q_d > q_f ? ActiveModel::Occlusion : ActiveModel::Tracking;
}

TrackerState init(const Image &frame, const BBox &box, const TrackerConfig &cfg) {
    cfg.validate();
    if (frame.empty()) {
        throw Error(ErrorCode::InitFailed, "empty first frame");
    }
    if (!box.valid() || !std::isfinite(box.cx) || !std::isfinite(box.cy) || box.w < 2 || box.h < 2) {
        throw Error(ErrorCode::InitFailed, "degenerate initial box");
    }
    if (box.left() + box.w <= 0 || box.top() + box.h <= 0 || box.left() >= frame.width() ||
        box.top() >= frame.height()) {
        throw Error(ErrorCode::InitFailed, "initial box lies outside the frame");
    }

    TrackerState s;
    s.config = cfg;
    s.box = box;
    const int cell = cfg.features.cell_size;
    const double pw = box.w * cfg.padding;
    const double ph = box.h * cfg.padding;
    const double k = cfg.template_side / std::sqrt(pw * ph);
    const int cols = std::max(4, static_cast<int>(std::lround(pw * k / cell)));
    const int rows = std::max(4, static_cast<int>(std::lround(ph * k / cell)));
    s.tmpl_w = cols * cell;
    s.tmpl_h = rows * cell;
    s.window = cosine_window(rows, cols);
    const double tw_cells = box.w * k / cell;
    const double th_cells = box.h * k / cell;
    const RealGrid centered = gaussian_label(rows, cols, std::sqrt(tw_cells * th_cells) * cfg.label_sigma_factor);
    RealGrid label(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            label((r - rows / 2 + rows) % rows, (c - cols / 2 + cols) % cols) = centered(r, c);
        }
    }
    s.label_hat = fft2(label);
    s.hist_f = QualityHistory(cfg.quality.n_q);
    s.hist_d = QualityHistory(cfg.quality.n_q);

    try {
        const Observation o = observe(s, frame, box);
        double energy = 0;
        for (const auto &sp : o.spectra) {
            energy += std::norm(sp[0]);
        }
        if (!(energy > 0)) {
            throw Error(ErrorCode::InitFailed, "featureless initial patch");
        }
        s.f_t = std::make_shared<const FilterModel>(learn(s, o, cfg.admm));
        s.f_0 = s.f_t;
        s.d_t = s.f_t;
        if (cfg.scale.mode != ScaleMode::Off) {
            s.scale = ScaleState(frame, box, cfg.scale);
        }
    } catch (const Error &e) {
        if (e.code() == ErrorCode::InitFailed) {
            throw;
        }
        throw Error(ErrorCode::InitFailed, e.what());
    }
    return s;
}

StepResult step(TrackerState &s, const Image &frame) {
    FrameDiagnostics diag;
    diag.frame = ++s.frame_index;
    diag.q_d = kNaN;
    diag.xi = kNaN;
    diag.scale_confidence = kNaN;
    const TrackerState backup = s;
    const double phi = s.config.quality.phi;
    diag.mean_q_f = s.hist_f.mean();
    diag.mean_q_d = s.hist_d.mean();

    try {
        const Observation obs = observe(s, frame, s.box);
        const Localization lf = locate(s, *s.f_t, obs);
        diag.q_f = lf.q;

        if (!s.occluded) {
            const TriggerDecision tf = occlusion_trigger(s.hist_f, lf.q, phi);
            diag.trigger_f = tf.fired;
            diag.ratio_f = tf.ratio;
            if (!s.config.occlusion_handling || !tf.fired) {
                diag.model = ActiveModel::Tracking;
                confident_update(s, frame, lf, nullptr, diag);
            } else {
                s.occluded = true;
                s.delta_t = 1;
                s.frozen_frames = 0;
                diag.entered_occlusion = true;
                diag.xi = std::exp(-s.config.alpha_d);
                s.d_t = std::make_shared<const FilterModel>(
                    build_occlusion_filter(*s.f_0, *s.f_t, s.delta_t, s.config.alpha_d));
                const Localization ld = locate(s, *s.d_t, obs);
                diag.q_d = ld.q;
                const TriggerDecision td = occlusion_trigger(s.hist_d, ld.q, phi);
                diag.trigger_d = td.fired;
                diag.ratio_d = td.ratio;
                if (td.fired) {
                    // Neither model is confident: hold position as in the frozen state.
                    diag.model = ActiveModel::Frozen;
                } else {
                    diag.model = select_model(lf.q, ld.q);
                    s.box = moved(s.box, diag.model == ActiveModel::Occlusion ? ld : lf, frame);
                }
            }
        } else {
            s.delta_t += 1;
            diag.xi = std::exp(-s.config.alpha_d * static_cast<double>(s.delta_t) * s.delta_t);
            s.d_t = std::make_shared<const FilterModel>(
                build_occlusion_filter(*s.f_0, *s.f_t, s.delta_t, s.config.alpha_d));
            const Localization ld = locate(s, *s.d_t, obs);
            diag.q_d = ld.q;
            const TriggerDecision tf = occlusion_trigger(s.hist_f, lf.q, phi);
            const TriggerDecision td = occlusion_trigger(s.hist_d, ld.q, phi);
            diag.trigger_f = tf.fired;
            diag.trigger_d = td.fired;
            diag.ratio_f = tf.ratio;
            diag.ratio_d = td.ratio;
            if (!tf.fired) {
                diag.model = select_model(lf.q, ld.q);
                s.occluded = false;
                s.delta_t = 0;
                s.frozen_frames = 0;
                diag.left_occlusion = true;
                confident_update(s, frame, lf, diag.model == ActiveModel::Occlusion ? &ld : nullptr, diag);
            } else if (!td.fired) {
                diag.model = select_model(lf.q, ld.q);
                s.box = moved(s.box, diag.model == ActiveModel::Occlusion ? ld : lf, frame);
                s.hist_d.push(ld.q);
                s.frozen_frames = 0;
            } else {
                diag.model = ActiveModel::Frozen;
                s.frozen_frames += 1;
                if (s.config.redetect && s.frozen_frames >= s.config.redetect_after) {
                    // Bounded search over a redetect_factor larger region.
                    const double ox = (s.config.redetect_factor - 1) * s.box.w * s.config.padding / 2;
                    const double oy = (s.config.redetect_factor - 1) * s.box.h * s.config.padding / 2;
                    for (int iy = -1; iy <= 1 && s.occluded; ++iy) {
                        for (int ix = -1; ix <= 1 && s.occluded; ++ix) {
                            if (ix == 0 && iy == 0) {
                                continue;
                            }
                            BBox probe = s.box;
                            probe.cx += ix * ox;
                            probe.cy += iy * oy;
                            const Observation po = observe(s, frame, probe);
                            const Localization pl = locate(s, *s.f_t, po);
                            if (!occlusion_trigger(s.hist_f, pl.q, phi).fired) {
                                s.box = probe;
                                s.occluded = false;
                                s.delta_t = 0;
                                s.frozen_frames = 0;
                                diag.left_occlusion = true;
                                diag.model = ActiveModel::Tracking;
                                diag.q_f = pl.q;
                                confident_update(s, frame, pl, nullptr, diag);
                            }
                        }
                    }
                }
            }
        }
    } catch (const std::exception &e) {
        s = backup;
        s.frame_index = diag.frame;
        diag.error = e.what();
        diag.model = s.occluded ? ActiveModel::Frozen : ActiveModel::Tracking;
    }

    diag.box = s.box;
    diag.occluded = s.occluded;
    diag.delta_t = s.delta_t;
    diag.cumulative_scale = s.cumulative_scale();
    return {s.box, diag};
}

} // namespace occtrack
