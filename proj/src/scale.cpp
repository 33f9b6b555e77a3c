#include <occtrack/features.hpp>
#include <occtrack/scale.hpp>

#include <opencv2/core.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace occtrack {

void ScaleConfig::validate() const {
    if (!(theta >= 0 && theta <= 1)) {
        throw Error(ErrorCode::InvalidArgument, "theta must lie in [0, 1]");
    }
    if (!(scale_step > 1) || n_scales < 1 || n_scales % 2 == 0) {
        throw Error(ErrorCode::InvalidArgument, "scale_step must exceed 1 and n_scales must be odd");
    }
    if (logpolar_rows < 8 || logpolar_cols < 8 || logpolar_patch < 8) {
        throw Error(ErrorCode::InvalidArgument, "log-polar grid too small");
    }
    if (!(clamp_min > 0 && clamp_min <= 1 && clamp_max >= 1)) {
        throw Error(ErrorCode::InvalidArgument, "scale clamp must bracket 1");
    }
    if (!(learning_rate > 0 && learning_rate <= 1) || !(lambda > 0) || !(model_max_area > 0)) {
        throw Error(ErrorCode::InvalidArgument, "pyramid filter parameters out of range");
    }
    if (!(fusion_tolerance > 0)) {
        throw Error(ErrorCode::InvalidArgument, "fusion_tolerance must be positive");
    }
    if (!(logpolar_padding > 0) || logpolar_iterations < 1 || !(min_confidence >= 0 && min_confidence < 1)) {
        throw Error(ErrorCode::InvalidArgument, "log-polar parameters out of range");
    }
}

namespace {

// Row-wise 1-D DFT of an L x n matrix.
std::vector<std::vector<Complex>> dft_rows(const std::vector<std::vector<double>> &rows, int n) {
    cv::Mat src(static_cast<int>(rows.size()), n, CV_64F);
    for (std::size_t l = 0; l < rows.size(); ++l) {
        std::copy(rows[l].begin(), rows[l].end(), src.ptr<double>(static_cast<int>(l)));
    }
    cv::Mat dst;
    cv::dft(src, dst, cv::DFT_ROWS | cv::DFT_COMPLEX_OUTPUT);
    std::vector<std::vector<Complex>> out(rows.size(), std::vector<Complex>(n));
    for (std::size_t l = 0; l < rows.size(); ++l) {
        const auto *p = dst.ptr<cv::Vec2d>(static_cast<int>(l));
        for (int k = 0; k < n; ++k) {
            out[l][k] = {p[k][0], p[k][1]};
        }
    }
    return out;
}

std::vector<double> idft_real(const std::vector<Complex> &spec) {
    const int n = static_cast<int>(spec.size());
    cv::Mat src(1, n, CV_64FC2);
    for (int k = 0; k < n; ++k) {
        src.at<cv::Vec2d>(0, k) = {spec[k].real(), spec[k].imag()};
    }
    cv::Mat dst;
    cv::dft(src, dst, cv::DFT_INVERSE | cv::DFT_SCALE | cv::DFT_REAL_OUTPUT);
    return {dst.ptr<double>(0), dst.ptr<double>(0) + n};
}

double bilinear(const RealGrid &g, double x, double y) {
    x = std::clamp(x, 0.0, g.cols() - 1.0);
    y = std::clamp(y, 0.0, g.rows() - 1.0);
    const int x0 = std::min(static_cast<int>(x), g.cols() - 1);
    const int y0 = std::min(static_cast<int>(y), g.rows() - 1);
    const int x1 = std::min(x0 + 1, g.cols() - 1);
    const int y1 = std::min(y0 + 1, g.rows() - 1);
    const double tx = x - x0;
    const double ty = y - y0;
    return (1 - ty) * ((1 - tx) * g(y0, x0) + tx * g(y0, x1)) + ty * ((1 - tx) * g(y1, x0) + tx * g(y1, x1));
}

double clamp_scale(double s, const ScaleConfig &cfg) {
    if (!std::isfinite(s)) {
        return 1.0;
    }
    return std::clamp(s, cfg.clamp_min, cfg.clamp_max);
}

} // namespace

// ---------------------------------------------------------------------------
// Pyramid filter

PyramidScaleFilter::PyramidScaleFilter(const Image &frame, const BBox &box, const ScaleConfig &cfg) : cfg_(cfg) {
    cfg_.validate();
    if (!box.valid()) {
        throw Error(ErrorCode::InvalidArgument, "scale filter needs a positive box");
    }
    base_w_ = box.w;
    base_h_ = box.h;
    const double f = std::sqrt(cfg_.model_max_area / box.area());
    const int min_side = 2 * cfg_.cell_size;
    model_w_ = std::max(min_side, static_cast<int>(std::lround(box.w * f)));
    model_h_ = std::max(min_side, static_cast<int>(std::lround(box.h * f)));

    const int n = cfg_.n_scales;
    const int c = n / 2;
    factors_.resize(n);
    window_.resize(n);
    std::vector<double> label(n);
    const double sigma = std::sqrt(static_cast<double>(n)) * cfg_.sigma_factor;
    for (int k = 0; k < n; ++k) {
        factors_[k] = std::pow(cfg_.scale_step, k - c);
        window_[k] = n == 1 ? 1.0 : 0.5 * (1 - std::cos(2 * std::numbers::pi * (k + 1) / (n + 1)));
        const double d = k - c;
        label[k] = std::exp(-0.5 * d * d / (sigma * sigma));
    }
    label_hat_ = dft_rows({label}, n).front();
    train(sample(frame, box), num_, den_);
}

PyramidScaleFilter::Samples PyramidScaleFilter::sample(const Image &frame, const BBox &box) const {
    const int n = cfg_.n_scales;
    Samples s;
    s.degenerate.assign(n, false);
    std::vector<std::vector<double>> cols(n);
    std::size_t dims = 0;
    for (int k = 0; k < n; ++k) {
        const int sw = static_cast<int>(std::lround(box.w * factors_[k]));
        const int sh = static_cast<int>(std::lround(box.h * factors_[k]));
        if (sw < 2 || sh < 2) {
            s.degenerate[k] = true;
            continue;
        }
        const Image win = resize(extract_window(frame, box.cx, box.cy, sw, sh), model_w_, model_h_);
        const FeatureStack hog = extract_hog(win, cfg_.cell_size, 9);
        auto &col = cols[k];
        col.reserve(hog.size() * static_cast<std::size_t>(hog.rows() * hog.cols()));
        for (const auto &ch : hog.channels()) {
            for (double v : ch.values()) {
                col.push_back(v * window_[k]);
            }
        }
        dims = col.size();
    }
    if (dims == 0) {
        throw Error(ErrorCode::PatchTooSmall, "every scale sample is degenerate");
    }
    s.rows.assign(dims, std::vector<double>(n, 0.0));
    for (int k = 0; k < n; ++k) {
        if (s.degenerate[k]) {
            continue;
        }
        for (std::size_t l = 0; l < dims; ++l) {
            s.rows[l][k] = cols[k][l];
        }
    }
    return s;
}

void PyramidScaleFilter::train(const Samples &s, std::vector<std::vector<Complex>> &num,
                               std::vector<double> &den) const {
    const int n = cfg_.n_scales;
    const auto xf = dft_rows(s.rows, n);
    num.assign(xf.size(), std::vector<Complex>(n));
    den.assign(n, 0.0);
    for (std::size_t l = 0; l < xf.size(); ++l) {
        for (int k = 0; k < n; ++k) {
            num[l][k] = std::conj(label_hat_[k]) * xf[l][k];
            den[k] += std::norm(xf[l][k]);
        }
    }
}

PyramidScaleFilter::Estimate PyramidScaleFilter::estimate(const Image &frame, const BBox &box) const {
    Estimate e;
    const int n = cfg_.n_scales;
    if (n == 1 || !initialized()) {
        e.response.assign(1, 1.0);
        return e;
    }
    const Samples s = sample(frame, box);
    const auto zf = dft_rows(s.rows, n);
    std::vector<Complex> acc(n);
    for (std::size_t l = 0; l < zf.size() && l < num_.size(); ++l) {
        for (int k = 0; k < n; ++k) {
            acc[k] += std::conj(num_[l][k]) * zf[l][k];
        }
    }
    for (int k = 0; k < n; ++k) {
        acc[k] /= den_[k] + cfg_.lambda;
    }
    e.response = idft_real(acc);
    int best = n / 2;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        if (s.degenerate[k]) {
            e.response[k] = -std::numeric_limits<double>::infinity();
            continue;
        }
        if (e.response[k] > best_v) {
            best_v = e.response[k];
            best = k;
        }
    }
    e.k_star = best - n / 2;
    e.factor = factors_[best];
    return e;
}

void PyramidScaleFilter::update(const Image &frame, const BBox &box) {
    if (!initialized() || cfg_.n_scales == 1) {
        return;
    }
    std::vector<std::vector<Complex>> num;
    std::vector<double> den;
    train(sample(frame, box), num, den);
    const double eta = cfg_.learning_rate;
    for (std::size_t l = 0; l < num_.size() && l < num.size(); ++l) {
        for (int k = 0; k < cfg_.n_scales; ++k) {
            num_[l][k] = (1 - eta) * num_[l][k] + eta * num[l][k];
        }
    }
    for (int k = 0; k < cfg_.n_scales; ++k) {
        den_[k] = (1 - eta) * den_[k] + eta * den[k];
    }
}

// ---------------------------------------------------------------------------
// Log-polar

RealGrid logpolar_transform(const RealGrid &gray, double cx, double cy, int rows, int cols, double r_max) {
    if (rows < 2 || cols < 2 || !(r_max > 1)) {
        throw Error(ErrorCode::InvalidArgument, "log-polar grid needs rows, cols >= 2 and r_max > 1");
    }
    RealGrid out(rows, cols);
    const double log_step = std::log(r_max) / rows;
    std::vector<double> cs(cols), sn(cols);
    for (int j = 0; j < cols; ++j) {
        const double a = 2 * std::numbers::pi * j / cols;
        cs[j] = std::cos(a);
        sn[j] = std::sin(a);
    }
    for (int i = 0; i < rows; ++i) {
        const double r = std::exp(i * log_step);
        for (int j = 0; j < cols; ++j) {
            out(i, j) = bilinear(gray, cx + r * cs[j], cy + r * sn[j]);
        }
    }
    return out;
}

RealGrid logpolar_transform(const Image &patch, int rows, int cols) {
    const RealGrid g = to_real(patch.channels() == 1 ? patch : to_gray(patch));
    const double side = std::min(g.rows(), g.cols());
    return logpolar_transform(g, (g.cols() - 1) / 2.0, (g.rows() - 1) / 2.0, rows, cols, side / 2.0);
}

PhaseShift phase_correlation(const RealGrid &a, const RealGrid &b) {
    if (!a.same_shape(b)) {
        throw Error(ErrorCode::ShapeMismatch, "phase correlation inputs differ in shape");
    }
    const int rows = a.rows();
    const int cols = a.cols();
    const ComplexGrid fa = fft2(a);
    const ComplexGrid fb = fft2(b);

    // Normalized cross-power spectrum, smoothed by a Gaussian of kSigma cells in space.
    constexpr double kSigma = 2.0;
    ComplexGrid cross(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            cross(r, c) = fb(r, c) * std::conj(fa(r, c));
        }
    }
    double max_mag = 0;
    for (const Complex &x : cross.values()) {
        max_mag = std::max(max_mag, std::abs(x));
    }
    if (!(max_mag > 0)) {
        throw Error(ErrorCode::DegenerateResponse, "zero cross-power spectrum");
    }
    // Bins without energy carry no phase and are left out of the normalization.
    double weight_sum = 0;
    const double k = -2.0 * std::numbers::pi * std::numbers::pi * kSigma * kSigma;
    for (int r = 0; r < rows; ++r) {
        const double fr = static_cast<double>(r <= rows / 2 ? r : r - rows) / rows;
        for (int c = 0; c < cols; ++c) {
            const double fc = static_cast<double>(c <= cols / 2 ? c : c - cols) / cols;
            const double m = std::abs(cross(r, c));
            if (m > 1e-12 * max_mag) {
                const double w = std::exp(k * (fr * fr + fc * fc));
                weight_sum += w;
                cross(r, c) *= w / m;
            } else {
                cross(r, c) = Complex{};
            }
        }
    }
    RealGrid surface = ifft2(cross);
    const double norm = static_cast<double>(rows) * cols / weight_sum;
    for (double &v : surface.values()) {
        v *= norm;
    }

    int pr = 0, pc = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (surface(r, c) > surface(pr, pc)) {
                pr = r;
                pc = c;
            }
        }
    }
    auto refine = [](double lo, double mid, double hi) {
        double d;
        if (lo > 0 && mid > 0 && hi > 0) {
            const double l0 = std::log(lo), l1 = std::log(mid), l2 = std::log(hi);
            const double den = l0 - 2 * l1 + l2;
            d = den < 0 ? 0.5 * (l0 - l2) / den : 0.0;
        } else {
            const double den = lo - 2 * mid + hi;
            d = den < 0 ? 0.5 * (lo - hi) / den : 0.0;
        }
        return std::clamp(d, -0.5, 0.5);
    };
    const double dr = refine(surface((pr + rows - 1) % rows, pc), surface(pr, pc), surface((pr + 1) % rows, pc));
    const double dc = refine(surface(pr, (pc + cols - 1) % cols), surface(pr, pc), surface(pr, (pc + 1) % cols));

    PhaseShift out;
    out.shift_r = (pr > rows / 2 ? pr - rows : pr) + dr;
    out.shift_c = (pc > cols / 2 ? pc - cols : pc) + dc;
    out.confidence = surface(pr, pc);
    return out;
}

LogPolarScaleEstimator::LogPolarScaleEstimator(const Image &frame, const BBox &box, const ScaleConfig &cfg)
    : cfg_(cfg) {
    cfg_.validate();
    update_reference(frame, box);
}

RealGrid LogPolarScaleEstimator::logpolar_patch(const Image &frame, const BBox &box) const {
    const int p = cfg_.logpolar_patch;
    const int side = std::max(4, static_cast<int>(std::lround(std::max(box.w, box.h) * cfg_.logpolar_padding)));
    Image win = extract_window(frame, box.cx, box.cy, side, side);
    if (win.channels() != 1) {
        win = to_gray(win);
    }
    const RealGrid g = to_real(resize(win, p, p));
    RealGrid lp = logpolar_transform(g, (p - 1) / 2.0, (p - 1) / 2.0, cfg_.logpolar_rows, cfg_.logpolar_cols, p / 2.0);

    // Zero mean, then a Hann taper along log-radius (a ring window in the source).
    double mean = 0;
    for (double v : lp.values()) {
        mean += v;
    }
    mean /= static_cast<double>(lp.size());
    for (int i = 0; i < lp.rows(); ++i) {
        const double w = 0.5 * (1 - std::cos(2 * std::numbers::pi * (i + 0.5) / lp.rows()));
        for (int j = 0; j < lp.cols(); ++j) {
            lp(i, j) = (lp(i, j) - mean) * w;
        }
    }
    return lp;
}

void LogPolarScaleEstimator::update_reference(const Image &frame, const BBox &box) {
    reference_ = logpolar_patch(frame, box);
}

LogPolarScaleEstimator::Estimate LogPolarScaleEstimator::estimate(const Image &frame, const BBox &box) const {
    Estimate e;
    if (!initialized()) {
        return e;
    }
    // Each pass resamples at the current estimate and measures the residual.
    double log_s = 0;
    PhaseShift ps;
    for (int it = 0; it < cfg_.logpolar_iterations; ++it) {
        try {
            ps = phase_correlation(reference_, logpolar_patch(frame, box.scaled(std::exp(log_s))));
        } catch (const Error &err) {
            if (err.code() != ErrorCode::DegenerateResponse) {
                throw;
            }
            return Estimate{};
        }
        if (ps.confidence < cfg_.min_confidence) {
            break;
        }
        log_s += ps.shift_r * std::log(r_max()) / cfg_.logpolar_rows;
        e.rotation += ps.shift_c * 2 * std::numbers::pi / cfg_.logpolar_cols;
        if (std::exp(log_s) <= cfg_.clamp_min || std::exp(log_s) >= cfg_.clamp_max) {
            break;
        }
    }
    e.confidence = ps.confidence;
    // Running into the clamp is treated as a failure.
    e.reliable = ps.confidence >= cfg_.min_confidence && std::exp(log_s) > cfg_.clamp_min &&
                 std::exp(log_s) < cfg_.clamp_max;
    e.factor = e.reliable ? clamp_scale(std::exp(log_s), cfg_) : 1.0;
    if (!e.reliable) {
        e.rotation = 0;
    }
    return e;
}

double fuse_scale(double s_d, double s_p, double theta) {
    if (!(theta >= 0 && theta <= 1)) {
        throw Error(ErrorCode::InvalidArgument, "theta must lie in [0, 1]");
    }
    return theta * s_d + (1 - theta) * s_p;
}

// ---------------------------------------------------------------------------
// Combined state

ScaleState::ScaleState(const Image &frame, const BBox &box, const ScaleConfig &cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.mode == ScaleMode::Fused || cfg_.mode == ScaleMode::PyramidOnly) {
        pyramid_ = PyramidScaleFilter(frame, box, cfg_);
    }
    if (cfg_.mode == ScaleMode::Fused || cfg_.mode == ScaleMode::LogPolarOnly) {
        logpolar_ = LogPolarScaleEstimator(frame, box, cfg_);
    }
}

ScaleStepResult ScaleState::estimate(const Image &frame, const BBox &box) const {
    ScaleStepResult out;
    if (pyramid_.initialized()) {
        out.s_d = pyramid_.estimate(frame, box).factor;
    }
    if (logpolar_.initialized()) {
        const auto lp = logpolar_.estimate(frame, box);
        out.s_p = lp.factor;
        out.confidence = lp.confidence;
        if (cfg_.mode == ScaleMode::Fused &&
            std::abs(std::log(out.s_p / out.s_d)) > cfg_.fusion_tolerance * std::log(cfg_.scale_step)) {
            out.s_p = 1.0;
        }
    }
    switch (cfg_.mode) {
    case ScaleMode::Fused: out.s = fuse_scale(out.s_d, out.s_p, cfg_.theta); break;
    case ScaleMode::PyramidOnly: out.s = out.s_d; break;
    case ScaleMode::LogPolarOnly: out.s = out.s_p; break;
    case ScaleMode::Off: out.s = 1.0; break;
    }
    out.s = clamp_scale(out.s, cfg_);
    return out;
}

void ScaleState::commit(const Image &frame, const BBox &resized_box, double relative) {
    cumulative_ *= relative;
    if (pyramid_.initialized()) {
        pyramid_.update(frame, resized_box);
    }
    if (logpolar_.initialized()) {
        logpolar_.update_reference(frame, resized_box);
    }
}

} // namespace occtrack
