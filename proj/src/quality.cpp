#include <occtrack/quality.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace occtrack {

void QualityParams::validate() const {
    if (!(alpha >= 1) || !(beta > 0) || !(phi > 1) || n_q < 1 || exclusion_radius < 0) {
        throw Error(ErrorCode::InvalidArgument, "quality parameters out of range");
    }
}

QualityHistory::QualityHistory(int capacity) : capacity_(capacity) {
    if (capacity < 1) {
        throw Error(ErrorCode::InvalidArgument, "history capacity must be positive");
    }
    values_.reserve(static_cast<std::size_t>(capacity));
}

void QualityHistory::push(double q) {
    if (values_.size() < static_cast<std::size_t>(capacity_)) {
        values_.push_back(q);
    } else {
        values_[head_] = q;
        head_ = (head_ + 1) % values_.size();
    }
}

double QualityHistory::mean() const {
    if (values_.empty()) {
        return 0.0;
    }
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

std::vector<double> QualityHistory::values() const {
    std::vector<double> out;
    out.reserve(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) {
        out.push_back(values_[(head_ + i) % values_.size()]);
    }
    return out;
}

ResponseMap normalize_response(const ResponseMap &r) {
    double maxabs = 0;
    for (double v : r.grid.values()) {
        maxabs = std::max(maxabs, std::abs(v));
    }
    if (!(maxabs > 0) || !std::isfinite(maxabs)) {
        throw Error(ErrorCode::DegenerateResponse, "cannot normalize an all-zero response");
    }
    ResponseMap out = r;
    for (double &v : out.grid.values()) {
        v /= maxabs;
    }
    out.peak_val = out.grid(out.peak_row, out.peak_col);
    out.raw_peak = r.raw_peak;
    out.normalized = true;
    return out;
}

double q_measure(const ResponseMap &r, double alpha, double beta, int exclusion_radius) {
    if (!r.normalized) {
        throw Error(ErrorCode::InvalidArgument, "q_measure expects a normalized response");
    }
    const int rows = r.grid.rows();
    const int cols = r.grid.cols();
    if (rows < 3 || cols < 3) {
        throw Error(ErrorCode::DegenerateResponse, "response too small for q_measure");
    }
    const double sy = 1.0 / (rows - 1);
    const double sx = 1.0 / (cols - 1);
    const double peak = r.grid(r.peak_row, r.peak_col);
    double best = std::numeric_limits<double>::infinity();
    for (int y = 0; y < rows; ++y) {
        const int dyi = y - r.peak_row;
        const double dy = dyi * sy;
        for (int x = 0; x < cols; ++x) {
            const int dxi = x - r.peak_col;
            if (std::max(std::abs(dyi), std::abs(dxi)) <= exclusion_radius) {
                continue;
            }
            const double dx = dxi * sx;
            const double gap = std::max(0.0, peak - r.grid(y, x));
            const double num = std::pow(gap, alpha);
            const double den = -std::expm1(-beta * (dx * dx + dy * dy));
            best = std::min(best, num / den);
        }
    }
    if (!std::isfinite(best)) {
        throw Error(ErrorCode::DegenerateResponse, "no cells outside the exclusion radius");
    }
    return best;
}

double localization_quality(const ResponseMap &r, const QualityParams &params) {
    if (!(r.raw_peak > 0)) {
        throw Error(ErrorCode::DegenerateResponse, "response peak is not positive");
    }
    const ResponseMap n = r.normalized ? r : normalize_response(r);
    return q_measure(n, params.alpha, params.beta, params.exclusion_radius) * r.raw_peak;
}

double psr(const ResponseMap &r, int window) {
    const int half = window / 2;
    const int rows = r.grid.rows();
    const int cols = r.grid.cols();
    double sum = 0, sum2 = 0;
    std::size_t n = 0;
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            if (std::abs(y - r.peak_row) <= half && std::abs(x - r.peak_col) <= half) {
                continue;
            }
            const double v = r.grid(y, x);
            sum += v;
            sum2 += v * v;
            ++n;
        }
    }
    if (n == 0) {
        throw Error(ErrorCode::DegenerateResponse, "empty sidelobe region");
    }
    const double mean = sum / static_cast<double>(n);
    double var = 0;
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            if (std::abs(y - r.peak_row) <= half && std::abs(x - r.peak_col) <= half) {
                continue;
            }
            const double d = r.grid(y, x) - mean;
            var += d * d;
        }
    }
    var /= static_cast<double>(n);
    if (!(var > 1e-24 * std::max(1.0, mean * mean))) {
        throw Error(ErrorCode::DegenerateResponse, "sidelobe has zero variance");
    }
    return (r.grid(r.peak_row, r.peak_col) - mean) / std::sqrt(var);
}

double apce(const ResponseMap &r) {
    const auto vals = r.grid.values();
    const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
    const double lo = *mn;
    const double hi = *mx;
    if (!(hi > lo)) {
        throw Error(ErrorCode::DegenerateResponse, "APCE undefined for a constant map");
    }
    double energy = 0;
    for (double v : vals) {
        energy += (v - lo) * (v - lo);
    }
    energy /= static_cast<double>(vals.size());
    return (hi - lo) * (hi - lo) / energy;
}

TriggerDecision occlusion_trigger(const QualityHistory &hist, double q_t, double phi) {
    TriggerDecision d;
    if (hist.empty()) {
        return d;
    }
    if (!(q_t > 0) || !std::isfinite(q_t)) {
        d.fired = true;
        d.degenerate = true;
        d.ratio = std::numeric_limits<double>::infinity();
        return d;
    }
    d.ratio = hist.mean() / q_t;
    d.fired = d.ratio > phi;
    return d;
}

} // namespace occtrack
