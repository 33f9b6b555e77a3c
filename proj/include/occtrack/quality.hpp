#pragma once

#include <occtrack/response.hpp>

#include <vector>

namespace occtrack {

struct QualityParams {
    double alpha = 2.0;  // numerator exponent, >= 1
    double beta = 8.0;   // spatial falloff
    double phi = 45.0;   // sudden-drop threshold on mean(Q) / Q_t
    int n_q = 100;       // history length
    int exclusion_radius = 1;

    void validate() const;
};

/// Ring buffer of the last n_q confident Q values.
class QualityHistory {
public:
    explicit QualityHistory(int capacity = 100);

    void push(double q);
    /// Exact mean of the buffer contents; 0 when empty.
    double mean() const;
    bool empty() const noexcept { return values_.empty(); }
    std::size_t size() const noexcept { return values_.size(); }
    int capacity() const noexcept { return capacity_; }
    /// Oldest first.
    std::vector<double> values() const;

private:
    int capacity_;
    std::size_t head_ = 0;
    std::vector<double> values_;
};

/// Divides by max |entry|. Throws DegenerateResponse on an all-zero map.
ResponseMap normalize_response(const ResponseMap &r);

/// min over cells with Chebyshev distance to the peak > exclusion_radius of
///   (r(x*) - r(x))^alpha / (1 - exp(-beta * |x - x*|^2)),
/// with coordinates divided by (cols - 1, rows - 1) so the squared distance lies in (0, 2].
double q_measure(const ResponseMap &normalized, double alpha, double beta, int exclusion_radius = 1);

/// q of the normalized map times the raw peak value.
double localization_quality(const ResponseMap &r, const QualityParams &params);

/// Peak-to-sidelobe ratio with an 11x11 exclusion window.
double psr(const ResponseMap &r, int window = 11);

/// Average peak-to-correlation energy: (max - min)^2 / mean((r - min)^2).
double apce(const ResponseMap &r);

struct TriggerDecision {
    bool fired = false;
    bool degenerate = false; // Q_t <= 0 or non-finite
    double ratio = 0;
};

/// Sudden-drop test mean(Q) / Q_t > phi. Never fires on an empty history.
TriggerDecision occlusion_trigger(const QualityHistory &hist, double q_t, double phi);

} // namespace occtrack
