#pragma once

#include <occtrack/imaging.hpp>

#include <string>
#include <utility>
#include <vector>

namespace occtrack {

double iou(const BBox &a, const BBox &b);
double center_error(const BBox &a, const BBox &b);

struct EvalReport {
    std::vector<double> ious;
    std::vector<double> center_errors;
    std::vector<double> success_curve; // 101 thresholds 0, 0.01, ..., 1; fraction with IoU >= t
    double auc = 0;                    // mean of the success curve
    double precision_20 = 0;           // fraction with center error < 20 px
    double mean_iou = 0;
    std::vector<std::pair<int, int>> occlusion_intervals; // inclusive frame ranges flagged occluded
    double fps = 0;

    std::string to_json() const;
    std::string to_table() const;
};

/// Throws ShapeMismatch when lengths differ.
EvalReport evaluate(const std::vector<BBox> &trajectory, const std::vector<BBox> &gt);

/// Mean of values[from, to), clipped to the vector.
double mean_over(const std::vector<double> &values, int from, int to);

} // namespace occtrack
