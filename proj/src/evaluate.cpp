#include <occtrack/evaluate.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace occtrack {

double iou(const BBox &a, const BBox &b) {
    const double ix = std::max(0.0, std::min(a.left() + a.w, b.left() + b.w) - std::max(a.left(), b.left()));
    const double iy = std::max(0.0, std::min(a.top() + a.h, b.top() + b.h) - std::max(a.top(), b.top()));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (!(uni > 0)) {
        return 0.0;
    }
    return std::clamp(inter / uni, 0.0, 1.0);
}

double center_error(const BBox &a, const BBox &b) { return std::hypot(a.cx - b.cx, a.cy - b.cy); }

double mean_over(const std::vector<double> &values, int from, int to) {
    from = std::max(from, 0);
    to = std::min(to, static_cast<int>(values.size()));
    if (to <= from) {
        return 0.0;
    }
    return std::accumulate(values.begin() + from, values.begin() + to, 0.0) / (to - from);
}

EvalReport evaluate(const std::vector<BBox> &trajectory, const std::vector<BBox> &gt) {
    if (trajectory.size() != gt.size() || gt.empty()) {
        throw Error(ErrorCode::ShapeMismatch, "trajectory and ground truth differ in length");
    }
    EvalReport r;
    const std::size_t n = gt.size();
    for (std::size_t i = 0; i < n; ++i) {
        r.ious.push_back(iou(trajectory[i], gt[i]));
        r.center_errors.push_back(center_error(trajectory[i], gt[i]));
    }
    r.success_curve.resize(101);
    for (int k = 0; k <= 100; ++k) {
        const double t = k / 100.0;
        const auto hits = std::count_if(r.ious.begin(), r.ious.end(), [t](double v) { return v >= t; });
        r.success_curve[k] = static_cast<double>(hits) / static_cast<double>(n);
    }
    r.auc = std::accumulate(r.success_curve.begin(), r.success_curve.end(), 0.0) / 101.0;
    r.precision_20 = static_cast<double>(std::count_if(r.center_errors.begin(), r.center_errors.end(),
                                                       [](double e) { return e < 20.0; })) /
                     static_cast<double>(n);
    r.mean_iou = mean_over(r.ious, 0, static_cast<int>(n));
    return r;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["frames"] = ious.size();
    j["auc"] = auc;
    j["precision_20"] = precision_20;
    j["mean_iou"] = mean_iou;
    j["fps"] = fps;
    j["iou"] = ious;
    j["center_error"] = center_errors;
    j["success_curve"] = success_curve;
    nlohmann::json occ = nlohmann::json::array();
    for (const auto &[a, b] : occlusion_intervals) {
        occ.push_back({a, b});
    }
    j["occlusion_intervals"] = occ;
    return j.dump(2);
}

std::string EvalReport::to_table() const {
    std::ostringstream o;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-22s %10zu\n", "frames", ious.size());
    o << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10.4f\n", "success AUC", auc);
    o << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10.4f\n", "precision @20px", precision_20);
    o << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10.4f\n", "mean IoU", mean_iou);
    o << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10.1f\n", "fps", fps);
    o << buf;
    o << "occlusion intervals   ";
    if (occlusion_intervals.empty()) {
        o << "      none";
    }
    for (const auto &[a, b] : occlusion_intervals) {
        o << ' ' << a << '-' << b;
    }
    o << '\n';
    return o.str();
}

} // namespace occtrack
