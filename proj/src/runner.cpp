#include <occtrack/runner.hpp>

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

namespace occtrack {

RunResult run_tracker(const Sequence &seq, const TrackerConfig &cfg, const FrameCallback &on_frame) {
    RunResult out;
    const Image first = seq.frame(0);
    using clock = std::chrono::steady_clock;
    clock::duration busy{};

    auto t0 = clock::now();
    TrackerState state = init(first, seq.gt().front(), cfg);
    busy += clock::now() - t0;
    out.trajectory.push_back(seq.gt().front());
    if (on_frame) {
        FrameDiagnostics d;
        d.box = seq.gt().front();
        on_frame(0, first, d);
    }
    for (std::size_t i = 1; i < seq.size(); ++i) {
        const Image frame = seq.frame(i);
        t0 = clock::now();
        StepResult r = step(state, frame);
        busy += clock::now() - t0;
        out.trajectory.push_back(r.box);
        if (on_frame) {
            on_frame(i, frame, r.diagnostics);
        }
        out.diagnostics.push_back(std::move(r.diagnostics));
    }
    const double secs = std::chrono::duration<double>(busy).count();
    out.fps = secs > 0 ? static_cast<double>(seq.size()) / secs : 0.0;
    out.final_filter = state.f_t;
    return out;
}

EvalReport evaluate_run(const RunResult &run, const Sequence &seq) {
    EvalReport r = evaluate(run.trajectory, seq.gt());
    r.fps = run.fps;
    int start = -1;
    for (const auto &d : run.diagnostics) {
        if (d.occluded && start < 0) {
            start = d.frame;
        } else if (!d.occluded && start >= 0) {
            r.occlusion_intervals.emplace_back(start, d.frame - 1);
            start = -1;
        }
    }
    if (start >= 0) {
        r.occlusion_intervals.emplace_back(start, static_cast<int>(seq.size()) - 1);
    }
    return r;
}

std::pair<int, int> recovery_window(const Sequence &seq) {
    const int n = static_cast<int>(seq.size());
    int last = -1;
    for (const auto &e : seq.occlusion_schedule()) {
        if (e.overlap > 0) {
            last = std::max(last, e.frame);
        }
    }
    if (last < 0) {
        return {0, n};
    }
    return {std::min(last + 10, n - 1), n};
}

double recovery_score(const RunResult &run, const Sequence &seq) {
    const auto [from, to] = recovery_window(seq);
    std::vector<double> ious;
    ious.reserve(run.trajectory.size());
    for (std::size_t i = 0; i < run.trajectory.size() && i < seq.gt().size(); ++i) {
        ious.push_back(iou(run.trajectory[i], seq.gt()[i]));
    }
    return mean_over(ious, from, to);
}

AblationResult ablate(const Sequence &seq, TrackerConfig cfg) {
    AblationResult a;
    cfg.occlusion_handling = true;
    const RunResult with = run_tracker(seq, cfg);
    cfg.occlusion_handling = false;
    const RunResult without = run_tracker(seq, cfg);
    a.with_handling = evaluate_run(with, seq);
    a.without_handling = evaluate_run(without, seq);
    a.recovery_with = recovery_score(with, seq);
    a.recovery_without = recovery_score(without, seq);
    return a;
}

std::string ablation_table(const AblationResult &a) {
    std::ostringstream o;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-22s %12s %12s\n", "", "handling", "no handling");
    o << buf;
    auto row = [&](const char *name, double x, double y) {
        std::snprintf(buf, sizeof buf, "%-22s %12.4f %12.4f\n", name, x, y);
        o << buf;
    };
    row("success AUC", a.with_handling.auc, a.without_handling.auc);
    row("precision @20px", a.with_handling.precision_20, a.without_handling.precision_20);
    row("mean IoU", a.with_handling.mean_iou, a.without_handling.mean_iou);
    row("recovery IoU", a.recovery_with, a.recovery_without);
    row("fps", a.with_handling.fps, a.without_handling.fps);
    return o.str();
}

std::vector<SweepEntry> sweep_alpha(const std::vector<Sequence> &seqs, TrackerConfig cfg,
                                    const std::vector<double> &alphas) {
    std::vector<SweepEntry> out;
    for (double alpha : alphas) {
        cfg.quality.alpha = alpha;
        SweepEntry e;
        e.alpha = alpha;
        for (const auto &seq : seqs) {
            e.per_sequence.push_back(recovery_score(run_tracker(seq, cfg), seq));
        }
        e.score = mean_over(e.per_sequence, 0, static_cast<int>(e.per_sequence.size()));
        out.push_back(std::move(e));
    }
    return out;
}

int sweep_rank(const std::vector<SweepEntry> &sweep, double alpha) {
    const auto it = std::find_if(sweep.begin(), sweep.end(), [&](const SweepEntry &e) { return e.alpha == alpha; });
    if (it == sweep.end()) {
        throw Error(ErrorCode::InvalidArgument, "alpha not part of the sweep");
    }
    return 1 + static_cast<int>(
                   std::count_if(sweep.begin(), sweep.end(), [&](const SweepEntry &e) { return e.score > it->score; }));
}

std::string sweep_table(const std::vector<SweepEntry> &sweep) {
    std::ostringstream o;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%8s %14s %6s\n", "alpha", "recovery IoU", "rank");
    o << buf;
    for (const auto &e : sweep) {
        std::snprintf(buf, sizeof buf, "%8.2f %14.4f %6d\n", e.alpha, e.score, sweep_rank(sweep, e.alpha));
        o << buf;
    }
    return o.str();
}

Image render_frame(const Image &frame, const BBox &predicted, const BBox *gt, const std::string &tag) {
    const int type = frame.channels() == 3 ? CV_8UC3 : CV_8UC1;
    cv::Mat src(frame.height(), frame.width(), type, const_cast<std::uint8_t *>(frame.data().data()));
    cv::Mat canvas;
    if (frame.channels() == 3) {
        canvas = src.clone();
    } else {
        cv::cvtColor(src, canvas, cv::COLOR_GRAY2RGB);
    }
    auto corner = [](const BBox &b) {
        return std::pair{cv::Point(static_cast<int>(std::lround(b.left())), static_cast<int>(std::lround(b.top()))),
                         cv::Point(static_cast<int>(std::lround(b.left() + b.w)) - 1,
                                   static_cast<int>(std::lround(b.top() + b.h)) - 1)};
    };
    if (gt) {
        const auto [p, q] = corner(*gt);
        const cv::Point pts[4] = {p, {q.x, p.y}, q, {p.x, q.y}};
        for (int e = 0; e < 4; ++e) {
            const cv::Point a = pts[e], b = pts[(e + 1) % 4];
            const double len = std::hypot(b.x - a.x, b.y - a.y);
            for (double s = 0; s < len; s += 8) {
                const double s2 = std::min(s + 4, len);
                cv::line(canvas, a + (b - a) * (s / len), a + (b - a) * (s2 / len), cv::Scalar(0, 255, 0), 1);
            }
        }
    }
    const auto [p, q] = corner(predicted);
    cv::rectangle(canvas, p, q, cv::Scalar(255, 0, 0), 2);
    cv::putText(canvas, tag, cv::Point(4, 14), cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(255, 255, 0), 1);

    Image out(canvas.cols, canvas.rows, 3);
    std::copy(canvas.data, canvas.data + out.data().size(), out.data().begin());
    return out;
}

} // namespace occtrack
