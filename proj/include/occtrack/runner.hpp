#pragma once

#include <occtrack/evaluate.hpp>
#include <occtrack/sequence.hpp>
#include <occtrack/tracker.hpp>

#include <functional>
#include <memory>

namespace occtrack {

using FrameCallback = std::function<void(std::size_t index, const Image &frame, const FrameDiagnostics &diag)>;

struct RunResult {
    std::vector<BBox> trajectory;
    std::vector<FrameDiagnostics> diagnostics; // one per frame after the first
    double fps = 0;                            // frames / tracking wall time
    std::shared_ptr<const FilterModel> final_filter;
};

/// Initializes on frame 0 with gt[0] and steps through every frame. Init
/// failures propagate as InitFailed; per-frame failures are recorded in the
/// diagnostics and the box is held.
RunResult run_tracker(const Sequence &seq, const TrackerConfig &cfg, const FrameCallback &on_frame = {});

/// evaluate() plus fps and the occlusion intervals from the diagnostics.
EvalReport evaluate_run(const RunResult &run, const Sequence &seq);

/// Frames scored for recovery: from occlusion end + 10 to the last frame, or
/// the whole sequence when there is no schedule.
std::pair<int, int> recovery_window(const Sequence &seq);
double recovery_score(const RunResult &run, const Sequence &seq);

struct AblationResult {
    EvalReport with_handling;
    EvalReport without_handling;
    double recovery_with = 0;
    double recovery_without = 0;
};
AblationResult ablate(const Sequence &seq, TrackerConfig cfg);
std::string ablation_table(const AblationResult &a);

struct SweepEntry {
    double alpha = 0;
    double score = 0; // mean recovery score over the sequences
    std::vector<double> per_sequence;
};
std::vector<SweepEntry> sweep_alpha(const std::vector<Sequence> &seqs, TrackerConfig cfg,
                                    const std::vector<double> &alphas);
/// 1 + number of entries with a strictly higher score.
int sweep_rank(const std::vector<SweepEntry> &sweep, double alpha);
std::string sweep_table(const std::vector<SweepEntry> &sweep);

/// Predicted box solid, ground truth dashed, active-model tag in the corner.
Image render_frame(const Image &frame, const BBox &predicted, const BBox *gt, const std::string &tag);

} // namespace occtrack
