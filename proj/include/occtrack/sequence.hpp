#pragma once

// OTB-style sequence directories:
//   <dir>/img/0001.png ...        zero-padded, sorted by name
//   <dir>/groundtruth_rect.txt    one "x,y,w,h" line per frame (top-left corner)
//   <dir>/occlusion.txt           optional "frame,overlap" lines (synthetic only)

#include <occtrack/imaging.hpp>

#include <filesystem>
#include <utility>
#include <vector>

namespace occtrack {

struct OcclusionEntry {
    int frame = 0;        // 0-based
    double overlap = 0;   // fraction of the target area covered, in [0, 1]
};

class Sequence {
public:
    Sequence() = default;
    /// In-memory sequence.
    Sequence(std::vector<Image> frames, std::vector<BBox> gt, std::vector<OcclusionEntry> schedule = {});
    /// Lazily loaded sequence backed by image files.
    Sequence(std::vector<std::filesystem::path> files, std::vector<BBox> gt, std::vector<OcclusionEntry> schedule = {});

    std::size_t size() const noexcept { return frames_.empty() ? files_.size() : frames_.size(); }
    Image frame(std::size_t i) const;
    const std::vector<BBox> &gt() const noexcept { return gt_; }
    const std::vector<OcclusionEntry> &occlusion_schedule() const noexcept { return schedule_; }

    /// Overlap fraction at frame i (0 when absent from the schedule).
    double overlap_at(int frame) const;

private:
    void validate() const;

    std::vector<Image> frames_;
    std::vector<std::filesystem::path> files_;
    std::vector<BBox> gt_;
    std::vector<OcclusionEntry> schedule_;
};

Sequence load_sequence(const std::filesystem::path &dir);
void write_sequence(const std::filesystem::path &dir, const Sequence &seq);

/// Parses "x,y,w,h" lines (commas, tabs or spaces). Errors name the line number.
std::vector<BBox> read_boxes(const std::filesystem::path &path);
void write_boxes(const std::filesystem::path &path, const std::vector<BBox> &boxes);

} // namespace occtrack
