#include <occtrack/sequence.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace occtrack {

namespace {

bool is_image(const std::filesystem::path &p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".ppm" || ext == ".pgm";
}

std::vector<double> split_numbers(const std::string &line, const std::string &where) {
    std::vector<double> out;
    std::string token;
    auto flush = [&] {
        if (token.empty()) {
            return;
        }
        double v = 0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size()) {
            throw Error(ErrorCode::ParseError, where + ": not a number: '" + token + "'");
        }
        out.push_back(v);
        token.clear();
    };
    for (char ch : line) {
        if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r') {
            flush();
        } else {
            token.push_back(ch);
        }
    }
    flush();
    return out;
}

template <typename F>
void for_each_line(const std::filesystem::path &path, F &&fn) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        fn(line, path.filename().string() + " line " + std::to_string(lineno));
    }
}

} // namespace

Sequence::Sequence(std::vector<Image> frames, std::vector<BBox> gt, std::vector<OcclusionEntry> schedule)
    : frames_(std::move(frames)), gt_(std::move(gt)), schedule_(std::move(schedule)) {
    validate();
}

Sequence::Sequence(std::vector<std::filesystem::path> files, std::vector<BBox> gt,
                   std::vector<OcclusionEntry> schedule)
    : files_(std::move(files)), gt_(std::move(gt)), schedule_(std::move(schedule)) {
    validate();
}

void Sequence::validate() const {
    if (size() == 0) {
        throw Error(ErrorCode::InvalidArgument, "sequence has no frames");
    }
    if (gt_.empty()) {
        throw Error(ErrorCode::InvalidArgument, "sequence needs a ground-truth box for frame 0");
    }
    if (gt_.size() > size()) {
        throw Error(ErrorCode::ShapeMismatch, "more ground-truth boxes than frames");
    }
    for (const auto &e : schedule_) {
        if (e.frame < 0 || static_cast<std::size_t>(e.frame) >= size() || e.overlap < 0 || e.overlap > 1) {
            throw Error(ErrorCode::InvalidArgument, "occlusion schedule entry out of range");
        }
    }
}

Image Sequence::frame(std::size_t i) const {
    if (i >= size()) {
        throw Error(ErrorCode::InvalidArgument, "frame index out of range");
    }
    return frames_.empty() ? load_image(files_[i]) : frames_[i];
}

double Sequence::overlap_at(int frame) const {
    for (const auto &e : schedule_) {
        if (e.frame == frame) {
            return e.overlap;
        }
    }
    return 0.0;
}

std::vector<BBox> read_boxes(const std::filesystem::path &path) {
    std::vector<BBox> out;
    for_each_line(path, [&](const std::string &line, const std::string &where) {
        const auto v = split_numbers(line, where);
        if (v.size() != 4) {
            throw Error(ErrorCode::ParseError, where + ": expected x,y,w,h");
        }
        out.push_back(BBox::from_corner(v[0], v[1], v[2], v[3]));
    });
    return out;
}

void write_boxes(const std::filesystem::path &path, const std::vector<BBox> &boxes) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out.precision(17);
    for (const auto &b : boxes) {
        out << b.left() << ',' << b.top() << ',' << b.w << ',' << b.h << '\n';
    }
}

Sequence load_sequence(const std::filesystem::path &dir) {
    const auto img_dir = dir / "img";
    if (!std::filesystem::is_directory(img_dir)) {
        throw Error(ErrorCode::IoError, "missing image directory " + img_dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto &entry : std::filesystem::directory_iterator(img_dir)) {
        if (entry.is_regular_file() && is_image(entry.path())) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    const auto gt_path = dir / "groundtruth_rect.txt";
    if (!std::filesystem::exists(gt_path)) {
        throw Error(ErrorCode::IoError, "missing " + gt_path.string());
    }
    auto gt = read_boxes(gt_path);

    std::vector<OcclusionEntry> schedule;
    const auto occ_path = dir / "occlusion.txt";
    if (std::filesystem::exists(occ_path)) {
        for_each_line(occ_path, [&](const std::string &line, const std::string &where) {
            const auto v = split_numbers(line, where);
            if (v.size() != 2) {
                throw Error(ErrorCode::ParseError, where + ": expected frame,overlap");
            }
            schedule.push_back({static_cast<int>(v[0]), v[1]});
        });
    }
    return Sequence(std::move(files), std::move(gt), std::move(schedule));
}

void write_sequence(const std::filesystem::path &dir, const Sequence &seq) {
    std::filesystem::create_directories(dir / "img");
    for (std::size_t i = 0; i < seq.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%04zu.png", i + 1);
        save_image(dir / "img" / name, seq.frame(i));
    }
    write_boxes(dir / "groundtruth_rect.txt", seq.gt());
    if (!seq.occlusion_schedule().empty()) {
        std::ofstream out(dir / "occlusion.txt");
        out.precision(17);
        for (const auto &e : seq.occlusion_schedule()) {
            out << e.frame << ',' << e.overlap << '\n';
        }
    }
}

} // namespace occtrack
