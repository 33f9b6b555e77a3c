#include <occtrack/imaging.hpp>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace occtrack {

Image load_image(const std::filesystem::path &path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) {
        throw Error(ErrorCode::IoError, "cannot read image " + path.string());
    }
    if (m.depth() != CV_8U) {
        m.convertTo(m, CV_8U, m.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
    }
    cv::Mat rgb;
    int channels = 3;
    switch (m.channels()) {
    case 1:
        rgb = m;
        channels = 1;
        break;
    case 3:
        cv::cvtColor(m, rgb, cv::COLOR_BGR2RGB);
        break;
    case 4:
        cv::cvtColor(m, rgb, cv::COLOR_BGRA2RGB);
        break;
    default:
        throw Error(ErrorCode::IoError, "unsupported channel count in " + path.string());
    }
    if (!rgb.isContinuous()) {
        rgb = rgb.clone();
    }
    std::vector<std::uint8_t> data(rgb.datastart, rgb.dataend);
    return Image(rgb.cols, rgb.rows, channels, std::move(data));
}

void save_image(const std::filesystem::path &path, const Image &img) {
    cv::Mat m(img.height(), img.width(), img.channels() == 3 ? CV_8UC3 : CV_8UC1,
              const_cast<std::uint8_t *>(img.data().data()));
    cv::Mat out;
    if (img.channels() == 3) {
        cv::cvtColor(m, out, cv::COLOR_RGB2BGR);
    } else {
        out = m;
    }
    if (!cv::imwrite(path.string(), out)) {
        throw Error(ErrorCode::IoError, "cannot write image " + path.string());
    }
}

} // namespace occtrack
