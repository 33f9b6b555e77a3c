#include <occtrack/imaging.hpp>

#include <opencv2/core.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace occtrack {

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
        throw Error(ErrorCode::InvalidArgument, "image needs positive size and 1 or 3 channels");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
        throw Error(ErrorCode::InvalidArgument, "image needs positive size and 1 or 3 channels");
    }
    if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
        throw Error(ErrorCode::ShapeMismatch, "image data length does not match width*height*channels");
    }
}

Image extract_window(const Image &img, double cx, double cy, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) {
        throw Error(ErrorCode::InvalidArgument, "window size must be positive");
    }
    const int x0 = static_cast<int>(std::lround(cx - out_w / 2.0));
    const int y0 = static_cast<int>(std::lround(cy - out_h / 2.0));
    const int nc = img.channels();
    Image out(out_w, out_h, nc);
    for (int y = 0; y < out_h; ++y) {
        const int sy = std::clamp(y0 + y, 0, img.height() - 1);
        for (int x = 0; x < out_w; ++x) {
            const int sx = std::clamp(x0 + x, 0, img.width() - 1);
            for (int c = 0; c < nc; ++c) {
                out.at(x, y, c) = img.at(sx, sy, c);
            }
        }
    }
    return out;
}

Image extract_patch(const Image &img, const BBox &box, double padding_factor) {
    if (padding_factor < 1.0) {
        throw Error(ErrorCode::InvalidArgument, "padding_factor must be >= 1");
    }
    if (!box.valid()) {
        throw Error(ErrorCode::InvalidArgument, "box must have positive size");
    }
    const bool disjoint = box.left() + box.w <= 0 || box.top() + box.h <= 0 || box.left() >= img.width() ||
                          box.top() >= img.height();
    if (disjoint) {
        throw Error(ErrorCode::PatchOutOfFrame, "box lies entirely outside the image");
    }
    const int pw = std::max(1, static_cast<int>(std::lround(box.w * padding_factor)));
    const int ph = std::max(1, static_cast<int>(std::lround(box.h * padding_factor)));
    return extract_window(img, box.cx, box.cy, pw, ph);
}

Image resize(const Image &img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) {
        throw Error(ErrorCode::InvalidArgument, "resize target must be at least 1x1");
    }
    if (out_w == img.width() && out_h == img.height()) {
        return img;
    }
    const int nc = img.channels();
    const double sx = static_cast<double>(img.width()) / out_w;
    const double sy = static_cast<double>(img.height()) / out_h;

    // Precomputed column taps.
    std::vector<int> x_lo(out_w), x_hi(out_w);
    std::vector<double> x_t(out_w);
    for (int x = 0; x < out_w; ++x) {
        const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
        x_lo[x] = static_cast<int>(fx);
        x_hi[x] = std::min(x_lo[x] + 1, img.width() - 1);
        x_t[x] = fx - x_lo[x];
    }

    Image out(out_w, out_h, nc);
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double ty = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            for (int c = 0; c < nc; ++c) {
                const double top = img.at(x_lo[x], y0, c) * (1 - x_t[x]) + img.at(x_hi[x], y0, c) * x_t[x];
                const double bot = img.at(x_lo[x], y1, c) * (1 - x_t[x]) + img.at(x_hi[x], y1, c) * x_t[x];
                const double v = top * (1 - ty) + bot * ty;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

Image to_gray(const Image &img) {
    if (img.channels() == 1) {
        return img;
    }
    Image out(img.width(), img.height(), 1);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double v = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
        dst[i] = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

RealGrid to_real(const Image &gray) {
    const Image g = to_gray(gray);
    RealGrid out(g.height(), g.width());
    auto src = g.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = src[i] / 255.0;
    }
    return out;
}

RealGrid cosine_window(int rows, int cols) {
    if (rows < 2 || cols < 2) {
        throw Error(ErrorCode::InvalidArgument, "cosine window needs at least 2x2");
    }
    auto hann = [](int n) {
        std::vector<double> w(n);
        for (int i = 0; i < n; ++i) {
            w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
        }
        return w;
    };
    const auto wr = hann(rows);
    const auto wc = hann(cols);
    RealGrid out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            out(r, c) = wr[r] * wc[c];
        }
    }
    return out;
}

RealGrid gaussian_label(int rows, int cols, double sigma) {
    if (!(sigma > 0)) {
        throw Error(ErrorCode::InvalidArgument, "label sigma must be positive");
    }
    RealGrid out(rows, cols);
    const int r0 = rows / 2;
    const int c0 = cols / 2;
    const double k = -0.5 / (sigma * sigma);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double d2 = static_cast<double>((r - r0) * (r - r0) + (c - c0) * (c - c0));
            out(r, c) = std::exp(k * d2);
        }
    }
    return out;
}

namespace {

cv::Mat complex_header(const ComplexGrid &g) {
    // std::complex<double> is layout-compatible with two doubles.
    return cv::Mat(g.rows(), g.cols(), CV_64FC2, const_cast<Complex *>(g.ptr()));
}

} // namespace

ComplexGrid fft2(const RealGrid &g) {
    ComplexGrid out(g.rows(), g.cols());
    const cv::Mat src(g.rows(), g.cols(), CV_64F, const_cast<double *>(g.ptr()));
    cv::Mat dst = complex_header(out);
    cv::dft(src, dst, cv::DFT_COMPLEX_OUTPUT);
    return out;
}

ComplexGrid fft2(const ComplexGrid &g) {
    ComplexGrid out(g.rows(), g.cols());
    cv::Mat dst = complex_header(out);
    cv::dft(complex_header(g), dst);
    return out;
}

ComplexGrid ifft2_complex(const ComplexGrid &spectrum) {
    ComplexGrid out(spectrum.rows(), spectrum.cols());
    cv::Mat dst = complex_header(out);
    cv::dft(complex_header(spectrum), dst, cv::DFT_INVERSE | cv::DFT_SCALE);
    return out;
}

RealGrid ifft2(const ComplexGrid &spectrum) {
    const ComplexGrid full = ifft2_complex(spectrum);
    RealGrid out(spectrum.rows(), spectrum.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = full[i].real();
    }
    return out;
}

} // namespace occtrack
