#pragma once

// Image-plane primitives: 8-bit images, real/complex grids, patch
// extraction, resampling, windows, labels and the 2-D FFT.
//
// FFT convention: fft2 is unnormalized, ifft2 scales by 1/(rows*cols), so
// ifft2(fft2(g)) == g. Every other module relies on this.

#include <occtrack/errors.hpp>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace occtrack {

using Complex = std::complex<double>;

/// 8-bit interleaved image, row-major, 1 (gray) or 3 (RGB) channels.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, std::uint8_t fill = 0);
    Image(int width, int height, int channels, std::vector<std::uint8_t> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t &at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<std::uint8_t> data() noexcept { return data_; }
    std::span<const std::uint8_t> data() const noexcept { return data_; }

    bool operator==(const Image &) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Dense row-major matrix. Shape is fixed at construction.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}
    Grid(int rows, int cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != checked_size(rows, cols)) {
            throw Error(ErrorCode::ShapeMismatch, "grid data length does not match rows*cols");
        }
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool same_shape(const Grid &o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
    template <typename U>
    bool same_shape(const Grid<U> &o) const noexcept { return rows_ == o.rows() && cols_ == o.cols(); }

    T &operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const T &operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator[](std::size_t i) const { return data_[i]; }

    T *ptr() noexcept { return data_.data(); }
    const T *ptr() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    bool operator==(const Grid &) const = default;

private:
    static std::size_t checked_size(int rows, int cols) {
        if (rows < 1 || cols < 1) {
            throw Error(ErrorCode::InvalidArgument, "grid dimensions must be positive");
        }
        return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<Complex>;

/// Axis-aligned box, center + size, in pixels. The center may lie outside the image.
struct BBox {
    double cx = 0;
    double cy = 0;
    double w = 1;
    double h = 1;

    static BBox from_corner(double x, double y, double w, double h) { return {x + w / 2, y + h / 2, w, h}; }
    double left() const noexcept { return cx - w / 2; }
    double top() const noexcept { return cy - h / 2; }
    double area() const noexcept { return w * h; }
    bool valid() const noexcept { return w > 0 && h > 0; }
    BBox scaled(double s) const noexcept { return {cx, cy, w * s, h * s}; }
    bool operator==(const BBox &) const = default;
};

/// Patch of size (w*padding, h*padding) centered on the box; pixels outside
/// the frame replicate the nearest edge pixel.
Image extract_patch(const Image &img, const BBox &box, double padding_factor);

/// Integer-sized window whose top-left corner is round(center - size/2).
Image extract_window(const Image &img, double cx, double cy, int out_w, int out_h);

/// Bilinear resampling with pixel-center alignment.
Image resize(const Image &img, int out_w, int out_h);

Image to_gray(const Image &img);

/// Gray image as doubles in [0, 1].
RealGrid to_real(const Image &gray);

/// Outer product of two 1-D Hann windows; zero on every border.
RealGrid cosine_window(int rows, int cols);

/// exp(-d^2 / (2 sigma^2)) around the center cell (rows/2, cols/2).
RealGrid gaussian_label(int rows, int cols, double sigma);

ComplexGrid fft2(const RealGrid &g);
ComplexGrid fft2(const ComplexGrid &g);
/// Real part of the normalized inverse transform.
RealGrid ifft2(const ComplexGrid &spectrum);
ComplexGrid ifft2_complex(const ComplexGrid &spectrum);

Image load_image(const std::filesystem::path &path);
void save_image(const std::filesystem::path &path, const Image &img);

} // namespace occtrack
