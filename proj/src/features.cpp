#include <occtrack/features.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace occtrack {

FeatureStack::FeatureStack(std::vector<RealGrid> channels, int cell_size, BBox origin_box)
    : channels_(std::move(channels)), cell_size_(cell_size), origin_box_(origin_box) {
    if (channels_.empty()) {
        throw Error(ErrorCode::InvalidArgument, "feature stack needs at least one channel");
    }
    for (const auto &ch : channels_) {
        if (!ch.same_shape(channels_.front())) {
            throw Error(ErrorCode::ShapeMismatch, "feature channels differ in shape");
        }
        for (double v : ch.values()) {
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::NumericalBlowup, "non-finite feature value");
            }
        }
    }
}

FeatureStack extract_hog(const Image &patch, int cell_size, int n_bins) {
    if (cell_size < 1 || n_bins < 1) {
        throw Error(ErrorCode::InvalidArgument, "cell_size and n_bins must be positive");
    }
    if (patch.width() < 2 * cell_size || patch.height() < 2 * cell_size) {
        throw Error(ErrorCode::PatchTooSmall, "patch must span at least 2x2 cells");
    }
    const RealGrid img = to_real(patch);
    const int w = img.cols();
    const int h = img.rows();
    const int nx = w / cell_size;
    const int ny = h / cell_size;

    // Cell histograms, bins interleaved per cell.
    std::vector<double> hist(static_cast<std::size_t>(nx) * ny * n_bins, 0.0);
    const double bin_width = std::numbers::pi / n_bins;
    for (int y = 0; y < ny * cell_size; ++y) {
        const int yu = std::max(y - 1, 0);
        const int yd = std::min(y + 1, h - 1);
        const int cy = y / cell_size;
        for (int x = 0; x < nx * cell_size; ++x) {
            const int xl = std::max(x - 1, 0);
            const int xr = std::min(x + 1, w - 1);
            const double gx = img(y, xr) - img(y, xl);
            const double gy = img(yd, x) - img(yu, x);
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) {
                continue;
            }
            double theta = std::atan2(gy, gx);
            if (theta < 0) {
                theta += std::numbers::pi;
            }
            double pos = theta / bin_width;
            if (pos >= n_bins) {
                pos -= n_bins;
            }
            const int b0 = static_cast<int>(pos);
            const double t = pos - b0;
            const int b1 = (b0 + 1) % n_bins;
            double *cell = &hist[(static_cast<std::size_t>(cy) * nx + x / cell_size) * n_bins];
            cell[b0 % n_bins] += mag * (1.0 - t);
            cell[b1] += mag * t;
        }
    }

    std::vector<double> energy(static_cast<std::size_t>(nx) * ny, 0.0);
    for (std::size_t i = 0; i < energy.size(); ++i) {
        for (int b = 0; b < n_bins; ++b) {
            energy[i] += hist[i * n_bins + b] * hist[i * n_bins + b];
        }
    }
    // Block (top-left cell bx, by) energy over its 2x2 cells.
    const int bw = nx - 1;
    const int bh = ny - 1;
    std::vector<double> block(static_cast<std::size_t>(bw) * bh);
    for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
            block[static_cast<std::size_t>(by) * bw + bx] =
                energy[by * nx + bx] + energy[by * nx + bx + 1] + energy[(by + 1) * nx + bx] +
                energy[(by + 1) * nx + bx + 1];
        }
    }

    constexpr double kEps = 1.0;
    constexpr double kClip = 0.2;
    std::vector<RealGrid> channels(n_bins, RealGrid(ny, nx));
    for (int cy = 0; cy < ny; ++cy) {
        for (int cx = 0; cx < nx; ++cx) {
            const double *cell = &hist[(static_cast<std::size_t>(cy) * nx + cx) * n_bins];
            int nblocks = 0;
            for (int by = std::max(cy - 1, 0); by <= std::min(cy, bh - 1); ++by) {
                for (int bx = std::max(cx - 1, 0); bx <= std::min(cx, bw - 1); ++bx) {
                    const double inv = 1.0 / std::sqrt(block[static_cast<std::size_t>(by) * bw + bx] + kEps);
                    for (int b = 0; b < n_bins; ++b) {
                        channels[b](cy, cx) += std::min(cell[b] * inv, kClip);
                    }
                    ++nblocks;
                }
            }
            for (int b = 0; b < n_bins; ++b) {
                channels[b](cy, cx) /= nblocks;
            }
        }
    }
    return FeatureStack(std::move(channels), cell_size);
}

FeatureStack extract_colornames(const Image &patch, int cell_size, const ColorNameTable &table) {
    if (patch.channels() != 3) {
        throw Error(ErrorCode::NeedsColor, "color-name features need an RGB patch");
    }
    if (cell_size < 1) {
        throw Error(ErrorCode::InvalidArgument, "cell_size must be positive");
    }
    const int nx = patch.width() / cell_size;
    const int ny = patch.height() / cell_size;
    if (nx < 1 || ny < 1) {
        throw Error(ErrorCode::PatchTooSmall, "patch smaller than one cell");
    }
    constexpr int kN = ColorNameTable::kNames;
    std::vector<RealGrid> channels(kN, RealGrid(ny, nx));
    const double inv_area = 1.0 / (cell_size * cell_size);
    for (int cy = 0; cy < ny; ++cy) {
        for (int cx = 0; cx < nx; ++cx) {
            std::array<double, kN> acc{};
            for (int y = cy * cell_size; y < (cy + 1) * cell_size; ++y) {
                for (int x = cx * cell_size; x < (cx + 1) * cell_size; ++x) {
                    const auto p = table.lookup(patch.at(x, y, 0), patch.at(x, y, 1), patch.at(x, y, 2));
                    for (int k = 0; k < kN; ++k) {
                        acc[k] += p[k];
                    }
                }
            }
            for (int k = 0; k < kN; ++k) {
                channels[k](cy, cx) = acc[k] * inv_area;
            }
        }
    }
    return FeatureStack(std::move(channels), cell_size);
}

RealGrid resize_grid(const RealGrid &g, int rows, int cols) {
    if (g.rows() == rows && g.cols() == cols) {
        return g;
    }
    RealGrid out(rows, cols);
    const double sy = static_cast<double>(g.rows()) / rows;
    const double sx = static_cast<double>(g.cols()) / cols;
    for (int r = 0; r < rows; ++r) {
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, g.rows() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, g.rows() - 1);
        const double ty = fy - y0;
        for (int c = 0; c < cols; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, g.cols() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, g.cols() - 1);
            const double tx = fx - x0;
            out(r, c) = (g(y0, x0) * (1 - tx) + g(y0, x1) * tx) * (1 - ty) + (g(y1, x0) * (1 - tx) + g(y1, x1) * tx) * ty;
        }
    }
    return out;
}

FeatureStack assemble(const FeatureStack &hog, const std::optional<FeatureStack> &cn, const RealGrid &window) {
    if (window.rows() != hog.rows() || window.cols() != hog.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "window shape differs from feature shape");
    }
    std::vector<RealGrid> out;
    out.reserve(hog.size() + (cn ? cn->size() : 0));
    auto push_windowed = [&](const RealGrid &ch) {
        RealGrid g = ch.same_shape(window) ? ch : resize_grid(ch, window.rows(), window.cols());
        if (!g.same_shape(window)) {
            throw Error(ErrorCode::ShapeMismatch, "channel could not be aligned to the window");
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] *= window[i];
        }
        out.push_back(std::move(g));
    };
    for (const auto &ch : hog.channels()) {
        push_windowed(ch);
    }
    if (cn) {
        for (const auto &ch : cn->channels()) {
            push_windowed(ch);
        }
    }
    return FeatureStack(std::move(out), hog.cell_size(), hog.origin_box());
}

FeatureStack center_channels(const FeatureStack &u) {
    std::vector<RealGrid> out = u.channels();
    for (auto &ch : out) {
        double mean = 0;
        for (double v : ch.values()) {
            mean += v;
        }
        mean /= static_cast<double>(ch.size());
        for (double &v : ch.values()) {
            v -= mean;
        }
    }
    return FeatureStack(std::move(out), u.cell_size(), u.origin_box());
}

FeatureStack extract_features(const Image &patch, const FeatureConfig &cfg, const RealGrid &window,
                              const ColorNameTable &table) {
    FeatureStack hog = extract_hog(patch, cfg.cell_size, cfg.hog_bins);
    std::optional<FeatureStack> cn;
    if (cfg.use_color_names && patch.channels() == 3) {
        cn = extract_colornames(patch, cfg.cell_size, table);
    }
    if (cfg.center_channels) {
        hog = center_channels(hog);
        if (cn) {
            cn = center_channels(*cn);
        }
    }
    return assemble(hog, cn, window);
}

} // namespace occtrack
