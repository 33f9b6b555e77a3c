#include <occtrack/dcf.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace occtrack {

void AdmmParams::validate() const {
    if (!(lambda_reg > 0) || !(mu0 > 0) || !(mu_scale >= 1) || !(mu_max > 0) || iterations < 1) {
        throw Error(ErrorCode::InvalidArgument, "ADMM parameters out of range");
    }
}

FilterModel::FilterModel(std::vector<ComplexGrid> spectra, RealGrid mask, std::vector<double> channel_weights,
                         int cell_size)
    : spectra_(std::move(spectra)), mask_(std::move(mask)), weights_(std::move(channel_weights)),
      cell_size_(cell_size) {
    if (spectra_.empty() || spectra_.size() != weights_.size()) {
        throw Error(ErrorCode::ShapeMismatch, "filter needs one weight per spectrum");
    }
    for (const auto &s : spectra_) {
        if (!s.same_shape(mask_)) {
            throw Error(ErrorCode::ShapeMismatch, "filter spectrum shape differs from mask shape");
        }
    }
    for (double m : mask_.values()) {
        if (m != 0.0 && m != 1.0) {
            throw Error(ErrorCode::InvalidArgument, "filter mask must be binary");
        }
    }
    double sum = 0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0) {
            throw Error(ErrorCode::InvalidArgument, "channel weights must be finite and nonnegative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "channel weights must sum to 1");
    }
}

FilterModel FilterModel::with_weights(std::vector<double> weights) const {
    return FilterModel(spectra_, mask_, std::move(weights), cell_size_);
}

// ---------------------------------------------------------------------------
// Spatial reliability mask

RealGrid box_mask(int rows, int cols, const BBox &box, int cell_size) {
    RealGrid m(rows, cols, 0.0);
    for (int r = 1; r < rows - 1; ++r) {
        const double y = (r + 0.5) * cell_size;
        if (y < box.top() || y > box.top() + box.h) {
            continue;
        }
        for (int c = 1; c < cols - 1; ++c) {
            const double x = (c + 0.5) * cell_size;
            if (x >= box.left() && x <= box.left() + box.w) {
                m(r, c) = 1.0;
            }
        }
    }
    // A box smaller than one cell still owns its center cell.
    const int rc = std::clamp(static_cast<int>(box.cy / cell_size), std::min(1, rows - 1), std::max(rows - 2, 0));
    const int cc = std::clamp(static_cast<int>(box.cx / cell_size), std::min(1, cols - 1), std::max(cols - 2, 0));
    m(rc, cc) = 1.0;
    return m;
}

namespace {

int color_bin(const Image &img, int x, int y, int bins) {
    const int shift = 256 / bins;
    if (img.channels() == 1) {
        return img.at(x, y) / shift;
    }
    return (img.at(x, y, 0) / shift) + bins * ((img.at(x, y, 1) / shift) + bins * (img.at(x, y, 2) / shift));
}

RealGrid morph(const RealGrid &m, bool dilate) {
    RealGrid out(m.rows(), m.cols(), 0.0);
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            bool any = false, all = true;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = std::clamp(r + dr, 0, m.rows() - 1);
                    const int cc = std::clamp(c + dc, 0, m.cols() - 1);
                    const bool v = m(rr, cc) > 0.5;
                    any = any || v;
                    all = all && v;
                }
            }
            out(r, c) = (dilate ? any : all) ? 1.0 : 0.0;
        }
    }
    return out;
}

RealGrid component_containing(const RealGrid &m, int r0, int c0) {
    RealGrid out(m.rows(), m.cols(), 0.0);
    if (m(r0, c0) < 0.5) {
        return out;
    }
    std::vector<std::pair<int, int>> stack{{r0, c0}};
    out(r0, c0) = 1.0;
    while (!stack.empty()) {
        auto [r, c] = stack.back();
        stack.pop_back();
        constexpr int dr[] = {-1, 1, 0, 0};
        constexpr int dc[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            const int rr = r + dr[k], cc = c + dc[k];
            if (rr < 0 || cc < 0 || rr >= m.rows() || cc >= m.cols()) {
                continue;
            }
            if (m(rr, cc) > 0.5 && out(rr, cc) < 0.5) {
                out(rr, cc) = 1.0;
                stack.emplace_back(rr, cc);
            }
        }
    }
    return out;
}

} // namespace

RealGrid compute_spatial_mask(const Image &patch, const BBox &box, int cell_size, const MaskParams &params) {
    const int rows = patch.height() / cell_size;
    const int cols = patch.width() / cell_size;
    if (rows < 1 || cols < 1) {
        throw Error(ErrorCode::PatchTooSmall, "patch smaller than one cell");
    }
    const RealGrid fallback = box_mask(rows, cols, box, cell_size);
    const int bins = params.hist_bins;
    const int nbins = patch.channels() == 1 ? bins : bins * bins * bins;

    std::vector<double> fg(nbins, 0.0), bg(nbins, 0.0);
    double nfg = 0, nbg = 0;
    for (int y = 0; y < patch.height(); ++y) {
        const bool in_y = y + 0.5 >= box.top() && y + 0.5 <= box.top() + box.h;
        for (int x = 0; x < patch.width(); ++x) {
            const bool inside = in_y && x + 0.5 >= box.left() && x + 0.5 <= box.left() + box.w;
            const int b = color_bin(patch, x, y, bins);
            if (inside) {
                fg[b] += 1;
                nfg += 1;
            } else {
                bg[b] += 1;
                nbg += 1;
            }
        }
    }
    if (nfg == 0 || nbg == 0) {
        return fallback;
    }
    // Equal priors: P(fg | c) = p_f(c) / (p_f(c) + p_b(c)).
    std::vector<double> posterior(nbins, 0.5);
    for (int b = 0; b < nbins; ++b) {
        const double pf = fg[b] / nfg, pb = bg[b] / nbg;
        if (pf + pb > 0) {
            posterior[b] = pf / (pf + pb);
        }
    }

    RealGrid cell_fg(rows, cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (fallback(r, c) < 0.5) {
                continue;
            }
            double acc = 0;
            for (int y = r * cell_size; y < (r + 1) * cell_size; ++y) {
                for (int x = c * cell_size; x < (c + 1) * cell_size; ++x) {
                    acc += posterior[color_bin(patch, x, y, bins)];
                }
            }
            cell_fg(r, c) = acc / (cell_size * cell_size) > 0.5 ? 1.0 : 0.0;
        }
    }
    // Closing fills texture holes, then restrict back to the box support.
    RealGrid closed = morph(morph(cell_fg, true), false);
    for (std::size_t i = 0; i < closed.size(); ++i) {
        closed[i] = closed[i] * fallback[i];
    }
    const int rc = std::clamp(static_cast<int>(box.cy / cell_size), 0, rows - 1);
    const int cc = std::clamp(static_cast<int>(box.cx / cell_size), 0, cols - 1);
    RealGrid mask = component_containing(closed, rc, cc);

    const double area = std::accumulate(mask.values().begin(), mask.values().end(), 0.0);
    const double box_area = std::accumulate(fallback.values().begin(), fallback.values().end(), 0.0);
    if (area < 1 || area < params.min_area_fraction * box_area) {
        return fallback;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// ADMM

std::vector<ComplexGrid> feature_spectra(const FeatureStack &u) {
    std::vector<ComplexGrid> out;
    out.reserve(u.size());
    for (const auto &ch : u.channels()) {
        out.push_back(fft2(ch));
    }
    return out;
}

namespace {

double augmented_lagrangian(const ComplexGrid &u_hat, const ComplexGrid &g_hat, const ComplexGrid &fc,
                            const RealGrid &fm_spatial, const ComplexGrid &fm_hat, const ComplexGrid &lagr, double mu,
                            double lambda) {
    double data = 0, coupling = 0, penalty = 0, reg = 0;
    for (std::size_t i = 0; i < fc.size(); ++i) {
        data += std::norm(u_hat[i] * std::conj(fc[i]) - g_hat[i]);
        const Complex diff = fc[i] - fm_hat[i];
        coupling += 2.0 * (std::conj(lagr[i]) * diff).real();
        penalty += std::norm(diff);
    }
    for (double v : fm_spatial.values()) {
        reg += v * v;
    }
    return data + 0.5 * lambda * reg + coupling + mu * penalty;
}

} // namespace

FilterModel learn_filter_spectral(const std::vector<ComplexGrid> &u_hat, const RealGrid &mask,
                                  const ComplexGrid &label_hat, int cell_size, const AdmmParams &p,
                                  AdmmTrace *trace) {
    p.validate();
    if (u_hat.empty()) {
        throw Error(ErrorCode::InvalidArgument, "no feature channels");
    }
    for (const auto &uh : u_hat) {
        if (!uh.same_shape(mask) || !uh.same_shape(label_hat)) {
            throw Error(ErrorCode::ShapeMismatch, "features, mask and label must share one shape");
        }
    }
    const int rows = mask.rows();
    const int cols = mask.cols();
    const std::size_t n = mask.size();
    const double D = static_cast<double>(n);

    if (trace) {
        trace->steps.assign(static_cast<std::size_t>(p.iterations), {});
    }

    std::vector<ComplexGrid> spectra;
    spectra.reserve(u_hat.size());
    ComplexGrid sxy(rows, cols), fc(rows, cols), lagr(rows, cols), tmp(rows, cols);
    std::vector<double> sxx(n);

    for (const auto &uh : u_hat) {
        for (std::size_t i = 0; i < n; ++i) {
            sxy[i] = uh[i] * std::conj(label_hat[i]);
            sxx[i] = std::norm(uh[i]);
        }
        // Initial guess: masked ridge solution.
        for (std::size_t i = 0; i < n; ++i) {
            tmp[i] = sxy[i] / (sxx[i] + p.lambda_reg);
        }
        RealGrid f = ifft2(tmp);
        for (std::size_t i = 0; i < n; ++i) {
            f[i] *= mask[i];
        }
        ComplexGrid fm = fft2(f);
        std::fill(lagr.values().begin(), lagr.values().end(), Complex{});

        double mu = p.mu0;
        for (int it = 0; it < p.iterations; ++it) {
            AdmmTrace::Step *step = trace ? &trace->steps[static_cast<std::size_t>(it)] : nullptr;
            if (step) {
                // f^_c is not defined before the first update; start from f^_m.
                const ComplexGrid &fc_prev = it == 0 ? fm : fc;
                step->objective_start += augmented_lagrangian(uh, label_hat, fc_prev, f, fm, lagr, mu, p.lambda_reg);
            }
            // Fourier-domain closed form.
            for (std::size_t i = 0; i < n; ++i) {
                fc[i] = (sxy[i] + mu * fm[i] - lagr[i]) / (sxx[i] + mu);
            }
            if (step) {
                step->objective_after_fc += augmented_lagrangian(uh, label_hat, fc, f, fm, lagr, mu, p.lambda_reg);
            }
            // Masked spatial-domain closed form.
            for (std::size_t i = 0; i < n; ++i) {
                tmp[i] = lagr[i] + mu * fc[i];
            }
            f = ifft2(tmp);
            const double denom = p.lambda_reg / (2.0 * D) + mu;
            for (std::size_t i = 0; i < n; ++i) {
                f[i] = mask[i] * f[i] / denom;
                if (!std::isfinite(f[i])) {
                    throw Error(ErrorCode::NumericalBlowup, "non-finite filter at ADMM iteration " + std::to_string(it));
                }
            }
            fm = fft2(f);
            double diff2 = 0, norm2 = 0;
            for (std::size_t i = 0; i < n; ++i) {
                diff2 += std::norm(fc[i] - fm[i]);
                norm2 += std::norm(fm[i]);
            }
            if (step) {
                step->objective_after_f += augmented_lagrangian(uh, label_hat, fc, f, fm, lagr, mu, p.lambda_reg);
                step->residual += norm2 > 0 ? std::sqrt(diff2 / norm2) : 0.0;
            }
            // Scaled multiplier ascent.
            for (std::size_t i = 0; i < n; ++i) {
                lagr[i] += mu * (fc[i] - fm[i]);
            }
            mu = std::min(p.mu_scale * mu, p.mu_max);
        }
        spectra.push_back(std::move(fm));
    }

    std::vector<double> uniform(spectra.size(), 1.0 / static_cast<double>(spectra.size()));
    FilterModel unweighted(std::move(spectra), mask, std::move(uniform), cell_size);
    return unweighted.with_weights(channel_weights_spectral(u_hat, unweighted));
}

FilterModel learn_filter(const FeatureStack &u, const RealGrid &mask, const RealGrid &label, const AdmmParams &p,
                         AdmmTrace *trace) {
    if (!label.same_shape(mask) || u.rows() != mask.rows() || u.cols() != mask.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "features, mask and label must share one shape");
    }
    return learn_filter_spectral(feature_spectra(u), mask, fft2(label), u.cell_size(), p, trace);
}

std::vector<double> channel_weights_spectral(const std::vector<ComplexGrid> &u_hat, const FilterModel &f) {
    if (u_hat.size() != f.channels()) {
        throw Error(ErrorCode::ShapeMismatch, "channel count differs between features and filter");
    }
    std::vector<double> w(u_hat.size(), 0.0);
    ComplexGrid prod(f.rows(), f.cols());
    for (std::size_t d = 0; d < u_hat.size(); ++d) {
        if (!u_hat[d].same_shape(prod)) {
            throw Error(ErrorCode::ShapeMismatch, "feature shape differs from filter shape");
        }
        const auto &fs = f.spectra()[d];
        for (std::size_t i = 0; i < prod.size(); ++i) {
            prod[i] = u_hat[d][i] * std::conj(fs[i]);
        }
        const RealGrid r = ifft2(prod);
        w[d] = std::max(0.0, *std::max_element(r.values().begin(), r.values().end()));
    }
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(sum > 0) || !std::isfinite(sum)) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
        return w;
    }
    for (double &v : w) {
        v /= sum;
    }
    // Exact renormalization keeps the sum-to-one invariant tight.
    const double resum = std::accumulate(w.begin(), w.end(), 0.0);
    w.back() += 1.0 - resum;
    w.back() = std::max(0.0, w.back());
    return w;
}

std::vector<double> channel_weights(const FeatureStack &u, const FilterModel &f) {
    return channel_weights_spectral(feature_spectra(u), f);
}

ResponseMap compute_response_spectral(const FilterModel &f, const std::vector<ComplexGrid> &u_hat) {
    if (u_hat.size() != f.channels()) {
        throw Error(ErrorCode::ShapeMismatch, "channel count differs between features and filter");
    }
    ComplexGrid acc(f.rows(), f.cols());
    for (std::size_t d = 0; d < u_hat.size(); ++d) {
        if (!u_hat[d].same_shape(acc)) {
            throw Error(ErrorCode::ShapeMismatch, "feature shape differs from filter shape");
        }
        const double w = f.channel_weights()[d];
        if (w == 0.0) {
            continue;
        }
        const auto &fs = f.spectra()[d];
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc[i] += w * u_hat[d][i] * std::conj(fs[i]);
        }
    }
    return ResponseMap::from_grid(ifft2(acc));
}

ResponseMap compute_response(const FilterModel &f, const FeatureStack &u) {
    if (u.rows() != f.rows() || u.cols() != f.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "feature shape differs from filter shape");
    }
    return compute_response_spectral(f, feature_spectra(u));
}

RealGrid spatial_filter(const FilterModel &f, std::size_t channel) {
    return ifft2(f.spectra().at(channel));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[4] = {'O', 'C', 'T', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::vector<std::uint8_t> &out, T value) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    template <typename T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
        need(sizeof(T));
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bits |= static_cast<U>(data_[pos_ + i]) << (8 * i);
        }
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) {
            throw Error(ErrorCode::ParseError, "filter blob truncated at byte " + std::to_string(pos_));
        }
    }
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> serialize(const FilterModel &f) {
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put(out, kVersion);
    put(out, static_cast<std::int32_t>(f.rows()));
    put(out, static_cast<std::int32_t>(f.cols()));
    put(out, static_cast<std::int32_t>(f.channels()));
    put(out, static_cast<std::int32_t>(f.cell_size()));
    const std::size_t n = f.mask().size();
    std::vector<std::uint8_t> bits((n + 7) / 8, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (f.mask()[i] > 0.5) {
            bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
        }
    }
    out.insert(out.end(), bits.begin(), bits.end());
    for (const auto &s : f.spectra()) {
        for (const Complex &c : s.values()) {
            put(out, c.real());
            put(out, c.imag());
        }
    }
    for (double w : f.channel_weights()) {
        put(out, w);
    }
    return out;
}

FilterModel deserialize_filter(std::span<const std::uint8_t> blob) {
    Reader in(blob);
    auto magic = in.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic)) {
        throw Error(ErrorCode::ParseError, "not a filter blob (bad magic)");
    }
    const auto version = in.get<std::uint32_t>();
    if (version != kVersion) {
        throw Error(ErrorCode::ParseError, "unsupported filter blob version " + std::to_string(version));
    }
    const int rows = in.get<std::int32_t>();
    const int cols = in.get<std::int32_t>();
    const int channels = in.get<std::int32_t>();
    const int cell = in.get<std::int32_t>();
    if (rows < 1 || cols < 1 || channels < 1 || cell < 1) {
        throw Error(ErrorCode::ParseError, "filter blob has an invalid header");
    }
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    auto bits = in.bytes((n + 7) / 8);
    RealGrid mask(rows, cols);
    for (std::size_t i = 0; i < n; ++i) {
        mask[i] = (bits[i / 8] >> (i % 8)) & 1u ? 1.0 : 0.0;
    }
    std::vector<ComplexGrid> spectra;
    for (int d = 0; d < channels; ++d) {
        ComplexGrid s(rows, cols);
        for (std::size_t i = 0; i < n; ++i) {
            const double re = in.get<double>();
            const double im = in.get<double>();
            s[i] = {re, im};
        }
        spectra.push_back(std::move(s));
    }
    std::vector<double> weights(static_cast<std::size_t>(channels));
    for (double &w : weights) {
        w = in.get<double>();
    }
    if (!in.done()) {
        throw Error(ErrorCode::ParseError, "trailing bytes after filter blob");
    }
    return FilterModel(std::move(spectra), std::move(mask), std::move(weights), cell);
}

void save_filter(const std::filesystem::path &path, const FilterModel &f) {
    const auto blob = serialize(f);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char *>(blob.data()), static_cast<std::streamsize>(blob.size()));
}

FilterModel load_filter(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read " + path.string());
    }
    std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_filter(blob);
}

} // namespace occtrack
