#pragma once

// Independent oracles and fixtures shared by the unit and acceptance tests.

#include <occtrack/imaging.hpp>
#include <occtrack/response.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace occtest {

using occtrack::Complex;
using occtrack::ComplexGrid;
using occtrack::Image;
using occtrack::RealGrid;

inline RealGrid random_grid(int rows, int cols, std::uint32_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    RealGrid g(rows, cols);
    for (double &v : g.values()) {
        v = dist(rng);
    }
    return g;
}

inline Image random_image(int w, int h, int channels, std::uint32_t seed, int lo = 0, int hi = 255) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> dist(lo, hi);
    Image img(w, h, channels);
    for (auto &v : img.data()) {
        v = static_cast<std::uint8_t>(dist(rng));
    }
    return img;
}

/// Direct O(N^2) DFT, unnormalized.
inline ComplexGrid naive_dft(const RealGrid &g) {
    const int R = g.rows(), C = g.cols();
    ComplexGrid out(R, C);
    for (int u = 0; u < R; ++u) {
        for (int v = 0; v < C; ++v) {
            Complex acc{};
            for (int r = 0; r < R; ++r) {
                for (int c = 0; c < C; ++c) {
                    const double ang = -2 * std::numbers::pi * (static_cast<double>(u) * r / R +
                                                                static_cast<double>(v) * c / C);
                    acc += g(r, c) * Complex(std::cos(ang), std::sin(ang));
                }
            }
            out(u, v) = acc;
        }
    }
    return out;
}

inline RealGrid circshift(const RealGrid &g, int dr, int dc) {
    const int R = g.rows(), C = g.cols();
    RealGrid out(R, C);
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            out(((r + dr) % R + R) % R, ((c + dc) % C + C) % C) = g(r, c);
        }
    }
    return out;
}

/// Row-major first argmax.
inline std::pair<int, int> argmax(const RealGrid &g) {
    int br = 0, bc = 0;
    for (int r = 0; r < g.rows(); ++r) {
        for (int c = 0; c < g.cols(); ++c) {
            if (g(r, c) > g(br, bc)) {
                br = r;
                bc = c;
            }
        }
    }
    return {br, bc};
}

/// Generalized quality by exhaustive scan, written from the definition:
/// q = min over cells x outside the (2e+1)^2 block around x* of
///     (r* - r(x))^alpha / (1 - exp(-beta * ((dx/(C-1))^2 + (dy/(R-1))^2))).
inline double brute_q(const RealGrid &normalized, double alpha, double beta, int exclusion = 1) {
    const auto [pr, pc] = argmax(normalized);
    const double peak = normalized(pr, pc);
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < normalized.rows(); ++r) {
        for (int c = 0; c < normalized.cols(); ++c) {
            if (std::abs(r - pr) <= exclusion && std::abs(c - pc) <= exclusion) {
                continue;
            }
            const double dy = static_cast<double>(r - pr) / (normalized.rows() - 1);
            const double dx = static_cast<double>(c - pc) / (normalized.cols() - 1);
            const double val = std::pow(peak - normalized(r, c), alpha) / (1 - std::exp(-beta * (dx * dx + dy * dy)));
            if (val < best) {
                best = val;
            }
        }
    }
    return best;
}

/// The alpha = 1 baseline prediction-quality measure, coded separately:
/// min over non-neighbour cells of (r* - r(x)) / (1 - exp(-beta * d^2)).
inline double baseline_quality(const RealGrid &normalized, double beta) {
    std::size_t best_i = 0;
    for (std::size_t i = 1; i < normalized.size(); ++i) {
        if (normalized[i] > normalized[best_i]) {
            best_i = i;
        }
    }
    const long R = normalized.rows(), C = normalized.cols();
    const long pr = static_cast<long>(best_i) / C, pc = static_cast<long>(best_i) % C;
    double q = std::numeric_limits<double>::max();
    for (long i = 0; i < R * C; ++i) {
        const long r = i / C, c = i % C;
        if (std::max(std::labs(r - pr), std::labs(c - pc)) < 2) {
            continue;
        }
        const double y = (double)(r - pr) / (double)(R - 1), x = (double)(c - pc) / (double)(C - 1);
        q = std::min(q, (normalized[best_i] - normalized[i]) / -std::expm1(-beta * (x * x + y * y)));
    }
    return q;
}

/// Map normalized so max |entry| = 1, with a positive peak.
inline RealGrid random_normalized_map(int rows, int cols, std::uint32_t seed) {
    RealGrid g = random_grid(rows, cols, seed, -1.0, 1.0);
    double m = 0;
    for (double v : g.values()) {
        m = std::max(m, std::abs(v));
    }
    const auto [pr, pc] = argmax(g);
    if (g(pr, pc) < m) {
        g(pr, pc) = m;
    }
    for (double &v : g.values()) {
        v /= m;
    }
    return g;
}

inline occtrack::ResponseMap normalized_map(RealGrid g) {
    occtrack::ResponseMap r = occtrack::ResponseMap::from_grid(std::move(g));
    r.normalized = true;
    return r;
}

/// Gaussian bump of height `h` centered at (r0, c0).
inline void add_bump(RealGrid &g, double r0, double c0, double sigma, double h) {
    for (int r = 0; r < g.rows(); ++r) {
        for (int c = 0; c < g.cols(); ++c) {
            const double d2 = (r - r0) * (r - r0) + (c - c0) * (c - c0);
            g(r, c) += h * std::exp(-d2 / (2 * sigma * sigma));
        }
    }
}

/// Closed-form ridge solution written from the objective
/// |u^ conj(f^) - g^|^2 + (lambda / 2D) |f^|^2 per frequency.
inline ComplexGrid ridge_oracle(const RealGrid &u, const RealGrid &g, double lambda) {
    const ComplexGrid uh = naive_dft(u);
    const ComplexGrid gh = naive_dft(g);
    const double D = static_cast<double>(u.size());
    ComplexGrid out(u.rows(), u.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = uh[i] * std::conj(gh[i]) / (std::norm(uh[i]) + lambda / (2 * D));
    }
    return out;
}

inline double max_rel_error(const ComplexGrid &a, const ComplexGrid &b) {
    double diff = 0, scale = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::abs(b[i]));
    }
    return diff / scale;
}

} // namespace occtest
