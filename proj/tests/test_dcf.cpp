#include "support.hpp"

#include <occtrack/dcf.hpp>

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace occtrack;
using namespace occtest;

namespace {

FeatureStack random_stack(int rows, int cols, int channels, std::uint32_t seed) {
    std::vector<RealGrid> ch;
    for (int d = 0; d < channels; ++d) {
        ch.push_back(random_grid(rows, cols, seed * 31 + d));
    }
    return FeatureStack(std::move(ch), 4);
}

Image two_color_patch(int size, int red_lo, int red_hi) {
    Image img(size, size, 3);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const bool red = x >= red_lo && x < red_hi && y >= red_lo && y < red_hi;
            img.at(x, y, 0) = red ? 220 : 30;
            img.at(x, y, 1) = red ? 20 : 180;
            img.at(x, y, 2) = red ? 25 : 40;
        }
    }
    return img;
}

} // namespace

TEST_CASE("spatial mask") {
    SUBCASE("red target on green background covers the red cells") {
        const Image patch = two_color_patch(96, 32, 64);
        const BBox box{48, 48, 40, 40};
        const RealGrid m = compute_spatial_mask(patch, box, 4);
        // Oracle: a cell is foreground iff every pixel in it is red.
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) {
                bool all_red = true;
                for (int y = 4 * r; y < 4 * r + 4; ++y) {
                    for (int x = 4 * c; x < 4 * c + 4; ++x) {
                        all_red = all_red && patch.at(x, y, 0) == 220;
                    }
                }
                CHECK(m(r, c) == (all_red ? 1.0 : 0.0));
            }
        }
    }
    SUBCASE("indistinguishable colors fall back to the box") {
        const Image patch(64, 64, 3, 128);
        const BBox box{32, 32, 24, 20};
        CHECK(compute_spatial_mask(patch, box, 4) == box_mask(16, 16, box, 4));
    }
    SUBCASE("never empty, zero on the border") {
        for (std::uint32_t seed = 0; seed < 8; ++seed) {
            const Image patch = random_image(80, 64, 3, seed);
            const RealGrid m = compute_spatial_mask(patch, {40, 32, 30, 24}, 4);
            CHECK(std::accumulate(m.values().begin(), m.values().end(), 0.0) >= 1.0);
            for (int r = 0; r < m.rows(); ++r) {
                CHECK(m(r, 0) == 0.0);
                CHECK(m(r, m.cols() - 1) == 0.0);
            }
            for (int c = 0; c < m.cols(); ++c) {
                CHECK(m(0, c) == 0.0);
                CHECK(m(m.rows() - 1, c) == 0.0);
            }
        }
    }
}

TEST_CASE("ADMM with a full mask converges to the ridge solution") {
    const RealGrid u = random_grid(16, 16, 1);
    const RealGrid g = gaussian_label(16, 16, 1.5);
    AdmmParams p;
    p.iterations = 20;
    const FilterModel f = learn_filter(FeatureStack({u}, 4), RealGrid(16, 16, 1.0), g, p);
    CHECK(max_rel_error(f.spectra()[0], ridge_oracle(u, g, p.lambda_reg)) < 1e-3);
    CHECK(f.channel_weights() == std::vector<double>{1.0});
}

TEST_CASE("learned filter reproduces a response built from a known filter") {
    const int R = 24, C = 20;
    const FeatureStack u = random_stack(R, C, 1, 3);
    // Known spatial filter with small support.
    RealGrid h(R, C, 0.0);
    h(0, 0) = 1.0;
    h(1, 0) = 0.5;
    h(0, 2) = -0.25;
    const ComplexGrid uh = fft2(u[0]);
    const ComplexGrid hh = fft2(h);
    ComplexGrid gh(R, C);
    for (std::size_t i = 0; i < gh.size(); ++i) {
        gh[i] = uh[i] * std::conj(hh[i]);
    }
    const RealGrid g = ifft2(gh);
    AdmmParams p;
    p.iterations = 20;
    const FilterModel f = learn_filter(u, RealGrid(R, C, 1.0), g, p);
    const ResponseMap r = compute_response(f, u);
    CHECK(argmax(r.grid) == argmax(g));
    double err = 0, scale = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        err = std::max(err, std::abs(r.grid[i] - g[i]));
        scale = std::max(scale, std::abs(g[i]));
    }
    CHECK(err / scale < 1e-2);
}

TEST_CASE("response of a filter on its own training features peaks at the label center") {
    for (std::uint32_t seed = 0; seed < 5; ++seed) {
        const FeatureStack u = random_stack(30, 26, 4, seed);
        const RealGrid mask = box_mask(30, 26, {52, 60, 60, 70}, 4);
        const FilterModel f = learn_filter(u, mask, gaussian_label(30, 26, 1.5), AdmmParams{});
        const ResponseMap r = compute_response(f, u);
        CHECK(std::abs(r.peak_row - 15) <= 1);
        CHECK(std::abs(r.peak_col - 13) <= 1);
    }
}

TEST_CASE("circular shift of the features shifts the response peak") {
    const FeatureStack u = random_stack(32, 32, 3, 9);
    const FilterModel f = learn_filter(u, box_mask(32, 32, {64, 64, 60, 60}, 4), gaussian_label(32, 32, 1.5), {});
    const ResponseMap base = compute_response(f, u);
    for (auto [dr, dc] : {std::pair{3, 5}, {-4, 2}, {7, -9}}) {
        std::vector<RealGrid> shifted;
        for (const auto &ch : u.channels()) {
            shifted.push_back(circshift(ch, dr, dc));
        }
        const ResponseMap r = compute_response(f, FeatureStack(shifted, 4));
        CHECK(r.peak_row == ((base.peak_row + dr) % 32 + 32) % 32);
        CHECK(r.peak_col == ((base.peak_col + dc) % 32 + 32) % 32);
    }
}

TEST_CASE("zero features give a zero response") {
    const FeatureStack u = random_stack(16, 16, 2, 4);
    const FilterModel f = learn_filter(u, box_mask(16, 16, {32, 32, 30, 30}, 4), gaussian_label(16, 16, 1.0), {});
    const ResponseMap r = compute_response(f, FeatureStack({RealGrid(16, 16), RealGrid(16, 16)}, 4));
    for (double v : r.grid.values()) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("response rejects mismatched inputs") {
    const FeatureStack u = random_stack(16, 16, 2, 4);
    const FilterModel f = learn_filter(u, box_mask(16, 16, {32, 32, 30, 30}, 4), gaussian_label(16, 16, 1.0), {});
    try {
        (void)compute_response(f, random_stack(16, 16, 3, 1));
        FAIL("expected ShapeMismatch");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
    CHECK_THROWS_AS((void)compute_response(f, random_stack(12, 16, 2, 1)), Error);
    CHECK_THROWS_AS((void)learn_filter(u, RealGrid(8, 8, 1.0), gaussian_label(16, 16, 1.0), {}), Error);
}

TEST_CASE("channel weights") {
    const int R = 8, C = 8;
    // With a delta feature the per-channel response is the flipped spatial filter,
    // so its maximum is the filter's maximum.
    RealGrid delta(R, C, 0.0);
    delta(0, 0) = 1.0;
    auto filter_with_peak = [&](double peak, int at) {
        RealGrid h(R, C, 0.0);
        h[static_cast<std::size_t>(at)] = peak;
        h[static_cast<std::size_t>(at + 9)] = -0.05;
        return fft2(h);
    };
    SUBCASE("maxima 0.3 and 0.1 give 0.75 and 0.25") {
        const FilterModel f({filter_with_peak(0.3, 10), filter_with_peak(0.1, 20)}, RealGrid(R, C, 1.0), {0.5, 0.5}, 4);
        const auto w = channel_weights(FeatureStack({delta, delta}, 4), f);
        CHECK(w[0] == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(w[1] == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("one informative channel takes all the weight") {
        const FilterModel f({filter_with_peak(0.4, 3), filter_with_peak(0.4, 3), filter_with_peak(0.4, 3)},
                            RealGrid(R, C, 1.0), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 4);
        const auto w = channel_weights(FeatureStack({RealGrid(R, C), delta, RealGrid(R, C)}, 4), f);
        CHECK(w[0] == 0.0);
        CHECK(w[1] == doctest::Approx(1.0));
        CHECK(w[2] == 0.0);
    }
    SUBCASE("identical channels share the weight") {
        const FeatureStack u = random_stack(12, 12, 1, 8);
        const FeatureStack u4({u[0], u[0], u[0], u[0]}, 4);
        const FilterModel f = learn_filter(u4, box_mask(12, 12, {24, 24, 20, 20}, 4), gaussian_label(12, 12, 1.0), {});
        for (double w : channel_weights(u4, f)) {
            CHECK(w == doctest::Approx(0.25).epsilon(1e-9));
        }
    }
    SUBCASE("all-zero responses give uniform weights") {
        const FilterModel f({filter_with_peak(0.4, 3), filter_with_peak(0.4, 3)}, RealGrid(R, C, 1.0), {0.5, 0.5}, 4);
        const auto w = channel_weights(FeatureStack({RealGrid(R, C), RealGrid(R, C)}, 4), f);
        CHECK(w == std::vector<double>{0.5, 0.5});
    }
}

TEST_CASE("filter model invariants are enforced") {
    const ComplexGrid s(4, 4);
    CHECK_THROWS_AS(FilterModel({s}, RealGrid(4, 4, 1.0), {0.5}, 4), Error);
    CHECK_THROWS_AS(FilterModel({s}, RealGrid(4, 4, 0.5), {1.0}, 4), Error);
    CHECK_THROWS_AS(FilterModel({s, s}, RealGrid(4, 4, 1.0), {1.0}, 4), Error);
    CHECK_THROWS_AS(FilterModel({ComplexGrid(4, 5)}, RealGrid(4, 4, 1.0), {1.0}, 4), Error);
    AdmmParams bad;
    bad.iterations = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("filter blob round trip" * doctest::test_suite("io")) {
    const FeatureStack u = random_stack(12, 10, 3, 2);
    const FilterModel f = learn_filter(u, box_mask(12, 10, {20, 24, 24, 30}, 4), gaussian_label(12, 10, 1.0), {});
    const auto blob = serialize(f);
    // 24-byte header, ceil(120 / 8) mask bytes, 3 * 120 complex doubles, 3 weights.
    CHECK(blob.size() == 24u + 15 + 3 * 120 * 16 + 3 * 8);
    CHECK(deserialize_filter(blob) == f);

    auto bad = blob;
    bad[0] = 'X';
    CHECK_THROWS_AS((void)deserialize_filter(bad), Error);
    CHECK_THROWS_AS((void)deserialize_filter(std::span(blob).first(blob.size() - 3)), Error);
    auto longer = blob;
    longer.push_back(0);
    CHECK_THROWS_AS((void)deserialize_filter(longer), Error);

    const auto path = std::filesystem::temp_directory_path() / "occtrack_filter_test.bin";
    save_filter(path, f);
    CHECK(load_filter(path) == f);
    std::filesystem::remove(path);
}

TEST_SUITE("properties") {
    TEST_CASE("dcf: augmented Lagrangian never increases within an iteration") {
        for (std::uint32_t seed = 0; seed < 12; ++seed) {
            const int R = 12 + static_cast<int>(seed % 4) * 6, C = 10 + static_cast<int>(seed % 3) * 8;
            const FeatureStack u = random_stack(R, C, 1 + static_cast<int>(seed % 3), seed);
            const RealGrid mask = box_mask(R, C, {C * 2.0, R * 2.0, C * 2.0, R * 2.0}, 4);
            AdmmParams p;
            p.iterations = 8;
            AdmmTrace trace;
            (void)learn_filter(u, mask, gaussian_label(R, C, 1.2), p, &trace);
            REQUIRE(trace.steps.size() == 8);
            for (const auto &s : trace.steps) {
                const double tol = 1e-8 * std::max(1.0, std::abs(s.objective_start));
                CHECK(s.objective_after_fc <= s.objective_start + tol);
                CHECK(s.objective_after_f <= s.objective_after_fc + tol);
            }
        }
    }

    TEST_CASE("dcf: constraint residual decreases over the last half of the iterations") {
        for (std::uint32_t seed = 0; seed < 12; ++seed) {
            const FeatureStack u = random_stack(20, 20, 1, 100 + seed);
            const RealGrid mask = box_mask(20, 20, {40, 40, 36, 36}, 4);
            AdmmParams p;
            p.iterations = 12;
            AdmmTrace trace;
            (void)learn_filter(u, mask, gaussian_label(20, 20, 1.5), p, &trace);
            for (std::size_t i = 7; i < trace.steps.size(); ++i) {
                CHECK(trace.steps[i].residual <= trace.steps[i - 1].residual);
            }
        }
    }

    TEST_CASE("dcf: response is linear in the features") {
        for (std::uint32_t seed = 0; seed < 10; ++seed) {
            const FeatureStack u = random_stack(16, 18, 2, seed);
            const FilterModel f =
                learn_filter(u, box_mask(16, 18, {36, 32, 30, 30}, 4), gaussian_label(16, 18, 1.2), {});
            const double a = 0.25 + seed * 0.7;
            std::vector<RealGrid> scaled = u.channels();
            for (auto &ch : scaled) {
                for (double &v : ch.values()) {
                    v *= a;
                }
            }
            const ResponseMap r1 = compute_response(f, u);
            const ResponseMap r2 = compute_response(f, FeatureStack(scaled, 4));
            for (std::size_t i = 0; i < r1.grid.size(); ++i) {
                CHECK(r2.grid[i] == doctest::Approx(a * r1.grid[i]).epsilon(1e-9).scale(1.0));
            }
        }
    }

    TEST_CASE("dcf: learned filters vanish outside the mask") {
        for (std::uint32_t seed = 0; seed < 10; ++seed) {
            const FeatureStack u = random_stack(20, 16, 3, seed);
            const RealGrid mask = box_mask(20, 16, {30 + seed, 40.0, 24, 30}, 4);
            const FilterModel f = learn_filter(u, mask, gaussian_label(20, 16, 1.3), {});
            for (std::size_t d = 0; d < f.channels(); ++d) {
                const RealGrid h = spatial_filter(f, d);
                double inside = 0, outside = 0;
                for (std::size_t i = 0; i < h.size(); ++i) {
                    (mask[i] > 0.5 ? inside : outside) = std::max(mask[i] > 0.5 ? inside : outside, std::abs(h[i]));
                }
                // Zero up to FFT round-off.
                CHECK(outside <= 1e-12 * inside);
            }
        }
    }
}
