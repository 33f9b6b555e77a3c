#include "support.hpp"

#include <occtrack/quality.hpp>

#include <doctest.h>

#include <cmath>

using namespace occtrack;
using namespace occtest;

namespace {

RealGrid delta_map(int rows, int cols, int r, int c, double background = 0.0) {
    RealGrid g(rows, cols, background);
    g(r, c) = 1.0;
    return g;
}

double q_of(const RealGrid &raw, double alpha = 2, double beta = 8) {
    return q_measure(normalize_response(ResponseMap::from_grid(raw)), alpha, beta);
}

} // namespace

TEST_CASE("normalize_response") {
    const RealGrid g = random_normalized_map(9, 11, 3);
    SUBCASE("idempotent on a normalized map") {
        const ResponseMap n = normalize_response(ResponseMap::from_grid(g));
        CHECK(n.grid == g);
        CHECK(normalize_response(n).grid == n.grid);
        CHECK(n.peak_val == 1.0);
        CHECK(n.normalized);
    }
    SUBCASE("scale invariant") {
        RealGrid s = g;
        for (double &v : s.values()) {
            v *= 5;
        }
        const ResponseMap a = normalize_response(ResponseMap::from_grid(g));
        const ResponseMap b = normalize_response(ResponseMap::from_grid(s));
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(b.grid[i] == doctest::Approx(a.grid[i]).epsilon(1e-15));
        }
        CHECK(b.raw_peak == doctest::Approx(5 * a.raw_peak));
    }
    SUBCASE("peak-to-cell gap is at most 2") {
        RealGrid m(5, 5, 0.3);
        m(1, 1) = 4.0;
        m(3, 3) = -4.0;
        const ResponseMap n = normalize_response(ResponseMap::from_grid(m));
        double widest = 0;
        for (double v : n.grid.values()) {
            widest = std::max(widest, n.peak_val - v);
        }
        CHECK(widest == 2.0);
    }
    SUBCASE("all-zero map is degenerate") {
        try {
            (void)normalize_response(ResponseMap::from_grid(RealGrid(4, 4, 0.0)));
            FAIL("expected DegenerateResponse");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::DegenerateResponse);
        }
    }
}

TEST_CASE("q_measure examples") {
    SUBCASE("two equal global maxima give zero") {
        RealGrid g = random_grid(16, 16, 5, -0.5, 0.5);
        g(3, 4) = 1.0;
        g(12, 9) = 1.0;
        CHECK(q_of(g) == 0.0);
    }
    SUBCASE("delta response is bounded by its farthest cell") {
        const RealGrid g = delta_map(15, 15, 7, 7);
        const double q = q_of(g);
        CHECK(q == doctest::Approx(brute_q(g, 2, 8)).epsilon(1e-14));
        // Farthest cells are the corners at normalized squared distance 0.5.
        CHECK(q == doctest::Approx(1.0 / (1.0 - std::exp(-8.0 * 0.5))).epsilon(1e-12));
    }
    SUBCASE("alpha = 1 equals the baseline measure") {
        for (std::uint32_t seed = 0; seed < 20; ++seed) {
            const RealGrid g = random_normalized_map(12 + seed % 5, 10 + seed % 7, seed);
            CHECK(std::abs(q_measure(normalized_map(g), 1.0, 8.0) - baseline_quality(g, 8.0)) <= 1e-12);
        }
    }
    SUBCASE("grid smaller than 3x3 is degenerate") {
        CHECK_THROWS_AS((void)q_measure(normalized_map(delta_map(2, 5, 0, 0)), 2, 8), Error);
    }
    SUBCASE("unnormalized input is rejected") {
        CHECK_THROWS_AS((void)q_measure(ResponseMap::from_grid(delta_map(5, 5, 2, 2)), 2, 8), Error);
    }
}

TEST_CASE("localization_quality") {
    QualityParams p;
    SUBCASE("zero-peak map is degenerate") {
        CHECK_THROWS_AS((void)localization_quality(ResponseMap::from_grid(RealGrid(8, 8, 0.0)), p), Error);
    }
    SUBCASE("doubling the raw response doubles Q") {
        RealGrid g(20, 20, 0.0);
        add_bump(g, 10, 10, 1.5, 0.8);
        add_bump(g, 3, 15, 2.0, 0.3);
        RealGrid g2 = g;
        for (double &v : g2.values()) {
            v *= 2;
        }
        const double a = localization_quality(ResponseMap::from_grid(g), p);
        const double b = localization_quality(ResponseMap::from_grid(g2), p);
        CHECK(b == doctest::Approx(2 * a).epsilon(1e-12));
    }
    SUBCASE("a second equal peak lowers Q") {
        RealGrid sharp(24, 24, 0.0);
        add_bump(sharp, 12, 12, 1.2, 1.0);
        RealGrid twin = sharp;
        add_bump(twin, 4, 4, 1.2, 1.0);
        const double qs = localization_quality(ResponseMap::from_grid(sharp), p);
        const double qt = localization_quality(ResponseMap::from_grid(twin), p);
        CHECK(qs > qt);
        RealGrid n = twin;
        const double mx = n(4, 4) > n(12, 12) ? n(4, 4) : n(12, 12);
        for (double &v : n.values()) {
            v /= mx;
        }
        CHECK(qt == doctest::Approx(brute_q(n, p.alpha, p.beta) * mx).epsilon(1e-12));
    }
}

TEST_CASE("psr") {
    SUBCASE("constant map is degenerate") {
        CHECK_THROWS_AS((void)psr(ResponseMap::from_grid(RealGrid(32, 32, 0.4))), Error);
    }
    SUBCASE("a delta on a flat sidelobe has zero sidelobe variance") {
        CHECK_THROWS_AS((void)psr(ResponseMap::from_grid(delta_map(64, 64, 20, 30))), Error);
    }
    SUBCASE("delta on a ramp matches a direct computation") {
        RealGrid g(64, 64);
        for (int r = 0; r < 64; ++r) {
            for (int c = 0; c < 64; ++c) {
                g(r, c) = 0.001 * c;
            }
        }
        g(20, 30) = 1.0;
        double sum = 0, sum2 = 0;
        int n = 0;
        for (int r = 0; r < 64; ++r) {
            for (int c = 0; c < 64; ++c) {
                if (r >= 15 && r <= 25 && c >= 25 && c <= 35) {
                    continue;
                }
                sum += g(r, c);
                sum2 += g(r, c) * g(r, c);
                ++n;
            }
        }
        CHECK(n == 64 * 64 - 121);
        const double mu = sum / n;
        const double sd = std::sqrt(sum2 / n - mu * mu);
        CHECK(psr(ResponseMap::from_grid(g)) == doctest::Approx((1.0 - mu) / sd).epsilon(1e-9));
    }
    SUBCASE("adding a constant leaves PSR unchanged") {
        RealGrid g = random_grid(40, 40, 8, 0, 0.3);
        add_bump(g, 20, 20, 2, 1.0);
        RealGrid h = g;
        for (double &v : h.values()) {
            v += 3.7;
        }
        CHECK(psr(ResponseMap::from_grid(h)) == doctest::Approx(psr(ResponseMap::from_grid(g))).epsilon(1e-9));
    }
}

TEST_CASE("apce") {
    SUBCASE("one-hot map on N cells gives N") {
        CHECK(apce(ResponseMap::from_grid(delta_map(10, 7, 3, 3))) == doctest::Approx(70.0).epsilon(1e-12));
    }
    SUBCASE("half zeros, half ones gives 2") {
        RealGrid g(6, 6, 0.0);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 6; ++c) {
                g(r, c) = 1.0;
            }
        }
        CHECK(apce(ResponseMap::from_grid(g)) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("affine invariance") {
        const RealGrid g = random_grid(16, 16, 12);
        RealGrid h = g;
        for (double &v : h.values()) {
            v = 3.5 * v - 2.0;
        }
        CHECK(apce(ResponseMap::from_grid(h)) == doctest::Approx(apce(ResponseMap::from_grid(g))).epsilon(1e-12));
    }
    SUBCASE("constant map is degenerate") {
        CHECK_THROWS_AS((void)apce(ResponseMap::from_grid(RealGrid(5, 5, 1.0))), Error);
    }
}

TEST_CASE("occlusion trigger") {
    QualityHistory h(10);
    SUBCASE("empty history never fires") {
        CHECK_FALSE(occlusion_trigger(h, 1e-9, 45).fired);
    }
    SUBCASE("equal quality never fires") {
        h.push(0.3);
        for (double phi : {1.0001, 2.0, 45.0, 1000.0}) {
            CHECK_FALSE(occlusion_trigger(h, 0.3, phi).fired);
        }
    }
    SUBCASE("ratio exactly at the threshold does not fire") {
        h.push(4.5e-3);
        const TriggerDecision d = occlusion_trigger(h, 1e-4, 45);
        CHECK(d.ratio == doctest::Approx(45.0));
        CHECK_FALSE(d.fired);
    }
    SUBCASE("clean to occluded magnitudes fire") {
        h.push(7.9e-5);
        const TriggerDecision d = occlusion_trigger(h, 3.9e-7, 45);
        CHECK(d.ratio == doctest::Approx(202.564).epsilon(1e-5));
        CHECK(d.fired);
    }
    SUBCASE("non-positive quality fires as degenerate") {
        h.push(0.1);
        for (double q : {0.0, -1.0, std::nan("")}) {
            const TriggerDecision d = occlusion_trigger(h, q, 45);
            CHECK(d.fired);
            CHECK(d.degenerate);
        }
    }
}

TEST_CASE("quality history is an exact ring buffer") {
    QualityHistory h(3);
    CHECK(h.mean() == 0.0);
    for (double v : {1.0, 2.0, 3.0, 4.0, 5.0}) {
        h.push(v);
    }
    CHECK(h.size() == 3);
    CHECK(h.values() == std::vector<double>{3.0, 4.0, 5.0});
    CHECK(h.mean() == 4.0);
    CHECK_THROWS_AS(QualityHistory(0), Error);
    QualityParams bad;
    bad.alpha = 0.5;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_SUITE("properties") {
    TEST_CASE("quality: alpha = 1 reduces to the baseline on random maps") {
        for (std::uint32_t seed = 0; seed < 100; ++seed) {
            const RealGrid g = random_normalized_map(8 + seed % 13, 8 + seed % 11, 1000 + seed);
            CHECK(std::abs(q_measure(normalized_map(g), 1.0, 8.0) - baseline_quality(g, 8.0)) <= 1e-12);
        }
    }

    TEST_CASE("quality: q matches the brute-force scan for any alpha and beta") {
        std::mt19937 rng(77);
        for (int trial = 0; trial < 40; ++trial) {
            const RealGrid g = random_normalized_map(5 + trial % 20, 6 + trial % 17, 500 + trial);
            const double alpha = 1.0 + (rng() % 80) / 10.0;
            const double beta = 0.5 + (rng() % 160) / 10.0;
            const double q = q_measure(normalized_map(g), alpha, beta);
            CHECK(q == doctest::Approx(brute_q(g, alpha, beta)).epsilon(1e-12));
        }
    }

    TEST_CASE("quality: raising a secondary peak strictly lowers q") {
        for (double alpha : {1.0, 2.0, 3.5}) {
            double prev = std::numeric_limits<double>::infinity();
            for (int k = 0; k <= 89; ++k) {
                const double h = 0.1 + 0.01 * k;
                RealGrid g(31, 31, 0.0);
                add_bump(g, 15, 15, 1.5, 1.0);
                add_bump(g, 27, 28, 1.5, h);
                const double q = q_of(g, alpha, 8);
                CHECK(q < prev);
                prev = q;
            }
        }
    }

    TEST_CASE("quality: far secondary value dominates q") {
        for (double alpha : {1.0, 2.0, 4.0}) {
            for (double s : {0.2, 0.5, 0.8, 0.95}) {
                RealGrid g(32, 32, -1.0);
                g(0, 0) = 1.0;
                g(31, 31) = s;
                const double q = q_of(g, alpha, 8);
                CHECK(std::abs(q / std::pow(1.0 - s, alpha) - 1.0) < 0.01);
            }
        }
    }

    TEST_CASE("quality: bounded by the peak curvature") {
        for (double alpha : {1.0, 2.0, 3.0}) {
            for (double sigma : {0.8, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0}) {
                const int R = 33, C = 41;
                RealGrid g(R, C, 0.0);
                add_bump(g, 16, 20, sigma, 1.0);
                const double beta = 8.0;
                // Second differences in normalized coordinates.
                const double dyy = (g(15, 20) - 2 * g(16, 20) + g(17, 20)) * (R - 1) * (R - 1);
                const double dxx = (g(16, 19) - 2 * g(16, 20) + g(16, 21)) * (C - 1) * (C - 1);
                const double lambda1 = std::min(std::abs(dyy), std::abs(dxx));
                CHECK(q_of(g, alpha, beta) <= 4 * alpha * lambda1 / beta);
            }
        }
    }

    TEST_CASE("quality: q ignores positive rescaling") {
        for (std::uint32_t seed = 0; seed < 20; ++seed) {
            RealGrid g = random_grid(16, 16, seed, 0, 0.4);
            add_bump(g, 8, 8, 1.3, 1.0);
            RealGrid h = g;
            const double a = 0.01 + seed * 3.3;
            for (double &v : h.values()) {
                v *= a;
            }
            CHECK(q_of(h) == doctest::Approx(q_of(g)).epsilon(1e-12));
        }
    }

    TEST_CASE("quality: ties resolve to the first cell and calls repeat exactly") {
        for (std::uint32_t seed = 0; seed < 20; ++seed) {
            RealGrid g = random_grid(12, 12, seed, 0, 0.5);
            const int r1 = static_cast<int>(seed % 5), c1 = static_cast<int>(seed % 7) + 3;
            g(r1, c1) = 0.9;
            g(r1 + 4, (c1 + 5) % 12) = 0.9;
            const ResponseMap r = ResponseMap::from_grid(g);
            CHECK(r.peak_row == r1);
            CHECK(r.peak_col == c1);
            const ResponseMap n = normalize_response(r);
            CHECK(q_measure(n, 2, 8) == q_measure(n, 2, 8));
            CHECK(q_measure(n, 2, 8) == 0.0);
        }
    }
}
