#include "support.hpp"

#include <occtrack/config.hpp>
#include <occtrack/runner.hpp>
#include <occtrack/synth.hpp>

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>

using namespace occtrack;
using namespace occtest;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string &name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

void write_text(const std::filesystem::path &p, const std::string &text) {
    std::ofstream(p) << text;
}

} // namespace

TEST_CASE("load_sequence reads an OTB directory" * doctest::test_suite("io")) {
    TempDir dir("occtrack_seq_test");
    std::filesystem::create_directories(dir.path / "img");
    for (int i = 1; i <= 3; ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "%04d.png", i);
        save_image(dir.path / "img" / name, random_image(64, 48, 3, i));
    }
    write_text(dir.path / "groundtruth_rect.txt", "10,20,30,40\n11\t21\t30\t40\n12 22 30 40\n");
    const Sequence seq = load_sequence(dir.path);
    REQUIRE(seq.size() == 3);
    CHECK(seq.frame(1) == random_image(64, 48, 3, 2));
    CHECK(seq.gt()[0].cx == 25.0);
    CHECK(seq.gt()[0].cy == 40.0);
    CHECK(seq.gt()[2].left() == 12.0);
    CHECK(seq.occlusion_schedule().empty());

    SUBCASE("malformed lines name the line") {
        write_text(dir.path / "groundtruth_rect.txt", "10,20,30,40\n1,2,x,4\n5,6,7,8\n");
        try {
            (void)load_sequence(dir.path);
            FAIL("expected ParseError");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::ParseError);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("more boxes than frames") {
        write_text(dir.path / "groundtruth_rect.txt", "10,20,30,40\n10,20,30,40\n10,20,30,40\n10,20,30,40\n");
        CHECK_THROWS_AS((void)load_sequence(dir.path), Error);
    }
    SUBCASE("write then load round trip") {
        TempDir out("occtrack_seq_copy");
        const Sequence synth = synth_sequence(static_spec(12), 3);
        write_sequence(out.path, synth);
        const Sequence back = load_sequence(out.path);
        REQUIRE(back.size() == 12);
        CHECK(back.frame(11) == synth.frame(11));
        for (std::size_t i = 0; i < 12; ++i) {
            CHECK(back.gt()[i].cx == doctest::Approx(synth.gt()[i].cx).epsilon(1e-6));
            CHECK(back.gt()[i].w == doctest::Approx(synth.gt()[i].w).epsilon(1e-6));
        }
    }
}

TEST_CASE("synthetic sequences") {
    SUBCASE("deterministic per seed") {
        SynthSpec spec;
        spec.frames = 12;
        const Sequence a = synth_sequence(spec, 9);
        const Sequence b = synth_sequence(spec, 9);
        const Sequence c = synth_sequence(spec, 10);
        CHECK(a.frame(7) == b.frame(7));
        CHECK(a.gt()[7].cx == b.gt()[7].cx);
        CHECK_FALSE(a.frame(7) == c.frame(7));
    }
    SUBCASE("occlusion schedule lies inside the occluder window") {
        const Sequence s = synth_sequence(occlusion_suite_spec(), 1);
        REQUIRE_FALSE(s.occlusion_schedule().empty());
        double peak = 0;
        for (const auto &e : s.occlusion_schedule()) {
            CHECK(e.frame >= 40);
            CHECK(e.frame <= 60);
            CHECK(e.overlap >= 0.0);
            CHECK(e.overlap <= 1.0);
            peak = std::max(peak, e.overlap);
        }
        CHECK(peak == 1.0);
        CHECK(s.overlap_at(10) == 0.0);
        CHECK(s.overlap_at(50) == 1.0);
    }
    SUBCASE("zoom grows the box geometrically") {
        const Sequence s = synth_sequence(zoom_spec(), 2);
        REQUIRE(s.size() == 51);
        CHECK(s.gt()[50].w / s.gt()[0].w == doctest::Approx(std::pow(1.01, 50)).epsilon(1e-9));
    }
    SUBCASE("invalid specs are rejected") {
        SynthSpec bad;
        bad.zoom = 1.5;
        CHECK_THROWS_AS(bad.validate(), Error);
        bad = {};
        bad.frames = 5;
        CHECK_THROWS_AS(bad.validate(), Error);
        CHECK_THROWS_AS((void)synth_spec_from({{"nope", "1"}}), Error);
    }
}

TEST_CASE("evaluate") {
    const std::vector<BBox> gt{BBox::from_corner(0, 0, 10, 10), BBox::from_corner(5, 5, 20, 10)};
    SUBCASE("identity") {
        const EvalReport r = evaluate(gt, gt);
        CHECK(r.auc == 1.0);
        CHECK(r.success_curve.back() == 1.0);
        CHECK(r.mean_iou == 1.0);
        CHECK(r.precision_20 == 1.0);
        CHECK(r.success_curve.size() == 101);
    }
    SUBCASE("disjoint boxes") {
        const std::vector<BBox> far{BBox::from_corner(100, 100, 10, 10), BBox::from_corner(200, 5, 20, 10)};
        const EvalReport r = evaluate(far, gt);
        // Only the threshold-0 bin counts.
        CHECK(r.success_curve[0] == 1.0);
        CHECK(r.auc == doctest::Approx(1.0 / 101));
        CHECK(r.mean_iou == 0.0);
        CHECK(r.precision_20 == 0.0);
    }
    SUBCASE("half-shifted square") {
        // Overlap 5x10 = 50, union 150.
        CHECK(iou(BBox::from_corner(0, 0, 10, 10), BBox::from_corner(5, 0, 10, 10)) == doctest::Approx(1.0 / 3));
        // Overlap 5x5 = 25, union 175.
        CHECK(iou(BBox::from_corner(0, 0, 10, 10), BBox::from_corner(5, 5, 10, 10)) == doctest::Approx(1.0 / 7));
        CHECK(iou(BBox::from_corner(0, 0, 2, 2), BBox::from_corner(1, 1, 2, 2)) == doctest::Approx(1.0 / 7));
        CHECK(center_error(BBox::from_corner(0, 0, 10, 10), BBox::from_corner(3, 4, 10, 10)) == 5.0);
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS((void)evaluate({gt[0]}, gt), Error);
    }
    SUBCASE("report JSON carries the summary") {
        const auto j = nlohmann::json::parse(evaluate(gt, gt).to_json());
        CHECK(j.at("auc").get<double>() == 1.0);
        CHECK(j.at("success_curve").size() == 101);
        CHECK(evaluate(gt, gt).to_table().find("AUC") != std::string::npos);
    }
    CHECK(mean_over({1, 2, 3, 4}, 1, 3) == 2.5);
    CHECK(mean_over({1, 2, 3, 4}, 2, 10) == 3.5);
}

TEST_CASE("config files") {
    SUBCASE("comments, blanks and overrides") {
        const ConfigMap kv = parse_config("# tracker\n\nalpha = 2.5\n  phi=30 # trailing\nscale_mode=pyramid\n");
        const TrackerConfig c = tracker_config_from(kv);
        CHECK(c.quality.alpha == 2.5);
        CHECK(c.quality.phi == 30.0);
        CHECK(c.scale.mode == ScaleMode::PyramidOnly);
    }
    SUBCASE("errors") {
        try {
            (void)parse_config("alpha=1\nbroken line\n");
            FAIL("expected ParseError");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::ParseError);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
        CHECK_THROWS_AS((void)tracker_config_from({{"alpah", "2"}}), Error);
        CHECK_THROWS_AS((void)tracker_config_from({{"alpha", "two"}}), Error);
        CHECK_THROWS_AS((void)tracker_config_from({{"eta", "1.5"}}), Error);
    }
    SUBCASE("rendered defaults parse back to the same values") {
        TrackerConfig c;
        c.quality.alpha = 3.25;
        c.eta = 0.03;
        c.occlusion_handling = false;
        c.scale.mode = ScaleMode::LogPolarOnly;
        const TrackerConfig back = tracker_config_from(parse_config(to_config_text(c)));
        CHECK(to_config_text(back) == to_config_text(c));
        CHECK(back.quality.alpha == 3.25);
        CHECK_FALSE(back.occlusion_handling);
    }
}

TEST_CASE("run_tracker") {
    SUBCASE("a single frame yields just the initial box") {
        const Sequence one({random_image(64, 64, 3, 1)}, {BBox{32, 32, 16, 16}});
        const RunResult r = run_tracker(one, {});
        REQUIRE(r.trajectory.size() == 1);
        CHECK(r.trajectory[0] == one.gt()[0]);
        CHECK(r.diagnostics.empty());
    }
    SUBCASE("static target") {
        const Sequence s = synth_sequence(static_spec(30), 7);
        const RunResult r = run_tracker(s, {});
        CHECK(r.diagnostics.size() == 29);
        CHECK(evaluate(r.trajectory, s.gt()).mean_iou >= 0.9);
        CHECK(r.final_filter != nullptr);
    }
    SUBCASE("callback sees every frame") {
        const Sequence s = synth_sequence(static_spec(10), 7);
        std::size_t calls = 0;
        (void)run_tracker(s, {}, [&](std::size_t i, const Image &, const FrameDiagnostics &d) {
            CHECK(static_cast<int>(i) == d.frame);
            ++calls;
        });
        CHECK(calls == 10);
    }
}

TEST_CASE("ablation without occlusion is a no-op") {
    SynthSpec spec;
    spec.frames = 30;
    const Sequence s = synth_sequence(spec, 11);
    const AblationResult a = ablate(s, {});
    CHECK(a.with_handling.ious == a.without_handling.ious);
    CHECK(a.recovery_with == a.recovery_without);
    CHECK(ablation_table(a).find('\n') != std::string::npos);
}

TEST_CASE("alpha sweep ranking") {
    const std::vector<SweepEntry> sweep{{1.0, 0.5, {}}, {2.0, 0.7, {}}, {3.0, 0.7, {}}, {4.0, 0.6, {}}};
    CHECK(sweep_rank(sweep, 2.0) == 1);
    CHECK(sweep_rank(sweep, 3.0) == 1);
    CHECK(sweep_rank(sweep, 4.0) == 3);
    CHECK(sweep_rank(sweep, 1.0) == 4);
    CHECK_THROWS_AS((void)sweep_rank(sweep, 5.0), Error);
}

TEST_CASE("recovery window") {
    const Sequence s = synth_sequence(occlusion_suite_spec(), 0);
    const auto [from, to] = recovery_window(s);
    CHECK(from == 70);
    CHECK(to == 100);
    const Sequence plain = synth_sequence(static_spec(20), 0);
    CHECK(recovery_window(plain) == std::pair{0, 20});
}
