#include <occtrack/config.hpp>
#include <occtrack/quality.hpp>
#include <occtrack/runner.hpp>
#include <occtrack/scale.hpp>
#include <occtrack/synth.hpp>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace occtrack;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const U8Array &a) {
    if (a.ndim() != 2 && a.ndim() != 3) {
        throw Error(ErrorCode::ShapeMismatch, "expected an (H, W) or (H, W, C) uint8 array");
    }
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    std::vector<std::uint8_t> data(a.data(), a.data() + a.size());
    return Image(w, h, c, std::move(data));
}

U8Array from_image(const Image &img) {
    std::vector<py::ssize_t> shape{img.height(), img.width()};
    if (img.channels() == 3) {
        shape.push_back(3);
    }
    U8Array out(shape);
    std::memcpy(out.mutable_data(), img.data().data(), img.data().size());
    return out;
}

RealGrid to_grid(const F64Array &a) {
    if (a.ndim() != 2) {
        throw Error(ErrorCode::ShapeMismatch, "expected a 2-D float array");
    }
    return RealGrid(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                    std::vector<double>(a.data(), a.data() + a.size()));
}

py::tuple box_tuple(const BBox &b) { return py::make_tuple(b.left(), b.top(), b.w, b.h); }

BBox tuple_box(const std::array<double, 4> &xywh) { return BBox::from_corner(xywh[0], xywh[1], xywh[2], xywh[3]); }

ConfigMap to_config_map(const py::dict &d) {
    ConfigMap kv;
    for (const auto &[k, v] : d) {
        kv[py::str(k)] = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "1" : "0") : std::string(py::str(v));
    }
    return kv;
}

TrackerConfig config_from(const py::dict &overrides) { return tracker_config_from(to_config_map(overrides)); }

py::dict report_dict(const EvalReport &r) {
    py::dict d;
    d["ious"] = r.ious;
    d["center_errors"] = r.center_errors;
    d["success_curve"] = r.success_curve;
    d["auc"] = r.auc;
    d["precision_20"] = r.precision_20;
    d["mean_iou"] = r.mean_iou;
    d["occlusion_intervals"] = r.occlusion_intervals;
    d["fps"] = r.fps;
    return d;
}

class PyTracker {
public:
    PyTracker(const U8Array &frame, const std::array<double, 4> &box, const py::dict &config)
        : state_(init(to_image(frame), tuple_box(box), config_from(config))) {}

    py::tuple step(const U8Array &frame) {
        const StepResult r = occtrack::step(state_, to_image(frame));
        return py::make_tuple(box_tuple(r.box), r.diagnostics.to_json());
    }

    py::tuple box() const { return box_tuple(state_.box); }
    bool occluded() const { return state_.occluded; }
    int delta_t() const { return state_.delta_t; }
    double scale() const { return state_.cumulative_scale(); }

private:
    TrackerState state_;
};

} // namespace

PYBIND11_MODULE(_occtrack, m) {
    m.doc() = "Occlusion-aware correlation-filter tracker";

    py::register_exception<Error>(m, "OcctrackError", PyExc_RuntimeError);

    py::class_<PyTracker>(m, "Tracker")
        .def(py::init<const U8Array &, const std::array<double, 4> &, const py::dict &>(), py::arg("frame"),
             py::arg("box"), py::arg("config") = py::dict())
        .def("step", &PyTracker::step, py::arg("frame"), "Returns ((x, y, w, h), diagnostics_json).")
        .def_property_readonly("box", &PyTracker::box)
        .def_property_readonly("occluded", &PyTracker::occluded)
        .def_property_readonly("delta_t", &PyTracker::delta_t)
        .def_property_readonly("scale", &PyTracker::scale);

    m.def(
        "synth",
        [](const py::dict &spec, std::uint64_t seed) {
            const Sequence s = synth_sequence(synth_spec_from(to_config_map(spec)), seed);
            py::list frames, gt, schedule;
            for (std::size_t i = 0; i < s.size(); ++i) {
                frames.append(from_image(s.frame(i)));
                gt.append(box_tuple(s.gt()[i]));
            }
            for (const auto &e : s.occlusion_schedule()) {
                schedule.append(py::make_tuple(e.frame, e.overlap));
            }
            return py::make_tuple(frames, gt, schedule);
        },
        py::arg("spec") = py::dict(), py::arg("seed") = 0, "Returns (frames, boxes, occlusion schedule).");

    m.def(
        "track",
        [](const std::filesystem::path &dir, const py::dict &config) {
            const Sequence seq = load_sequence(dir);
            const RunResult run = run_tracker(seq, config_from(config));
            py::list traj, diags;
            for (const auto &b : run.trajectory) {
                traj.append(box_tuple(b));
            }
            for (const auto &d : run.diagnostics) {
                diags.append(d.to_json());
            }
            return py::make_tuple(traj, diags, report_dict(evaluate_run(run, seq)));
        },
        py::arg("seq_dir"), py::arg("config") = py::dict(),
        "Tracks an OTB-style directory; returns (trajectory, diagnostics_json_lines, report).");

    m.def(
        "evaluate",
        [](const std::vector<std::array<double, 4>> &traj, const std::vector<std::array<double, 4>> &gt) {
            std::vector<BBox> a, b;
            for (const auto &x : traj) {
                a.push_back(tuple_box(x));
            }
            for (const auto &x : gt) {
                b.push_back(tuple_box(x));
            }
            return report_dict(evaluate(a, b));
        },
        py::arg("trajectory"), py::arg("gt"));

    m.def(
        "q_measure",
        [](const F64Array &response, double alpha, double beta) {
            return q_measure(normalize_response(ResponseMap::from_grid(to_grid(response))), alpha, beta);
        },
        py::arg("response"), py::arg("alpha") = 2.0, py::arg("beta") = 8.0,
        "Quality of a response map after normalization by its max |value|.");

    m.def(
        "phase_correlation",
        [](const F64Array &a, const F64Array &b) {
            const PhaseShift s = phase_correlation(to_grid(a), to_grid(b));
            return py::make_tuple(s.shift_r, s.shift_c, s.confidence);
        },
        py::arg("a"), py::arg("b"), "Returns (shift_rows, shift_cols, confidence) with b(x) ~ a(x - s).");

    m.def(
        "occlusion_trigger",
        [](const std::vector<double> &history, double q, double phi) {
            QualityHistory h(static_cast<int>(std::max<std::size_t>(history.size(), 1)));
            for (double v : history) {
                h.push(v);
            }
            const TriggerDecision d = occlusion_trigger(h, q, phi);
            return py::make_tuple(d.fired, d.ratio);
        },
        py::arg("history"), py::arg("q"), py::arg("phi") = 45.0);

    m.def("default_config", [] { return to_config_text(TrackerConfig{}); });
}
