import json
import math

import numpy as np
import pytest

import occtrack


def test_synth_and_track_static_target():
    frames, boxes, schedule = occtrack.synth({"frames": 20, "motion_amplitude": 0}, seed=1)
    assert len(frames) == 20
    assert frames[0].shape == (240, 320, 3)
    assert schedule == []
    tracker = occtrack.Tracker(frames[0], boxes[0])
    for frame, gt in zip(frames[1:], boxes[1:]):
        box, diag = tracker.step(frame)
        assert abs(box[0] - gt[0]) < 3 and abs(box[1] - gt[1]) < 3
        assert json.loads(diag)["model"] == "f"
    assert not tracker.occluded


def test_occlusion_schedule_and_trigger():
    _, _, schedule = occtrack.synth({"occluder": True}, seed=2)
    assert all(40 <= f <= 60 for f, _ in schedule)
    assert max(o for _, o in schedule) == 1.0
    assert occtrack.occlusion_trigger([1.0] * 10, 1.0 / 46) == (True, pytest.approx(46.0))
    assert occtrack.occlusion_trigger([], 1e-9)[0] is False


def test_quality_of_two_equal_peaks_is_zero():
    r = np.full((16, 16), -0.2)
    r[2, 3] = 1.0
    r[11, 12] = 1.0
    assert occtrack.q_measure(r) == 0.0
    single = np.zeros((16, 16))
    single[5, 5] = 1.0
    assert occtrack.q_measure(single, 2.0, 8.0) > 1.0


def test_phase_correlation_integer_shift():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((32, 32))
    b = np.roll(a, (3, -5), axis=(0, 1))
    dr, dc, conf = occtrack.phase_correlation(a, b)
    assert dr == pytest.approx(3, abs=0.25)
    assert dc == pytest.approx(-5, abs=0.25)
    assert conf > 0.5


def test_evaluate_identity():
    boxes = [(0, 0, 10, 10), (5, 5, 20, 10)]
    report = occtrack.evaluate(boxes, boxes)
    assert report["auc"] == 1.0
    assert report["mean_iou"] == 1.0
    assert len(report["success_curve"]) == 101


def test_errors_are_translated():
    with pytest.raises(occtrack.OcctrackError):
        occtrack.Tracker(np.zeros((40, 40, 3), np.uint8), (0, 0, 0, 0))
    with pytest.raises(occtrack.OcctrackError):
        occtrack.synth({"zoom": 2.0})
    with pytest.raises(occtrack.OcctrackError):
        occtrack.track("/nonexistent/sequence")


def test_default_config_mentions_alpha():
    assert "alpha=2" in occtrack.default_config()
