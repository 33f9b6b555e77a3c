"""Occlusion-aware correlation-filter tracker."""

from ._occtrack import (
    OcctrackError,
    Tracker,
    default_config,
    evaluate,
    occlusion_trigger,
    phase_correlation,
    q_measure,
    synth,
    track,
)

__all__ = [
    "OcctrackError",
    "Tracker",
    "default_config",
    "evaluate",
    "occlusion_trigger",
    "phase_correlation",
    "q_measure",
    "synth",
    "track",
]
