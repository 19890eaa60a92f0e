"""2-DifViz: device-frame angular velocity to an integer pixel trajectory.

Axis convention (also declared by the JSONL format and used by the synthetic
generator): after rotation into the world frame, gyro component 0 is the
pitch rate ``dx`` and drives the horizontal canvas axis, component 1 is the
yaw rate ``dy`` and drives the vertical axis (+up), component 2 (roll) is
dropped.  The y flip for screen coordinates happens only at render time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quatmath import Quaternion, Vec3, rotate_vector, rotate_vectors

PER_STEP = "per-step-round"
CARRY = "remainder-carry"


@dataclass(frozen=True)
class DifVizConfig:
    sensitivity: float = 5.0  # pixels per degree
    pixel_density: float = 1.0
    frame_duration: float = 1.0 / 50.0  # seconds
    rounding: str = PER_STEP

    def __post_init__(self):
        if not self.sensitivity > 0:
            raise DomainError("sensitivity must be positive")
        if not self.pixel_density > 0:
            raise DomainError("pixel_density must be positive")
        if not self.frame_duration > 0:
            raise DomainError("frame_duration must be positive")
        if self.rounding not in (PER_STEP, CARRY):
            raise DomainError(f"unknown rounding mode {self.rounding!r}")

    def to_dict(self) -> dict:
        return {
            "sensitivity": self.sensitivity,
            "pixel_density": self.pixel_density,
            "frame_duration": self.frame_duration,
            "rounding": self.rounding,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DifVizConfig":
        return cls(
            sensitivity=float(d["sensitivity"]),
            pixel_density=float(d["pixel_density"]),
            frame_duration=float(d["frame_duration"]),
            rounding=str(d["rounding"]),
        )


def rotate_to_world(g: Vec3, q: Quaternion) -> Vec3:
    return rotate_vector(q, g)


def extract_pitch_yaw(g_world) -> tuple[float, float]:
    return float(g_world[0]), float(g_world[1])


def compute_gain(config: DifVizConfig) -> float:
    # Pointer acceleration would enter here; it is deliberately not modelled
    # so that the gain stays linear.
    return config.sensitivity * config.pixel_density


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def real_differentials(recording, config: DifVizConfig) -> np.ndarray:
    """Per-step pixel displacement before integer conversion, shape (n, 2)."""
    if len(recording.gyro) == 0:
        raise DomainError("empty recording")
    world = rotate_vectors(recording.quat, recording.gyro)
    return world[:, :2] * compute_gain(config) * config.frame_duration


def differentials(recording, config: DifVizConfig = DifVizConfig()) -> np.ndarray:
    real = real_differentials(recording, config)
    if config.rounding == PER_STEP:
        out = round_half_away(real)
    else:
        # round the running sum, emit the increments: no drift from residue
        total = round_half_away(np.cumsum(real, axis=0))
        out = np.diff(total, axis=0, prepend=np.zeros((1, 2)))
    return out.astype(np.int64)


def accumulate(diffs) -> np.ndarray:
    diffs = np.asarray(diffs, dtype=np.int64).reshape(-1, 2)
    return np.vstack([np.zeros((1, 2), dtype=np.int64), np.cumsum(diffs, axis=0)])


def trajectory(recording, config: DifVizConfig = DifVizConfig()) -> np.ndarray:
    """Steps 1-5 end to end; returns the (n + 1, 2) integer coordinate sequence."""
    return accumulate(differentials(recording, config))
