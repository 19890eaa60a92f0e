"""Preprocessing chains feeding the two recurrent classifiers.

``preprocess_difviz`` turns a 2-DifViz trajectory into a fixed-length,
whitened (100, 2) sequence.  ``fit_scaler`` / ``preprocess_imu`` turn raw
10-channel IMU data into max-abs scaled, length-normalized matrices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SEQ_LEN = 100
REDUNDANCY_THRESHOLD = 5.0
TEST_CLAMP = 1.5


def smooth(coords, window: int = 5) -> np.ndarray:
    """Centred moving average; sequence ends are replicate-padded."""
    c = np.asarray(coords, dtype=float).reshape(-1, 2)
    if len(c) == 0:
        raise DomainError("cannot smooth an empty sequence")
    half = window // 2
    padded = np.concatenate([np.repeat(c[:1], half, axis=0), c, np.repeat(c[-1:], half, axis=0)])
    csum = np.cumsum(np.vstack([np.zeros((1, 2)), padded]), axis=0)
    return (csum[window:] - csum[:-window]) / window


def remove_redundant(coords, threshold: float = REDUNDANCY_THRESHOLD) -> np.ndarray:
    """Drop points within ``threshold`` (inclusive) of the last kept point."""
    c = np.asarray(coords, dtype=float).reshape(-1, 2)
    if len(c) == 0:
        return c
    kept = [0]
    ax, ay = c[0]
    for i in range(1, len(c)):
        x, y = c[i]
        if np.hypot(x - ax, y - ay) > threshold:
            kept.append(i)
            ax, ay = x, y
    return c[kept]


def standard_scale(coords) -> np.ndarray:
    """Whiten with one mean and one standard deviation taken over x and y together."""
    c = np.asarray(coords, dtype=float).reshape(-1, 2)
    if len(c) < 2:
        raise DomainError("standard scaling needs at least 2 points")
    mu = c.mean()
    sigma = c.std()
    if not sigma > 0:
        raise DomainError("degenerate sequence: zero spread, recording unusable")
    return (c - mu) / sigma


def interpolate_to(coords, target_len: int = SEQ_LEN) -> np.ndarray:
    """Piecewise-linear resampling over the point index, endpoints kept exactly."""
    c = np.asarray(coords, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if len(c) < 2:
        raise DomainError("interpolation needs at least 2 points")
    src = np.linspace(0.0, 1.0, len(c))
    dst = np.linspace(0.0, 1.0, target_len)
    return np.column_stack([np.interp(dst, src, c[:, j]) for j in range(c.shape[1])])


def preprocess_difviz(coords) -> np.ndarray:
    reduced = remove_redundant(smooth(coords))
    if len(reduced) < 2:
        raise DomainError("recording collapses to a single point after redundancy removal")
    return interpolate_to(standard_scale(reduced), SEQ_LEN)


@dataclass(frozen=True)
class ScalerStats:
    max_abs: tuple[float, ...]
    t_max: int

    def to_dict(self) -> dict:
        return {"max_abs": list(self.max_abs), "t_max": self.t_max}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerStats":
        return cls(tuple(float(v) for v in d["max_abs"]), int(d["t_max"]))


def fit_scaler(recordings) -> ScalerStats:
    """Per-channel max |value| and the longest length, over the training set only."""
    recordings = list(recordings)
    if not recordings:
        raise DomainError("cannot fit scaler on an empty training set")
    peak = np.zeros(10)
    t_max = 0
    for rec in recordings:
        m = rec.imu_matrix()
        peak = np.maximum(peak, np.abs(m).max(axis=0))
        t_max = max(t_max, len(m))
    # a channel that is identically zero in training scales by 1
    peak[peak == 0] = 1.0
    return ScalerStats(tuple(float(v) for v in peak), int(t_max))


def max_abs_scale(recording, stats: ScalerStats) -> np.ndarray:
    m = recording.imu_matrix() if hasattr(recording, "imu_matrix") else np.asarray(recording, dtype=float)
    return np.clip(m / np.asarray(stats.max_abs), -TEST_CLAMP, TEST_CLAMP)


def resample(matrix, t_max: int) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if len(m) < 2:
        raise DomainError("resampling needs at least 2 rows")
    return interpolate_to(m, t_max)


def preprocess_imu(recording, stats: ScalerStats) -> np.ndarray:
    return resample(max_abs_scale(recording, stats), stats.t_max)
