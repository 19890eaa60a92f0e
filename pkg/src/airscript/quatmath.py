"""Quaternion algebra, scalar-first (w, x, y, z) throughout."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError

# Inputs whose norm is off by more than this are rejected by rotate_vector.
DRIFT_TOLERANCE = 1e-3


class Quaternion(NamedTuple):
    w: float
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


IDENTITY = Quaternion(1.0, 0.0, 0.0, 0.0)


def hamilton(a: Quaternion, b: Quaternion) -> Quaternion:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return Quaternion(
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def normalize(q: Quaternion) -> Quaternion:
    n = q.norm()
    if n == 0.0 or not math.isfinite(n):
        raise DomainError(f"cannot normalize quaternion with norm {n}")
    return Quaternion(q.w / n, q.x / n, q.y / n, q.z / n)


def inverse(q: Quaternion) -> Quaternion:
    n2 = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z
    if n2 == 0.0:
        raise DomainError("zero quaternion has no inverse")
    return Quaternion(q.w / n2, -q.x / n2, -q.y / n2, -q.z / n2)


def _unit_or_fail(q: Quaternion) -> Quaternion:
    n = q.norm()
    if n == 0.0:
        raise DomainError("zero-norm quaternion cannot rotate")
    if abs(n - 1.0) > DRIFT_TOLERANCE:
        raise DomainError(f"quaternion norm {n:.6g} too far from 1 to be an orientation")
    if abs(n - 1.0) > 1e-6:
        q = Quaternion(q.w / n, q.x / n, q.y / n, q.z / n)
    return q


def rotate_vector(q: Quaternion, v: Vec3) -> Vec3:
    """Vector part of ``q * (0, v) * q^-1``."""
    q = _unit_or_fail(q)
    p = hamilton(hamilton(q, Quaternion(0.0, v[0], v[1], v[2])), q.conjugate())
    return Vec3(p.x, p.y, p.z)


def from_axis_angle(axis, angle: float) -> Quaternion:
    ax = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(ax))
    if n == 0.0:
        return IDENTITY
    ax = ax / n
    s = math.sin(angle / 2.0)
    return Quaternion(math.cos(angle / 2.0), ax[0] * s, ax[1] * s, ax[2] * s)


# ---------------------------------------------------------------------------
# array versions, rows of (w, x, y, z); used on whole recordings at once


def hamilton_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def rotate_vectors(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row-wise ``rotate_vector``; q is (..., 4), v is (..., 3)."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise DomainError("zero-norm quaternion cannot rotate")
    if np.any(np.abs(n - 1.0) > DRIFT_TOLERANCE):
        raise DomainError("quaternion norm too far from 1 to be an orientation")
    q = np.where(np.abs(n - 1.0) > 1e-6, q / n, q)
    conj = q * np.array([1.0, -1.0, -1.0, -1.0])
    pure = np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)
    return hamilton_array(hamilton_array(q, pure), conj)[..., 1:]
