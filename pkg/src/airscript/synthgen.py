"""Synthetic IMU recordings obtained by running 2-DifViz backwards.

A digit template is warped by a participant style, traversed with a
variable speed profile, and the resulting per-step pixel displacements are
turned into world-frame angular velocity.  That velocity is expressed in a
wobbling device frame, so feeding the recording back through
:func:`airscript.difviz.trajectory` redraws the (warped) template.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .datastore import SAMPLE_RATE_HZ, Dataset, Recording
from .difviz import DifVizConfig, compute_gain
from .errors import DomainError
from .quatmath import Quaternion, from_axis_angle, hamilton_array, rotate_vectors

MIN_SAMPLES, MAX_SAMPLES = 40, 160
STEPS_BASE, STEPS_PER_LENGTH = 15.0, 20.0  # duration model, in samples


@dataclass(frozen=True)
class DigitTemplate:
    digit: int
    polyline: np.ndarray  # (n, 2) in the unit box, y up

    def __post_init__(self):
        p = np.asarray(self.polyline, dtype=float)
        if not 0 <= self.digit <= 9:
            raise DomainError(f"digit {self.digit} outside 0..9")
        if p.ndim != 2 or p.shape[1] != 2 or len(p) < 8:
            raise DomainError("template needs at least 8 two-dimensional points")
        if p.min() < 0 or p.max() > 1:
            raise DomainError("template must fit in the unit box")

    @property
    def arc_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.polyline, axis=0), axis=1).sum())


def parse_template(text: str, digit: int) -> DigitTemplate:
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    return DigitTemplate(digit, np.array(rows, dtype=float))


def load_templates() -> dict[int, DigitTemplate]:
    pkg = resources.files("airscript") / "templates"
    return {d: parse_template((pkg / f"digit_{d}.txt").read_text(), d) for d in range(10)}


@dataclass(frozen=True)
class ParticipantStyle:
    scale: float = 120.0  # template height in canvas pixels
    aspect: float = 1.0  # width multiplier
    slant: float = 0.0  # shear angle, radians (positive leans right)
    speed_factor: float = 1.0
    gyro_noise_std: float = 0.0  # deg/s, device frame
    roll_noise_std: float = 0.0  # deg/s, world roll channel
    orientation: Quaternion = Quaternion(1.0, 0.0, 0.0, 0.0)
    wobble_std: float = 0.0  # degrees of orientation excursion
    accel_noise_std: float = 0.0  # g
    shape_jitter: float = 0.0  # per-recording smooth template deformation, unit-box units
    tempo_jitter: float = 0.0  # per-recording relative variation of duration and size
    seed_stream: int = 0

    def __post_init__(self):
        if not (self.scale > 0 and self.speed_factor > 0 and self.aspect > 0):
            raise DomainError("scale, aspect and speed_factor must be positive")
        stds = (self.gyro_noise_std, self.roll_noise_std, self.wobble_std, self.accel_noise_std,
                self.shape_jitter, self.tempo_jitter)
        if min(stds) < 0:
            raise DomainError("noise levels must be non-negative")


@dataclass(frozen=True)
class NoiseProfile:
    """Distribution that participant styles are drawn from."""

    scale_mean: float = 120.0
    scale_std: float = 15.0
    aspect_std: float = 0.08
    slant_std: float = 0.12
    speed_range: tuple[float, float] = (0.8, 1.25)
    orientation_spread_deg: float = 10.0
    gyro_noise_std: float = 2.0
    roll_noise_std: float = 5.0
    wobble_std: float = 2.0
    accel_noise_std: float = 0.05
    shape_jitter: float = 0.025
    tempo_jitter: float = 0.07


NOISE_PROFILES = {
    "default": NoiseProfile(),
    # sensor-noise free; participants still differ in style
    "none": NoiseProfile(
        orientation_spread_deg=0.0,
        gyro_noise_std=0.0,
        roll_noise_std=0.0,
        wobble_std=0.0,
        accel_noise_std=0.0,
        shape_jitter=0.0,
        tempo_jitter=0.0,
    ),
}


def _random_rotation(rng: np.random.Generator, spread_deg: float) -> Quaternion:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = np.deg2rad(rng.normal(0.0, spread_deg)) if spread_deg > 0 else 0.0
    return from_axis_angle(axis, angle)


def draw_style(profile: NoiseProfile, rng: np.random.Generator, seed_stream: int = 0) -> ParticipantStyle:
    return ParticipantStyle(
        scale=float(max(30.0, rng.normal(profile.scale_mean, profile.scale_std))),
        aspect=float(np.clip(rng.normal(1.0, profile.aspect_std), 0.6, 1.4)),
        slant=float(np.clip(rng.normal(0.0, profile.slant_std), -0.5, 0.5)),
        speed_factor=float(rng.uniform(*profile.speed_range)),
        gyro_noise_std=profile.gyro_noise_std,
        roll_noise_std=profile.roll_noise_std,
        orientation=_random_rotation(rng, profile.orientation_spread_deg),
        wobble_std=profile.wobble_std,
        accel_noise_std=profile.accel_noise_std,
        shape_jitter=profile.shape_jitter,
        tempo_jitter=profile.tempo_jitter,
        seed_stream=seed_stream,
    )


def _smooth_noise(rng: np.random.Generator, n: int, std: float, width: float = 0.15) -> np.ndarray:
    """(n, 2) low-frequency noise along a curve; ``width`` is the correlation length in curve fraction."""
    if std == 0:
        return np.zeros((n, 2))
    u = np.linspace(0.0, 1.0, n)
    centers = np.linspace(-width, 1 + width, max(4, int(np.ceil(1.0 / width)) + 3))
    weights = np.exp(-0.5 * ((u[:, None] - centers[None, :]) / width) ** 2)
    weights /= np.sqrt((weights**2).sum(axis=1, keepdims=True))
    return weights @ rng.normal(0.0, std, (len(centers), 2))


def warp_template(template: DigitTemplate, style: ParticipantStyle, rng: np.random.Generator | None = None) -> np.ndarray:
    """Template in canvas pixels after deformation, slant, aspect and scale."""
    p = np.asarray(template.polyline, dtype=float).copy()
    size = style.scale
    if rng is not None:
        p += _smooth_noise(rng, len(p), style.shape_jitter)
        size *= 1.0 + rng.normal(0.0, style.tempo_jitter)
    p -= 0.5
    x = p[:, 0] * style.aspect + np.tan(style.slant) * p[:, 1]
    return np.column_stack([x, p[:, 1]]) * size


def _arc_resample(points: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Points at arc-length fractions ``s`` (each in [0, 1]) along a polyline."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] == 0:
        return np.repeat(points[:1], len(s), axis=0)
    target = np.asarray(s) * cum[-1]
    return np.column_stack([np.interp(target, cum, points[:, j]) for j in range(2)])


def sample_count(template: DigitTemplate, style: ParticipantStyle, tempo: float = 1.0) -> int:
    n = (STEPS_BASE + STEPS_PER_LENGTH * template.arc_length) / (style.speed_factor * tempo)
    return int(np.clip(round(n), MIN_SAMPLES, MAX_SAMPLES))


def _speed_profile(rng: np.random.Generator | None, n: int) -> np.ndarray:
    """Monotone arc fractions s_0 = 0 .. s_n = 1 with eased ends and mild surges."""
    u = (np.arange(n) + 0.5) / n
    v = 0.35 + np.sin(np.pi * u) ** 0.5
    if rng is not None:
        phase = rng.uniform(0.0, 2 * np.pi)
        v *= 1.0 + 0.15 * np.sin(2 * np.pi * rng.uniform(1.0, 3.0) * u + phase)
    s = np.concatenate([[0.0], np.cumsum(v)])
    return s / s[-1]


def _wobble(rng: np.random.Generator, base: Quaternion, n: int, std_deg: float) -> np.ndarray:
    """Base orientation composed with a bounded random walk of small rotations."""
    q = np.tile(np.asarray(base, dtype=float), (n, 1))
    if std_deg == 0 or n == 0:
        return q / np.linalg.norm(q, axis=1, keepdims=True)
    # walk increments scaled so the excursion over the recording is about std_deg
    steps = rng.normal(0.0, np.deg2rad(std_deg) / np.sqrt(n), (n, 3))
    rotvec = np.cumsum(steps, axis=0)
    angle = np.linalg.norm(rotvec, axis=1)
    half = 0.5 * angle
    with np.errstate(invalid="ignore", divide="ignore"):
        k = np.where(angle > 0, np.sin(half) / angle, 0.5)
    dq = np.column_stack([np.cos(half), rotvec * k[:, None]])
    q = hamilton_array(q, dq)
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def generate_recording(
    template: DigitTemplate,
    style: ParticipantStyle,
    config: DifVizConfig = DifVizConfig(),
    seed=0,
    participant_id: str = "P00",
) -> Recording:
    """One recording whose 2-DifViz trajectory traces ``template`` in ``style``."""
    rng = np.random.default_rng(seed)
    jitter = style.shape_jitter > 0 or style.tempo_jitter > 0
    shape_rng = rng if jitter else None
    path = warp_template(template, style, shape_rng)
    tempo = 1.0 + rng.normal(0.0, style.tempo_jitter) if style.tempo_jitter > 0 else 1.0
    n = sample_count(template, style, max(tempo, 0.5))
    pts = _arc_resample(path, _speed_profile(shape_rng, n))
    d = np.diff(pts, axis=0)  # n per-step canvas displacements

    gain = compute_gain(config) * config.frame_duration
    g_world = np.zeros((n, 3))
    g_world[:, :2] = d / gain
    if style.roll_noise_std > 0:
        g_world[:, 2] = rng.normal(0.0, style.roll_noise_std, n)
    quat = _wobble(rng, style.orientation, n, style.wobble_std)
    conj = quat * np.array([1.0, -1.0, -1.0, -1.0])
    gyro = rotate_vectors(conj, g_world)  # q^-1 * g * q
    if style.gyro_noise_std > 0:
        gyro = gyro + rng.normal(0.0, style.gyro_noise_std, gyro.shape)
    accel = rng.normal(0.0, style.accel_noise_std, (n, 3)) if style.accel_noise_std > 0 else np.zeros((n, 3))
    t = np.arange(n) / SAMPLE_RATE_HZ
    return Recording(participant_id, template.digit, t, accel, gyro, quat)


def participant_name(i: int) -> str:
    return f"P{i + 1:02d}"


def generate_dataset(
    n_participants: int,
    per_digit: int,
    noise_profile: str | NoiseProfile = "default",
    seed: int = 0,
    config: DifVizConfig = DifVizConfig(),
) -> Dataset:
    """Participant-major, then repetition-major, then digit order."""
    if n_participants < 1 or per_digit < 1:
        raise DomainError("n_participants and per_digit must be at least 1")
    profile = NOISE_PROFILES[noise_profile] if isinstance(noise_profile, str) else noise_profile
    templates = load_templates()
    root = np.random.SeedSequence(seed)
    recs = []
    for pi, child in enumerate(root.spawn(n_participants)):
        style_seed, rec_seed = child.spawn(2)
        style = draw_style(profile, np.random.default_rng(style_seed), seed_stream=pi)
        streams = rec_seed.spawn(per_digit * 10)
        for rep in range(per_digit):
            for digit in range(10):
                recs.append(
                    generate_recording(
                        templates[digit], style, config, streams[rep * 10 + digit], participant_name(pi)
                    )
                )
    return Dataset(recs)


def with_orientation(style: ParticipantStyle, q: Quaternion) -> ParticipantStyle:
    return replace(style, orientation=q)


def _arc_points(points: np.ndarray, n: int) -> np.ndarray:
    return _arc_resample(np.asarray(points, dtype=float), np.linspace(0.0, 1.0, n))


def reconstruction_nrmse(reconstructed, reference, n: int = 200) -> float:
    """RMS point distance after arc-length resampling and best uniform scale plus shift.

    Expressed as a fraction of the reference bounding-box diagonal.
    """
    a = _arc_points(reconstructed, n)
    b = _arc_points(reference, n)
    a0 = a - a.mean(axis=0)
    b0 = b - b.mean(axis=0)
    denom = float((a0 * a0).sum())
    s = float((a0 * b0).sum()) / denom if denom > 0 else 0.0
    rms = np.sqrt(np.mean(np.sum((s * a0 - b0) ** 2, axis=1)))
    diag = float(np.linalg.norm(b.max(axis=0) - b.min(axis=0)))
    return float(rms / diag) if diag > 0 else float(rms)
