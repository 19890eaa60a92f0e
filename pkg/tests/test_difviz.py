import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airscript.difviz import (
    CARRY,
    PER_STEP,
    DifVizConfig,
    accumulate,
    compute_gain,
    differentials,
    extract_pitch_yaw,
    real_differentials,
    rotate_to_world,
    trajectory,
)
from airscript.errors import DomainError
from airscript.quatmath import Quaternion, Vec3, from_axis_angle
from airscript.render import render_raster, render_svg, save_rendering
from conftest import make_recording, random_unit_quats


def scalar_steps(gyro, quat, k, f):
    """Plain-float transcription: rotate, drop roll, scale, round half away, sum from the origin."""
    pts = [(0, 0)]
    for (gx, gy, gz), (w, x, y, z) in zip(gyro, quat):
        n = math.sqrt(w * w + x * x + y * y + z * z)
        w, x, y, z = w / n, x / n, y / n, z / n
        # t = q * (0, g)
        tw = -x * gx - y * gy - z * gz
        tx = w * gx + y * gz - z * gy
        ty = w * gy - x * gz + z * gx
        tz = w * gz + x * gy - y * gx
        # r = t * conj(q); vector part only
        rx = -tw * x + tx * w - ty * z + tz * y
        ry = -tw * y + tx * z + ty * w - tz * x
        steps = []
        for comp in (rx, ry):
            val = comp * k * f
            steps.append(int(math.copysign(math.floor(abs(val) + 0.5), val)))
        px, py = pts[-1]
        pts.append((px + steps[0], py + steps[1]))
    return np.array(pts)


def test_rotate_to_world_examples():
    assert rotate_to_world(Vec3(10, -5, 3), Quaternion(1, 0, 0, 0)) == Vec3(10, -5, 3)
    g = rotate_to_world(Vec3(10, 0, 0), from_axis_angle([0, 0, 1], math.pi))
    np.testing.assert_allclose(g, (-10, 0, 0), atol=1e-12)


def test_extract_pitch_yaw():
    assert extract_pitch_yaw(Vec3(1.0, 2.0, 3.0)) == (1.0, 2.0)
    assert extract_pitch_yaw(Vec3(0, 0, 99)) == (0.0, 0.0)


def test_gain():
    assert compute_gain(DifVizConfig()) == 5
    assert compute_gain(DifVizConfig(sensitivity=5, pixel_density=2)) == 10


def test_config_validation():
    for bad in (dict(sensitivity=0), dict(pixel_density=-1), dict(frame_duration=0), dict(rounding="floor")):
        with pytest.raises(DomainError):
            DifVizConfig(**bad)
    cfg = DifVizConfig(rounding=CARRY)
    assert DifVizConfig.from_dict(cfg.to_dict()) == cfg


def test_gain_times_frame_arithmetic():
    rec = make_recording([[100, -50, 7]] * 2)
    d = differentials(rec, DifVizConfig(sensitivity=10))
    assert d.tolist() == [[20, -10], [20, -10]]


def test_zero_gyro_gives_zero_steps():
    rec = make_recording(np.zeros((5, 3)))
    assert not differentials(rec).any()


def test_pure_roll_is_dropped():
    q = from_axis_angle([1, 2, 3], 0.7)
    # world-frame roll only, expressed in the device frame
    world = np.tile([0.0, 0.0, 80.0], (6, 1))
    qc = np.array([q.w, -q.x, -q.y, -q.z])
    from airscript.quatmath import rotate_vectors

    dev = rotate_vectors(np.tile(qc, (6, 1)), world)
    assert not differentials(make_recording(dev, [q])).any()


def test_accumulate_examples():
    assert accumulate([(1, 0), (1, 0), (0, 1)]).tolist() == [[0, 0], [1, 0], [2, 0], [2, 1]]
    assert accumulate([]).tolist() == [[0, 0]]


@given(st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), max_size=40))
def test_accumulate_telescopes(diffs):
    c = accumulate(diffs)
    assert len(c) == len(diffs) + 1
    assert c[0].tolist() == [0, 0]
    assert c[-1].tolist() == np.sum(np.array(diffs, dtype=int).reshape(-1, 2), axis=0).tolist()


def test_matches_scalar_oracle_on_random_recordings():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(2, 60))
        gyro = rng.normal(scale=120, size=(n, 3))
        quat = random_unit_quats(rng, n)
        cfg = DifVizConfig(sensitivity=float(rng.uniform(1, 10)), pixel_density=float(rng.uniform(0.5, 2)))
        got = trajectory(make_recording(gyro, quat), cfg)
        want = scalar_steps(gyro, quat, cfg.sensitivity * cfg.pixel_density, cfg.frame_duration)
        assert np.array_equal(got, want)


def test_lengths_and_origin():
    rng = np.random.default_rng(2)
    rec = make_recording(rng.normal(size=(17, 3)) * 50, random_unit_quats(rng, 17))
    assert differentials(rec).shape == (17, 2)
    c = trajectory(rec)
    assert c.shape == (18, 2) and c[0].tolist() == [0, 0]
    assert c.dtype.kind == "i"


def test_gain_doubling_doubles_real_steps():
    rng = np.random.default_rng(3)
    rec = make_recording(rng.normal(size=(20, 3)) * 50, random_unit_quats(rng, 20))
    a = real_differentials(rec, DifVizConfig(sensitivity=3))
    b = real_differentials(rec, DifVizConfig(sensitivity=6))
    assert np.array_equal(2 * a, b)


def test_carry_mode_has_no_drift():
    # 0.4 px per step: per-step rounding loses everything, carry keeps it
    rec = make_recording([[4.0, 0.0, 0.0]] * 50)
    assert trajectory(rec, DifVizConfig(rounding=PER_STEP))[-1].tolist() == [0, 0]
    assert trajectory(rec, DifVizConfig(rounding=CARRY))[-1].tolist() == [20, 0]


def test_half_rounds_away_from_zero():
    rec = make_recording([[5.0, -5.0, 0.0], [15.0, -25.0, 0.0]])
    assert differentials(rec).tolist() == [[1, -1], [2, -3]]


# -- rendering ---------------------------------------------------------------


def test_svg_square_path():
    square = [(0, 0), (10, 0), (10, 10), (0, 10)]
    doc = render_svg(square)
    root = ET.fromstring(doc)
    paths = [el for el in root.iter() if el.tag.endswith("path")]
    assert len(paths) == 1
    d = paths[0].get("d").replace(",", " ").split()
    assert d[0] == "M"
    # the path visits each corner (as segment end points) in order
    ends = []
    tokens = iter(d)
    for tok in tokens:
        if tok == "M":
            ends.append((float(next(tokens)), float(next(tokens))))
        elif tok == "C":
            vals = [float(next(tokens)) for _ in range(6)]
            ends.append((vals[4], vals[5]))
    assert len(ends) == 4
    xs = [e[0] for e in ends]
    ys = [e[1] for e in ends]
    # right then up (screen y decreases), then left
    assert xs[1] > xs[0] and ys[2] < ys[1] and xs[3] < xs[2]


def test_svg_needs_two_points():
    with pytest.raises(DomainError):
        render_svg([(0, 0)])


def test_svg_digit_one_is_tall():
    from airscript.synthgen import ParticipantStyle, generate_recording, load_templates

    rec = generate_recording(load_templates()[1], ParticipantStyle(), seed=0)
    root = ET.fromstring(render_svg(trajectory(rec)))
    d = [el for el in root.iter() if el.tag.endswith("path")][0].get("d")
    nums = np.array([float(t) for t in d.replace(",", " ").split() if t not in ("M", "C")]).reshape(-1, 2)
    ext = nums.max(axis=0) - nums.min(axis=0)
    assert ext[1] > ext[0]


def test_raster_horizontal_line():
    img = render_raster([(0, 0), (10, 0), (20, 0)], size=64)
    assert img.shape == (64, 64)
    rows = np.flatnonzero(img.max(axis=1) > 0)
    assert rows.max() - rows.min() <= 3
    cols = np.flatnonzero(img.max(axis=0) > 0)
    assert cols.max() - cols.min() > 0.75 * 64


def test_raster_degenerate_is_centred_dot():
    img = render_raster([(3, 3), (3, 3)], size=32)
    lit = np.argwhere(img > 0)
    assert 0 < len(lit) <= 16
    np.testing.assert_allclose(lit.mean(axis=0), (15.5, 15.5), atol=1)


def test_raster_rejects_bad_input():
    with pytest.raises(DomainError):
        render_raster([(0, 0)])
    with pytest.raises(DomainError):
        render_raster([(0, 0), (1, 1)], size=8)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.integers(2, 7))
def test_raster_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    coords = np.cumsum(rng.integers(-6, 7, size=(25, 2)), axis=0)
    assert np.array_equal(render_raster(coords), render_raster(coords * c))


def test_raster_against_brute_force():
    rng = np.random.default_rng(11)
    coords = np.cumsum(rng.integers(-5, 6, size=(12, 2)), axis=0)
    size, width, fill = 24, 2.0, 0.8
    pts = coords.astype(float)
    lo, ext = pts.min(axis=0), np.ptp(pts, axis=0)
    u = (pts - lo - ext / 2) / ext.max()
    p = np.column_stack([size / 2 + u[:, 0] * fill * size, size / 2 - u[:, 1] * fill * size])
    want = np.zeros((size, size))
    for i in range(size):
        for j in range(size):
            c = np.array([j + 0.5, i + 0.5])
            best = np.inf
            for a, b in zip(p[:-1], p[1:]):
                ab = b - a
                t = 0.0 if ab @ ab == 0 else np.clip((c - a) @ ab / (ab @ ab), 0, 1)
                best = min(best, np.linalg.norm(c - a - t * ab))
            want[i, j] = np.clip(width / 2 + 0.5 - best, 0, 1)
    np.testing.assert_allclose(render_raster(coords, size=size), want, atol=1e-12)


def test_save_rendering(tmp_path):
    coords = [(0, 0), (5, 5), (10, 0)]
    save_rendering(coords, tmp_path / "a.svg")
    save_rendering(coords, tmp_path / "a.png", size=64)
    ET.parse(tmp_path / "a.svg")
    from PIL import Image

    assert Image.open(tmp_path / "a.png").size == (64, 64)
    with pytest.raises(DomainError):
        save_rendering(coords, tmp_path / "a.gif")
