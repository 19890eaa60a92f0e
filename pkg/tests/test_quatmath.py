import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airscript.errors import DomainError
from airscript.quatmath import (
    IDENTITY,
    Quaternion,
    Vec3,
    from_axis_angle,
    hamilton,
    hamilton_array,
    inverse,
    normalize,
    rotate_vector,
    rotate_vectors,
)
from conftest import random_unit_quats, rotation_matrix

finite = st.floats(-10, 10, allow_nan=False)
quats = st.tuples(finite, finite, finite, finite).filter(lambda q: math.hypot(*q) > 1e-3).map(lambda q: Quaternion(*q))
unit_quats = quats.map(normalize)
vecs = st.tuples(finite, finite, finite)


def left_matrix(a):
    """4x4 matrix L(a) with hamilton(a, b) = L(a) @ b."""
    w, x, y, z = a
    return np.array([[w, -x, -y, -z], [x, w, -z, y], [y, z, w, -x], [z, -y, x, w]])


def test_identity_is_neutral():
    q = Quaternion(0.3, 0.1, 0.2, 0.9)
    assert hamilton(IDENTITY, q) == q
    assert hamilton(q, IDENTITY) == q


def test_basis_products():
    i, j, k = Quaternion(0, 1, 0, 0), Quaternion(0, 0, 1, 0), Quaternion(0, 0, 0, 1)
    assert hamilton(i, j) == k
    assert hamilton(j, k) == i
    assert hamilton(k, i) == j
    assert hamilton(j, i) == Quaternion(0, 0, 0, -1)
    assert hamilton(i, i) == Quaternion(-1, 0, 0, 0)


@given(quats, quats)
def test_hamilton_matches_matrix_form(a, b):
    np.testing.assert_allclose(hamilton(a, b), left_matrix(a) @ np.array(b), atol=1e-12, rtol=1e-12)


@given(unit_quats, unit_quats, unit_quats)
def test_hamilton_associative(a, b, c):
    np.testing.assert_allclose(hamilton(hamilton(a, b), c), hamilton(a, hamilton(b, c)), atol=1e-12)


def test_inverse_examples():
    assert inverse(IDENTITY) == IDENTITY
    assert inverse(Quaternion(0, 1, 0, 0)) == Quaternion(0, -1, 0, 0)
    with pytest.raises(DomainError):
        inverse(Quaternion(0, 0, 0, 0))


@given(quats)
def test_inverse_undoes_product(q):
    np.testing.assert_allclose(hamilton(inverse(q), q), IDENTITY, atol=1e-12)


def test_normalize_examples():
    assert normalize(Quaternion(2, 0, 0, 0)) == IDENTITY
    np.testing.assert_allclose(normalize(Quaternion(0, 0, 3, 4)), (0, 0, 0.6, 0.8), atol=1e-15)
    with pytest.raises(DomainError):
        normalize(Quaternion(0, 0, 0, 0))


@given(quats)
def test_normalize_gives_unit(q):
    assert abs(normalize(q).norm() - 1.0) < 1e-12


def test_rotate_examples():
    assert rotate_vector(IDENTITY, Vec3(1, 2, 3)) == Vec3(1, 2, 3)
    s = math.sqrt(2) / 2
    np.testing.assert_allclose(rotate_vector(Quaternion(s, 0, 0, s), Vec3(1, 0, 0)), (0, 1, 0), atol=1e-15)


def test_rotate_rejects_bad_norms():
    with pytest.raises(DomainError):
        rotate_vector(Quaternion(0, 0, 0, 0), Vec3(1, 0, 0))
    with pytest.raises(DomainError):
        rotate_vector(Quaternion(1.01, 0, 0, 0), Vec3(1, 0, 0))
    # slight drift is absorbed
    v = rotate_vector(Quaternion(1.0005, 0, 0, 0), Vec3(1, 2, 3))
    np.testing.assert_allclose(v, (1, 2, 3), atol=1e-12)


def test_rotate_matches_matrix_oracle():
    rng = np.random.default_rng(0)
    qs = random_unit_quats(rng, 1000)
    vs = rng.normal(scale=100, size=(1000, 3))
    for q, v in zip(qs, vs):
        np.testing.assert_allclose(rotate_vector(Quaternion(*q), Vec3(*v)), rotation_matrix(q) @ v, atol=1e-9)


@given(unit_quats, vecs)
def test_rotation_preserves_norm(q, v):
    assert abs(Vec3(*rotate_vector(q, Vec3(*v))).norm() - math.sqrt(sum(c * c for c in v))) < 1e-9


@given(unit_quats, unit_quats, vecs)
def test_rotation_composition(q1, q2, v):
    lhs = rotate_vector(q2, rotate_vector(q1, Vec3(*v)))
    rhs = rotate_vector(normalize(hamilton(q2, q1)), Vec3(*v))
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_array_forms_match_scalar(seed):
    rng = np.random.default_rng(seed)
    a, b = random_unit_quats(rng, 5), random_unit_quats(rng, 5)
    v = rng.normal(size=(5, 3))
    for i in range(5):
        np.testing.assert_allclose(hamilton_array(a[i], b[i]), hamilton(Quaternion(*a[i]), Quaternion(*b[i])), atol=1e-15)
        np.testing.assert_allclose(rotate_vectors(a, v)[i], rotate_vector(Quaternion(*a[i]), Vec3(*v[i])), atol=1e-12)


def test_axis_angle():
    q = from_axis_angle([0, 0, 2], math.pi)
    np.testing.assert_allclose(rotate_vector(q, Vec3(10, 0, 0)), (-10, 0, 0), atol=1e-12)
    assert from_axis_angle([0, 0, 0], 1.0) == IDENTITY
