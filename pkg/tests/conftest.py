import numpy as np
import pytest

from airscript.datastore import Recording


def make_recording(gyro, quat=None, label=3, participant="P01", accel=None):
    gyro = np.asarray(gyro, dtype=float).reshape(-1, 3)
    n = len(gyro)
    if quat is None:
        quat = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
    quat = np.asarray(quat, dtype=float).reshape(-1, 4)
    if len(quat) == 1:
        quat = np.repeat(quat, n, axis=0)
    if accel is None:
        accel = np.zeros((n, 3))
    return Recording(participant, label, np.arange(n) / 50.0, accel, gyro, quat)


def random_unit_quats(rng, n):
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def rotation_matrix(q):
    """3x3 rotation matrix of a unit quaternion, written out from the standard formula."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@pytest.fixture(scope="session")
def small_dataset():
    from airscript.synthgen import generate_dataset

    return generate_dataset(3, 2, "default", seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
