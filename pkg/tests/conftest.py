import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

# acceptance results, printed once at the end of the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line[1])


def rotation_angle(qa, qb):
    """Angle in radians between two rotations given as quaternions."""
    d = abs(float(np.dot(qa, qb))) / (np.linalg.norm(qa) * np.linalg.norm(qb))
    return 2.0 * np.arccos(min(1.0, d))


def pose_error(a, b):
    """(max quaternion component delta up to sign, max translation delta)."""
    qa, qb = np.asarray(a.q), np.asarray(b.q)
    dq = min(np.abs(qa - qb).max(), np.abs(qa + qb).max())
    return dq, np.abs(np.asarray(a.t) - np.asarray(b.t)).max()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
