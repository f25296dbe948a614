import math

import numpy as np
import pytest

from qwigner import BlochState, DensityMatrix

# Reference density matrices measured at four delays of a dephasing run
# (averaged entries), with their published purity and Bloch-radius columns.
DEPHASING_RUN = {
    0.0: (
        np.array([[0.486, -0.033 - 0.489j], [-0.033 + 0.489j, 0.514]]),
        0.981,
        0.981,
    ),
    2.0: (
        np.array([[0.503, 0.207 - 0.330j], [0.207 + 0.330j, 0.497]]),
        0.804,
        0.779,
    ),
    5.0: (
        np.array([[0.507, 0.321 - 0.085j], [0.321 + 0.085j, 0.493]]),
        0.721,
        0.664,
    ),
    6.3: (
        np.array([[0.507, -0.200 + 0.135j], [-0.200 - 0.135j, 0.493]]),
        0.617,
        0.483,
    ),
}

# Bloch coordinates of the nearly pure state the measured run starts from.
INITIAL_STATE = BlochState(0.509 * math.pi, 0.521 * math.pi, 0.981)


@pytest.fixture
def dephasing_run():
    return {t: (DensityMatrix(m), p, r) for t, (m, p, r) in DEPHASING_RUN.items()}


def random_bloch(rng: np.random.Generator, pure: bool = False, r_min: float = 0.0) -> BlochState:
    """Uniform direction on the sphere; radius uniform in [r_min, 1]."""
    theta = math.acos(rng.uniform(-1.0, 1.0))
    phi = rng.uniform(0.0, 2.0 * math.pi)
    r = 1.0 if pure else rng.uniform(r_min, 1.0)
    return BlochState(theta, phi, r)
