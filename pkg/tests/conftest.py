import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import finitegap as fg


@pytest.fixture(scope="session")
def eq_single():
    return fg.solve_equilibrium(fg.make_band_set([-2.0, 2.0]))


@pytest.fixture(scope="session")
def eq_twoband():
    return fg.solve_equilibrium(fg.make_band_set([-2.0, -1.0, 1.0, 2.0]))


@pytest.fixture(scope="session")
def period2_set():
    s5 = np.sqrt(5.0)
    return fg.make_band_set([-s5, -1.0, 1.0, s5])


@pytest.fixture(scope="session")
def period2_torus(period2_set):
    dd = fg.dirichlet_data(period2_set, [(0.0, -1)])
    return fg.torus_jacobi(period2_set, dd, 110)


def random_band_set(rng, n_gaps):
    """Random set with controlled separation (relative features >= ~5%)."""
    lo = rng.uniform(-3, -1)
    pts = [lo]
    for _ in range(2 * n_gaps + 1):
        pts.append(pts[-1] + rng.uniform(0.3, 1.5))
    return fg.make_band_set(pts)
