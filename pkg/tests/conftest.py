import cmath

import numpy as np
import pytest

from qcflow import AnnulusWindow, builtin_family_fields

WINDOW = AnnulusWindow(0.5, 2.0)


def annulus_points(seed, n, r=0.5, R=2.0, avoid_seam=0.0):
    """Seeded points with |z| in [r, R], optionally away from the real axis."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        rho = rng.uniform(r, R)
        ang = rng.uniform(0.0, 2.0 * np.pi)
        z = rho * cmath.exp(1j * ang)
        if avoid_seam and abs(z.imag) < avoid_seam:
            continue
        pts.append(z)
    return pts


@pytest.fixture(scope="session")
def family_fields():
    return builtin_family_fields()


@pytest.fixture
def window():
    return WINDOW
