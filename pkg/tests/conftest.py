"""Shared fixtures: deterministic oracle scenes reused across modules."""

import numpy as np
import pytest

from camloc.geometry import Rotation
from camloc.synthetic import generate_scene


@pytest.fixture(scope="session")
def scene0():
    return generate_scene(0)


@pytest.fixture(scope="session")
def scene_batch():
    """Twenty deterministic scenes for oracle round trips."""
    return [generate_scene(seed) for seed in range(20)]


def random_rotation(rng: np.random.Generator) -> Rotation:
    """Uniform-ish random rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return Rotation(q)
