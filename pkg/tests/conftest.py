import sys

import numpy as np
import pytest

from prast.geometry import Camera
from prast.scene import load_scene


def random_space_time_triangles(rng, n, depth=(0.02, 4.0), spread=1.5, motion=0.4):
    """Camera-space triangles with random size, motion and depth change.

    Returns (start, end), each (n, 3, 3).  Some vertices land behind the
    near plane so clipping paths get exercised too.
    """
    c = rng.uniform(-spread, spread, (n, 3, 3))
    c[..., 2] = -rng.uniform(*depth, (n, 3))
    size = rng.uniform(0.05, 1.0, (n, 1, 1))
    centre = c[:, :1]
    c = centre + (c - centre) * size
    e = c + rng.normal(0, motion, (n, 1, 3)) + rng.normal(0, motion / 4, (n, 3, 3))
    return c, e


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def camera():
    return Camera(60.0, 1.0, 0.05)


@pytest.fixture(scope="session")
def scenes():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_scene(name)
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    cases = sys.modules.get("acceptance_cases")
    if cases is None or not cases.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(cases.RESULTS, key=int):
        terminalreporter.write_line(cases.RESULTS[cid])
