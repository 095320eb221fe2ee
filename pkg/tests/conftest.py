import math

import numpy as np
import pytest

from textshape.geometry import Polygon
from textshape.synth import synthetic_corpus


@pytest.fixture
def unit_square():
    return Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])


@pytest.fixture
def square2():
    return Polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])


@pytest.fixture
def l_hexagon():
    return Polygon([(0, 0), (4, 0), (4, 1), (1, 1), (1, 4), (0, 4)])


@pytest.fixture
def regular_hexagon():
    pts = [
        (3 + 2 * math.cos(a), 3 + 2 * math.sin(a))
        for a in np.linspace(0, 2 * math.pi, 6, endpoint=False)
    ]
    return Polygon(pts)


@pytest.fixture
def horseshoe():
    """Thin annular band spanning 300 degrees; its centroid falls in the
    opening, outside the band."""
    outer = [
        (10 * math.cos(a), 10 * math.sin(a))
        for a in np.linspace(-2.6, 2.6, 40)
    ]
    inner = [
        (8 * math.cos(a), 8 * math.sin(a))
        for a in np.linspace(2.6, -2.6, 40)
    ]
    return Polygon(outer + inner)


@pytest.fixture(scope="session")
def corpus200():
    """The fixed 200-instance synthetic corpus with per-instance kinds."""
    return synthetic_corpus(n_instances=200, seed=0)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    print(f"\nacceptance[{status}] {name}")
