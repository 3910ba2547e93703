import numpy as np
import pytest

from hilbertflags import Ellipsoid, cube, regular_polygon, simplex


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def disk():
    return Ellipsoid.ball(2)


@pytest.fixture
def ellipse():
    return Ellipsoid([0.0, 0.0], [2.0, 1.0])


@pytest.fixture
def triangle():
    return simplex(2)


@pytest.fixture
def square():
    return cube(2)


@pytest.fixture
def pentagon():
    return regular_polygon(5)


@pytest.fixture
def tetrahedron():
    return simplex(3)


def random_interior(body, n, rng, shrink=0.95):
    """Points of ``shrink * body`` about its certificate center."""
    from hilbertflags.convex_core import sample_uniform, scale_about
    c = body.certificate.center
    return sample_uniform(scale_about(body, c, shrink), n, rng)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
