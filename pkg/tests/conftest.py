import numpy as np
import pytest
from hypothesis import settings

from bubblescatter import (BubbleSpec, CausalPolyExp, IncidentField, Medium, PointSource, ZeroPulse,
                           build_cluster)

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")


def make_cluster(centers, delta=0.01, k_c_bar=3.0, rho_m=1.0, k_m=1.0, **kw):
    medium = Medium(rho_m, k_m)
    return build_cluster(medium, [BubbleSpec(tuple(c), delta, k_c_bar=k_c_bar, **kw) for c in centers])


def dimer_centers(delta=0.01, ratio=5.0, base=(3.0, 0.0, 0.0), axis=(0.0, 1.0, 0.0)):
    """Two bubbles a distance ratio*delta apart, symmetric about ``base``."""
    base, axis = np.asarray(base), np.asarray(axis) / np.linalg.norm(axis)
    h = 0.5 * ratio * delta
    return [base - h * axis, base + h * axis]


def tetrahedron_centers(delta=0.01, ratio=5.0, base=(3.0, 0.0, 0.0)):
    """Regular tetrahedron of edge ratio*delta centred at ``base``."""
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    edge = ratio * delta
    return list(np.asarray(base) + v * edge / (2 * np.sqrt(2)))


def incident(c, position=(0.0, 0.0, 0.0), pulse=None):
    pulse = CausalPolyExp(10, 4.0) if pulse is None else pulse
    return IncidentField(PointSource(position, pulse), c.medium)


@pytest.fixture
def dimer():
    return make_cluster(dimer_centers())


@pytest.fixture
def dimer_field(dimer):
    return incident(dimer)


@pytest.fixture
def zero_field(dimer):
    return incident(dimer, pulse=ZeroPulse())


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
