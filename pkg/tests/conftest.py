import numpy as np
import pytest

from metricbundle import (
    flat_section,
    sphere_section,
    torus_section,
    conformal_flat_section,
)


@pytest.fixture(scope="session")
def sphere():
    return sphere_section(1.0)


@pytest.fixture(scope="session")
def torus():
    return torus_section(2.0, 1.0)


@pytest.fixture(scope="session")
def flat():
    return flat_section()


@pytest.fixture(scope="session")
def conformal_flat():
    return conformal_flat_section()


@pytest.fixture(scope="session")
def builtin_sections(flat, sphere, torus, conformal_flat):
    return [flat, sphere, torus, conformal_flat]


def interior_points(chart, count, seed, margin_frac=0.1):
    """Random points comfortably inside the chart box."""
    rng = np.random.default_rng(seed)
    lows = np.array([lo for lo, _ in chart.domain])
    widths = np.array([hi - lo for lo, hi in chart.domain])
    return lows + widths * (margin_frac + (1 - 2 * margin_frac) * rng.random((count, chart.dim)))
