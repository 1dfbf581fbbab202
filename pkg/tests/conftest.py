import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def bf():
    from torusperc.kernel import PRESETS
    return PRESETS["bargmann_fock"]


@pytest.fixture(scope="session")
def bf64(bf):
    from torusperc.grid import TorusGrid
    from torusperc.kernel import make_kernel
    return make_kernel(bf, TorusGrid(64, 16))


@pytest.fixture(scope="session")
def bf24(bf):
    from torusperc.grid import TorusGrid
    from torusperc.kernel import make_kernel
    return make_kernel(bf, TorusGrid(24, 6))


def bandlimited(n, seed, modes=3):
    """Smooth periodic perturbation with sup norm 1."""
    rng = np.random.default_rng(seed)
    x = np.arange(n) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    v = np.zeros((n, n))
    for _ in range(modes):
        k1, k2 = rng.integers(-2, 3, size=2)
        v += rng.normal() * np.cos(2 * np.pi * (k1 * X + k2 * Y) + rng.uniform(0, 2 * np.pi))
    return v / np.max(np.abs(v))


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
