import sys

import numpy as np
import pytest

from algms.mesh import DofLayout, build_micro_mesh


def random_mesh(rng, nx, ny, spread=3.0):
    """Tensor mesh of the unit square with log-uniform random cell sizes."""
    hx = np.exp(rng.uniform(0, np.log(spread), nx))
    hy = np.exp(rng.uniform(0, np.log(spread), ny))
    x = np.concatenate([[0.0], np.cumsum(hx / hx.sum())])
    y = np.concatenate([[0.0], np.cumsum(hy / hy.sum())])
    x[-1] = y[-1] = 1.0
    return build_micro_mesh(nx, ny, x, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_case(rng):
    """12x12 random mesh, log-uniform kappa, layout."""
    mesh = random_mesh(rng, 12, 12)
    kappa = np.exp(rng.uniform(np.log(0.1), np.log(10.0), (12, 12)))
    return mesh, DofLayout.for_mesh(mesh), kappa


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
