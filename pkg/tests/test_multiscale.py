import numpy as np
import pytest

from algms.dssy import assemble_micro_system
from algms.errors import ConfigError
from algms.linalg import sparse_spd_solve
from algms.mesh import DofLayout, build_micro_mesh
from algms.multiscale import Options, energy_norm, solve_ams, solve_gmsfem
from algms.study import run_case

from conftest import random_mesh


def test_options_validation():
    with pytest.raises(ConfigError):
        Options(moment="svd")
    with pytest.raises(ConfigError):
        Options(LE=0)
    with pytest.raises(ConfigError):
        Options(snapshot_layers=-1)


def _random_problem(rng, n=20, lx=2.0, ly=1.0):
    base = random_mesh(rng, n, n)
    mesh = build_micro_mesh(n, n, base.x_coords * lx, base.y_coords * ly)
    kappa = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), (n, n)))
    layout = DofLayout.for_mesh(mesh)
    system = assemble_micro_system(mesh, layout, kappa, lambda x, y: np.sin(3 * x) + y)
    return mesh, layout, kappa, system


# truncated spectral subspaces amplify the 1e-13 recovery error by their gap
@pytest.mark.parametrize("opts,tol", [(Options(), 1e-9), (Options(LE=3), 1e-6),
                                      (Options(LE=2, moment="harmonic"), 1e-6),
                                      (Options(LE=3, snapshot_layers=1, extra_offline=2), 1e-6)])
def test_ams_equals_gmsfem_on_random_mesh(rng, opts, tol):
    mesh, layout, kappa, system = _random_problem(rng)
    g = solve_gmsfem(system, mesh, kappa, 5, 4, opts)
    a = solve_ams(system, layout, 5, 4, opts, extent=(2.0, 1.0))
    np.testing.assert_allclose(a.recovered.kappa, kappa, rtol=1e-10)
    assert a.space.dim == g.space.dim
    d = g.u - a.u
    assert energy_norm(system.A, d) <= tol * energy_norm(system.A, g.u)


def test_oversampling_does_not_regress():
    base = run_case(0.5, 5, 50, ("gmsfem",), Options(LE=4))[0][0].rel_energy
    for layers in (1, 2):
        e = run_case(0.5, 5, 50, ("gmsfem",), Options(LE=4, snapshot_layers=layers))[0][0].rel_energy
        assert e <= 1.05 * base


def test_energy_error_decreases_with_LE_resolved_regime():
    errs = [run_case(0.5, 5, 50, ("gmsfem",), Options(LE=L), reference="micro")[0][0].rel_energy
            for L in (1, 2, 3, 4, 6, 8, 10)]
    assert np.all(np.diff(errs) <= 1e-12), errs


def test_full_moment_space_solution_is_independent_of_moment_method():
    a = run_case(0.5, 5, 50, ("gmsfem",), Options())[0][0]
    b = run_case(0.5, 5, 50, ("gmsfem",), Options(moment="harmonic"))[0][0]
    assert a.rel_energy == pytest.approx(b.rel_energy, rel=1e-9)


def test_result_accessors(rng):
    mesh, layout, kappa, system = _random_problem(rng, n=12, lx=1.0)
    res = solve_gmsfem(system, mesh, kappa, 4, 4)
    u_h = sparse_spd_solve(system.A, system.b)
    assert res.mesh is res.space.macro.micro
    assert energy_norm(system.A, res.u) <= energy_norm(system.A, u_h) * (1 + 1e-12)
    assert res.info["dim"] == res.space.dim
