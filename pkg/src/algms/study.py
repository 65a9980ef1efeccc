"""Error norms of micro-DOF fields and the convergence-study driver."""
import csv
import logging
import time
from dataclasses import asdict, dataclass

import numpy as np

from .dssy import assemble_micro_system, gauss_rule, reference_basis
from .linalg import sparse_spd_solve
from .mesh import DofLayout, MicroMesh, uniform_mesh
from .multiscale import AMS, GMSFEM, Options, solve_ams, solve_gmsfem
from .problem import Benchmark

log = logging.getLogger(__name__)

STUDY_HEADER = ["eps", "invH", "invh", "dim", "mode", "rel_energy", "rel_l2", "seconds"]
DEFAULT_EPS = (0.1, 0.2, 0.5)
DEFAULT_LEVELS = ((5, 50), (10, 100), (20, 200), (40, 400))


def _quadrature(mesh: MicroMesh, order):
    s, t, w = gauss_rule(order)
    vals, grads = reference_basis(s, t)
    hx, hy = mesh.hx, mesh.hy
    xc = 0.5 * (mesh.x_coords[1:] + mesh.x_coords[:-1])
    yc = 0.5 * (mesh.y_coords[1:] + mesh.y_coords[:-1])
    X = xc[None, :, None] + 0.5 * hx[None, :, None] * s
    Y = yc[:, None, None] + 0.5 * hy[:, None, None] * t
    X, Y = np.broadcast_arrays(X, Y)
    W = 0.25 * (hy[:, None] * hx[None, :])[..., None] * w
    return X, Y, W, vals, grads


def evaluate_field(mesh: MicroMesh, layout: DofLayout, u, order=5):
    """Values and gradients of a DSSY field at the Gauss points of every micro element.

    Returns ``X, Y, W, U, Ux, Uy``, each of shape (ny, nx, order**2).
    """
    X, Y, W, vals, grads = _quadrature(mesh, order)
    dofs = layout.element_dofs
    coef = np.where(dofs >= 0, np.asarray(u)[np.maximum(dofs, 0)], 0.0)
    U = np.einsum("kjl,lq->kjq", coef, vals)
    Ux = np.einsum("kjl,lq->kjq", coef, grads[:, 0, :]) * (2.0 / mesh.hx)[None, :, None]
    Uy = np.einsum("kjl,lq->kjq", coef, grads[:, 1, :]) * (2.0 / mesh.hy)[:, None, None]
    return X, Y, W, U, Ux, Uy


def _ratio(num, den):
    # 0/0 -> 0
    if den == 0.0:
        return float(np.sqrt(num))
    return float(np.sqrt(num / den))


def broken_energy_error(mesh, layout, kappa, u, grad_exact, order=5):
    """Relative broken energy error of field ``u`` against an analytic gradient.

    ``kappa`` is the per-element coefficient (ny, nx) weighting the norm.
    """
    X, Y, W, _, Ux, Uy = evaluate_field(mesh, layout, u, order)
    gx, gy = grad_exact(X, Y)
    kw = np.asarray(kappa)[..., None] * W
    num = np.sum(kw * ((Ux - gx) ** 2 + (Uy - gy) ** 2))
    den = np.sum(kw * (gx ** 2 + gy ** 2))
    return _ratio(num, den)


def l2_error(mesh, layout, u, exact, order=5):
    X, Y, W, U, _, _ = evaluate_field(mesh, layout, u, order)
    ue = exact(X, Y)
    return _ratio(np.sum(W * (U - ue) ** 2), np.sum(W * ue ** 2))


def discrete_errors(mesh, layout, kappa, u, ref, order=5):
    """Relative broken energy and L2 errors of ``u`` against a discrete reference field."""
    X, Y, W, U, Ux, Uy = evaluate_field(mesh, layout, u, order)
    _, _, _, R, Rx, Ry = evaluate_field(mesh, layout, ref, order)
    kw = np.asarray(kappa)[..., None] * W
    e = _ratio(np.sum(kw * ((Ux - Rx) ** 2 + (Uy - Ry) ** 2)), np.sum(kw * (Rx ** 2 + Ry ** 2)))
    l2 = _ratio(np.sum(W * (U - R) ** 2), np.sum(W * R ** 2))
    return e, l2


@dataclass
class ErrorReport:
    eps: float
    invH: int
    invh: int
    dim: int
    mode: str
    rel_energy: float
    rel_l2: float
    seconds: float

    def row(self):
        d = asdict(self)
        d["rel_energy"] = f"{self.rel_energy:.6e}"
        d["rel_l2"] = f"{self.rel_l2:.6e}"
        d["seconds"] = f"{self.seconds:.3f}"
        return [d[k] for k in STUDY_HEADER]


def benchmark_system(eps, invh, order=5):
    """Micro mesh, sampled coefficient and assembled system of the benchmark problem."""
    problem = Benchmark(eps)
    mesh = uniform_mesh(invh, invh)
    layout = DofLayout.for_mesh(mesh)
    kappa = problem.sample_kappa(mesh)
    system = assemble_micro_system(mesh, layout, kappa, problem.f, order)
    return problem, mesh, layout, kappa, system


def run_case(eps, invH, invh, modes=(GMSFEM, AMS), options=None, reference="exact"):
    """One study row per mode for a single (eps, H, h) configuration.

    ``reference="exact"`` measures against the analytic solution,
    ``"micro"`` against the micro-scale DSSY solution.
    """
    if invh % invH:
        raise ValueError(f"1/h={invh} is not a multiple of 1/H={invH}")
    block = invh // invH
    problem, mesh, layout, kappa, system = benchmark_system(eps, invh)
    ref = sparse_spd_solve(system.A, system.b) if reference == "micro" else None
    out = []
    results = {}
    for mode in modes:
        t0 = time.perf_counter()
        if mode == GMSFEM:
            res = solve_gmsfem(system, mesh, kappa, block, block, options)
        elif mode == AMS:
            res = solve_ams(system, layout, block, block, options)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        seconds = time.perf_counter() - t0
        cells = res.space.cells
        emesh = res.mesh
        if ref is None:
            e = broken_energy_error(emesh, layout, cells.kappa, res.u, problem.grad_u)
            l2 = l2_error(emesh, layout, res.u, problem.u)
        else:
            e, l2 = discrete_errors(emesh, layout, cells.kappa, res.u, ref)
        log.info("eps=%g 1/H=%d 1/h=%d %s: dim=%d energy=%.4g l2=%.4g (%.1fs)",
                 eps, invH, invh, mode, res.space.dim, e, l2, seconds)
        out.append(ErrorReport(eps, invH, invh, res.space.dim, mode, e, l2, seconds))
        results[mode] = res
    return out, results


def run_study(eps_list=DEFAULT_EPS, levels=DEFAULT_LEVELS, modes=(GMSFEM, AMS),
              options: Options | None = None, reference="exact"):
    rows = []
    for eps in eps_list:
        for invH, invh in levels:
            reports, _ = run_case(eps, invH, invh, modes, options, reference)
            rows.extend(reports)
    return rows


def write_study_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STUDY_HEADER)
        for r in rows:
            w.writerow(r.row())
