"""End-to-end coarse solves: GMsFEM from known data and AMS from the matrix alone."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .coarse import CoarseBasis, CoarseSolution, CoarseSystem, assemble_coarse, build_coarse_basis, solve_coarse
from .dssy import CellData, SparseSystem
from .errors import ConfigError
from .local_spaces import offline_space, oversampled_snapshot_space
from .mesh import DofLayout, MacroMesh, MicroMesh, build_macro_mesh
from .moments import moment_space_harmonic, moment_space_traces
from .recovery import RecoveredField, recover_field

log = logging.getLogger(__name__)

GMSFEM = "gmsfem"
AMS = "ams"


@dataclass
class Options:
    """Knobs of the coarse-space construction.

    LE: moment modes kept per macro edge (default: all micro edges on it).
    moment: ``"trace"`` or ``"harmonic"``.
    snapshot_layers / moment_layers: oversampling rings for snapshots and for
    the harmonic moment problems.
    extra_offline: offline modes kept beyond ``sum of L(E')`` over the element edges.
    """

    LE: int | None = None
    moment: str = "trace"
    snapshot_layers: int = 0
    moment_layers: int = 1
    extra_offline: int = 0

    def __post_init__(self):
        if self.moment not in ("trace", "harmonic"):
            raise ConfigError(f"unknown moment method {self.moment!r}")
        if self.LE is not None and self.LE < 1:
            raise ConfigError("LE must be >= 1")
        if self.snapshot_layers < 0 or self.moment_layers < 0 or self.extra_offline < 0:
            raise ConfigError("layers and extra_offline must be >= 0")


@dataclass
class CoarseSpace:
    macro: MacroMesh
    cells: CellData
    snapshots: dict
    moments: dict
    offline: dict
    basis: CoarseBasis

    @property
    def dim(self):
        return self.basis.dim

    def dims(self):
        return {
            "dim": self.dim,
            "sum_LE_interior": int(sum(self.moments[e.index].L for e in self.macro.interior_edges)),
            "bubbles": int(sum(1 for p in self.basis.provenance if p[0] == "bubble")),
            "dropped": int(self.basis.dropped),
            "n_macro_elements": self.macro.n_elements,
            "n_interior_edges": len(self.macro.interior_edges),
        }


def build_coarse_space(macro: MacroMesh, layout: DofLayout, cells: CellData,
                       options: Options | None = None) -> CoarseSpace:
    opts = options or Options()
    snaps = {eid: oversampled_snapshot_space(macro, eid, cells, opts.snapshot_layers)
             for eid in range(macro.n_elements)}
    moments = {}
    for edge in macro.edges:
        if opts.moment == "trace":
            ms = moment_space_traces(edge, [snaps[t] for t in edge.neighbors], cells)
        else:
            ms = moment_space_harmonic(edge, macro, cells, opts.moment_layers)
        moments[edge.index] = ms.truncated(ms.m if opts.LE is None else opts.LE)
    offline = {}
    for eid, snap in snaps.items():
        L = sum(moments[e.index].L for e in macro.element_edges(eid)) + opts.extra_offline
        offline[eid] = offline_space(snap, cells, min(L, snap.n_snap))
    basis = build_coarse_basis(macro, layout, offline, moments)
    return CoarseSpace(macro, cells, snaps, moments, offline, basis)


@dataclass
class MultiscaleResult:
    mode: str
    space: CoarseSpace
    system: CoarseSystem
    solution: CoarseSolution
    recovered: RecoveredField | None = None
    info: dict = field(default_factory=dict)

    @property
    def u(self):
        return self.solution.u

    @property
    def mesh(self) -> MicroMesh:
        return self.space.macro.micro


def _solve(mode, system, layout, macro, cells, options, recovered=None):
    space = build_coarse_space(macro, layout, cells, options)
    cs = assemble_coarse(space.basis, system.A, system.b)
    sol = solve_coarse(cs)
    return MultiscaleResult(mode, space, cs, sol, recovered, space.dims())


def solve_gmsfem(system: SparseSystem, mesh: MicroMesh, kappa, block_x, block_y,
                 options: Options | None = None) -> MultiscaleResult:
    """Coarse solve with the local spaces built from the known coefficient and mesh."""
    layout = DofLayout.for_mesh(mesh)
    macro = build_macro_mesh(mesh, block_x, block_y)
    return _solve(GMSFEM, system, layout, macro, CellData.from_mesh(mesh, kappa), options)


def solve_ams(system: SparseSystem, layout: DofLayout, block_x, block_y,
              options: Options | None = None, extent=(1.0, 1.0)) -> MultiscaleResult:
    """Coarse solve using nothing but ``(A, b)`` and the DOF layout."""
    rec = recover_field(system.A, layout, extent)
    mesh = rec.mesh()
    macro = build_macro_mesh(mesh, block_x, block_y)
    return _solve(AMS, system, layout, macro, CellData.from_recovered(rec), options, rec)


def energy_norm(A, v):
    return float(np.sqrt(max(v @ (A @ v), 0.0)))
