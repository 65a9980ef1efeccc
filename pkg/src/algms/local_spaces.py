"""Snapshot spaces (discrete kappa-harmonic extensions) and spectral offline spaces."""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .dssy import CellData, assemble_patch
from .errors import NumericalError
from .linalg import sym_generalized_eig
from .mesh import MacroMesh, Patch

log = logging.getLogger(__name__)


@dataclass
class SnapshotSpace:
    owner: int
    patch: Patch
    functions: np.ndarray      # (patch.size, n_snap) local micro-DOF coefficients
    boundary_dofs: np.ndarray  # local indices of the DOFs on the boundary of ``patch``
    layers: int = 0

    @property
    def n_snap(self):
        return self.functions.shape[1]


@dataclass
class OfflineSpace:
    owner: int
    patch: Patch
    eigenvalues: np.ndarray    # all eigenvalues, ascending
    modes: np.ndarray          # (patch.size, L), (kappa u, u)_T = 1
    coefficients: np.ndarray   # (n_snap, L) in the snapshot basis

    @property
    def L(self):
        return self.modes.shape[1]


def harmonic_extensions(patch: Patch, cells: CellData, K=None):
    """Discrete kappa-harmonic extension of every boundary-DOF indicator of ``patch``.

    Returns an array of shape (patch.size, n_boundary); column ``l`` equals the
    ``l``-th indicator on the boundary DOFs and solves the homogeneous local
    system at the interior DOFs.
    """
    if K is None:
        K = assemble_patch(patch, cells)
    bnd = patch.boundary_dofs
    inn = patch.interior_dofs
    U = np.zeros((patch.size, bnd.size))
    U[bnd, np.arange(bnd.size)] = 1.0
    if inn.size:
        try:
            fac = sla.cho_factor(K[np.ix_(inn, inn)], lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular local problem on {patch}: {exc}") from exc
        U[inn] = -sla.cho_solve(fac, K[np.ix_(inn, bnd)])
    return U


def snapshot_space(macro: MacroMesh, eid: int, cells: CellData) -> SnapshotSpace:
    patch = macro.patch(eid)
    return SnapshotSpace(eid, patch, harmonic_extensions(patch, cells), patch.boundary_dofs)


def oversampled_snapshot_space(macro: MacroMesh, eid: int, cells: CellData, layers: int) -> SnapshotSpace:
    """Harmonic extensions on ``T`` grown by ``layers`` micro rings, restricted to ``T``."""
    if layers < 0:
        raise ValueError("layers must be >= 0")
    if layers == 0:
        return snapshot_space(macro, eid, cells)
    patch = macro.patch(eid)
    big = patch.grow(layers, macro.micro.nx, macro.micro.ny)
    U = harmonic_extensions(big, cells)
    return SnapshotSpace(eid, patch, U[big.restriction_map(patch)], patch.boundary_dofs, layers)


def offline_space(snap: SnapshotSpace, cells: CellData, L: int, rank_tol=1e-12) -> OfflineSpace:
    """Keep the ``L`` lowest modes of ``a_T(u, v) = lam (kappa u, v)_T`` on the snapshot span."""
    if not 1 <= L <= snap.n_snap:
        raise ValueError(f"L={L} outside 1..{snap.n_snap}")
    K, M = assemble_patch(snap.patch, cells, mass=True)
    S = snap.functions
    eig = sym_generalized_eig(S.T @ K @ S, S.T @ M @ S, rank_tol=rank_tol)
    if L > eig.values.size:
        log.warning("element %d: snapshot span has rank %d < L=%d; truncating",
                    snap.owner, eig.values.size, L)
        L = eig.values.size
    C = eig.vectors[:, :L]
    return OfflineSpace(snap.owner, snap.patch, eig.values, S @ C, C)
