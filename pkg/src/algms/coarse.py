"""Gluing offline spaces into the multiscale space and solving the coarse system.

Each coarse basis function is kept in two forms:

* ``pieces``: a dict ``{macro element: coefficients in that element's offline
  basis}``; this broken form is what the moment constraints act on.
* a row of ``R`` over the global micro DOFs.  On a micro DOF shared by two
  macro elements the two one-sided values are averaged; when the moment space
  on that edge is the full edge space (the default) the sides agree and the
  row is the exact global representation.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, IndefiniteError
from .linalg import cg_solve, orth, semidefinite_solve, sparse_spd_solve, spd_factor, svd_nullspace
from .mesh import DofLayout, MacroMesh

log = logging.getLogger(__name__)

NULLSPACE_TOL = 1e-10
INDEPENDENCE_TOL = 1e-8
CG_THRESHOLD = 100_000
SEMIDEFINITE_TOL = 1e-10


@dataclass
class CoarseBasis:
    R: sp.csr_matrix
    provenance: list  # ("bubble", element id) or ("edge", edge index)
    pieces: list      # per row: {element id: offline coefficients}
    dropped: int = 0

    @property
    def dim(self):
        return self.R.shape[0]

    def support(self, row):
        return tuple(sorted(self.pieces[row]))


class CoarseSystem(NamedTuple):
    A: sp.csr_matrix
    b: np.ndarray
    R: sp.csr_matrix


class CoarseSolution(NamedTuple):
    coefficients: np.ndarray
    u: np.ndarray


def _trace(offline, edge):
    return offline.modes[edge.dofs_in(offline.patch)]


def _trace_constraint(offline, moments, edge):
    return moments[edge.index].constraint() @ _trace(offline, edge)


def bubble_space(eid, macro: MacroMesh, offline, moments):
    """Offline coefficient vectors (columns) whose traces are moment-orthogonal on all of ``dT``."""
    off = offline[eid]
    C = np.vstack([_trace_constraint(off, moments, e) for e in macro.element_edges(eid)])
    return svd_nullspace(C, NULLSPACE_TOL)


def edge_constraints(edge, macro: MacroMesh, offline, moments):
    """Constraint matrix on the stacked offline coefficients of the two neighbors of ``edge``."""
    t1, t2 = edge.neighbors
    o1, o2 = offline[t1], offline[t2]
    S = moments[edge.index].constraint()
    blocks = [np.hstack([S @ _trace(o1, edge), -S @ _trace(o2, edge)])]
    own1 = {e.index for e in macro.element_edges(t1)}
    for e in macro.omega_boundary_edges(edge):
        if e.index in own1:
            blocks.append(np.hstack([_trace_constraint(o1, moments, e), np.zeros((moments[e.index].L, o2.L))]))
        else:
            blocks.append(np.hstack([np.zeros((moments[e.index].L, o1.L)), _trace_constraint(o2, moments, e)]))
    return np.vstack(blocks)


def glue_edge_space(edge, macro: MacroMesh, offline, moments, bubbles=None):
    """Null space of the gluing constraints on ``omega(E)``, with neighbor bubbles projected out.

    Returns a (L(T1) + L(T2), d) array of stacked offline coefficients.
    """
    if not edge.interior:
        raise ValueError(f"edge {edge.index} is on the domain boundary")
    t1, t2 = edge.neighbors
    N = svd_nullspace(edge_constraints(edge, macro, offline, moments), NULLSPACE_TOL)
    if bubbles is not None:
        l1, l2 = offline[t1].L, offline[t2].L
        B1, B2 = bubbles[t1], bubbles[t2]
        if B1.shape[1] or B2.shape[1]:
            B = np.zeros((l1 + l2, B1.shape[1] + B2.shape[1]))
            B[:l1, :B1.shape[1]] = B1
            B[l1:, B1.shape[1]:] = B2
            N = orth(N - B @ (B.T @ N), NULLSPACE_TOL)
    need = moments[edge.index].L
    if N.shape[1] < need:
        raise ConfigError(
            f"edge {edge.index}: glued space has dimension {N.shape[1]} < L(E)={need} "
            f"(over-constrained by {need - N.shape[1]})")
    return N


def _greedy_independent(rows, offline):
    """Drop rows whose restriction to every element they touch is spanned by earlier rows."""
    bases = {}
    keep = []
    for r, pieces in enumerate(rows):
        total = np.sqrt(sum(float(c @ c) for c in pieces.values()))
        new = {}
        for eid, c in pieces.items():
            Q = bases.get(eid)
            res = c if Q is None else c - Q @ (Q.T @ c)
            nr = np.linalg.norm(res)
            if nr > INDEPENDENCE_TOL * total:
                new[eid] = res / nr
        if not new:
            continue
        keep.append(r)
        for eid, q in new.items():
            Q = bases.get(eid)
            bases[eid] = q[:, None] if Q is None else np.hstack([Q, q[:, None]])
    return keep


def build_coarse_basis(macro: MacroMesh, layout: DofLayout, offline, moments) -> CoarseBasis:
    """Assemble bubble rows and glued edge rows into the restriction operator ``R``."""
    bubbles = {eid: bubble_space(eid, macro, offline, moments) for eid in range(macro.n_elements)}
    pieces, prov = [], []
    for eid in range(macro.n_elements):
        B = bubbles[eid]
        for i in range(B.shape[1]):
            pieces.append({eid: B[:, i]})
            prov.append(("bubble", eid))
    for edge in macro.interior_edges:
        N = glue_edge_space(edge, macro, offline, moments, bubbles)
        t1, t2 = edge.neighbors
        l1 = offline[t1].L
        for i in range(N.shape[1]):
            pieces.append({t1: N[:l1, i], t2: N[l1:, i]})
            prov.append(("edge", edge.index))

    keep = _greedy_independent(pieces, offline)
    dropped = len(pieces) - len(keep)
    if dropped:
        log.warning("dropped %d linearly dependent coarse basis function(s)", dropped)
        pieces = [pieces[i] for i in keep]
        prov = [prov[i] for i in keep]

    R = _global_rows(pieces, macro, layout, offline)
    return CoarseBasis(R, prov, pieces, dropped)


def _global_rows(pieces, macro, layout, offline):
    gdofs = {eid: macro.patch(eid).global_dofs(layout) for eid in range(macro.n_elements)}
    count = np.zeros(layout.size)
    for g in gdofs.values():
        np.add.at(count, g[g >= 0], 1.0)
    rows, cols, vals = [], [], []
    for r, p in enumerate(pieces):
        for eid, c in p.items():
            g = gdofs[eid]
            ok = g >= 0
            v = (offline[eid].modes @ c)[ok] / count[g[ok]]
            rows.append(np.full(v.size, r))
            cols.append(g[ok])
            vals.append(v)
    n = len(pieces)
    if n == 0:
        return sp.csr_matrix((0, layout.size))
    R = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, layout.size)).tocsr()
    R.sum_duplicates()
    R.eliminate_zeros()
    return R


def broken_vector(pieces, offline):
    """Per-element local micro vectors of a coarse function given in broken form."""
    return {eid: offline[eid].modes @ c for eid, c in pieces.items()}


def assemble_coarse(R, A, b) -> CoarseSystem:
    """Galerkin coarse system ``R A R^T``, ``R b`` from the algebraic micro system only."""
    if isinstance(R, CoarseBasis):
        R = R.R
    R = sp.csr_matrix(R)
    if R.shape[1] != A.shape[0] or A.shape[0] != np.shape(b)[0]:
        raise ConfigError(f"dimension mismatch: R {R.shape}, A {A.shape}, b {np.shape(b)}")
    AM = (R @ sp.csr_matrix(A) @ R.T).tocsr()
    AM = 0.5 * (AM + AM.T)
    return CoarseSystem(sp.csr_matrix(AM), R @ np.asarray(b, dtype=float), R)


def solve_coarse(cs: CoarseSystem, rtol=1e-12) -> CoarseSolution:
    n = cs.A.shape[0]
    if n == 0 or not np.any(cs.b):
        c = np.zeros(n)
    elif n > CG_THRESHOLD:
        c = cg_solve(cs.A, cs.b, rtol=rtol)
    else:
        try:
            c = sparse_spd_solve(cs.A, cs.b, rtol=rtol, factor=spd_factor(cs.A))
        except IndefiniteError as exc:
            # rounding-level negative pivots of a badly conditioned but semidefinite matrix
            scale = abs(cs.A).max()
            if exc.smallest_eigenvalue < -SEMIDEFINITE_TOL * scale:
                raise
            log.warning("coarse matrix numerically singular (smallest eigenvalue %.3e, max entry %.3e); "
                        "using a truncated pseudo-inverse", exc.smallest_eigenvalue, scale)
            c = semidefinite_solve(cs.A, cs.b)
    return CoarseSolution(c, cs.R.T @ c)
