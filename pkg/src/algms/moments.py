"""Moment spaces on macro edges, selected by a weighted SVD of edge traces.

The discrete edge inner product is ``<u, v>_E = sum_i |e_i| u_i v_i`` over
the micro edges ``e_i`` on ``E``.
"""
from dataclasses import dataclass, replace

import numpy as np

from .dssy import CellData
from .local_spaces import harmonic_extensions
from .mesh import MacroEdge, MacroMesh

TRACE = "snapshot-trace"
HARMONIC = "harmonic-oversampled"

RANK_TOL = 1e-12
CLUSTER_TOL = 1e-8


def _canonical_clusters(U, s, weights):
    """Fix the basis inside clusters of (numerically) equal singular values.

    Any rotation of such a cluster is an equally valid SVD, so rounding alone
    would decide which modes survive truncation.  Inside a cluster the modes
    are taken as the projections of Legendre polynomials along the edge,
    lowest degree first, orthonormalized in order.  This depends only on the
    cluster subspace, and for a flat spectrum (all traces equally strong) it
    ranks the smooth edge functions first.
    """
    U = U.copy()
    m = s.size
    sw = np.sqrt(weights)
    mid = np.cumsum(weights) - 0.5 * weights
    t = 2.0 * mid / weights.sum() - 1.0
    probes = sw[:, None] * np.polynomial.legendre.legvander(t, weights.size - 1)
    start = 0
    while start < m:
        stop = start + 1
        while stop < m and s[stop - 1] - s[stop] <= CLUSTER_TOL * s[0]:
            stop += 1
        size = stop - start
        if size > 1:
            Uc = U[:, start:stop]
            basis = np.zeros((U.shape[0], 0))
            for p in probes.T:
                v = Uc @ (Uc.T @ p)
                for _ in range(2):
                    v = v - basis @ (basis.T @ v)
                nv = np.linalg.norm(v)
                if nv > 1e-6 * np.linalg.norm(p):
                    basis = np.hstack([basis, (v / nv)[:, None]])
                if basis.shape[1] == size:
                    break
            U[:, start:stop] = basis
        start = stop
    return U


@dataclass
class MomentSpace:
    edge: MacroEdge
    basis: np.ndarray    # (n_micro, m) all modes; <s_k, s_k>_E = mu_k
    mu: np.ndarray       # squared singular values, descending
    weights: np.ndarray  # micro edge lengths
    method: str
    L: int

    @property
    def modes(self):
        return self.basis[:, :self.L]

    @property
    def m(self):
        return self.mu.size

    def constraint(self):
        """Rows ``v -> <v, s_k>_E`` for the kept modes."""
        return (self.weights[:, None] * self.modes).T

    def truncated(self, L):
        return replace(self, L=min(int(L), self.m))


def _select(edge, traces, weights, L, method):
    sw = np.sqrt(weights)
    U, s, _ = np.linalg.svd(sw[:, None] * traces, full_matrices=False)
    m = int(np.count_nonzero(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
    if m == 0:
        raise ValueError(f"edge {edge.index}: all traces vanish")
    # deterministic sign: largest entry of each mode positive
    U = _canonical_clusters(U[:, :m], s[:m], weights)
    idx = np.argmax(np.abs(U), axis=0)
    U = U * np.sign(U[idx, np.arange(m)])
    L = m if L is None else min(int(L), m)
    return MomentSpace(edge, U * s[:m] / sw[:, None], s[:m] ** 2, weights, method, L)


def moment_space_traces(edge: MacroEdge, snapshots, cells: CellData, L=None) -> MomentSpace:
    """SVD of the traces on ``edge`` of the snapshot functions of its neighbor elements."""
    traces = np.hstack([s.functions[edge.dofs_in(s.patch)] for s in snapshots])
    return _select(edge, traces, edge.micro_lengths(cells.hx, cells.hy), L, TRACE)


def moment_space_harmonic(edge: MacroEdge, macro: MacroMesh, cells: CellData,
                          layers=1, L=None) -> MomentSpace:
    """SVD of the traces on ``edge`` of harmonic extensions over the oversampled neighborhood."""
    patch = macro.omega_patch(edge).grow(layers, macro.micro.nx, macro.micro.ny)
    U = harmonic_extensions(patch, cells)
    traces = U[edge.dofs_in(patch)]
    return _select(edge, traces, edge.micro_lengths(cells.hx, cells.hy), L, HARMONIC)


def edge_inner(space: MomentSpace, u, v):
    return float(np.sum(space.weights * u * v))

