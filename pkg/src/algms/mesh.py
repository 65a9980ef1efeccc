"""Tensor-product micro/macro meshes and the edge-based DOF layout.

Conventions
-----------
Micro element ``(j, k)`` (1-based, as in the literature) spans
``(x[j-1], x[j]) x (y[k-1], y[k])``.  Per-element arrays are stored with
shape ``(ny, nx)`` and indexed ``[k-1, j-1]``.

Vertical edge ``e_{jk}`` (x = x_j, row k) carries an alpha DOF and horizontal
edge ``f_{jk}`` (y = y_k, column j) a beta DOF.  Only interior edges are
unknowns; the global order is all alpha DOFs then all beta DOFs, each block
row-major in ``k`` then ``j``::

    alpha(j, k) -> (k-1)*(nx-1) + (j-1)          1 <= j <= nx-1, 1 <= k <= ny
    beta(j, k)  -> N_alpha + (k-1)*nx + (j-1)    1 <= j <= nx,   1 <= k <= ny-1
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import MeshError

DOF_ORDER = "alpha-then-beta-rowmajor"
ALPHA = "alpha"
BETA = "beta"

# local DOF order inside an element
LEFT, RIGHT, BOTTOM, TOP = 0, 1, 2, 3


def _check_coords(name, coords, n):
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 1 or coords.size != n + 1:
        raise MeshError(f"{name} must have {n + 1} entries, got {coords.size}")
    bad = np.nonzero(np.diff(coords) <= 0)[0]
    if bad.size:
        raise MeshError(f"{name} non-monotone at index {bad[0] + 1}")
    return coords


@dataclass(frozen=True, eq=False)
class MicroMesh:
    x_coords: np.ndarray
    y_coords: np.ndarray

    @property
    def nx(self) -> int:
        return self.x_coords.size - 1

    @property
    def ny(self) -> int:
        return self.y_coords.size - 1

    @property
    def hx(self) -> np.ndarray:
        return np.diff(self.x_coords)

    @property
    def hy(self) -> np.ndarray:
        return np.diff(self.y_coords)

    @property
    def gamma(self) -> np.ndarray:
        """Aspect ratios h_y/h_x, shape (ny, nx)."""
        return self.hy[:, None] / self.hx[None, :]

    def centers(self):
        xc = 0.5 * (self.x_coords[1:] + self.x_coords[:-1])
        yc = 0.5 * (self.y_coords[1:] + self.y_coords[:-1])
        return np.meshgrid(xc, yc)

    @property
    def extent(self):
        return (self.x_coords[-1] - self.x_coords[0], self.y_coords[-1] - self.y_coords[0])


def build_micro_mesh(nx, ny, x_coords, y_coords) -> MicroMesh:
    if nx < 2 or ny < 2:
        raise MeshError(f"need at least 2x2 micro elements, got {nx}x{ny}")
    x = _check_coords("x_coords", x_coords, nx)
    y = _check_coords("y_coords", y_coords, ny)
    x.setflags(write=False)
    y.setflags(write=False)
    return MicroMesh(x, y)


def uniform_mesh(nx, ny, lx=1.0, ly=1.0) -> MicroMesh:
    return build_micro_mesh(nx, ny, np.linspace(0.0, lx, nx + 1), np.linspace(0.0, ly, ny + 1))


def mesh_from_sizes(hx, hy, x0=0.0, y0=0.0) -> MicroMesh:
    hx = np.asarray(hx, dtype=float)
    hy = np.asarray(hy, dtype=float)
    x = np.concatenate([[x0], x0 + np.cumsum(hx)])
    y = np.concatenate([[y0], y0 + np.cumsum(hy)])
    return build_micro_mesh(hx.size, hy.size, x, y)


class DofLayout:
    """Bijection between interior edge labels and global row indices."""

    def __init__(self, nx: int, ny: int):
        if nx < 2 or ny < 2:
            raise MeshError(f"need at least 2x2 micro elements, got {nx}x{ny}")
        self.nx = int(nx)
        self.ny = int(ny)
        self.n_alpha = (self.nx - 1) * self.ny
        self.n_beta = self.nx * (self.ny - 1)
        self.size = self.n_alpha + self.n_beta

    @classmethod
    def for_mesh(cls, mesh: MicroMesh) -> "DofLayout":
        return cls(mesh.nx, mesh.ny)

    def __eq__(self, other):
        return isinstance(other, DofLayout) and (self.nx, self.ny) == (other.nx, other.ny)

    def __repr__(self):
        return f"DofLayout(nx={self.nx}, ny={self.ny}, size={self.size})"

    def dof_index(self, kind, j, k):
        """Global index of an edge DOF, or ``None`` for an eliminated boundary edge."""
        nx, ny = self.nx, self.ny
        if kind == ALPHA:
            if not (0 <= j <= nx and 1 <= k <= ny):
                raise IndexError(f"alpha({j},{k}) out of range")
            if j == 0 or j == nx:
                return None
            return (k - 1) * (nx - 1) + (j - 1)
        if kind == BETA:
            if not (1 <= j <= nx and 0 <= k <= ny):
                raise IndexError(f"beta({j},{k}) out of range")
            if k == 0 or k == ny:
                return None
            return self.n_alpha + (k - 1) * nx + (j - 1)
        raise ValueError(f"unknown DOF kind {kind!r}")

    def dof_label(self, index):
        """Inverse of :meth:`dof_index` on interior DOFs."""
        if not 0 <= index < self.size:
            raise IndexError(f"DOF index {index} out of range")
        if index < self.n_alpha:
            k, j = divmod(index, self.nx - 1)
            return ALPHA, j + 1, k + 1
        k, j = divmod(index - self.n_alpha, self.nx)
        return BETA, j + 1, k + 1

    @cached_property
    def alpha_table(self):
        """Global indices of vertical edges, shape (ny, nx+1) indexed [k-1, j]; -1 on the boundary."""
        t = -np.ones((self.ny, self.nx + 1), dtype=np.int64)
        t[:, 1:-1] = np.arange(self.n_alpha).reshape(self.ny, self.nx - 1)
        return t

    @cached_property
    def beta_table(self):
        """Global indices of horizontal edges, shape (ny+1, nx) indexed [k, j-1]; -1 on the boundary."""
        t = -np.ones((self.ny + 1, self.nx), dtype=np.int64)
        t[1:-1, :] = self.n_alpha + np.arange(self.n_beta).reshape(self.ny - 1, self.nx)
        return t

    @cached_property
    def element_dofs(self):
        """(ny, nx, 4) global indices in (left, right, bottom, top) order; -1 for boundary."""
        a, b = self.alpha_table, self.beta_table
        return np.stack([a[:, :-1], a[:, 1:], b[:-1, :], b[1:, :]], axis=-1)


@dataclass(frozen=True)
class Patch:
    """A rectangular block of micro elements with its own full local DOF numbering.

    Element columns ``j0 <= j < j1`` and rows ``k0 <= k < k1`` (0-based).
    Local DOFs include the edges on the patch boundary; order is alpha block
    (vertical lines ``j0..j1``) then beta block (horizontal lines ``k0..k1``),
    row-major.
    """

    j0: int
    j1: int
    k0: int
    k1: int

    @property
    def mx(self):
        return self.j1 - self.j0

    @property
    def my(self):
        return self.k1 - self.k0

    @property
    def n_alpha(self):
        return (self.mx + 1) * self.my

    @property
    def size(self):
        return self.n_alpha + self.mx * (self.my + 1)

    def alpha(self, line, row):
        """Local index of the vertical edge on global x-line ``line`` in element row ``row``."""
        return (row - self.k0) * (self.mx + 1) + (line - self.j0)

    def beta(self, col, line):
        return self.n_alpha + (line - self.k0) * self.mx + (col - self.j0)

    @cached_property
    def element_dofs(self):
        """(my, mx, 4) local indices in (left, right, bottom, top) order."""
        mx, my = self.mx, self.my
        a = np.arange(self.n_alpha).reshape(my, mx + 1)
        b = self.n_alpha + np.arange(mx * (my + 1)).reshape(my + 1, mx)
        return np.stack([a[:, :-1], a[:, 1:], b[:-1, :], b[1:, :]], axis=-1)

    def element_slice(self):
        return np.s_[self.k0:self.k1, self.j0:self.j1]

    def vertical_segment(self, line, r0, r1):
        """Local DOFs on x-line ``line`` for element rows ``r0 <= k < r1`` (bottom to top)."""
        return np.array([self.alpha(line, r) for r in range(r0, r1)], dtype=np.int64)

    def horizontal_segment(self, line, c0, c1):
        return np.array([self.beta(c, line) for c in range(c0, c1)], dtype=np.int64)

    @cached_property
    def boundary_dofs(self):
        """Local DOFs on the patch boundary, ascending."""
        return np.unique(np.concatenate([
            self.vertical_segment(self.j0, self.k0, self.k1),
            self.vertical_segment(self.j1, self.k0, self.k1),
            self.horizontal_segment(self.k0, self.j0, self.j1),
            self.horizontal_segment(self.k1, self.j0, self.j1),
        ]))

    @cached_property
    def interior_dofs(self):
        mask = np.ones(self.size, dtype=bool)
        mask[self.boundary_dofs] = False
        return np.nonzero(mask)[0]

    def global_dofs(self, layout: DofLayout):
        """Global index of each local DOF (-1 on the domain boundary)."""
        a = layout.alpha_table[self.k0:self.k1, self.j0:self.j1 + 1].ravel()
        b = layout.beta_table[self.k0:self.k1 + 1, self.j0:self.j1].ravel()
        return np.concatenate([a, b])

    def contains(self, other: "Patch") -> bool:
        return (self.j0 <= other.j0 and other.j1 <= self.j1
                and self.k0 <= other.k0 and other.k1 <= self.k1)

    def restriction_map(self, sub: "Patch"):
        """Indices into this patch's local DOFs of every local DOF of ``sub``."""
        if not self.contains(sub):
            raise ValueError(f"{sub} is not contained in {self}")
        a = [self.alpha(line, r) for r in range(sub.k0, sub.k1) for line in range(sub.j0, sub.j1 + 1)]
        b = [self.beta(c, line) for line in range(sub.k0, sub.k1 + 1) for c in range(sub.j0, sub.j1)]
        return np.array(a + b, dtype=np.int64)

    def grow(self, layers, nx, ny) -> "Patch":
        return Patch(max(self.j0 - layers, 0), min(self.j1 + layers, nx),
                     max(self.k0 - layers, 0), min(self.k1 + layers, ny))


@dataclass(frozen=True)
class MacroEdge:
    """A macro edge: a run of micro edges on one grid line.

    ``kind`` is ``"v"`` (vertical, on x-line ``line`` spanning element rows
    ``start..stop-1``) or ``"h"`` (horizontal, on y-line ``line`` spanning
    element columns ``start..stop-1``).  ``neighbors`` are macro element ids
    (one for a boundary edge, two for an interior one; left/bottom first).
    """

    index: int
    kind: str
    line: int
    start: int
    stop: int
    neighbors: tuple
    interior: bool

    @property
    def n_micro(self):
        return self.stop - self.start

    def dofs_in(self, patch: Patch):
        if self.kind == "v":
            return patch.vertical_segment(self.line, self.start, self.stop)
        return patch.horizontal_segment(self.line, self.start, self.stop)

    def global_dofs(self, layout: DofLayout):
        if self.kind == "v":
            return layout.alpha_table[self.start:self.stop, self.line].copy()
        return layout.beta_table[self.line, self.start:self.stop].copy()

    def micro_lengths(self, hx, hy):
        if self.kind == "v":
            return np.asarray(hy[self.start:self.stop], dtype=float)
        return np.asarray(hx[self.start:self.stop], dtype=float)


@dataclass(eq=False)
class MacroMesh:
    micro: MicroMesh
    x_breaks: np.ndarray
    y_breaks: np.ndarray
    edges: list = field(default_factory=list)

    @property
    def Nx(self):
        return self.x_breaks.size - 1

    @property
    def Ny(self):
        return self.y_breaks.size - 1

    @property
    def n_elements(self):
        return self.Nx * self.Ny

    def element_id(self, J, K):
        return K * self.Nx + J

    def element_ij(self, eid):
        K, J = divmod(eid, self.Nx)
        return J, K

    def patch(self, eid) -> Patch:
        J, K = self.element_ij(eid)
        return Patch(int(self.x_breaks[J]), int(self.x_breaks[J + 1]),
                     int(self.y_breaks[K]), int(self.y_breaks[K + 1]))

    def element_edges(self, eid):
        """Edges of macro element ``eid`` in (left, right, bottom, top) order."""
        J, K = self.element_ij(eid)
        nv = (self.Nx + 1) * self.Ny
        return [
            self.edges[K * (self.Nx + 1) + J],
            self.edges[K * (self.Nx + 1) + J + 1],
            self.edges[nv + K * self.Nx + J],
            self.edges[nv + (K + 1) * self.Nx + J],
        ]

    @property
    def interior_edges(self):
        return [e for e in self.edges if e.interior]

    def omega_patch(self, edge: MacroEdge) -> Patch:
        """Union of the neighbor macro elements of ``edge``."""
        ps = [self.patch(t) for t in edge.neighbors]
        return Patch(min(p.j0 for p in ps), max(p.j1 for p in ps),
                     min(p.k0 for p in ps), max(p.k1 for p in ps))

    def omega_boundary_edges(self, edge: MacroEdge):
        """Macro edges on the boundary of the neighbor union of ``edge``."""
        own = set()
        for t in edge.neighbors:
            own.update(e.index for e in self.element_edges(t))
        own.discard(edge.index)
        return [self.edges[i] for i in sorted(own)]


def _breaks(n, block, explicit, name):
    if explicit is not None:
        br = np.asarray(explicit, dtype=np.int64)
        if br[0] != 0 or br[-1] != n or np.any(np.diff(br) <= 0):
            raise MeshError(f"{name} breakpoints must increase strictly from 0 to {n}")
        return br
    if block < 1 or n % block:
        raise MeshError(f"block size {block} does not divide {n} micro elements")
    return np.arange(0, n + 1, block, dtype=np.int64)


def build_macro_mesh(mesh: MicroMesh, block_x=None, block_y=None,
                     x_breaks=None, y_breaks=None) -> MacroMesh:
    """Group micro elements into rectangular macro elements.

    Uniform ``block_x x block_y`` blocking, or explicit micro-index breakpoint
    lists for non-uniform macro meshes.
    """
    if x_breaks is None and block_x is None or y_breaks is None and block_y is None:
        raise MeshError("need a block size or explicit breakpoints in each direction")
    xb = _breaks(mesh.nx, block_x, x_breaks, "x")
    yb = _breaks(mesh.ny, block_y, y_breaks, "y")
    macro = MacroMesh(mesh, xb, yb)
    Nx, Ny = macro.Nx, macro.Ny
    edges = []
    for K in range(Ny):
        for I in range(Nx + 1):
            nb = tuple(macro.element_id(J, K) for J in (I - 1, I) if 0 <= J < Nx)
            edges.append(MacroEdge(len(edges), "v", int(xb[I]), int(yb[K]), int(yb[K + 1]),
                                   nb, 0 < I < Nx))
    for I in range(Ny + 1):
        for J in range(Nx):
            nb = tuple(macro.element_id(J, K) for K in (I - 1, I) if 0 <= K < Ny)
            edges.append(MacroEdge(len(edges), "h", int(yb[I]), int(xb[J]), int(xb[J + 1]),
                                   nb, 0 < I < Ny))
    macro.edges = edges
    return macro


def mesh_sidecar(mesh: MicroMesh, macro: MacroMesh | None = None, include_coords=True) -> dict:
    """JSON-ready mesh metadata.  Without coordinates it carries layout only."""
    d = {"nx": mesh.nx, "ny": mesh.ny}
    if include_coords:
        d["x_coords"] = [float(v) for v in mesh.x_coords]
        d["y_coords"] = [float(v) for v in mesh.y_coords]
    if macro is not None:
        d["x_breaks"] = [int(v) for v in macro.x_breaks]
        d["y_breaks"] = [int(v) for v in macro.y_breaks]
        bx = np.diff(macro.x_breaks)
        by = np.diff(macro.y_breaks)
        if np.all(bx == bx[0]) and np.all(by == by[0]):
            d["block_x"] = int(bx[0])
            d["block_y"] = int(by[0])
    d["dof_order"] = DOF_ORDER
    return d
