"""DSSY nonconforming rectangular element: basis, local matrices, assembly.

On the reference cell ``(-1, 1)^2`` (scaled coordinates ``s = 2x/h_x``,
``t = 2y/h_y``) the four shape functions are::

    right/left  :  1/4 +- s/2 + (theta(s) - theta(t)) / (4 theta(1))
    top/bottom  :  1/4 +- t/2 + (theta(t) - theta(s)) / (4 theta(1))

with ``theta(t) = t^2 - 5/3 t^4``.  The quartic correction makes the edge
mean of every shape function equal to its edge-midpoint value.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .mesh import DofLayout, MicroMesh, Patch

THETA1 = 1.0 - 5.0 / 3.0


def theta(t):
    return t * t - (5.0 / 3.0) * t ** 4


def dtheta(t):
    return 2.0 * t - (20.0 / 3.0) * t ** 3


def reference_basis(s, t):
    """Values and reference-coordinate gradients at ``(s, t)`` in ``(-1,1)^2``.

    Returns ``vals`` of shape (4, ...) and ``grads`` of shape (4, 2, ...),
    local order (left, right, bottom, top).  Physical gradients are
    ``(2/h_x) d/ds`` and ``(2/h_y) d/dt``.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    q = (theta(s) - theta(t)) / (4.0 * THETA1)
    vals = np.stack([0.25 - 0.5 * s + q, 0.25 + 0.5 * s + q,
                     0.25 - 0.5 * t - q, 0.25 + 0.5 * t - q])
    ds = dtheta(s) / (4.0 * THETA1)
    dt = dtheta(t) / (4.0 * THETA1)
    zero = np.zeros_like(s)
    grads = np.stack([
        np.stack([-0.5 + ds, -dt]),
        np.stack([0.5 + ds, -dt]),
        np.stack([-ds, -0.5 + dt + zero]),
        np.stack([-ds, 0.5 + dt + zero]),
    ])
    return vals, grads


def eval_basis(local_dof, x, y, hx, hy):
    """Value and physical gradient of one shape function at cell-centered coordinates.

    ``(x, y)`` lies in ``(-hx/2, hx/2) x (-hy/2, hy/2)``; ``local_dof`` is 0..3
    in (left, right, bottom, top) order.
    """
    vals, grads = reference_basis(2.0 * np.asarray(x) / hx, 2.0 * np.asarray(y) / hy)
    g = np.stack([grads[local_dof, 0] * (2.0 / hx), grads[local_dof, 1] * (2.0 / hy)])
    return vals[local_dof], g


def gauss_rule(order=5):
    """Tensor Gauss-Legendre points and weights on ``(-1,1)^2`` (weights sum to 4)."""
    g, w = np.polynomial.legendre.leggauss(order)
    S, T = np.meshgrid(g, g, indexing="ij")
    W = np.outer(w, w)
    return S.ravel(), T.ravel(), W.ravel()


def _reference_matrices(order=5):
    s, t, w = gauss_rule(order)
    vals, grads = reference_basis(s, t)
    # integrals over the unit square: dx dy = (hx hy / 4) ds dt, d/dx = (2/hx) d/ds
    gs = grads[:, 0, :]
    gt = grads[:, 1, :]
    kx = np.einsum("iq,jq,q->ij", gs, gs, w)  # multiplies hy/hx
    ky = np.einsum("iq,jq,q->ij", gt, gt, w)  # multiplies hx/hy
    mass = np.einsum("iq,jq,q->ij", vals, vals, w) / 4.0
    return kx, ky, mass


STIFF_X, STIFF_Y, MASS_REF = _reference_matrices()


def _check_positive(**kw):
    for name, v in kw.items():
        if np.any(np.asarray(v) <= 0) or not np.all(np.isfinite(v)):
            raise ConfigError(f"{name} must be positive and finite")


def local_stiffness(hx, hy, kappa=1.0):
    """4x4 element stiffness ``kappa * (grad phi_i, grad phi_j)`` by Gauss quadrature."""
    _check_positive(hx=hx, hy=hy, kappa=kappa)
    return kappa * ((hy / hx) * STIFF_X + (hx / hy) * STIFF_Y)


def closed_form_stiffness(hx, hy, kappa=1.0):
    """Element stiffness from the printed closed-form entries (independent of the basis)."""
    d_v = 37 / 28 * hx / hy + 65 / 28 * hy / hx
    d_h = 37 / 28 * hy / hx + 65 / 28 * hx / hy
    cross = -37 / 28 * (hx * hx + hy * hy) / (hx * hy)
    opp_v = 37 / 28 * hx / hy + 9 / 28 * hy / hx
    opp_h = 37 / 28 * hy / hx + 9 / 28 * hx / hy
    return kappa * np.array([
        [d_v, opp_v, cross, cross],
        [opp_v, d_v, cross, cross],
        [cross, cross, d_h, opp_h],
        [cross, cross, opp_h, d_h],
    ])


def local_mass(hx, hy, kappa=1.0):
    """4x4 element Gram matrix ``(kappa phi_i, phi_j)``."""
    _check_positive(hx=hx, hy=hy, kappa=kappa)
    return kappa * hx * hy * MASS_REF


def element_stiffness_blocks(hx, hy, kappa):
    """Stacked element stiffness matrices, shape (ny, nx, 4, 4)."""
    ratio = hy[:, None] / hx[None, :]
    return kappa[..., None, None] * (ratio[..., None, None] * STIFF_X
                                     + (1.0 / ratio)[..., None, None] * STIFF_Y)


def element_mass_blocks(hx, hy, kappa):
    area = hy[:, None] * hx[None, :]
    return (kappa * area)[..., None, None] * MASS_REF


def _check_kappa(mesh_shape, kappa):
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape != mesh_shape:
        raise ConfigError(f"kappa field has shape {kappa.shape}, expected {mesh_shape}")
    _check_positive(kappa=kappa)
    return kappa


@dataclass
class CellData:
    """Per-element data that determines every local matrix: kappa (ny, nx), hx (nx,), hy (ny,)."""

    kappa: np.ndarray
    hx: np.ndarray
    hy: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: MicroMesh, kappa):
        return cls(_check_kappa((mesh.ny, mesh.nx), kappa), mesh.hx, mesh.hy)

    @classmethod
    def from_recovered(cls, field):
        return cls(field.kappa, field.hx, field.hy)


@dataclass
class SparseSystem:
    A: sp.csr_matrix
    b: np.ndarray

    @property
    def size(self):
        return self.A.shape[0]


def assemble_stiffness(mesh: MicroMesh, layout: DofLayout, kappa) -> sp.csr_matrix:
    kappa = _check_kappa((mesh.ny, mesh.nx), kappa)
    K = element_stiffness_blocks(mesh.hx, mesh.hy, kappa).reshape(-1, 4, 4)
    dofs = layout.element_dofs.reshape(-1, 4)
    rows = np.broadcast_to(dofs[:, :, None], K.shape).ravel()
    cols = np.broadcast_to(dofs[:, None, :], K.shape).ravel()
    vals = K.ravel()
    keep = (rows >= 0) & (cols >= 0)
    A = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(layout.size, layout.size))
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def load_vector(mesh: MicroMesh, layout: DofLayout, f, order=5) -> np.ndarray:
    """Entries ``(f, phi_i)`` by per-element tensor Gauss quadrature.

    ``f`` is a vectorized callable ``f(x, y)``.
    """
    s, t, w = gauss_rule(order)
    vals, _ = reference_basis(s, t)
    hx, hy = mesh.hx, mesh.hy
    xc = 0.5 * (mesh.x_coords[1:] + mesh.x_coords[:-1])
    yc = 0.5 * (mesh.y_coords[1:] + mesh.y_coords[:-1])
    X = xc[None, :, None] + 0.5 * hx[None, :, None] * s[None, None, :]
    Y = yc[:, None, None] + 0.5 * hy[:, None, None] * t[None, None, :]
    X, Y = np.broadcast_arrays(X, Y)
    F = np.asarray(f(X, Y), dtype=float) * w
    area = 0.25 * hy[:, None] * hx[None, :]
    loc = np.einsum("kjq,lq->kjl", F, vals) * area[..., None]
    dofs = layout.element_dofs.reshape(-1)
    loc = loc.reshape(-1)
    keep = dofs >= 0
    return np.bincount(dofs[keep], weights=loc[keep], minlength=layout.size)


def assemble_micro_system(mesh: MicroMesh, layout: DofLayout, kappa, f=None, order=5) -> SparseSystem:
    A = assemble_stiffness(mesh, layout, kappa)
    b = np.zeros(layout.size) if f is None else load_vector(mesh, layout, f, order)
    return SparseSystem(A, b)


def assemble_patch(patch: Patch, cells: CellData, mass=False):
    """Dense stiffness (and optionally mass) over all local DOFs of ``patch``."""
    hxp = np.asarray(cells.hx)[patch.j0:patch.j1]
    hyp = np.asarray(cells.hy)[patch.k0:patch.k1]
    kp = np.asarray(cells.kappa)[patch.element_slice()]
    dofs = patch.element_dofs.reshape(-1, 4)
    rows = np.repeat(dofs, 4, axis=1).ravel()
    cols = np.tile(dofs, (1, 4)).ravel()
    n = patch.size
    K = np.zeros((n, n))
    np.add.at(K, (rows, cols), element_stiffness_blocks(hxp, hyp, kp).reshape(-1))
    if not mass:
        return K
    M = np.zeros((n, n))
    np.add.at(M, (rows, cols), element_mass_blocks(hxp, hyp, kp).reshape(-1))
    return K, M
