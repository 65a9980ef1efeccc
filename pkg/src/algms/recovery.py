"""Reconstruction of the coefficient field and mesh geometry from a DSSY matrix.

Inside element (j, k) with aspect ratio ``g = h_y/h_x`` and coefficient ``kap``
the single-element couplings are

* cross (vertical edge, horizontal edge): ``c = -37/28 kap (g + 1/g)``
* horizontal pair (bottom, top):          ``n = kap (37/28 g + 9/28 / g)``
* vertical pair (left, right):            ``n = kap (37/28 / g + 9/28 g)``

so ``c + n = -kap/g`` (or ``-kap g``) and ``c/(c+n) = 37/28 (1 + g^2)``
(or ``37/28 (1 + 1/g^2)``), which determines both unknowns.  Corner elements
have no same-type pair; their ratio follows from the tensor identity
``g_jk g_{j+1,k+1} = g_{j,k+1} g_{j+1,k}``.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NumericalError, StructuralError
from .mesh import DofLayout, mesh_from_sizes


RADICAND_CLAMP = -1e-9
DEGENERATE_TOL = 1e-300

INTERIOR_PAIR = "interior-pair"
BOUNDARY_PAIR = "boundary-pair"
CORNER_RATIO = "corner-ratio"


@dataclass
class RecoveredField:
    kappa: np.ndarray       # (ny, nx)
    gamma: np.ndarray       # (ny, nx)
    hx: np.ndarray          # (nx,)
    hy: np.ndarray          # (ny,)
    provenance: np.ndarray  # (ny, nx) of str

    def mesh(self):
        return mesh_from_sizes(self.hx, self.hy)


def recover_element(c, n, kind="beta"):
    """Return ``(gamma, kappa)`` of one element from a cross entry and a same-type pair entry.

    ``kind="beta"``: ``n`` couples the bottom and top edges of the element;
    ``kind="alpha"``: ``n`` couples its left and right edges.
    """
    s = c + n
    if abs(s) < DEGENERATE_TOL or s >= 0 or c >= 0:
        raise NumericalError(f"degenerate pair (cross={c!r}, pair={n!r})")
    rad = (28.0 / 37.0) * c / s - 1.0
    if rad < RADICAND_CLAMP:
        raise NumericalError(f"inconsistent entries: radicand {rad:.3e} < 0 (matrix not DSSY-generated?)")
    root = np.sqrt(max(rad, 0.0))
    if root == 0.0:
        raise NumericalError("inconsistent entries: zero aspect ratio")
    if kind == "beta":
        return root, -s * root
    if kind == "alpha":
        gamma = 1.0 / root
        return gamma, -s / gamma
    raise ValueError(f"unknown pair kind {kind!r}")


def kappa_from_cross(c, gamma):
    return -28.0 * c / (37.0 * (gamma + 1.0 / gamma))


def _gather(A, i, j):
    """Entries ``A[i, j]`` for index arrays; NaN where an index is -1 or the entry is absent."""
    i = np.asarray(i)
    j = np.asarray(j)
    ok = (i >= 0) & (j >= 0)
    out = np.full(i.shape, np.nan)
    if np.any(ok):
        v = np.asarray(A[i[ok], j[ok]]).ravel()
        v[v == 0] = np.nan
        out[ok] = v
    return out


def _first_available(cands):
    out = np.full(cands[0].shape, np.nan)
    for c in cands:
        out = np.where(np.isnan(out), c, out)
    return out


def recover_field(A, layout: DofLayout, extent=(1.0, 1.0)) -> RecoveredField:
    """Recover per-element ``kappa``, ``gamma`` and the mesh sizes from ``A``.

    ``h`` is normalized so that the domain has the given ``extent``
    (unit square by default); ``kappa`` and ``gamma`` do not depend on it.
    """
    nx, ny = layout.nx, layout.ny
    if A.shape != (layout.size, layout.size):
        raise StructuralError(f"matrix shape {A.shape} does not match layout {layout}")
    if nx < 3 or ny < 3:
        raise StructuralError("corner elements need at least 3x3 micro elements to be recoverable")
    A = sp.csr_matrix(A)
    d = layout.element_dofs
    left, right, bottom, top = d[..., 0], d[..., 1], d[..., 2], d[..., 3]
    cross = _first_available([_gather(A, right, top), _gather(A, right, bottom),
                              _gather(A, left, top), _gather(A, left, bottom)])
    n_beta = _gather(A, bottom, top)
    n_alpha = _gather(A, left, right)
    use_beta = ~np.isnan(n_beta)
    pair = np.where(use_beta, n_beta, n_alpha)

    corner = np.zeros((ny, nx), dtype=bool)
    corner[[0, 0, -1, -1], [0, -1, 0, -1]] = True
    for name, missing in (("cross", np.argwhere(np.isnan(cross))),
                          ("same-type pair", np.argwhere(np.isnan(pair) & ~corner))):
        if missing.size:
            k, j = missing[0]
            raise StructuralError(f"no {name} entry for element ({j + 1},{k + 1})", (j + 1, k + 1))

    s = cross + pair
    bad = ~corner & ((s >= 0) | (cross >= 0) | (np.abs(s) < DEGENERATE_TOL))
    if np.any(bad):
        k, j = np.argwhere(bad)[0]
        raise NumericalError(f"element ({j + 1},{k + 1}): degenerate pair")
    with np.errstate(invalid="ignore", divide="ignore"):
        rad = (28.0 / 37.0) * cross / s - 1.0
    bad = ~corner & (rad < RADICAND_CLAMP)
    if np.any(bad):
        k, j = np.argwhere(bad)[0]
        raise NumericalError(f"element ({j + 1},{k + 1}): inconsistent entries, radicand {rad[k, j]:.3e}")
    root = np.sqrt(np.clip(rad, 0.0, None))
    if np.any(~corner & (root == 0)):
        raise NumericalError("inconsistent entries: zero aspect ratio")
    with np.errstate(invalid="ignore", divide="ignore"):
        gamma = np.where(use_beta, root, 1.0 / root)
        kappa = np.where(use_beta, -s * gamma, -s / gamma)
    prov = np.where(use_beta, INTERIOR_PAIR, BOUNDARY_PAIR).astype(object)

    for k, j in ((0, 0), (0, nx - 1), (ny - 1, 0), (ny - 1, nx - 1)):
        dk = 1 if k == 0 else -1
        dj = 1 if j == 0 else -1
        g = gamma[k + dk, j] * gamma[k, j + dj] / gamma[k + dk, j + dj]
        gamma[k, j] = g
        kappa[k, j] = kappa_from_cross(cross[k, j], g)
        prov[k, j] = CORNER_RATIO

    if not (np.all(kappa > 0) and np.all(gamma > 0)):
        raise NumericalError("recovered non-positive coefficient or aspect ratio")
    lx, ly = extent
    hx = ly / gamma.sum(axis=0)
    hy = lx / (1.0 / gamma).sum(axis=1)
    return RecoveredField(kappa, gamma, hx, hy, prov.astype(str))
