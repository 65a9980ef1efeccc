"""Benchmark problem on the unit square with an oscillating coefficient.

    kappa(x) = 1 + (1 + x1)(1 + x2) + eps sin(10 pi x1) sin(5 pi x2)
    u(x)     = sin(3 pi x1) x2 (1 - x2) + eps sin(pi x1/eps) sin(pi x2/eps)
    f        = -div(kappa grad u)

``eps = 0`` drops both oscillating terms.  For ``1/eps`` integral ``u``
vanishes on the boundary.
"""
from dataclasses import dataclass

import numpy as np

from .mesh import MicroMesh


@dataclass(frozen=True)
class Benchmark:
    eps: float

    def kappa(self, x, y):
        k = 1.0 + (1.0 + x) * (1.0 + y)
        if self.eps:
            k = k + self.eps * np.sin(10 * np.pi * x) * np.sin(5 * np.pi * y)
        return k

    def kappa_grad(self, x, y):
        kx = 1.0 + y
        ky = 1.0 + x
        if self.eps:
            e = self.eps
            kx = kx + 10 * np.pi * e * np.cos(10 * np.pi * x) * np.sin(5 * np.pi * y)
            ky = ky + 5 * np.pi * e * np.sin(10 * np.pi * x) * np.cos(5 * np.pi * y)
        return kx, ky

    def u(self, x, y):
        v = np.sin(3 * np.pi * x) * y * (1.0 - y)
        if self.eps:
            a = np.pi / self.eps
            v = v + self.eps * np.sin(a * x) * np.sin(a * y)
        return v

    def grad_u(self, x, y):
        ux = 3 * np.pi * np.cos(3 * np.pi * x) * y * (1.0 - y)
        uy = np.sin(3 * np.pi * x) * (1.0 - 2.0 * y)
        if self.eps:
            a = np.pi / self.eps
            ux = ux + np.pi * np.cos(a * x) * np.sin(a * y)
            uy = uy + np.pi * np.sin(a * x) * np.cos(a * y)
        return ux, uy

    def laplace_u(self, x, y):
        lap = -9 * np.pi ** 2 * np.sin(3 * np.pi * x) * y * (1.0 - y) - 2.0 * np.sin(3 * np.pi * x)
        if self.eps:
            a = np.pi / self.eps
            lap = lap - 2.0 * np.pi * a * np.sin(a * x) * np.sin(a * y)
        return lap

    def f(self, x, y):
        """Source with the continuous coefficient: ``-(kappa lap u + grad kappa . grad u)``."""
        kx, ky = self.kappa_grad(x, y)
        ux, uy = self.grad_u(x, y)
        return -(self.kappa(x, y) * self.laplace_u(x, y) + kx * ux + ky * uy)

    def sample_kappa(self, mesh: MicroMesh):
        """Piecewise-constant coefficient: ``kappa`` at micro element centers, shape (ny, nx)."""
        X, Y = mesh.centers()
        return self.kappa(X, Y)
