"""Pointwise tensor calculus on grid values, with a common interface for both backends.

The heat-flow identities, the commutator source term and the flux cross-checks
all need covariant derivatives of products of fields.  A ``GridCalculus``
evaluates fields on a grid fine enough that quadratic expressions are exact and
exposes gradients, divergences, scalar Laplacians and integrals there.
Tensors are stored with tensor axes first; on the sphere components are ambient
Cartesian and always tangent, so contractions are ordinary sums.
"""

from __future__ import annotations

import numpy as np

from . import sphere as sph
from .sphere import SphereField
from .torus import TorusField, TorusGrid, resample_coeffs, restrict_coeffs


class TorusCalculus:
    """Calculus on a grid with ``2 N`` points per axis (exact for quadratic terms)."""

    ricci = 0.0

    def __init__(self, grid):
        self.grid = grid
        self.fine = TorusGrid(grid.d, 2 * grid.N)
        self.dim = grid.d

    def vector(self, u):
        return self.fine.to_physical(resample_coeffs(self.grid, u.coeffs, self.fine))

    def gradient(self, values, rank):
        c = self.fine.to_spectral(values)
        k = self.fine.k
        kk = k.reshape((self.dim,) + (1,) * rank + self.fine.shape)
        return self.fine.to_physical(1j * kk * c[None])

    def divergence(self, values, rank):
        return np.trace(self.gradient(values, rank), axis1=0, axis2=1)

    def scalar_laplacian(self, values):
        return self.fine.to_physical(-self.fine.k2 * self.fine.to_spectral(values))

    def integrate(self, values):
        return np.sum(values, axis=tuple(range(-self.dim, 0))) * self.fine.cell_volume

    def to_field(self, values):
        c = self.fine.to_spectral(values)
        return TorusField(self.grid, restrict_coeffs(self.fine, c, self.grid))


class SphereCalculus:
    """Ambient Cartesian calculus on the quadrature grid of a ``SphereBasis``."""

    ricci = 1.0

    def __init__(self, basis):
        self.basis = basis
        self.dim = 3

    def vector(self, u):
        return u.cartesian_values()

    def gradient(self, values, rank):
        return sph.tensor_gradient(self.basis, values, rank)

    def divergence(self, values, rank):
        return sph.tensor_divergence(self.basis, values, rank)

    def scalar_laplacian(self, values):
        return sph.scalar_laplacian(self.basis, values)

    def integrate(self, values):
        return self.basis.integrate(values)

    def to_field(self, values):
        return sph.vsh_analyze(self.basis, values)


def calculus_for(u):
    if isinstance(u, TorusField):
        return TorusCalculus(u.grid)
    if isinstance(u, SphereField):
        return SphereCalculus(u.basis)
    raise TypeError(f"no grid calculus for {type(u).__name__}")
