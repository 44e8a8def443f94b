"""Spectral calculus for periodic vector fields on the flat torus [0, 2*pi)^d.

Fields are stored as full complex Fourier coefficient arrays normalised so that

    u(x) = sum_k  u_hat(k) exp(i k.x),

i.e. ``u_hat = fftn(u) / N**d``.  With this convention Parseval reads
``int |u|^2 dx = (2 pi)^d sum_k |u_hat(k)|^2`` and all Laplacian eigenvalues are
``-|k|^2`` with integer ``k``.
"""

from __future__ import annotations

import functools
import os
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import BandwidthExceeded

# relative size below which out-of-band coefficients count as zero
_BAND_TOL = 1e-12


def fft_workers():
    """Worker count for scipy.fft, capped by the OHFL_THREADS environment variable."""
    value = os.environ.get("OHFL_THREADS")
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        return 1


@functools.lru_cache(maxsize=16)
def _wavenumbers(d, N):
    k1 = np.fft.fftfreq(N, 1.0 / N)
    ks = np.meshgrid(*([k1] * d), indexing="ij")
    ks = np.stack(ks).astype(float)
    ks.setflags(write=False)
    return ks


@functools.lru_cache(maxsize=16)
def _dealias_mask(d, N):
    ks = _wavenumbers(d, N)
    mask = np.all(np.abs(ks) <= N // 3, axis=0)
    mask.setflags(write=False)
    return mask


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with ``N`` points per axis on ``[0, 2 pi)^d``."""

    d: int
    N: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"d must be 2 or 3, got {self.d}")
        if self.N < 8 or self.N % 2:
            raise ValueError(f"N must be even and >= 8, got {self.N}")

    @property
    def shape(self):
        return (self.N,) * self.d

    @property
    def k(self):
        """Integer wavevector components, shape ``(d, N, ..., N)``."""
        return _wavenumbers(self.d, self.N)

    @property
    def k2(self):
        return np.sum(self.k**2, axis=0)

    @property
    def dealias(self):
        """Boolean mask of modes kept by the 2/3 rule (all ``|k_i| <= N/3``)."""
        return _dealias_mask(self.d, self.N)

    @property
    def cell_volume(self):
        return (2 * np.pi / self.N) ** self.d

    @property
    def volume(self):
        return (2 * np.pi) ** self.d

    def coordinates(self):
        x1 = 2 * np.pi * np.arange(self.N) / self.N
        return np.meshgrid(*([x1] * self.d), indexing="ij")

    def to_physical(self, coeffs):
        """Real grid values of a coefficient array (transform over the last d axes)."""
        axes = tuple(range(-self.d, 0))
        vals = scipy.fft.ifftn(coeffs, axes=axes, workers=fft_workers()) * self.N**self.d
        return vals.real

    def to_spectral(self, values):
        axes = tuple(range(-self.d, 0))
        return scipy.fft.fftn(values, axes=axes, workers=fft_workers()) / self.N**self.d


def _symmetrize(grid, coeffs):
    """Project coefficients onto Hermitian-symmetric (real-valued) arrays."""
    axes = tuple(range(-grid.d, 0))
    flipped = np.conj(np.roll(np.flip(coeffs, axis=axes), 1, axis=axes))
    return 0.5 * (coeffs + flipped)


@dataclass(frozen=True, eq=False)
class TorusField:
    """Real d-component vector field; ``coeffs`` has shape ``(d, N, ..., N)``."""

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        expected = (self.grid.d,) + self.grid.shape
        if self.coeffs.shape != expected:
            raise ValueError(f"coeffs shape {self.coeffs.shape} != {expected}")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.d,) + grid.shape, dtype=complex))

    @classmethod
    def from_values(cls, grid, values):
        values = np.asarray(values, dtype=float)
        return cls(grid, grid.to_spectral(values))

    @classmethod
    def from_coeffs(cls, grid, coeffs):
        """Build a field from arbitrary coefficients, enforcing Hermitian symmetry."""
        return cls(grid, _symmetrize(grid, np.asarray(coeffs, dtype=complex)))

    def values(self):
        return self.grid.to_physical(self.coeffs)

    def hermitian_defect(self):
        return float(np.max(np.abs(self.coeffs - _symmetrize(self.grid, self.coeffs)), initial=0.0))

    def __add__(self, other):
        return TorusField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return TorusField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return TorusField(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return TorusField(self.grid, -self.coeffs)


@dataclass(frozen=True, eq=False)
class TorusScalar:
    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"coeffs shape {self.coeffs.shape} != {self.grid.shape}")

    @classmethod
    def from_values(cls, grid, values):
        return cls(grid, grid.to_spectral(np.asarray(values, dtype=float)))

    def values(self):
        return self.grid.to_physical(self.coeffs)

    def __add__(self, other):
        return TorusScalar(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return TorusScalar(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return TorusScalar(self.grid, self.coeffs * c)

    __rmul__ = __mul__


def gradient(u):
    """Coefficients of ``grad_j u^l`` as an array of shape ``(d, d, N, ...)``, index ``[j, l]``."""
    k = u.grid.k
    return 1j * k[:, None] * u.coeffs[None, :]


def scalar_gradient(f):
    """Gradient of a scalar as a TorusField."""
    return TorusField(f.grid, 1j * f.grid.k * f.coeffs[None])


def divergence(u):
    return TorusScalar(u.grid, np.sum(1j * u.grid.k * u.coeffs, axis=0))


def tensor_divergence(grid, t):
    """``grad_j T^{j l}`` for a coefficient array ``t[j, l]``; returns coefficients ``[l]``."""
    return np.einsum("j...,jl...->l...", 1j * grid.k, t)


def hodge_laplacian_flat(u):
    # Ric = 0 on the flat torus, so the Hodge Laplacian is the componentwise Laplacian.
    return TorusField(u.grid, -u.grid.k2 * u.coeffs)


def scalar_laplacian(f):
    return TorusScalar(f.grid, -f.grid.k2 * f.coeffs)


def leray_project(u):
    """Remove the gradient part of every nonzero mode; the mean is left unchanged."""
    k = u.grid.k
    k2 = u.grid.k2
    safe = np.where(k2 == 0, 1.0, k2)
    kdotu = np.sum(k * u.coeffs, axis=0)
    out = u.coeffs - k * (kdotu / safe)
    return TorusField(u.grid, out)


def check_bandwidth(grid, coeffs, name="operand"):
    """Raise BandwidthExceeded if ``coeffs`` has content outside the 2/3-rule band."""
    coeffs = np.asarray(coeffs)
    scale = np.max(np.abs(coeffs), initial=0.0)
    if scale == 0.0:
        return
    outside = np.abs(coeffs[..., ~grid.dealias])
    if outside.size and np.max(outside) > _BAND_TOL * scale:
        raise BandwidthExceeded(f"{name} has modes above N/3 = {grid.N // 3}")


def pointwise_tensor_product(grid, a, b):
    """Dealiased product of two coefficient arrays (broadcast over leading axes).

    Both operands are transformed to the grid, multiplied, transformed back and
    truncated to the 2/3-rule band.  The result is exact whenever both
    operands are band-limited to ``N/3``.
    """
    check_bandwidth(grid, a, "a")
    check_bandwidth(grid, b, "b")
    prod = grid.to_physical(a) * grid.to_physical(b)
    return grid.to_spectral(prod) * grid.dealias


def outer_product(u, w=None):
    """Dealiased coefficients of ``u^j w^l`` with shape ``(d, d, N, ...)``."""
    w = u if w is None else w
    grid = u.grid
    check_bandwidth(grid, u.coeffs, "u")
    check_bandwidth(grid, w.coeffs, "w")
    uv = grid.to_physical(u.coeffs)
    wv = uv if w is u else grid.to_physical(w.coeffs)
    prod = uv[:, None] * wv[None, :]
    return grid.to_spectral(prod) * grid.dealias


def dealias(u):
    return TorusField(u.grid, u.coeffs * u.grid.dealias)


def lp_norm(u, p, oversample=1):
    """L^p norm with the flat Euclidean pointwise norm and ``dx = (2 pi / N)^d``.

    With ``oversample > 1`` the field is first interpolated spectrally onto a
    grid with ``oversample * N`` points per axis, which makes the quadrature of
    ``|u|^p`` accurate for non-even ``p`` and high modes.
    """
    if oversample == 1:
        return lp_norm_values(u.grid, u.values(), p, tensor_rank=1)
    fine = TorusGrid(u.grid.d, oversample * u.grid.N)
    vals = fine.to_physical(resample_coeffs(u.grid, u.coeffs, fine))
    return lp_norm_values(fine, vals, p, tensor_rank=1)


def scalar_lp_norm(f, p):
    return lp_norm_values(f.grid, f.values(), p, tensor_rank=0)


def lp_norm_values(grid, values, p, tensor_rank):
    """L^p norm of grid values of a rank-``tensor_rank`` tensor field."""
    if p < 1:
        raise ValueError("p must be >= 1")
    values = np.asarray(values)
    if tensor_rank:
        mag = np.sqrt(np.sum(values.reshape((-1,) + grid.shape) ** 2, axis=0))
    else:
        mag = np.abs(values)
    return float(np.sum(mag**p) * grid.cell_volume) ** (1.0 / p)


def gradient_lp_norm(u, p, oversample=1):
    """``|| grad u ||_{L^p}`` with the Frobenius pointwise norm of ``grad_j u^l``."""
    if oversample == 1:
        return lp_norm_values(u.grid, u.grid.to_physical(gradient(u)), p, tensor_rank=2)
    fine = TorusGrid(u.grid.d, oversample * u.grid.N)
    vals = fine.to_physical(resample_coeffs(u.grid, gradient(u), fine))
    return lp_norm_values(fine, vals, p, tensor_rank=2)


def l2_inner(u, w):
    """``int u . w dx`` computed exactly from the coefficients."""
    return float(np.real(np.sum(u.coeffs * np.conj(w.coeffs))) * u.grid.volume)


def l2_norm(u):
    return float(np.sqrt(np.sum(np.abs(u.coeffs) ** 2) * u.grid.volume))


def resample_coeffs(grid, coeffs, fine):
    """Embed band-limited coefficients of ``grid`` into the larger grid ``fine``.

    Used to evaluate quadratic quantities without aliasing: on a grid with
    twice the points every product of two resolved fields is exactly resolved.
    """
    if fine.d != grid.d or fine.N < grid.N:
        raise ValueError("fine grid must have the same dimension and at least as many points")
    lead = coeffs.shape[: coeffs.ndim - grid.d]
    out = np.zeros(lead + fine.shape, dtype=complex)
    half = grid.N // 2
    idx = np.concatenate([np.arange(0, half), np.arange(fine.N - half, fine.N)])
    src = np.concatenate([np.arange(0, half), np.arange(grid.N - half, grid.N)])
    sl_out = np.ix_(*([idx] * grid.d))
    sl_src = np.ix_(*([src] * grid.d))
    out[(Ellipsis,) + sl_out] = coeffs[(Ellipsis,) + sl_src]
    return out


def restrict_coeffs(fine, coeffs, grid):
    """Inverse of ``resample_coeffs``: keep the modes representable on ``grid``."""
    half = grid.N // 2
    idx = np.concatenate([np.arange(0, half), np.arange(fine.N - half, fine.N)])
    return coeffs[(Ellipsis,) + np.ix_(*([idx] * grid.d))]
