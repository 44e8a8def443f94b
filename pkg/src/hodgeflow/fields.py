"""Synthetic divergence-free fields with known regularity on both backends."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BandwidthExceeded
from .sphere import SphereBasis, SphereField, l2_norm
from .torus import TorusField, TorusGrid, check_bandwidth, leray_project, _symmetrize

# triad phase used by the lacunary generator; sin(theta) = 1 makes the
# transfer through each triad maximal and of one sign
DEFAULT_TRIAD_PHASE = np.pi / 2


def _perp(k, polarization=None):
    k = np.asarray(k, dtype=float)
    if polarization is not None:
        e = np.asarray(polarization, dtype=float)
        e = e - k * (e @ k) / (k @ k)
    elif k.size == 2:
        e = np.array([-k[1], k[0]])
    else:
        axis = np.array([0.0, 0.0, 1.0]) if abs(k[2]) < np.linalg.norm(k) * 0.9 else np.array([1.0, 0, 0])
        e = np.cross(k, axis)
    n = np.linalg.norm(e)
    if n == 0:
        raise ValueError("polarization must not be parallel to k")
    return e / n


def _add_cos_mode(coeffs, grid, k, amplitude, phase, direction):
    """Add ``amplitude * cos(k.x + phase) * direction`` to a coefficient array in place."""
    N = grid.N
    k = tuple(int(c) for c in k)
    if any(abs(c) > N // 3 for c in k):
        raise BandwidthExceeded(f"mode {k} exceeds the dealiased band N/3 = {N // 3}")
    pos = tuple(c % N for c in k)
    neg = tuple((-c) % N for c in k)
    z = 0.5 * amplitude * np.exp(1j * phase)
    for comp in range(grid.d):
        coeffs[(comp,) + pos] += z * direction[comp]
        coeffs[(comp,) + neg] += np.conj(z) * direction[comp]


def single_mode(grid, k, amplitude=1.0, phase=0.0, polarization=None):
    """``amplitude * sin(k.x + phase) * e`` with ``e`` a unit vector orthogonal to ``k``.

    In 2D, ``e`` is ``k`` rotated by 90 degrees, so ``k = (1, 0)`` gives ``sin(x1) e2``.
    """
    k = np.asarray(k)
    if k.shape != (grid.d,):
        raise ValueError(f"wavevector must have {grid.d} components")
    if not np.any(k):
        raise ValueError("k = 0 gives a constant field; use TorusField.from_values")
    coeffs = np.zeros((grid.d,) + grid.shape, dtype=complex)
    _add_cos_mode(coeffs, grid, k, amplitude, phase - np.pi / 2, _perp(k, polarization))
    return TorusField(grid, coeffs)


def multi_mode(grid, modes):
    """Sum of ``single_mode`` terms; ``modes`` is a sequence of ``(k, amplitude, phase)``."""
    total = TorusField.zeros(grid)
    for k, a, ph in modes:
        total = total + single_mode(grid, k, a, ph)
    return total


def taylor_green(grid, amplitude=1.0):
    """Steady cellular flow ``(-sin x1 cos x2, cos x1 sin x2)`` (stream function ``cos x1 cos x2``)."""
    X = grid.coordinates()
    vals = np.zeros((grid.d,) + grid.shape)
    vals[0] = -np.sin(X[0]) * np.cos(X[1])
    vals[1] = np.cos(X[0]) * np.sin(X[1])
    return TorusField.from_values(grid, amplitude * vals)


def lacunary(grid, alpha, J, seed=0, shear=False, triad_phase=DEFAULT_TRIAD_PHASE):
    """Lacunary field of regularity ``alpha`` on the torus.

    The base terms are ``2^{-alpha j} cos(2^j x1 + phi_j) e2`` for ``j = 1..J``.
    On their own these form a shear flow whose nonlinearity is a pure gradient, so
    unless ``shear`` is set every shell ``j >= 2`` also gets two partner modes
    ``2^{j-2} (1, 1)`` and ``2^{j-2} (3, -1)`` that close a triad with ``2^j e1``.
    Their magnitudes differ, so the triad exchanges energy.  Every mode has
    amplitude ``|k|^{-alpha}``; partner phases are chosen so the triad phase is
    ``triad_phase``, which keeps the energy transfer coherent across shells.
    ``J = 1`` is a single mode in either case.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if J < 1:
        raise ValueError("J must be >= 1")
    if 2**J > grid.N // 3:
        raise BandwidthExceeded(f"2^J = {2 ** J} exceeds N/3 = {grid.N // 3}")
    rng = np.random.default_rng(seed)
    coeffs = np.zeros((grid.d,) + grid.shape, dtype=complex)
    pad = (0,) * (grid.d - 2)
    for j in range(1, J + 1):
        phi_c, phi_a = rng.uniform(0, 2 * np.pi, size=2)
        kc = np.array((2**j, 0) + pad)
        ec = np.array((0.0, 1.0) + pad)
        _add_cos_mode(coeffs, grid, kc, 2.0 ** (-alpha * j), phi_c, ec)
        if shear or j < 2:
            continue
        ka = np.array((2 ** (j - 2), 2 ** (j - 2)) + pad)
        kb = np.array((3 * 2 ** (j - 2), -(2 ** (j - 2))) + pad)
        phi_b = triad_phase + phi_c - phi_a
        _add_cos_mode(coeffs, grid, ka, float(np.linalg.norm(ka)) ** (-alpha), phi_a, _perp(ka))
        _add_cos_mode(coeffs, grid, kb, float(np.linalg.norm(kb)) ** (-alpha), phi_b, _perp(kb))
    return TorusField(grid, coeffs)


def random_slope(grid, gamma, seed=0, k_max=None):
    """Leray-projected Gaussian field with ``|u_hat(k)| ~ |k|^{-gamma}`` inside the band."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    rng = np.random.default_rng(seed)
    shape = (grid.d,) + grid.shape
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kmag = np.sqrt(grid.k2)
    band = grid.dealias & (kmag > 0)
    if k_max is not None:
        band &= kmag <= k_max
    weight = np.where(band, np.where(kmag > 0, kmag, 1.0) ** (-gamma), 0.0)
    u = TorusField(grid, _symmetrize(grid, z * weight))
    return leray_project(u)


def sphere_mode(basis, l, m=0, kind="curl"):
    """Real part of the curl-type (or gradient-type) harmonic of degree ``l`` and order ``m``."""
    return SphereField.basis_field(basis, l, m, kind)


def sphere_lacunary(basis, alpha, J, seed=0):
    """``sum_j 2^{-alpha j} Phi_{2^j, m_j} / ||Phi_{2^j, m_j}||`` with seeded orders ``m_j``."""
    if 2**J > basis.L_max:
        raise BandwidthExceeded(f"2^J = {2 ** J} exceeds L_max = {basis.L_max}")
    rng = np.random.default_rng(seed)
    total = SphereField.zeros(basis)
    for j in range(1, J + 1):
        l = 2**j
        m = int(rng.integers(-l, l + 1))
        phi = SphereField.basis_field(basis, l, m)
        total = total + phi * (2.0 ** (-alpha * j) / l2_norm(phi))
    return total


def sphere_random(basis, gamma=1.5, seed=0, l_band=None):
    """Divergence-free random field with curl coefficients ``~ l^{-gamma}`` up to ``l_band``.

    Coefficients are drawn on the ``l_band`` table and then embedded, so the
    same seed and band give the same field for every ``L_max >= l_band``.
    """
    band = basis.L_max if l_band is None else int(l_band)
    if band > basis.L_max:
        raise BandwidthExceeded(f"l_band = {band} exceeds L_max = {basis.L_max}")
    rng = np.random.default_rng(seed)
    shape = (band + 1, 2 * band + 1)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    l = np.arange(band + 1, dtype=float)[:, None]
    z *= np.where(l >= 1, np.maximum(l, 1.0) ** (-gamma), 0.0)
    c = np.zeros(basis.coeff_shape, dtype=complex)
    L = basis.L_max
    c[: band + 1, L - band : L + band + 1] = z
    return SphereField.from_coeffs(basis, curl=c)


@dataclass
class GeneratorSpec:
    """Serializable description of a generated field (used by the CLI)."""

    kind: str
    backend: str = "torus"
    d: int = 2
    N: int = 64
    L_max: int = 16
    alpha: float = 0.5
    J: int = 4
    seed: int = 0
    gamma: float = 1.5
    k: tuple = (1, 0)
    l: int = 1
    m: int = 0
    extra: dict = field(default_factory=dict)

    def build(self):
        if self.backend == "torus":
            grid = TorusGrid(self.d, self.N)
            if self.kind == "single_mode":
                return single_mode(grid, self.k)
            if self.kind == "lacunary":
                return lacunary(grid, self.alpha, self.J, self.seed, **self.extra)
            if self.kind == "random_slope":
                return random_slope(grid, self.gamma, self.seed, **self.extra)
            if self.kind == "taylor_green":
                return taylor_green(grid)
        elif self.backend == "sphere":
            basis = SphereBasis(self.L_max)
            if self.kind in ("sphere_mode", "single_mode"):
                return sphere_mode(basis, self.l, self.m)
            if self.kind == "lacunary":
                return sphere_lacunary(basis, self.alpha, self.J, self.seed)
            if self.kind in ("sphere_random", "random_slope"):
                return sphere_random(basis, self.gamma, self.seed, **self.extra)
        raise ValueError(f"unknown generator {self.kind!r} for backend {self.backend!r}")


def is_divergence_free(u, tol=1e-12):
    if isinstance(u, SphereField):
        return u.is_divergence_free()
    check_bandwidth(u.grid, u.coeffs)
    div = np.sum(1j * u.grid.k * u.coeffs, axis=0)
    scale = max(np.max(np.abs(u.coeffs)), 1e-300)
    return bool(np.max(np.abs(div)) <= tol * scale * u.grid.N)
