"""Tangent vector fields on the unit sphere S^2 in a vector spherical harmonic basis.

A field is stored as two coefficient blocks over

    Phi_lm = r_hat x grad Y_lm      (curl type, divergence free)
    Psi_lm = grad Y_lm              (gradient type)

with orthonormal complex ``Y_lm`` (Condon-Shortley phase), so that
``int |Phi_lm|^2 = int |Psi_lm|^2 = l(l+1)``.  Both blocks are eigenfunctions of
the Hodge Laplacian with eigenvalue ``-l(l+1)``.

Grid quantities live on Gauss-Legendre colatitudes times a uniform longitude
grid.  Frame components are taken in the orthonormal frame (theta_hat, phi_hat).
Nonlinear terms are formed pointwise in ambient Cartesian components; covariant
derivatives of grid tensors are tangential projections of surface gradients, with
each Cartesian component expanded exactly in scalar harmonics up to degree
``2 L_max + 6``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import GridMismatch, RankMismatch
from .torus import fft_workers


def _assoc_legendre(L, x):
    """Orthonormal associated Legendre functions and their theta-derivatives.

    Returns arrays ``P[l, m, i]`` and ``dP[l, m, i]`` (zero for m > l) such that
    ``Y_lm(theta, phi) = P[l, m] exp(i m phi)`` with ``x = cos(theta)``.
    """
    x = np.asarray(x, dtype=float)
    sin = np.sqrt(1.0 - x * x)
    n = x.size
    P = np.zeros((L + 1, L + 1, n))
    P[0, 0] = 1.0 / np.sqrt(4 * np.pi)
    for m in range(1, L + 1):
        P[m, m] = -np.sqrt((2 * m + 1) / (2.0 * m)) * sin * P[m - 1, m - 1]
    for m in range(0, L):
        P[m + 1, m] = np.sqrt(2 * m + 3) * x * P[m, m]
    for l in range(2, L + 1):
        m = np.arange(0, l - 1)
        a = np.sqrt((4.0 * l * l - 1) / (l * l - m * m))
        b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
        P[l, : l - 1] = a[:, None] * (x * P[l - 1, : l - 1] - b[:, None] * P[l - 2, : l - 1])
    dP = np.zeros_like(P)
    for l in range(1, L + 1):
        m = np.arange(0, l + 1)
        c = np.sqrt((2.0 * l + 1) / (2.0 * l - 1) * (l * l - m * m))
        dP[l, : l + 1] = (l * x * P[l, : l + 1] - c[:, None] * P[l - 1, : l + 1]) / sin
    return P, dP


class _Tables:
    """Quadrature grid, frames and Legendre tables for one ``L_max``."""

    def __init__(self, L):
        self.L = L
        self.L_aux = 2 * L + 6
        self.n_lat = 2 * L + 8
        self.n_lon = 2 * self.n_lat
        x, w = np.polynomial.legendre.leggauss(self.n_lat)
        x = x[::-1]
        w = w[::-1]
        self.x = x
        self.theta = np.arccos(x)
        self.phi = 2 * np.pi * np.arange(self.n_lon) / self.n_lon
        self.lat_weights = w
        self.dphi = 2 * np.pi / self.n_lon
        self.area = np.outer(w, np.full(self.n_lon, self.dphi))
        self.sin = np.sqrt(1.0 - x * x)
        self.cot = x / self.sin
        self.P, self.dP = _assoc_legendre(self.L_aux, x)
        ls = np.arange(self.L_aux + 1)
        self.ll1 = ls * (ls + 1.0)
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        self.r_hat = np.stack([st * cp, st * sp, ct])
        self.e_theta = np.stack([ct * cp, ct * sp, -st])
        self.e_phi = np.stack([-sp, cp, np.zeros_like(sp)])
        self.frame = np.stack([self.e_theta, self.e_phi])  # (2, 3, n_lat, n_lon)
        self.tangent_projector = np.eye(3)[:, :, None, None] - self.r_hat[:, None] * self.r_hat[None, :]
        for arr in vars(self).values():
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)


@functools.lru_cache(maxsize=8)
def _tables(L):
    return _Tables(L)


@dataclass(frozen=True)
class SphereBasis:
    """Degree cutoff ``L_max`` plus its quadrature grid.

    The grid has ``2 L_max + 8`` Gauss-Legendre colatitudes and twice as many
    longitudes, which integrates products up to total degree ``4 L_max + 15``
    exactly.
    """

    L_max: int

    def __post_init__(self):
        if self.L_max < 1:
            raise ValueError("L_max must be >= 1")

    @property
    def tables(self):
        return _tables(self.L_max)

    @property
    def grid_shape(self):
        t = self.tables
        return (t.n_lat, t.n_lon)

    @property
    def coeff_shape(self):
        return (self.L_max + 1, 2 * self.L_max + 1)

    def degrees(self):
        """``l`` for every slot of a coefficient array."""
        return np.broadcast_to(np.arange(self.L_max + 1)[:, None], self.coeff_shape)

    def valid_mask(self):
        l = np.arange(self.L_max + 1)[:, None]
        m = np.arange(-self.L_max, self.L_max + 1)[None, :]
        return (l >= 1) & (np.abs(m) <= l)

    def integrate(self, values):
        """Quadrature of grid values over the sphere (trailing two axes)."""
        return np.sum(values * self.tables.area, axis=(-2, -1))


def _enforce_real(basis, c):
    """Impose ``c_{l,-m} = (-1)^m conj(c_{l,m})`` by averaging the two halves."""
    L = basis.L_max
    m = np.arange(-L, L + 1)
    sign = (-1.0) ** np.abs(m)
    mirrored = sign[None, :] * np.conj(c[:, ::-1])
    out = 0.5 * (c + mirrored)
    return out * basis.valid_mask()


@dataclass(frozen=True, eq=False)
class SphereField:
    """Real tangent vector field; coefficient arrays indexed ``[l, m + L_max]``."""

    basis: SphereBasis
    curl: np.ndarray
    grad: np.ndarray

    def __post_init__(self):
        shape = self.basis.coeff_shape
        if self.curl.shape != shape or self.grad.shape != shape:
            raise ValueError(f"coefficient blocks must have shape {shape}")

    @classmethod
    def zeros(cls, basis):
        z = np.zeros(basis.coeff_shape, dtype=complex)
        return cls(basis, z, z.copy())

    @classmethod
    def from_coeffs(cls, basis, curl=None, grad=None):
        curl = np.zeros(basis.coeff_shape, complex) if curl is None else np.asarray(curl, complex)
        grad = np.zeros(basis.coeff_shape, complex) if grad is None else np.asarray(grad, complex)
        return cls(basis, _enforce_real(basis, curl), _enforce_real(basis, grad))

    @classmethod
    def basis_field(cls, basis, l, m, kind="curl"):
        """The real field ``Phi_lm + conj(Phi_lm)`` (or just ``Phi_l0`` for m = 0)."""
        if not 1 <= l <= basis.L_max or abs(m) > l:
            raise ValueError(f"(l, m) = ({l}, {m}) outside basis with L_max = {basis.L_max}")
        c = np.zeros(basis.coeff_shape, dtype=complex)
        L = basis.L_max
        c[l, m + L] = 1.0
        if m != 0:
            c[l, -m + L] = (-1.0) ** m
        z = np.zeros_like(c)
        return cls(basis, c, z) if kind == "curl" else cls(basis, z, c)

    def is_divergence_free(self):
        return not np.any(self.grad)

    def frame_values(self):
        """Grid values in the (theta_hat, phi_hat) frame, shape ``(2, n_lat, n_lon)``."""
        return vsh_synthesize(self)

    def cartesian_values(self):
        return frame_to_cartesian(self.basis, self.frame_values(), rank=1)

    def __add__(self, other):
        return SphereField(self.basis, self.curl + other.curl, self.grad + other.grad)

    def __sub__(self, other):
        return SphereField(self.basis, self.curl - other.curl, self.grad - other.grad)

    def __mul__(self, c):
        return SphereField(self.basis, self.curl * c, self.grad * c)

    __rmul__ = __mul__

    def __neg__(self):
        return SphereField(self.basis, -self.curl, -self.grad)

    def multiply_degrees(self, factor_of_l):
        """Apply a degree-dependent multiplier ``factor_of_l(l)`` to both blocks."""
        f = factor_of_l(np.arange(self.basis.L_max + 1, dtype=float))[:, None]
        return SphereField(self.basis, self.curl * f, self.grad * f)


# ----------------------------------------------------------------------------
# transforms


def _check_grid(basis, values, lead):
    shape = basis.grid_shape
    if values.shape[-2:] != shape or values.shape[: len(lead)] != lead:
        raise GridMismatch(f"values of shape {values.shape} do not match grid {lead + shape}")


def _rfft_lon(values, mmax):
    t = values.shape[-1]
    F = scipy.fft.rfft(values, axis=-1, workers=fft_workers())[..., : mmax + 1]
    return F * (2 * np.pi / t)


def _irfft_lon(G, n_lon):
    full = np.zeros(G.shape[:-1] + (n_lon // 2 + 1,), dtype=complex)
    full[..., : G.shape[-1]] = G
    return scipy.fft.irfft(full, n=n_lon, axis=-1, workers=fft_workers()) * n_lon


def _m_nonneg_to_full(basis, half):
    """Expand ``[..., l, m>=0]`` coefficients to ``[..., l, m + L]`` using reality."""
    L = basis.L_max
    out = np.zeros(half.shape[:-1] + (2 * L + 1,), dtype=complex)
    out[..., L:] = half
    m = np.arange(1, L + 1)
    out[..., L - m] = ((-1.0) ** m) * np.conj(half[..., m])
    return out * basis.valid_mask()


def vsh_analyze(basis, values):
    """Project grid values onto the curl and gradient blocks up to ``L_max``.

    ``values`` are frame components ``(2, n_lat, n_lon)`` or ambient Cartesian
    components ``(3, n_lat, n_lon)`` of a tangent field.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 3 or values.shape[0] not in (2, 3):
        raise GridMismatch(f"expected (2|3, n_lat, n_lon) values, got {values.shape}")
    _check_grid(basis, values, values.shape[:1])
    if values.shape[0] == 3:
        values = cartesian_to_frame(basis, values, rank=1)
    t = basis.tables
    L = basis.L_max
    Ut = _rfft_lon(values[0], L)  # (n_lat, L+1)
    Up = _rfft_lon(values[1], L)
    P = t.P[: L + 1, : L + 1]
    dP = t.dP[: L + 1, : L + 1]
    m = np.arange(L + 1)
    imPs = 1j * m[None, :, None] * P / t.sin
    w = t.lat_weights
    curl = np.einsum("lmi,i,im->lm", imPs, w, Ut) + np.einsum("lmi,i,im->lm", dP, w, Up)
    grad = np.einsum("lmi,i,im->lm", dP, w, Ut) - np.einsum("lmi,i,im->lm", imPs, w, Up)
    ll1 = t.ll1[: L + 1].copy()
    ll1[0] = 1.0
    curl /= ll1[:, None]
    grad /= ll1[:, None]
    curl[0] = 0.0
    grad[0] = 0.0
    return SphereField(basis, _m_nonneg_to_full(basis, curl), _m_nonneg_to_full(basis, grad))


def vsh_synthesize(u):
    """Frame components ``(u_theta, u_phi)`` of ``u`` on the quadrature grid."""
    basis = u.basis
    t = basis.tables
    L = basis.L_max
    P = t.P[: L + 1, : L + 1]
    dP = t.dP[: L + 1, : L + 1]
    m = np.arange(L + 1)
    imPs = 1j * m[None, :, None] * P / t.sin
    c = u.curl[:, L:]
    g = u.grad[:, L:]
    ut = np.einsum("lm,lmi->im", c, -imPs) + np.einsum("lm,lmi->im", g, dP)
    up = np.einsum("lm,lmi->im", c, dP) + np.einsum("lm,lmi->im", g, imPs)
    return np.stack([_irfft_lon(ut, t.n_lon), _irfft_lon(up, t.n_lon)])


def project_vector(basis, cart_values):
    """Orthogonal projection of a grid tangent field onto degrees ``<= L_max``.

    Returns the projected field and the relative L^2 norm of the discarded part.
    """
    field = vsh_analyze(basis, cart_values)
    total = np.sqrt(basis.integrate(np.sum(cart_values**2, axis=0)))
    if total == 0:
        return field, 0.0
    rest = cart_values - field.cartesian_values()
    return field, float(np.sqrt(basis.integrate(np.sum(rest**2, axis=0))) / total)


def scalar_analyze(basis, values):
    """Scalar harmonic coefficients ``[..., l, m>=0]`` up to the auxiliary degree."""
    t = basis.tables
    F = _rfft_lon(values, t.L_aux)
    return np.einsum("lmi,i,...im->...lm", t.P, t.lat_weights, F)


def scalar_synthesize(basis, coeffs):
    t = basis.tables
    G = np.einsum("...lm,lmi->...im", coeffs, t.P)
    return _irfft_lon(G, t.n_lon)


def scalar_laplacian(basis, values):
    """Laplace-Beltrami operator of grid scalars (exact for degree <= 2 L_max + 6)."""
    c = scalar_analyze(basis, values)
    return scalar_synthesize(basis, -basis.tables.ll1[:, None] * c)


def surface_gradient(basis, values):
    """Ambient Cartesian components of the surface gradient of grid scalars.

    Input shape ``(..., n_lat, n_lon)``; output ``(3, ..., n_lat, n_lon)``.
    """
    t = basis.tables
    c = scalar_analyze(basis, values)
    m = np.arange(t.L_aux + 1)
    d_theta = _irfft_lon(np.einsum("...lm,lmi->...im", c, t.dP), t.n_lon)
    d_phi = _irfft_lon(np.einsum("...lm,lmi->...im", c * 1j * m, t.P), t.n_lon) / t.sin[:, None]
    return t.e_theta.reshape((3,) + (1,) * (values.ndim - 2) + values.shape[-2:]) * d_theta + t.e_phi.reshape(
        (3,) + (1,) * (values.ndim - 2) + values.shape[-2:]
    ) * d_phi


def _project_indices(basis, tensor, rank):
    P = basis.tables.tangent_projector
    out = tensor
    letters = "abcdefgh"
    for axis in range(rank):
        idx = letters[:rank]
        src = idx.replace(idx[axis], "z")
        out = np.einsum(f"{idx[axis]}z...,{src}...->{idx}...", P, out)
    return out


def tensor_gradient(basis, cart_tensor, rank):
    """Covariant derivative of a tangent tensor field given in Cartesian components.

    ``cart_tensor`` has shape ``(3,)*rank + (n_lat, n_lon)``; the result has the
    derivative index first, shape ``(3,)*(rank+1) + (n_lat, n_lon)``.
    """
    cart_tensor = np.asarray(cart_tensor, dtype=float)
    if cart_tensor.shape[:rank] != (3,) * rank:
        raise RankMismatch(f"expected rank-{rank} Cartesian tensor, got shape {cart_tensor.shape}")
    g = surface_gradient(basis, cart_tensor)
    if rank == 0:
        return g
    # project every original tensor index (axes 1..rank); the derivative index is already tangent
    moved = np.moveaxis(g, 0, rank)
    moved = _project_indices(basis, moved, rank)
    return np.moveaxis(moved, rank, 0)


def tensor_divergence(basis, cart_tensor, rank):
    """``grad_j T^{j ...}``: contract the derivative with the first tensor index."""
    g = tensor_gradient(basis, cart_tensor, rank)
    return np.trace(g, axis1=0, axis2=1)


def frame_to_cartesian(basis, frame_tensor, rank):
    E = basis.tables.frame  # (2, 3, grid)
    out = np.asarray(frame_tensor)
    letters = "abcdefgh"
    for axis in range(rank):
        idx = letters[:rank]
        src = idx.replace(idx[axis], "z")
        dst = idx
        out = np.einsum(f"z{idx[axis]}...,{src}...->{dst}...", E, out)
    return out


def cartesian_to_frame(basis, cart_tensor, rank):
    E = basis.tables.frame
    out = np.asarray(cart_tensor)
    letters = "abcdefgh"
    for axis in range(rank):
        idx = letters[:rank]
        src = idx.replace(idx[axis], "z")
        out = np.einsum(f"{idx[axis]}z...,{src}...->{idx}...", E, out)
    return out


# ----------------------------------------------------------------------------
# operators on SphereField


def hodge_laplacian_sphere(u):
    """Diagonal action ``-l(l+1)`` on both the curl and the gradient blocks."""
    return u.multiply_degrees(lambda l: -l * (l + 1))


def divergence_coeffs(u):
    """Scalar harmonic coefficients of ``div u`` (``div Psi_lm = -l(l+1) Y_lm``)."""
    l = u.basis.degrees()
    return -l * (l + 1) * u.grad


def covariant_gradient_sphere(u):
    """``grad_j u^l`` in the orthonormal frame, shape ``(2, 2, n_lat, n_lon)``, index ``[j, l]``.

    Uses closed-form theta/phi derivatives of the harmonics plus the frame
    connection (``grad_phi theta_hat = cot(theta) phi_hat``,
    ``grad_phi phi_hat = -cot(theta) theta_hat``).
    """
    basis = u.basis
    t = basis.tables
    L = basis.L_max
    P = t.P[: L + 1, : L + 1]
    dP = t.dP[: L + 1, : L + 1]
    l = np.arange(L + 1)[:, None, None]
    m = np.arange(L + 1)[None, :, None]
    sin, cot = t.sin, t.cot
    d2P = -cot * dP + (m * m / sin**2 - l * (l + 1)) * P
    im = 1j * m
    dPs = (dP / sin - P * cot / sin)  # d/dtheta (P / sin)
    c = u.curl[:, L:]
    g = u.grad[:, L:]

    def synth(a, b):
        return _irfft_lon(np.einsum("lm,lmi->im", c, a) + np.einsum("lm,lmi->im", g, b), t.n_lon)

    ut = synth(-im * P / sin, dP)
    up = synth(dP, im * P / sin)
    dt_ut = synth(-im * dPs, d2P)
    dt_up = synth(d2P, im * dPs)
    dp_ut = synth(-im * im * P / sin, im * dP)
    dp_up = synth(im * dP, im * im * P / sin)
    s = sin[:, None]
    ct = cot[:, None]
    out = np.empty((2, 2) + basis.grid_shape)
    out[0, 0] = dt_ut
    out[0, 1] = dt_up
    out[1, 0] = dp_ut / s - ct * up
    out[1, 1] = dp_up / s + ct * ut
    return out


def lp_norm_sphere(u, p):
    return lp_norm_values(u.basis, u.frame_values(), p, tensor_rank=1)


def lp_norm_values(basis, values, p, tensor_rank):
    """L^p norm of grid tensor values (any orthonormal components) by quadrature."""
    if p < 1:
        raise ValueError("p must be >= 1")
    values = np.asarray(values)
    if tensor_rank:
        mag = np.sqrt(np.sum(values.reshape((-1,) + basis.grid_shape) ** 2, axis=0))
    else:
        mag = np.abs(values)
    return float(basis.integrate(mag**p)) ** (1.0 / p)


def gradient_lp_norm(u, p):
    return lp_norm_values(u.basis, covariant_gradient_sphere(u), p, tensor_rank=2)


def l2_inner(u, w):
    """Exact L^2 inner product from the coefficients (uses ``|Phi_lm|^2 = l(l+1)``)."""
    l = u.basis.degrees()
    weight = l * (l + 1.0)
    val = np.sum(weight * (u.curl * np.conj(w.curl) + u.grad * np.conj(w.grad)))
    return float(np.real(val))


def l2_norm(u):
    return float(np.sqrt(max(l2_inner(u, u), 0.0)))


# ----------------------------------------------------------------------------
# curvature of the unit sphere


def curvature_tensor(sign, dim=2):
    """``(R_pm)[l, m, j, k] = d_ml d_jk - d_mk d_jl +/- d_mj d_lk`` in an orthonormal frame."""
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    e = np.eye(dim)
    s = 1.0 if sign == "+" else -1.0
    return (
        np.einsum("ml,jk->lmjk", e, e)
        - np.einsum("mk,jl->lmjk", e, e)
        + s * np.einsum("mj,lk->lmjk", e, e)
    )


def apply_curvature(sign, tensor):
    """Contract ``R_pm`` with a tensor field given in orthonormal-frame components.

    A rank-3 input ``S[m, j, k]`` (typically ``grad^m (U^j U^k)``) returns the
    vector ``R^l_{mjk} S^{mjk}``.  A rank-2 input ``T[j, k]`` (typically
    ``U^j U^k``) returns the rank-2 tensor ``Q[l, m] = R^l_{mjk} T^{jk}``, to be
    followed by an outer divergence over ``m``.  Since the curvature of the
    round sphere is parallel, ``grad^m (R U U) = R grad^m (U U)``.
    """
    tensor = np.asarray(tensor)
    dim = tensor.shape[0]
    R = curvature_tensor(sign, dim)
    rank = 0
    while rank < tensor.ndim and tensor.shape[rank] == dim:
        rank += 1
    if rank >= 4 or tensor.ndim - rank != 2 and rank == tensor.ndim:
        raise RankMismatch(f"cannot infer tensor rank from shape {tensor.shape}")
    if rank == 3:
        return np.einsum("lmjk,mjk...->l...", R, tensor)
    if rank == 2:
        return np.einsum("lmjk,jk...->lm...", R, tensor)
    raise RankMismatch(f"apply_curvature expects rank 2 or 3, got rank {rank}")
