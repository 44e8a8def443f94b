"""The heat-flow commutator of the Euler nonlinearity, its parabolic source and the energy flux.

For a field ``u`` and ``U(s) = e^{s Delta_H} u`` the commutator is

    W(s) = e^{s Delta_H} div(u (x) u) - div(U (x) U)

It vanishes at ``s = 0`` and solves ``(d/ds - Delta_H) W = N`` with

    N = 2 grad_j(grad_k U^j grad^k U^l) + R_-^l_{mjk} grad^m(U^j U^k) + grad^m(R_+^l_{mjk} U^j U^k)

so ``W(s) = int_0^s e^{(s - s') Delta_H} N(s') ds'``, split into the three source
terms ``W1 + W2 + W3``.  On the flat torus both curvature terms are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sphere as sph
from . import torus as tor
from .calculus import SphereCalculus, TorusCalculus, calculus_for
from .errors import FitRangeTooSmall, QuadratureDiverged
from .heat import HeatSchedule, apply_heat, hodge_laplacian, l2_norm
from .sphere import SphereField
from .torus import TorusField

# exponent of the graded substitution s' = s * tau^GRADING
GRADING = 3


# ----------------------------------------------------------------------------
# building blocks


def _div_outer(u, w=None):
    """``div(u (x) w)`` as a field of the same backend (dealiased / projected)."""
    if isinstance(u, TorusField):
        t = tor.outer_product(u, w)
        return TorusField(u.grid, tor.tensor_divergence(u.grid, t))
    calc = SphereCalculus(u.basis)
    a = calc.vector(u)
    b = a if w is None else calc.vector(w)
    return calc.to_field(calc.divergence(a[:, None] * b[None, :], 2))


def commutator_direct(u, s):
    """``W(s) = e^{s Delta_H} div(u u) - div(U U)`` with ``U = e^{s Delta_H} u``."""
    U = apply_heat(u, s)
    return apply_heat(_div_outer(u), s) - _div_outer(U)


def _torus_gradient_values(U):
    return U.grid.to_physical(tor.gradient(U))


def _source_torus(U):
    """``2 grad_j(grad_k U^j grad_k U^l)`` with dealiased products."""
    grid = U.grid
    tor.check_bandwidth(grid, U.coeffs, "U")
    G = _torus_gradient_values(U)  # [k, j]
    Q = np.einsum("kj...,kl...->jl...", G, G)
    Qc = grid.to_spectral(Q) * grid.dealias
    return TorusField(grid, 2 * tor.tensor_divergence(grid, Qc))


def _frame(basis, T, rank):
    return sph.cartesian_to_frame(basis, T, rank)


def _cart(basis, T, rank):
    return sph.frame_to_cartesian(basis, T, rank)


def _sphere_source_grid(U):
    """Grid values (Cartesian) of the three source terms on the sphere."""
    basis = U.basis
    calc = SphereCalculus(basis)
    v = calc.vector(U)
    G = calc.gradient(v, 1)
    Q = np.einsum("kj...,kl...->jl...", G, G)
    n1 = 2 * calc.divergence(Q, 2)
    T = v[:, None] * v[None, :]
    S = calc.gradient(T, 2)
    n2 = _cart(basis, sph.apply_curvature("-", _frame(basis, S, 3)), 1)
    Qp = _cart(basis, sph.apply_curvature("+", _frame(basis, T, 2)), 2)  # [l, m]
    n3 = calc.divergence(np.swapaxes(Qp, 0, 1), 2)
    return n1, n2, n3


def source_terms(u, s):
    """The three source terms at heat time ``s`` as fields ``(N1, N2, N3)``."""
    U = apply_heat(u, s)
    if isinstance(u, TorusField):
        z = TorusField.zeros(u.grid)
        return _source_torus(U), z, z
    return tuple(sph.vsh_analyze(u.basis, n) for n in _sphere_source_grid(U))


def rhs_N(u, s):
    """Source ``N(s)`` of the commutator equation (projected to the field's band)."""
    n1, n2, n3 = source_terms(u, s)
    return n1 + n2 + n3


def rhs_N_grid(u, s):
    """Unprojected grid values of ``N(s)`` (sphere) or its dealiased coefficients (torus)."""
    if isinstance(u, TorusField):
        return rhs_N(u, s)
    return sum(_sphere_source_grid(apply_heat(u, s)))


@dataclass
class IdentityCheck:
    residual: float
    projected_residual: float
    norm_N: float
    ds: float


def commutator_pde_residual(u, s, ds=1e-5):
    """Relative residual of ``(d/ds - Delta_H) W - N`` with a centered difference in ``s``.

    On the sphere ``residual`` compares against ``N`` evaluated pointwise on the
    grid, so it includes the part of ``N`` above ``L_max``; ``projected_residual``
    compares against the projection of ``N`` and isolates the identity itself.
    """
    Wp = commutator_direct(u, s + ds)
    Wm = commutator_direct(u, s - ds)
    W = commutator_direct(u, s)
    lhs = (Wp - Wm) * (1.0 / (2 * ds)) - hodge_laplacian(W)
    n_proj = rhs_N(u, s)
    nn = l2_norm(n_proj)
    if isinstance(u, TorusField):
        if nn == 0:
            return IdentityCheck(l2_norm(lhs), l2_norm(lhs), 0.0, ds)
        r = l2_norm(lhs - n_proj) / nn
        return IdentityCheck(r, r, nn, ds)
    basis = u.basis
    n_grid = rhs_N_grid(u, s)
    lhs_grid = lhs.cartesian_values()
    norm_grid = math.sqrt(basis.integrate(np.sum(n_grid**2, axis=0)))
    if norm_grid == 0:
        return IdentityCheck(l2_norm(lhs), l2_norm(lhs), 0.0, ds)
    r = math.sqrt(basis.integrate(np.sum((lhs_grid - n_grid) ** 2, axis=0))) / norm_grid
    rp = l2_norm(lhs - n_proj) / nn if nn > 0 else 0.0
    return IdentityCheck(r, rp, norm_grid, ds)


# ----------------------------------------------------------------------------
# Duhamel representation


@dataclass(frozen=True)
class GradedMesh:
    """Midpoint rule in ``tau`` for ``s' = s tau^grading``, clustering nodes at ``s' = 0``."""

    nodes: int = 64
    grading: int = GRADING

    def points(self, s):
        tau = (np.arange(self.nodes) + 0.5) / self.nodes
        return s * tau**self.grading, self.grading * s * tau ** (self.grading - 1) / self.nodes

    def doubled(self):
        return GradedMesh(2 * self.nodes, self.grading)


def _duhamel_terms(u, s, mesh):
    nodes, weights = mesh.points(s)
    zero = TorusField.zeros(u.grid) if isinstance(u, TorusField) else SphereField.zeros(u.basis)
    acc = [zero, zero, zero]
    for sp, w in zip(nodes, weights):
        terms = source_terms(u, sp)
        acc = [a + apply_heat(t, s - sp) * w for a, t in zip(acc, terms)]
    return acc


@dataclass
class CommutatorDecomposition:
    s: float
    W_direct: object
    W1: object
    W2: object
    W3: object
    nodes: int
    grading: int
    residual: float
    residual_doubled: float
    order: float
    meta: dict = field(default_factory=dict)

    def norms(self):
        return {
            "W": l2_norm(self.W_direct),
            "W1": l2_norm(self.W1),
            "W2": l2_norm(self.W2),
            "W3": l2_norm(self.W3),
        }

    def to_dict(self):
        out = {
            "s": self.s,
            "nodes": self.nodes,
            "grading": self.grading,
            "residual": self.residual,
            "residual_doubled": self.residual_doubled,
            "observed_order": self.order,
        }
        out.update({f"{k}_norm": v for k, v in self.norms().items()})
        out.update(self.meta)
        return out


def duhamel_reconstruct(u, s, mesh=None, check_doubling=True):
    """Rebuild ``W(s)`` from its source by graded-mesh quadrature of the Duhamel integral.

    The quadrature is repeated with twice the nodes; if the reconstruction
    residual grows, ``QuadratureDiverged`` is raised.  The returned ``W1..W3``
    come from the finer rule.
    """
    mesh = mesh or GradedMesh()
    W = commutator_direct(u, s)
    # W is quadratic in u; when it is zero up to rounding (single modes, shear
    # flows) measure the error against ||u||^2 instead of amplifying noise
    norm = max(l2_norm(W), 1e-6 * l2_norm(u) ** 2)

    def rel(parts):
        err = l2_norm(W - (parts[0] + parts[1] + parts[2]))
        return err / norm if norm > 0 else err

    coarse = _duhamel_terms(u, s, mesh)
    r1 = rel(coarse)
    if not check_doubling:
        return CommutatorDecomposition(s, W, *coarse, mesh.nodes, mesh.grading, r1, float("nan"), float("nan"))
    fine_mesh = mesh.doubled()
    fine = _duhamel_terms(u, s, fine_mesh)
    r2 = rel(fine)
    floor = 1e-9
    if r2 > r1 and r2 > floor:
        raise QuadratureDiverged(f"reconstruction residual grew from {r1:.3e} to {r2:.3e} under node doubling")
    order = math.log2(r1 / r2) if r2 > 0 and r1 > 0 else float("inf")
    return CommutatorDecomposition(s, W, *fine, fine_mesh.nodes, mesh.grading, r1, r2, order)


# ----------------------------------------------------------------------------
# energy flux


def flux(u, s, eta_weights=None):
    """``int W(s) . U(s)``; with ``eta_weights`` a list of fields is summed with those weights."""
    if isinstance(u, (list, tuple)):
        weights = np.ones(len(u)) if eta_weights is None else np.asarray(eta_weights, dtype=float)
        return float(sum(w * flux(v, s) for v, w in zip(u, weights) if w != 0))
    W = commutator_direct(u, s)
    U = apply_heat(u, s)
    return _inner(W, U)


def _inner(a, b):
    if isinstance(a, SphereField):
        return sph.l2_inner(a, b)
    return tor.l2_inner(a, b)


def transport_flux(u, s):
    """``int U^j U^l grad_j U_l``, zero for divergence-free ``U``."""
    U = apply_heat(u, s)
    calc = calculus_for(u)
    v = calc.vector(U)
    G = calc.gradient(v, 1)
    return float(calc.integrate(np.einsum("j...,l...,jl...->...", v, v, G)))


def flux_ibp(u, s, mesh=None):
    """Flux from the Duhamel form after moving the outer derivatives onto ``U(2s - s')``.

    Returns the total and the three contributions.
    """
    mesh = mesh or GradedMesh(128)
    calc = calculus_for(u)
    nodes, weights = mesh.points(s)
    parts = np.zeros(3)
    sphere = isinstance(calc, SphereCalculus)
    for sp, w in zip(nodes, weights):
        v = calc.vector(apply_heat(u, sp))
        G = calc.gradient(v, 1)
        Q = np.einsum("kj...,kl...->jl...", G, G)
        late = calc.vector(apply_heat(u, 2 * s - sp))
        G_late = calc.gradient(late, 1)  # [m, l]
        parts[0] += w * -2 * calc.integrate(np.einsum("jl...,jl...->...", Q, G_late))
        if sphere:
            basis = u.basis
            T = v[:, None] * v[None, :]
            S = calc.gradient(T, 2)
            n2 = _cart(basis, sph.apply_curvature("-", _frame(basis, S, 3)), 1)
            Qp = _cart(basis, sph.apply_curvature("+", _frame(basis, T, 2)), 2)
            parts[1] += w * calc.integrate(np.einsum("l...,l...->...", n2, late))
            parts[2] += w * -calc.integrate(np.einsum("lm...,ml...->...", Qp, G_late))
    return float(parts.sum()), parts


# ----------------------------------------------------------------------------
# decay experiments


@dataclass
class FluxReport:
    s: np.ndarray
    flux: np.ndarray
    W1_norm: np.ndarray
    W2_norm: np.ndarray
    W3_norm: np.ndarray
    exponent: float
    fit_residual: float
    fit_range: tuple
    alpha: float
    threshold: float
    term_exponents: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.exponent >= self.threshold)

    def rows(self):
        return [
            {"s": float(a), "flux": float(b), "W1_norm": float(c), "W2_norm": float(d), "W3_norm": float(e)}
            for a, b, c, d, e in zip(self.s, self.flux, self.W1_norm, self.W2_norm, self.W3_norm)
        ]

    def summary(self):
        out = {
            "alpha": self.alpha,
            "exponent": self.exponent,
            "threshold": self.threshold,
            "fit_residual": self.fit_residual,
            "fit_range": list(self.fit_range),
            "term_exponents": self.term_exponents,
            "pass": self.passed,
        }
        out.update(self.meta)
        return out


def claimed_exponent(alpha):
    """Decay rate of the flux suggested by the commutator estimate, ``(3 alpha - 1)/2``."""
    return (3 * alpha - 1) / 2


def flux_threshold(alpha):
    if abs(alpha - 1 / 3) < 1e-9 or alpha < 1 / 3:
        return -0.05
    return claimed_exponent(alpha) - 0.1


FLUX_SCHEDULE = HeatSchedule(2.0**-3, 2.0**-0.25, 2.0**-12)


def _fit(s, y, sel):
    x, z = np.log(s[sel]), np.log(y[sel])
    coef, res, *_ = np.polyfit(x, z, 1, full=True)
    return float(coef[0]), float(math.sqrt(res[0] / len(x))) if len(res) else 0.0


def flux_decay_fit(u, alpha, schedule=FLUX_SCHEDULE, width=1.0, decompose=False, mesh=None):
    """Fit ``log |F(s)|`` against ``log s`` over the middle ``width`` decades of the schedule.

    ``W1_norm`` is the norm of the first Duhamel term; without ``decompose`` it
    is taken equal to ``||W||`` on the torus, where the curvature terms vanish
    identically.  On the sphere the decomposition is always computed.
    """
    s = np.sort(schedule.values)
    span = math.log10(s[-1] / s[0])
    if span < width or len(s) < 4:
        raise FitRangeTooSmall(f"schedule spans {span:.2f} decades, the fit needs {width}")
    F = np.empty(len(s))
    n1 = np.empty(len(s))
    n2 = np.zeros(len(s))
    n3 = np.zeros(len(s))
    curved = isinstance(u, SphereField)
    for i, si in enumerate(s):
        W = commutator_direct(u, si)
        F[i] = _inner(W, apply_heat(u, si))
        if decompose or curved:
            dec = duhamel_reconstruct(u, si, mesh or GradedMesh(32), check_doubling=False)
            n1[i], n2[i], n3[i] = l2_norm(dec.W1), l2_norm(dec.W2), l2_norm(dec.W3)
        else:
            n1[i] = l2_norm(W)
    center = 0.5 * (math.log10(s[0]) + math.log10(s[-1]))
    sel = np.abs(np.log10(s) - center) <= width / 2 + 1e-12
    absF = np.abs(F)
    if sel.sum() < 3 or np.any(absF[sel] == 0):
        raise FitRangeTooSmall("flux vanishes or too few samples inside the fit window")
    exponent, resid = _fit(s, absF, sel)
    term_exp = {}
    for name, arr in (("W1", n1), ("W2", n2), ("W3", n3)):
        term_exp[name] = _fit(s, arr, sel)[0] if np.all(arr[sel] > 0) else None
    return FluxReport(
        s,
        F,
        n1,
        n2,
        n3,
        exponent,
        resid,
        (float(s[sel][0]), float(s[sel][-1])),
        alpha,
        flux_threshold(alpha),
        term_exp,
        {"sign_changes": int(np.sum(np.diff(np.sign(F[sel])) != 0))},
    )

