"""Hodge heat flow ``e^{s Delta_H}`` on both backends and its verification suites."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import sphere as sph
from . import torus as tor
from .calculus import calculus_for
from .errors import NegativeHeatTime, ScheduleTooCoarse, StepTooLarge, ZeroField
from .sphere import SphereField
from .torus import TorusField, TorusScalar


@dataclass(frozen=True)
class HeatSchedule:
    """Geometric heat times ``s_max * ratio^n`` down to ``s_min``."""

    s_max: float = 1.0
    ratio: float = 2.0**-0.5
    s_min: float = 2.0**-12

    def __post_init__(self):
        if not 0 < self.s_min <= self.s_max <= 1:
            raise ValueError("need 0 < s_min <= s_max <= 1")
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")

    @property
    def values(self):
        n = int(math.floor(math.log(self.s_min / self.s_max) / math.log(self.ratio) + 1e-9))
        return self.s_max * self.ratio ** np.arange(n + 1)

    @property
    def points_per_decade(self):
        return -1.0 / math.log10(self.ratio)

    def require_density(self, per_decade=8):
        if self.points_per_decade < per_decade - 1e-9:
            raise ScheduleTooCoarse(
                f"schedule has {self.points_per_decade:.2f} points per decade, need {per_decade}"
            )

    def __len__(self):
        return len(self.values)

    def to_dict(self):
        return {"s_max": self.s_max, "ratio": self.ratio, "s_min": self.s_min}


@dataclass
class HeatReport:
    """Per-heat-time records of a verification suite."""

    check: str
    backend: str
    field_id: str = ""
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def column(self, key):
        return np.array([r[key] for r in self.records])

    def to_dict(self):
        return {
            "check": self.check,
            "backend": self.backend,
            "field": self.field_id,
            "records": self.records,
            "summary": self.summary,
        }


def backend_name(u):
    return "sphere" if isinstance(u, SphereField) else "torus"


def _check_time(s):
    if s < 0:
        raise NegativeHeatTime(f"heat time must be >= 0, got {s}")


@functools.singledispatch
def apply_heat(u, s):
    """Exact heat semigroup: multiply each eigenmode by ``exp(-lambda s)``."""
    raise TypeError(f"apply_heat is not defined for {type(u).__name__}")


@apply_heat.register
def _(u: TorusField, s):
    _check_time(s)
    if s == 0:
        return u
    return TorusField(u.grid, u.coeffs * np.exp(-s * u.grid.k2))


@apply_heat.register
def _(u: TorusScalar, s):
    _check_time(s)
    if s == 0:
        return u
    return TorusScalar(u.grid, u.coeffs * np.exp(-s * u.grid.k2))


@apply_heat.register
def _(u: SphereField, s):
    _check_time(s)
    if s == 0:
        return u
    return u.multiply_degrees(lambda l: np.exp(-s * l * (l + 1)))


def hodge_laplacian(u):
    if isinstance(u, SphereField):
        return sph.hodge_laplacian_sphere(u)
    return tor.hodge_laplacian_flat(u)


def heat_rk4(u, s, ds=1e-4):
    """Classical RK4 integration of ``dU/ds = Delta_H U`` (an oracle for ``apply_heat``)."""
    _check_time(s)
    n = max(1, int(math.ceil(s / ds - 1e-9)))
    h = s / n
    U = u
    for _ in range(n):
        k1 = hodge_laplacian(U)
        k2 = hodge_laplacian(U + k1 * (h / 2))
        k3 = hodge_laplacian(U + k2 * (h / 2))
        k4 = hodge_laplacian(U + k3 * h)
        U = U + (k1 + k2 * 2 + k3 * 2 + k4) * (h / 6)
    return U


def l2_norm(u):
    return sph.l2_norm(u) if isinstance(u, SphereField) else tor.l2_norm(u)


def _divergence_l2(u):
    """L^2 norm of ``div u`` computed from coefficients."""
    if isinstance(u, SphereField):
        dc = sph.divergence_coeffs(u)
        return float(np.sqrt(np.sum(np.abs(dc) ** 2)))
    return _scalar_l2(tor.divergence(u))


def _scalar_l2(f):
    return float(np.sqrt(f.grid.volume * np.sum(np.abs(f.coeffs) ** 2)))


def semigroup_residual(u, s1, s2):
    norm = l2_norm(u)
    if norm == 0:
        return 0.0
    diff = apply_heat(u, s1 + s2) - apply_heat(apply_heat(u, s2), s1)
    return l2_norm(diff) / norm


def contraction_check(u, s):
    norm = l2_norm(u)
    if norm == 0:
        raise ZeroField("contraction ratio undefined for the zero field")
    return l2_norm(apply_heat(u, s)) / norm


def divergence_invariance_residual(u, s):
    """``||div e^{s Delta_H} u - e^{s Delta_H} div u||_{L^2} / ||u||_{L^2}``.

    For divergence-free input this is the norm of ``div e^{s Delta_H} u``.
    """
    norm = l2_norm(u)
    if norm == 0:
        return 0.0
    if isinstance(u, SphereField):
        l = u.basis.degrees()
        lhs = sph.divergence_coeffs(apply_heat(u, s))
        rhs = np.exp(-s * l * (l + 1.0)) * sph.divergence_coeffs(u)
        return float(np.sqrt(np.sum(np.abs(lhs - rhs) ** 2))) / norm
    lhs = tor.divergence(apply_heat(u, s))
    rhs = apply_heat(tor.divergence(u), s)
    return _scalar_l2(lhs - rhs) / norm


def strong_continuity_profile(u, schedule):
    """``||e^{s Delta_H} u - u||_{L^2}`` along the schedule (ascending s)."""
    s = np.sort(schedule.values)
    return s, np.array([l2_norm(apply_heat(u, si) - u) for si in s])


# ----------------------------------------------------------------------------
# smoothing and short-time L^p estimates


def iterated_gradient_l2(u, L):
    """``||grad^L u||_{L^2}`` (Frobenius norm of the L-fold covariant derivative)."""
    if isinstance(u, TorusField):
        return float(np.sqrt(np.sum(u.grid.k2**L * np.abs(u.coeffs) ** 2) * u.grid.volume))
    calc = calculus_for(u)
    T = calc.vector(u)
    for r in range(1, L + 1):
        T = calc.gradient(T, r)
    return float(np.sqrt(calc.integrate(np.sum(T.reshape((-1,) + T.shape[-2:]) ** 2, axis=0))))


def band_operator_norm(u, s, L):
    """``sup_lambda lambda^{L/2} e^{-s lambda}`` over the eigenvalues present in the band.

    This is the supremum of ``||grad^L e^{s Delta} w|| / ||w||`` over all fields
    ``w`` in the same band on the torus.
    """
    if isinstance(u, TorusField):
        lam = np.unique(u.grid.k2[u.grid.dealias])
    else:
        l = np.arange(1, u.basis.L_max + 1)
        lam = l * (l + 1.0)
    return float(np.max(lam ** (L / 2) * np.exp(-s * lam)))


def _slope(s, y):
    m = (y > 0) & np.isfinite(y)
    if m.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(s[m]), np.log(y[m]), 1)[0])


def middle_window(s, trim_decades=0.25):
    """Mask dropping a quarter decade at each end of the heat-time range."""
    ls = np.log10(s)
    return (ls >= ls.min() + trim_decades - 1e-12) & (ls <= ls.max() - trim_decades + 1e-12)


def smoothing_bound_report(fields, schedule, L_derivs=1, field_id=""):
    """``||grad^L e^{s Delta_H} u|| / ||u||`` over the schedule, with ``c = max s^{L/2} ratio``."""
    if not 0 <= L_derivs <= 4:
        raise ValueError("L_derivs must be between 0 and 4")
    fields = list(fields) if isinstance(fields, (list, tuple)) else [fields]
    s_vals = schedule.values
    report = HeatReport("smoothing_bound", backend_name(fields[0]), field_id)
    for s in s_vals:
        ratios = []
        for u in fields:
            n = l2_norm(u)
            ratios.append(0.0 if n == 0 else iterated_gradient_l2(apply_heat(u, s), L_derivs) / n)
        report.records.append(
            {
                "s": float(s),
                "ratio": float(max(ratios)),
                "band_sup": band_operator_norm(fields[0], s, L_derivs),
            }
        )
    ratio = report.column("ratio")
    sup = report.column("band_sup")
    mid = middle_window(s_vals)
    report.summary = {
        "L": L_derivs,
        "finite": bool(np.all(np.isfinite(ratio))),
        "c_fields": float(np.max(ratio * s_vals ** (L_derivs / 2))),
        "c_band": float(np.max(sup * s_vals ** (L_derivs / 2))),
        "slope_band": _slope(s_vals[mid], sup[mid]),
        "slope_fields": _slope(s_vals[mid], ratio[mid]),
    }
    return report


def _lp(u, p):
    return sph.lp_norm_sphere(u, p) if isinstance(u, SphereField) else tor.lp_norm(u, p)


def _grad_lp(u, p):
    return sph.gradient_lp_norm(u, p) if isinstance(u, SphereField) else tor.gradient_lp_norm(u, p)


def lp_heat_estimates_report(fields, p, schedule, field_id=""):
    """The three short-time L^p ratios, maximized over the field set at every heat time.

    a1 = ||U(s)||_p / ||u||_p
    a2 = ||grad U(s)||_p / (||grad u||_p + ||u||_p)
    a3 = s^{1/2} ||grad U(s)||_p / ||u||_p
    """
    fields = list(fields) if isinstance(fields, (list, tuple)) else [fields]
    base = [(_lp(u, p), _grad_lp(u, p)) for u in fields]
    report = HeatReport("lp_heat_estimates", backend_name(fields[0]), field_id)
    for s in schedule.values:
        a1 = a2 = a3 = 0.0
        for u, (n0, g0) in zip(fields, base):
            if n0 == 0:
                continue
            U = apply_heat(u, s)
            n, g = _lp(U, p), _grad_lp(U, p)
            a1 = max(a1, n / n0)
            a2 = max(a2, g / (g0 + n0))
            a3 = max(a3, math.sqrt(s) * g / n0)
        report.records.append({"s": float(s), "a1": a1, "a2": a2, "a3": a3})
    report.summary = {
        "p": p,
        "C1": float(report.column("a1").max()),
        "C2": float(report.column("a2").max()),
        "C3": float(report.column("a3").max()),
    }
    return report


A3_SINGLE_MODE_SUP = (2 * math.e) ** -0.5


# ----------------------------------------------------------------------------
# Bochner identities

BOCHNER_KINDS = ("U2", "grad", "Psi")


def _bochner_terms(u, s, ds, kind):
    calc = calculus_for(u)
    ric = calc.ricci

    def quantities(t):
        U = calc.vector(apply_heat(u, t))
        G = calc.gradient(U, 1)
        H = calc.gradient(G, 2)
        U2 = np.sum(U * U, axis=0)
        G2 = np.sum(G * G, axis=(0, 1))
        H2 = np.sum(H * H, axis=(0, 1, 2))
        return U, G, U2, G2, H2

    U, G, U2, G2, H2 = quantities(s)
    _, _, U2p, G2p, _ = quantities(s + ds)
    _, _, U2m, G2m, _ = quantities(s - ds)
    if kind == "U2":
        terms = [(U2p - U2m) / (2 * ds), -calc.scalar_laplacian(U2), 2 * G2, 2 * ric * U2]
        return terms
    # curvature source in the evolution of |grad U|^2 on a space form of curvature ric
    div = np.trace(G, axis1=0, axis2=1)
    cross = np.einsum("jl...,lj...->...", G, G)
    R2 = ric * (-4 * G2 - 4 * cross + 4 * div * div)
    if kind == "grad":
        return [(G2p - G2m) / (2 * ds), -calc.scalar_laplacian(G2), 2 * H2, -R2]
    psi = lambda t, g2, u2: t * g2 + 0.5 * u2  # noqa: E731
    dpsi = (psi(s + ds, G2p, U2p) - psi(s - ds, G2m, U2m)) / (2 * ds)
    return [dpsi, -calc.scalar_laplacian(psi(s, G2, U2)), 2 * s * H2, -s * R2, ric * U2]


def bochner_residual(u, s, which="U2", ds=1e-4):
    """Relative L^2 residual of a Bochner identity along the heat flow.

    ``which`` selects the identity for ``|U|^2`` ("U2"), for ``|grad U|^2``
    ("grad") or for ``Psi = s |grad U|^2 + |U|^2 / 2`` ("Psi").  The s-derivative
    is a centered difference of width ``ds``; the residual is divided by the
    largest of the individual terms.
    """
    if ds > s / 10:
        raise StepTooLarge(f"ds = {ds} exceeds s/10 = {s / 10}")
    if which not in BOCHNER_KINDS:
        raise ValueError(f"unknown identity {which!r}")
    calc = calculus_for(u)
    terms = _bochner_terms(u, s, ds, which)

    def norm(f):
        return math.sqrt(max(float(calc.integrate(f * f)), 0.0))

    scale = max(norm(t) for t in terms)
    if scale == 0:
        return 0.0
    return norm(sum(terms)) / scale


def bochner_order(u, s, which="U2", ds=1e-3):
    """Observed convergence order of the Bochner residual under halving of ``ds``."""
    r1 = bochner_residual(u, s, which, ds)
    r2 = bochner_residual(u, s, which, ds / 2)
    if r2 == 0 or r1 == 0:
        return float("inf"), r1, r2
    return math.log2(r1 / r2), r1, r2
