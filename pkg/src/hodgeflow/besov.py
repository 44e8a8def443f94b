"""Heat-semigroup Besov norms, the c(N) vanishing diagnostic and a Littlewood-Paley harness.

The heat norm of a field is

    ||u||_p + || s^{(1-alpha)/2} ||grad e^{s Delta_H} u||_p ||_{L^r((0,1], ds/s)}

with the supremum (r = infinity) replaced by a maximum over a geometric schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sphere as sph
from . import torus as tor
from .errors import BackendUnsupported, CurveTooFlat, EmptySet
from .heat import HeatSchedule, apply_heat
from .sphere import SphereField
from .torus import TorusField

# default schedule for norm evaluation: 13.3 points per decade, reaching far
# enough down to resolve the maximum of s^{(1-alpha)/2}|k| e^{-s|k|^2} for |k| <= 170
BESOV_SCHEDULE = HeatSchedule(1.0, 2.0**-0.25, 2.0**-18)

# schedule for the c(N) flag: stops at 2^-10 so the tail window still sees the
# finest shells of a lacunary field on a 256-point grid instead of its smooth limit
CN_SCHEDULE = HeatSchedule(2.0**-2, 2.0**-0.25, 2.0**-10)

# a U-curve is called vanishing when its estimated exponent at small s exceeds this
VANISHING_SLOPE = 0.025

# width in decades of the slope-fit windows: two periods (a factor 16 in s) of
# the log-periodic ripple of a dyadic lacunary field
FIT_WIDTH = math.log10(16.0)
# default window center for regularity fits: two octaves above the finest
# shell of a 256-point grid, far enough from both ends of the spectrum
FIT_CENTER = 2.0**-7


@dataclass(frozen=True)
class BesovSpec:
    """Smoothness ``alpha``, integrability ``p`` and summability ``r`` (a number, "inf" or "cN")."""

    alpha: float
    p: float = 3.0
    r: object = "inf"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if not (1 <= self.p < math.inf):
            raise ValueError("p must be finite and >= 1")
        if self.r not in ("inf", "cN"):
            r = float(self.r)
            if math.isinf(r):
                object.__setattr__(self, "r", "inf")
            elif r < 1:
                raise ValueError("finite r must be >= 1")
            else:
                object.__setattr__(self, "r", r)

    @property
    def is_sup(self):
        return self.r in ("inf", "cN")

    @classmethod
    def parse(cls, text):
        """Parse ``"alpha,p,r"`` where r may be ``inf`` or ``cN``."""
        parts = [t.strip() for t in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected 'alpha,p,r', got {text!r}")
        a = float(eval_fraction(parts[0]))
        p = float(eval_fraction(parts[1]))
        r = parts[2] if parts[2] in ("inf", "cN") else float(parts[2])
        return cls(a, p, r)


def eval_fraction(text):
    """Accept numbers, decimal strings or simple fractions such as ``1/3``."""
    if not isinstance(text, str):
        return float(text)
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


# torus L^p norms are evaluated on a grid refined by this factor
OVERSAMPLE = 2


def lp_norm(u, p):
    return sph.lp_norm_sphere(u, p) if isinstance(u, SphereField) else tor.lp_norm(u, p, OVERSAMPLE)


def gradient_lp_norm(u, p):
    if isinstance(u, SphereField):
        return sph.gradient_lp_norm(u, p)
    return tor.gradient_lp_norm(u, p, OVERSAMPLE)


def gradient_profile(u, p, schedule):
    """``||grad e^{s Delta_H} u||_p`` at every heat time of the schedule."""
    return np.array([gradient_lp_norm(apply_heat(u, s), p) for s in schedule.values])


@dataclass
class UCurve:
    """Samples of ``U(s) = s^{(1-alpha)/2} ||grad e^{s Delta_H} u||_p``."""

    s: np.ndarray
    values: np.ndarray
    alpha: float
    p: float
    tail_slope: float = float("nan")
    vanishing: bool = False

    @property
    def limit(self):
        """Value at the smallest heat time."""
        return float(self.values[np.argmin(self.s)])

    @property
    def maximum(self):
        return float(np.max(self.values))

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "p": self.p,
            "s": self.s.tolist(),
            "U": self.values.tolist(),
            "limit": self.limit,
            "max": self.maximum,
            "tail_slope": self.tail_slope,
            "vanishing": self.vanishing,
        }


def u_curve(u, alpha, p, schedule=BESOV_SCHEDULE, profile=None):
    s = schedule.values
    g = gradient_profile(u, p, schedule) if profile is None else profile
    return UCurve(s, s ** ((1 - alpha) / 2) * g, alpha, p)


def _weighted_heat_term(curve, r):
    if r in ("inf", "cN"):
        return float(np.max(curve.values))
    # trapezoid rule in log s for int_0^1 U(s)^r ds/s over the schedule
    order = np.argsort(curve.s)
    x = np.log(curve.s[order])
    y = curve.values[order] ** r
    return float(np.trapezoid(y, x) ** (1.0 / r))


def heat_besov_seminorm(u, spec, schedule=BESOV_SCHEDULE):
    """The heat term of the norm alone (without ``||u||_p``)."""
    schedule.require_density(8)
    return _weighted_heat_term(u_curve(u, spec.alpha, spec.p, schedule), spec.r)


def heat_besov_norm(u, spec, schedule=BESOV_SCHEDULE, return_details=False):
    """``||u||_p`` plus the heat term; for ``r = "cN"`` the vanishing flag is also returned."""
    schedule.require_density(8)
    curve = u_curve(u, spec.alpha, spec.p, schedule)
    value = lp_norm(u, spec.p) + _weighted_heat_term(curve, spec.r)
    if spec.r == "cN" or return_details:
        _flag_vanishing(curve, u)
        return value, curve
    return value


def bandpass_gradient_profile(u, p, s_values):
    """``||grad (e^{s Delta_H} u - e^{4 s Delta_H} u)||_p`` at each heat time.

    The difference removes the contribution of frequencies far below
    ``s^{-1/2}``, which otherwise acts as an additive constant and biases
    log-log slopes of finite lacunary sums.  The scaling in ``s`` is unchanged.
    """
    return np.array([gradient_lp_norm(apply_heat(u, s) - apply_heat(u, 4 * s), p) for s in s_values])


def _fit_window(s, center_log10, width):
    return np.abs(np.log10(s) - center_log10) <= width / 2 + 1e-12


def _loglog_slope(x, y):
    coef, res, *_ = np.polyfit(np.log(x), np.log(y), 1, full=True)
    rms = float(math.sqrt(res[0] / len(x))) if len(res) else 0.0
    return float(coef[0]), rms


def _flag_vanishing(curve, u, threshold=VANISHING_SLOPE, width=FIT_WIDTH):
    """Estimate the exponent of ``U(s)`` over the last ``width`` decades of the schedule."""
    s, v = curve.s, curve.values
    if np.max(v) == 0:
        curve.tail_slope, curve.vanishing = float("inf"), True
        return curve
    lo = np.log10(s.min())
    sel = _fit_window(s, lo + width / 2, width)
    g = bandpass_gradient_profile(u, curve.p, s[sel])
    if sel.sum() < 2 or np.any(g <= 0):
        curve.tail_slope, curve.vanishing = float("inf"), True
        return curve
    slope, _ = _loglog_slope(s[sel], g)
    curve.tail_slope = (1 - curve.alpha) / 2 + slope
    curve.vanishing = bool(curve.tail_slope > threshold)
    return curve


def cN_diagnostic(u, alpha, p=3.0, schedule=CN_SCHEDULE, threshold=VANISHING_SLOPE):
    """``U(s)`` over the schedule with a vanishing flag.

    The flag is raised when ``U`` decays like a positive power of ``s`` at the
    small end of the schedule: the exponent ``(1 - alpha)/2 + slope`` is
    estimated from the band-passed gradient profile over the last two
    log-periods of a dyadic field (a factor 16 in s) and compared with
    ``threshold``.  For fields resolved only down to some scale the schedule
    should stop there; below it every discrete field looks smooth.
    """
    curve = u_curve(u, alpha, p, schedule)
    return _flag_vanishing(curve, u, threshold=threshold)


# ----------------------------------------------------------------------------
# Littlewood-Paley side (torus only)


def chi(rho):
    """Smooth cutoff: 1 for rho <= 1/2, 0 for rho >= 1, quintic smoothstep in log2(rho) between."""
    rho = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore"):
        t = np.clip(np.log2(np.where(rho > 0, rho, 1e-300)) + 1.0, 0.0, 1.0)
    step = t**3 * (10 - 15 * t + 6 * t * t)
    return np.where(rho <= 0.5, 1.0, np.where(rho >= 1.0, 0.0, 1.0 - step))


def shell_multiplier(kmag, k):
    """Fourier multiplier of the projection onto shell ``k >= -1``."""
    if k == -1:
        return chi(kmag)
    return chi(kmag / 2.0 ** (k + 1)) - chi(kmag / 2.0**k)


def shell_count(grid):
    """Index of the last shell needed so that the shells sum to one on every mode."""
    kmax = float(np.sqrt(np.max(grid.k2)))
    return max(0, int(math.ceil(math.log2(kmax))))


def lp_shells(u):
    """List of ``(k, Delta_k u)`` for ``k = -1 .. K``."""
    if not isinstance(u, TorusField):
        raise BackendUnsupported("Littlewood-Paley shells are implemented on the torus only")
    kmag = np.sqrt(u.grid.k2)
    return [(k, TorusField(u.grid, u.coeffs * shell_multiplier(kmag, k))) for k in range(-1, shell_count(u.grid) + 1)]


def lp_besov_norm(u, spec):
    """Littlewood-Paley Besov norm ``||Delta_{-1} u||_p + ||2^{alpha k}||Delta_k u||_p||_{l^r}``."""
    if not isinstance(u, TorusField):
        raise BackendUnsupported("the Littlewood-Paley norm is implemented on the torus only")
    low = 0.0
    terms = []
    for k, part in lp_shells(u):
        n = lp_norm(part, spec.p) if np.any(part.coeffs) else 0.0
        if k == -1:
            low = n
        else:
            terms.append(2.0 ** (spec.alpha * k) * n)
    terms = np.array(terms)
    if spec.is_sup:
        tail = float(terms.max(initial=0.0))
    else:
        tail = float(np.sum(terms**spec.r) ** (1.0 / spec.r))
    return low + tail


@dataclass
class EquivalenceReport:
    alpha: float
    p: float
    r: object
    names: list = field(default_factory=list)
    heat: list = field(default_factory=list)
    lp: list = field(default_factory=list)

    @property
    def ratios(self):
        return np.array(self.heat) / np.array(self.lp)

    @property
    def constant(self):
        r = self.ratios
        return float(max(r.max(), 1.0 / r.min()))

    @property
    def band(self):
        r = self.ratios
        return float(r.max() / r.min())

    def rows(self):
        return [
            {"field": n, "heat_norm": h, "lp_norm": l, "ratio": h / l}
            for n, h, l in zip(self.names, self.heat, self.lp)
        ]


def equivalence_report(fields, alpha, p=3.0, r="inf", schedule=BESOV_SCHEDULE):
    """Ratios of heat to Littlewood-Paley norms over a named field set ``{name: field}``."""
    if not fields:
        raise EmptySet("equivalence_report needs at least one field")
    spec = BesovSpec(alpha, p, r)
    rep = EquivalenceReport(alpha, p, spec.r)
    for name, u in fields.items():
        rep.names.append(name)
        rep.heat.append(heat_besov_norm(u, spec, schedule) if spec.r != "cN" else heat_besov_norm(u, spec, schedule)[0])
        rep.lp.append(lp_besov_norm(u, spec))
    return rep


def kernel_bounds_check(k, s_values, alpha, p=3.0, N=None):
    """Smallest constants in the two shell/heat kernel estimates on the mode ``2^k e1``.

    Both sides are evaluated by applying the operators to an actual grid field.
    Returns a dict with per-s constants and their maxima.
    """
    kk = 2**k if k >= 0 else 1
    if N is None:
        N = max(16, 4 * kk)
        N += N % 2
    grid = tor.TorusGrid(2, N)
    from .fields import single_mode

    u = single_mode(grid, (kk, 0))
    kmag = np.sqrt(grid.k2)
    proj = TorusField(grid, u.coeffs * shell_multiplier(kmag, k))
    c_dt, c_grad = [], []
    for s in np.asarray(s_values, dtype=float):
        x = math.sqrt(s) * 2.0**k
        ds_heat = TorusField(grid, -grid.k2 * apply_heat(proj, s).coeffs)
        lhs_dt = 2.0 ** (alpha * k) * s * tor.lp_norm(ds_heat, p)
        rhs_dt = min(x**alpha, x ** (alpha - 1)) * s ** ((1 - alpha) / 2) * tor.gradient_lp_norm(apply_heat(u, s / 2), p)
        lhs_grad = s ** ((1 - alpha) / 2) * tor.gradient_lp_norm(apply_heat(proj, s), p)
        rhs_grad = min(x ** (1 - alpha), x ** (-alpha)) * 2.0 ** (alpha * k) * tor.lp_norm(proj, p)
        c_dt.append(lhs_dt / rhs_dt if rhs_dt > 0 else 0.0)
        c_grad.append(lhs_grad / rhs_grad if rhs_grad > 0 else 0.0)
    return {
        "k": k,
        "s": list(map(float, s_values)),
        "C_dt": c_dt,
        "C_grad": c_grad,
        "C_dt_max": float(max(c_dt)),
        "C_grad_max": float(max(c_grad)),
    }


def bessel_sobolev_norm(u, alpha, p):
    """``||(1 - Delta)^{alpha/2} u||_p`` on the torus (stand-in for the interpolation space)."""
    if not isinstance(u, TorusField):
        raise BackendUnsupported("the Bessel-potential norm is implemented on the torus only")
    return tor.lp_norm(TorusField(u.grid, u.coeffs * (1.0 + u.grid.k2) ** (alpha / 2)), p)


@dataclass
class RegularityFit:
    alpha_hat: float
    slope: float
    residual: float
    s_range: tuple
    smooth_saturated: bool
    method: str = "bandpass"


def regularity_fit(u, p=3.0, schedule=BESOV_SCHEDULE, method="bandpass", width=FIT_WIDTH, center=None):
    """Estimate ``alpha`` as ``1 + 2 slope`` from a log-log fit of the gradient profile.

    ``method="gradient"`` fits ``||grad e^{s Delta_H} u||_p`` directly;
    ``method="bandpass"`` (default) fits the band-passed profile, which has the
    same exponent without the bias from the lowest frequencies.  The window
    spans ``width`` decades centered (in log s) on ``center``, by default
    ``FIT_CENTER`` when the window fits inside the schedule and the middle of
    the schedule otherwise.
    """
    s = schedule.values
    span = math.log10(s.max() / s.min())
    if span < 1.0 or span < width:
        raise CurveTooFlat(f"schedule spans {span:.2f} decades, need at least {max(width, 1.0):.2f}")
    lo, hi = math.log10(s.min()), math.log10(s.max())
    if center is not None:
        c = math.log10(center)
    elif lo + width / 2 <= math.log10(FIT_CENTER) <= hi - width / 2:
        c = math.log10(FIT_CENTER)
    else:
        c = 0.5 * (lo + hi)
    sel = _fit_window(s, c, width)
    if method == "bandpass":
        g = bandpass_gradient_profile(u, p, s[sel])
    elif method == "gradient":
        g = np.array([gradient_lp_norm(apply_heat(u, si), p) for si in s[sel]])
    else:
        raise ValueError(f"unknown method {method!r}")
    if sel.sum() < 3 or np.any(g <= 0):
        raise CurveTooFlat("gradient profile vanishes inside the fit window")
    slope, rms = _loglog_slope(s[sel], g)
    alpha_hat = 1 + 2 * slope
    return RegularityFit(alpha_hat, slope, rms, (float(s[sel].min()), float(s[sel].max())), alpha_hat >= 0.95, method)


def single_mode_heat_term(kmag, alpha, p, d=2, amplitude=1.0):
    """Closed-form ``sup_s s^{(1-alpha)/2} ||grad e^{s Delta} u||_p`` for ``u = a sin(k.x) e``."""
    a = (1 - alpha) / 2
    return amplitude * kmag**alpha * (a / math.e) ** a * sin_lp_norm(p, d)


def sin_lp_norm(p, d=2):
    """``||sin(x1)||_{L^p(T^d)}``."""
    val = (2 * math.pi) ** d * math.gamma((p + 1) / 2) / (math.sqrt(math.pi) * math.gamma(p / 2 + 1))
    return val ** (1.0 / p)


# re-exported for callers that only import this module
__all__ = [
    "BESOV_SCHEDULE",
    "CN_SCHEDULE",
    "FIT_CENTER",
    "FIT_WIDTH",
    "BesovSpec",
    "EquivalenceReport",
    "RegularityFit",
    "UCurve",
    "bessel_sobolev_norm",
    "chi",
    "cN_diagnostic",
    "equivalence_report",
    "heat_besov_norm",
    "heat_besov_seminorm",
    "kernel_bounds_check",
    "lp_besov_norm",
    "lp_shells",
    "regularity_fit",
    "shell_multiplier",
    "single_mode_heat_term",
    "u_curve",
]
