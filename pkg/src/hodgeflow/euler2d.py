"""Pseudo-spectral incompressible Euler on the 2D torus and energy diagnostics.

The velocity is advanced with fixed-step RK4 on ``dv/dt = -P div(v v)``, with
``P`` the Leray projector and every quadratic product dealiased by the 2/3
rule.  Snapshots keep the velocity, the pressure and the energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CFLViolation
from .heat import HeatSchedule, apply_heat
from .torus import TorusField, TorusGrid, TorusScalar, check_bandwidth, leray_project

CFL_LIMIT = 0.5
EULER_SCHEDULE = HeatSchedule(s_max=2.0**-1, ratio=2.0**-1, s_min=2.0**-10)


def _products(grid, coeffs):
    """Physical velocity and dealiased coefficients of ``v^j v^l`` (shape ``(d, d, ...)``)."""
    vals = grid.to_physical(coeffs)
    d = grid.d
    prod = np.empty((d, d) + grid.shape, dtype=complex)
    for j in range(d):
        for l in range(j, d):
            prod[j, l] = grid.to_spectral(vals[j] * vals[l]) * grid.dealias
            prod[l, j] = prod[j, l]
    return vals, prod


def _rhs(grid, coeffs):
    vals, prod = _products(grid, coeffs)
    div = np.einsum("j...,jl...->l...", 1j * grid.k, prod)
    k2 = np.where(grid.k2 == 0, 1.0, grid.k2)
    div -= grid.k * (np.sum(grid.k * div, axis=0) / k2)
    return -div, vals


def _max_speed(vals):
    return float(np.sqrt(np.max(np.sum(vals**2, axis=0))))


def cfl_number(grid, vmax, dt):
    return vmax * dt * grid.N / (2 * np.pi)


def pressure(v):
    """Solve ``Delta p = -div div (v v)``; the mean of ``p`` is zero."""
    grid = v.grid
    _, prod = _products(grid, v.coeffs)
    kk = np.einsum("j...,l...,jl...->...", grid.k, grid.k, prod)
    k2 = np.where(grid.k2 == 0, 1.0, grid.k2)
    return TorusScalar(grid, np.where(grid.k2 == 0, 0.0, -kk / k2))


def nonlinearity(v):
    """Projected nonlinear term ``-P div(v v)``."""
    check_bandwidth(v.grid, v.coeffs, "v")
    return TorusField(v.grid, _rhs(v.grid, v.coeffs)[0])


def _rk4(grid, c, dt):
    k1, vals = _rhs(grid, c)
    cfl = cfl_number(grid, _max_speed(vals), dt)
    if cfl > CFL_LIMIT:
        raise CFLViolation(f"CFL number {cfl:.3f} exceeds {CFL_LIMIT}")
    k2, _ = _rhs(grid, c + 0.5 * dt * k1)
    k3, _ = _rhs(grid, c + 0.5 * dt * k2)
    k4, _ = _rhs(grid, c + dt * k3)
    out = c + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    # re-project and re-truncate so round-off cannot leave the constraint set
    return leray_project(TorusField(grid, out * grid.dealias)).coeffs


def euler_step(v, dt):
    """One RK4 step; raises CFLViolation if ``max|v| dt N / 2pi > 0.5``."""
    if v.grid.d != 2:
        raise ValueError("euler_step is implemented on T^2 only")
    check_bandwidth(v.grid, v.coeffs, "v")
    return TorusField(v.grid, _rk4(v.grid, v.coeffs, dt))


def energy(v):
    """``0.5 * ||v||_{L^2}^2`` (Parseval)."""
    return 0.5 * (2 * np.pi) ** v.grid.d * float(np.sum(np.abs(v.coeffs) ** 2))


@dataclass
class EulerTrajectory:
    times: np.ndarray
    velocity: list
    pressure: list
    energy: np.ndarray
    dt: float
    stride: int
    N: int
    dealias: str = "2/3"
    valid: bool = True
    note: str = ""

    @property
    def grid(self):
        return self.velocity[0].grid

    @property
    def snapshot_dt(self):
        return self.dt * self.stride

    def __len__(self):
        return len(self.times)

    def energy_drift(self):
        e0 = self.energy[0]
        if e0 == 0:
            return 0.0
        return float(np.max(np.abs(self.energy - e0)) / e0)

    def max_divergence(self):
        """Largest ``||div v||_2 / ||v||_2`` over the snapshots."""
        worst = 0.0
        for v in self.velocity:
            n = np.sqrt(np.sum(np.abs(v.coeffs) ** 2))
            if n == 0:
                continue
            div = np.sum(1j * v.grid.k * v.coeffs, axis=0)
            worst = max(worst, float(np.sqrt(np.sum(np.abs(div) ** 2)) / n))
        return worst

    def metadata(self):
        return {
            "dt": self.dt,
            "stride": self.stride,
            "N": self.N,
            "dealias": self.dealias,
            "snapshots": len(self),
            "T": float(self.times[-1]),
            "valid": self.valid,
            "note": self.note,
        }


def run(initial, T_final, dt, stride=10):
    """Integrate to ``T_final`` with step ``dt``, keeping every ``stride``-th state.

    ``T_final`` must be a whole number of snapshot intervals.  On a CFL
    violation the trajectory so far is attached to the raised CFLViolation
    with ``valid = False``.
    """
    grid = initial.grid
    if grid.d != 2:
        raise ValueError("run is implemented on T^2 only")
    if dt <= 0 or stride < 1:
        raise ValueError("dt must be positive and stride >= 1")
    n_steps = int(round(T_final / dt))
    if abs(n_steps * dt - T_final) > 1e-9 * max(1.0, T_final) or n_steps % stride:
        raise ValueError("T_final must be a multiple of dt * stride")
    check_bandwidth(grid, initial.coeffs, "initial")
    c = leray_project(initial).coeffs * grid.dealias
    times, vel, prs, en = [], [], [], []

    def keep(n, c):
        v = TorusField(grid, c.copy())
        times.append(n * dt)
        vel.append(v)
        prs.append(pressure(v))
        en.append(energy(v))

    def trajectory(valid=True, note=""):
        return EulerTrajectory(np.array(times), vel, prs, np.array(en), dt, stride, grid.N, valid=valid, note=note)

    keep(0, c)
    for n in range(1, n_steps + 1):
        try:
            c = _rk4(grid, c, dt)
        except CFLViolation as exc:
            raise CFLViolation(f"step {n}: {exc}", partial=trajectory(False, str(exc))) from None
        if n % stride == 0:
            keep(n, c)
    return trajectory()


# --- smoothed energy identity -------------------------------------------------


def c2_bump(t, t0, t1):
    """``(1 - tau^2)^3`` on ``(t0, t1)`` mapped to ``tau in (-1, 1)``; C^2 with compact support."""
    t = np.asarray(t, dtype=float)
    h = 0.5 * (t1 - t0)
    tau = (t - 0.5 * (t0 + t1)) / h
    inside = np.abs(tau) < 1
    return np.where(inside, (1 - tau**2) ** 3, 0.0)


def c2_bump_derivative(t, t0, t1):
    t = np.asarray(t, dtype=float)
    h = 0.5 * (t1 - t0)
    tau = (t - 0.5 * (t0 + t1)) / h
    inside = np.abs(tau) < 1
    return np.where(inside, -6 * tau * (1 - tau**2) ** 2 / h, 0.0)


@dataclass(frozen=True)
class TimeBump:
    t0: float
    t1: float

    def __call__(self, t):
        return c2_bump(t, self.t0, self.t1)

    def derivative(self, t):
        return c2_bump_derivative(t, self.t0, self.t1)


def default_bump(traj, margin=0.1):
    T = float(traj.times[-1])
    return TimeBump(margin * T, (1 - margin) * T)


def _inner(grid, a, b):
    """``int a . b dx`` for coefficient arrays of equal shape (real fields)."""
    return float((2 * np.pi) ** grid.d * np.sum(a * np.conj(b)).real)


def _trapezoid(values, h):
    values = np.asarray(values, dtype=float)
    return float(h * (values.sum() - 0.5 * (values[0] + values[-1])))


def _identity_terms(v, p, s):
    """Spatial integrands at one time: ``|Sv|^2/2``, the two flux terms, and the pressure term."""
    grid = v.grid
    sv = apply_heat(v, s)
    s2v = apply_heat(sv, s)
    grad_s2v = 1j * grid.k[:, None] * s2v.coeffs[None]
    grad_sv = 1j * grid.k[:, None] * sv.coeffs[None]
    _, vv = _products(grid, v.coeffs)
    _, svsv = _products(grid, sv.coeffs)
    half_energy = 0.5 * _inner(grid, sv.coeffs, sv.coeffs)
    t_main = _inner(grid, vv, grad_s2v)
    t_self = _inner(grid, svsv, grad_sv)
    div_s2v = np.sum(1j * grid.k * s2v.coeffs, axis=0)
    t_press = _inner(grid, p.coeffs, div_s2v)
    return half_energy, t_main, t_self, t_press


@dataclass
class IdentityRow:
    s: float
    lhs: float
    rhs: float
    pressure_term: float

    @property
    def difference(self):
        return self.lhs - self.rhs

    @property
    def relative(self):
        scale = max(abs(self.lhs), abs(self.rhs))
        return abs(self.difference) / scale if scale > 0 else 0.0

    def to_dict(self):
        return {
            "s": self.s,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "difference": self.difference,
            "relative": self.relative,
            "pressure_term": self.pressure_term,
        }


@dataclass
class IdentityReport:
    rows: list
    bump: TimeBump
    trajectory: dict = field(default_factory=dict)

    def max_relative(self, floor=1e-8):
        """Worst relative mismatch over rows whose sides exceed ``floor`` in size."""
        rel = [r.relative for r in self.rows if max(abs(r.lhs), abs(r.rhs)) > floor]
        return max(rel, default=0.0)

    def max_pressure(self):
        return max((abs(r.pressure_term) for r in self.rows), default=0.0)

    def to_dict(self):
        return {
            "bump": {"t0": self.bump.t0, "t1": self.bump.t1, "kind": "(1-tau^2)^3"},
            "trajectory": self.trajectory,
            "rows": [r.to_dict() for r in self.rows],
            "max_relative": self.max_relative(),
            "max_pressure_term": self.max_pressure(),
        }


def smoothed_energy_identity_report(traj, s, eta=None):
    """Compare both sides of the smoothed energy balance along a trajectory.

    LHS is ``-int eta'(t) |S v|^2 / 2`` and RHS is
    ``int eta(t) (v^j v^l grad_j S^2 v_l - Sv^j Sv^l grad_j S v_l)``, with
    ``S = e^{s Delta}``; time integrals use the trapezoid rule on the
    snapshots.  The pressure column is ``int int p div(eta S^2 v)``, which
    vanishes because the heat flow preserves the divergence.  ``s`` may be a
    number, a sequence or a HeatSchedule.
    """
    if isinstance(s, HeatSchedule):
        s_values = s.values
    else:
        s_values = np.atleast_1d(np.asarray(s, dtype=float))
    eta = default_bump(traj) if eta is None else eta
    t = traj.times
    h = traj.snapshot_dt
    w = eta(t)
    dw = eta.derivative(t)
    rows = []
    for si in s_values:
        terms = np.array([_identity_terms(v, p, si) for v, p in zip(traj.velocity, traj.pressure)])
        lhs = -_trapezoid(dw * terms[:, 0], h)
        rhs = _trapezoid(w * (terms[:, 1] - terms[:, 2]), h)
        press = _trapezoid(w * terms[:, 3], h)
        rows.append(IdentityRow(float(si), lhs, rhs, press))
    return IdentityReport(rows, eta, traj.metadata())


# --- weak formulation -------------------------------------------------------


@dataclass(frozen=True)
class TestForm:
    """Space-time 1-form ``eta(t) cos(k.x + phase) e``."""

    k: tuple
    direction: tuple
    phase: float
    bump: TimeBump


def default_test_forms(traj, k_max=2):
    T = float(traj.times[-1])
    bumps = [TimeBump(0.1 * T, 0.9 * T), TimeBump(0.05 * T, 0.55 * T), TimeBump(0.45 * T, 0.95 * T)]
    forms = []
    for kx in range(0, k_max + 1):
        for ky in range(-k_max, k_max + 1):
            if (kx, ky) <= (0, 0):
                continue
            for e in ((1.0, 0.0), (0.0, 1.0)):
                for ph in (0.0, np.pi / 2):
                    for b in bumps:
                        forms.append(TestForm((kx, ky), e, ph, b))
    return forms


def _mode_integral(grid, coeffs, k, phase):
    """``int f(x) cos(k.x + phase) dx`` from the Fourier coefficients of ``f`` (leading axes kept)."""
    idx = tuple(c % grid.N for c in k)
    return (2 * np.pi) ** grid.d * (coeffs[(...,) + idx] * np.exp(-1j * phase)).real


@dataclass
class WeakFormResult:
    residual: float
    worst: TestForm
    per_form: np.ndarray


def weak_form_residual(traj, forms=None, details=False):
    """Largest normalized weak-form defect over a family of test 1-forms.

    For each form, the defect is
    ``int int v . d_t omega + v^j v^l grad_j omega_l + p div omega``.
    Defects are divided by the largest sum of term magnitudes over the
    family, so the result is relative and forms on which every term vanishes
    cannot blow it up.  The zero trajectory gives 0.
    """
    grid = traj.grid
    forms = default_test_forms(traj) if forms is None else forms
    t = traj.times
    h = traj.snapshot_dt
    wanted = sorted({f.k for f in forms})
    # low-mode data per snapshot: v_hat(k), (vv)_hat(k), p_hat(k)
    vk = np.empty((len(t), len(wanted), grid.d), dtype=complex)
    vvk = np.empty((len(t), len(wanted), grid.d, grid.d), dtype=complex)
    pk = np.empty((len(t), len(wanted)), dtype=complex)
    for n, (v, p) in enumerate(zip(traj.velocity, traj.pressure)):
        _, vv = _products(grid, v.coeffs)
        for i, k in enumerate(wanted):
            idx = tuple(c % grid.N for c in k)
            vk[n, i] = v.coeffs[(slice(None),) + idx]
            vvk[n, i] = vv[(slice(None), slice(None)) + idx]
            pk[n, i] = p.coeffs[idx]
    pos = {k: i for i, k in enumerate(wanted)}
    vals, scales = [], []
    for f in forms:
        i = pos[f.k]
        k = np.asarray(f.k, dtype=float)
        e = np.asarray(f.direction, dtype=float)
        rot = np.exp(-1j * f.phase)
        rot_grad = np.exp(-1j * (f.phase + np.pi / 2))
        vol = (2 * np.pi) ** grid.d
        # omega = eta cos(k.x + phase) e;  grad_j omega_l = -eta k_j e_l sin(.) = eta k_j e_l cos(. + pi/2)
        a = vol * (np.einsum("nl,l->n", vk[:, i], e) * rot).real * f.bump.derivative(t)
        b = vol * (np.einsum("njl,j,l->n", vvk[:, i], k, e) * rot_grad).real * f.bump(t)
        c = vol * (pk[:, i] * (k @ e) * rot_grad).real * f.bump(t)
        ta, tb, tc = (_trapezoid(x, h) for x in (a, b, c))
        vals.append(abs(ta + tb + tc))
        scales.append(abs(ta) + abs(tb) + abs(tc))
    scale = max(scales, default=0.0)
    if scale == 0:
        vals = np.zeros(len(forms))
        return WeakFormResult(0.0, None, vals) if details else 0.0
    vals = np.array(vals) / scale
    worst = int(np.argmax(vals))
    res = float(vals[worst])
    return WeakFormResult(res, forms[worst], vals) if details else res


def weak_form_order(make_traj, dts, forms=None):
    """Observed convergence order of the weak residual as ``dt`` is refined.

    ``make_traj(dt)`` must return trajectories on a common time window.
    Returns ``(residuals, orders)``.
    """
    res = []
    for dt in dts:
        traj = make_traj(dt)
        res.append(weak_form_residual(traj, forms if forms is not None else default_test_forms(traj)))
    res = np.array(res)
    orders = np.log(res[:-1] / res[1:]) / np.log(np.asarray(dts[:-1]) / np.asarray(dts[1:]))
    return res, orders


def random_initial(grid, seed=0, k_max=6, gamma=1.0, rms=1.0):
    """Smooth random divergence-free initial data with unit RMS speed."""
    from .fields import random_slope

    v = random_slope(grid, gamma, seed=seed, k_max=k_max)
    norm = math.sqrt(2 * energy(v) / (2 * np.pi) ** grid.d)
    return v * (rms / norm)
