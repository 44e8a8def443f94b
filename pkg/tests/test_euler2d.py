import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hodgeflow import euler2d as E
from hodgeflow.errors import CFLViolation
from hodgeflow.fields import taylor_green
from hodgeflow.torus import TorusField, TorusGrid, divergence, l2_norm

G = TorusGrid(2, 32)


@pytest.fixture(scope="module")
def traj():
    return E.run(E.random_initial(G, seed=0), 0.5, 2e-3, stride=5)


def test_taylor_green_is_steady():
    v = taylor_green(G)
    assert l2_norm(E.nonlinearity(v)) < 1e-12
    assert l2_norm(E.euler_step(v, 0.01) - v) < 1e-12


def test_random_initial_has_unit_rms():
    u = E.random_initial(G, seed=3)
    # energy = |T^2| * rms^2 / 2
    assert E.energy(u) == pytest.approx(2 * math.pi**2, rel=1e-12)
    assert np.max(np.abs(divergence(u).coeffs)) < 1e-13


def test_random_initial_deterministic():
    a = E.random_initial(G, seed=5)
    b = E.random_initial(G, seed=5)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)


def test_zero_trajectory():
    z = E.run(TorusField.zeros(G), 0.1, 1e-2, stride=1)
    assert len(z) == 11
    assert np.all(z.energy == 0)
    assert E.weak_form_residual(z) == 0.0


def test_energy_and_divergence(traj):
    assert traj.energy_drift() < 1e-9
    assert traj.max_divergence() < 1e-12
    np.testing.assert_allclose(traj.times, np.linspace(0, 0.5, 51), atol=1e-12)


def test_pressure_poisson(traj):
    # -Lap p = div div (v v) for every snapshot
    from hodgeflow.torus import outer_product

    v, p = traj.velocity[-1], traj.pressure[-1]
    k = G.k
    ddvv = -np.einsum("j...,l...,jl...->...", k, k, outer_product(v))
    np.testing.assert_allclose(G.k2 * p.coeffs, ddvv, atol=1e-10)


def test_run_requires_whole_strides():
    with pytest.raises(ValueError):
        E.run(E.random_initial(G), 0.5, 2e-2, stride=10)


def test_cfl_violation_returns_partial():
    u = E.random_initial(G, seed=0) * 50
    with pytest.raises(CFLViolation) as err:
        E.run(u, 0.4, 2e-2, stride=1)
    part = err.value.partial
    assert part is not None and not part.valid
    assert len(part) >= 1
    assert E.cfl_number(G, 1.0, 0.01) == pytest.approx(0.01 * 32 / (2 * math.pi))


@given(st.floats(-0.999, 0.999))
def test_bump_derivative_matches_difference(tau):
    t0, t1 = 0.2, 1.4
    t = t0 + (tau + 1) * (t1 - t0) / 2
    h = 1e-6
    fd = (E.c2_bump(np.array(t + h), t0, t1) - E.c2_bump(np.array(t - h), t0, t1)) / (2 * h)
    assert E.c2_bump_derivative(np.array(t), t0, t1) == pytest.approx(fd, abs=1e-6)


def test_bump_shape():
    vals = E.c2_bump(np.array([0.0, 0.5, 1.0, 1.5]), 0.0, 1.0)
    np.testing.assert_allclose(vals, [0.0, 1.0, 0.0, 0.0])


def test_energy_identity(traj):
    rep = E.smoothed_energy_identity_report(traj, [0.01, 0.1])
    assert rep.max_relative() < 1e-4
    assert rep.max_pressure() < 1e-12
    assert len(rep.to_dict()["rows"]) == 2


def test_energy_identity_steady_flow():
    tg = E.run(taylor_green(G), 0.2, 1e-2, stride=2)
    rep = E.smoothed_energy_identity_report(tg, [0.05])
    assert rep.max_relative() < 1e-6


def test_weak_form(traj):
    assert E.weak_form_residual(traj) < 1e-4
    res = E.weak_form_residual(traj, details=True)
    assert res.per_form.shape == (len(E.default_test_forms(traj)),)


def test_weak_form_converges(traj):
    u = E.random_initial(G, seed=0)
    forms = E.default_test_forms(traj)
    residuals, orders = E.weak_form_order(lambda dt: E.run(u, 0.5, dt, stride=5), [4e-3, 2e-3], forms)
    assert residuals[1] < residuals[0]
    assert orders[0] >= 2.0


def test_default_forms_are_inside_window(traj):
    for form in E.default_test_forms(traj):
        assert traj.times[0] < form.bump.t0 < form.bump.t1 < traj.times[-1]
