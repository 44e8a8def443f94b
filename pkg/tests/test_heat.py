import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hodgeflow import heat as H
from hodgeflow.errors import NegativeHeatTime, ScheduleTooCoarse, StepTooLarge, ZeroField
from hodgeflow.fields import random_slope, single_mode, sphere_mode, sphere_random
from hodgeflow.heat import HeatSchedule
from hodgeflow.sphere import SphereBasis
from hodgeflow.torus import TorusField, TorusGrid

from conftest import random_torus_field

E_M1 = 0.36787944117144232  # e^{-1}
E_MHALF = 0.60653065971263342  # e^{-1/2}


def test_schedule_values():
    sch = HeatSchedule(1.0, 0.5, 2.0**-4)
    np.testing.assert_allclose(sch.values, [1, 0.5, 0.25, 0.125, 0.0625])
    assert len(sch) == 5
    with pytest.raises(ValueError):
        HeatSchedule(2.0, 0.5, 0.1)
    with pytest.raises(ScheduleTooCoarse):
        HeatSchedule(1.0, 0.5, 0.01).require_density(8)


def test_heat_matches_rk4_torus(grid16):
    u = random_torus_field(grid16, 0, k_max=3)
    a = H.apply_heat(u, 0.05)
    b = H.heat_rk4(u, 0.05, ds=1e-3)
    assert H.l2_norm(a - b) / H.l2_norm(u) < 1e-9


def test_heat_matches_rk4_sphere():
    u = sphere_random(SphereBasis(6), seed=2)
    a = H.apply_heat(u, 0.05)
    b = H.heat_rk4(u, 0.05, ds=1e-3)
    assert H.l2_norm(a - b) / H.l2_norm(u) < 1e-8


def test_sphere_phi10_decay():
    u = sphere_mode(SphereBasis(8), 1, 0)
    U = H.apply_heat(u, 0.25)
    np.testing.assert_allclose(U.curl, E_MHALF * u.curl, rtol=1e-14)


def test_contraction_of_unit_mode(grid16):
    u = single_mode(grid16, (1, 0))
    assert H.contraction_check(u, 1.0) == pytest.approx(E_M1, rel=1e-14)


def test_zero_time_is_identity(grid16):
    u = random_torus_field(grid16, 1)
    np.testing.assert_array_equal(H.apply_heat(u, 0.0).coeffs, u.coeffs)


def test_negative_time_raises(grid16):
    with pytest.raises(NegativeHeatTime):
        H.apply_heat(single_mode(grid16, (1, 0)), -0.1)


def test_zero_field_contraction_raises(grid16):
    with pytest.raises(ZeroField):
        H.contraction_check(TorusField.zeros(grid16), 0.1)


@given(st.integers(0, 1000), st.floats(1e-3, 0.5), st.floats(1e-3, 0.5))
def test_semigroup_property(seed, s1, s2):
    u = random_torus_field(TorusGrid(2, 12), seed)
    assert H.semigroup_residual(u, s1, s2) < 1e-13


@given(st.integers(0, 1000), st.floats(1e-4, 1.0))
def test_contraction_property(seed, s):
    u = random_torus_field(TorusGrid(2, 12), seed)
    assert H.contraction_check(u, s) <= 1.0 + 1e-14


@given(st.integers(0, 1000), st.floats(1e-4, 1.0))
def test_commutes_with_divergence(seed, s):
    # not divergence-free on purpose
    u = random_torus_field(TorusGrid(2, 12), seed)
    assert H.divergence_invariance_residual(u, s) < 1e-13


def test_divergence_of_flowed_sine():
    g = TorusGrid(2, 16)
    x1 = g.coordinates()[0]
    u = TorusField.from_values(g, np.stack([np.sin(x1), np.zeros_like(x1)]))
    assert H.divergence_invariance_residual(u, 0.3) < 1e-15


def test_sphere_divergence_invariance():
    u = sphere_mode(SphereBasis(8), 3, 1, kind="grad")
    assert H.divergence_invariance_residual(u, 0.1) < 1e-14


def test_strong_continuity_is_monotone(grid16):
    u = random_torus_field(grid16, 2, k_max=2)
    s, d = H.strong_continuity_profile(u, HeatSchedule(1.0, 0.5, 2.0**-10))
    assert np.all(np.diff(d) > 0)
    assert d[0] < 1e-2 * H.l2_norm(u)


@pytest.mark.parametrize("k", [(1, 0), (3, 4)])
def test_smoothing_single_mode(grid16, k):
    u = single_mode(grid16, k)
    kk = math.hypot(*k)
    for s in (0.01, 0.1, 0.5):
        ratio = H.iterated_gradient_l2(H.apply_heat(u, s), 1) / H.l2_norm(u)
        assert ratio == pytest.approx(kk * math.exp(-s * kk**2), rel=1e-12)


def test_smoothing_band_slope():
    g = TorusGrid(2, 96)
    rep = H.smoothing_bound_report([random_slope(g, 1.5, seed=0)], HeatSchedule(2.0**-4, 2**-0.25, 2.0**-9))
    assert rep.summary["finite"]
    assert rep.summary["slope_band"] == pytest.approx(-0.5, abs=0.1)
    assert rep.summary["c_fields"] <= rep.summary["c_band"] + 1e-12


def test_lp_estimates_single_mode_a3():
    # sup_s s^{1/2} |k| e^{-s |k|^2} = (2e)^{-1/2} for any k
    g = TorusGrid(2, 32)
    rep = H.lp_heat_estimates_report([single_mode(g, (4, 0))], 3.0, HeatSchedule(1.0, 2**-0.125, 2.0**-8))
    assert rep.summary["C3"] == pytest.approx(H.A3_SINGLE_MODE_SUP, rel=1e-3)
    assert rep.summary["C3"] <= H.A3_SINGLE_MODE_SUP + 1e-12
    assert rep.summary["C1"] <= 1.0 + 1e-9


@pytest.mark.parametrize("which", H.BOCHNER_KINDS)
def test_bochner_identities_torus(which):
    u = random_torus_field(TorusGrid(2, 16), 3, k_max=4)
    assert H.bochner_residual(u, 0.05, which, ds=1e-4) < 1e-5
    order, r1, r2 = H.bochner_order(u, 0.05, which, ds=1e-3)
    assert order == pytest.approx(2.0, abs=0.2)


@pytest.mark.parametrize("which", H.BOCHNER_KINDS)
def test_bochner_identities_sphere(which):
    u = sphere_random(SphereBasis(8), seed=1, l_band=5)
    assert H.bochner_residual(u, 0.05, which, ds=1e-4) < 1e-4
    order, _, _ = H.bochner_order(u, 0.05, which, ds=1e-3)
    assert order == pytest.approx(2.0, abs=0.2)


def test_bochner_step_too_large(grid16):
    with pytest.raises(StepTooLarge):
        H.bochner_residual(single_mode(grid16, (1, 0)), 0.01, ds=0.01)


def test_band_operator_norm_sphere():
    u = sphere_mode(SphereBasis(8), 1, 0)
    # lambda^{1/2} e^{-s lambda} peaks at lambda = 1 / (2 s)
    s = 1 / 12.0
    assert H.band_operator_norm(u, s, 1) == pytest.approx(math.sqrt(6) * math.exp(-0.5), rel=1e-12)
