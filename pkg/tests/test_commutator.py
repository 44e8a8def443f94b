import math

import numpy as np
import pytest

from hodgeflow import commutator as C
from hodgeflow.errors import FitRangeTooSmall
from hodgeflow.fields import multi_mode, single_mode, sphere_mode, sphere_random
from hodgeflow.heat import HeatSchedule, l2_norm
from hodgeflow.sphere import SphereBasis
from hodgeflow.torus import TorusField, TorusGrid

G = TorusGrid(2, 32)
# non-degenerate triad (1,0) + (1,2) = (2,2); leg lengths 1, sqrt 5, sqrt 8
TRIAD = [((1, 0), 1.0, 0.0), ((1, 2), 0.7, 0.3), ((2, 2), 0.5, 1.1)]


def _two_mode_oracle(grid, u, k, j, s):
    """W from the product modes of ``u = mode(k) + mode(j)`` by hand.

    Each single mode has ``(u . grad) u = 0``, so ``div(u u)`` lives on
    ``+-k +- j`` only, and there ``W_q = D_q (e^{-s|q|^2} - e^{-s(|k|^2 + |j|^2)})``.
    """
    vals = u.values()
    prod = vals[:, None] * vals[None, :]
    D = np.einsum("j...,jl...->l...", 1j * grid.k, grid.to_spectral(prod))
    gap = np.exp(-s * grid.k2) - math.exp(-s * (np.dot(k, k) + np.dot(j, j)))
    return D * gap


@pytest.mark.parametrize("s", [0.01, 0.1, 0.5])
def test_two_mode_closed_form(s):
    k, j = (1, 0), (1, 2)
    u = multi_mode(G, [(k, 1.0, 0.2), (j, 0.6, -0.4)])
    W = C.commutator_direct(u, s)
    np.testing.assert_allclose(W.coeffs, _two_mode_oracle(G, u, k, j, s), atol=1e-12)


def test_constant_field_has_no_commutator():
    u = TorusField.from_values(G, np.stack([np.full(G.shape, 0.3), np.full(G.shape, -1.2)]))
    assert l2_norm(C.commutator_direct(u, 0.1)) < 1e-14


def test_commutator_vanishes_as_s_to_zero():
    u = multi_mode(G, TRIAD)
    norms = [l2_norm(C.commutator_direct(u, s)) for s in HeatSchedule(0.125, 0.5, 2.0**-12).values]
    assert np.all(np.diff(norms) < 0)
    # W is linear in s near 0: nine octaves give a factor 512
    assert norms[-1] < 1e-2 * norms[0]
    assert l2_norm(C.commutator_direct(u, 0.0)) == 0.0


def test_pde_identity_torus():
    r = C.commutator_pde_residual(multi_mode(G, TRIAD), 0.1, ds=1e-5)
    assert r.residual < 1e-6


def test_pde_identity_zero_field():
    r = C.commutator_pde_residual(TorusField.zeros(G), 0.1)
    assert r.residual == 0.0 and r.norm_N == 0.0


def test_pde_identity_sphere():
    for L in (8, 16):
        r = C.commutator_pde_residual(sphere_mode(SphereBasis(L), 1, 0), 0.1)
        assert r.residual < 1e-4
        assert r.projected_residual < 1e-4


def test_pde_identity_sphere_random():
    u = sphere_random(SphereBasis(16), gamma=3.0, seed=0, l_band=6)
    r = C.commutator_pde_residual(u, 0.05)
    assert r.projected_residual < 1e-6


def test_duhamel_torus():
    u = multi_mode(G, TRIAD[:2])
    dec = C.duhamel_reconstruct(u, 0.1)
    assert dec.residual < 1e-4
    assert dec.order >= 1.0
    assert l2_norm(dec.W2) == 0.0 and l2_norm(dec.W3) == 0.0
    d = dec.to_dict()
    assert d["nodes"] == 128 and d["W2_norm"] == 0.0


def test_duhamel_sphere():
    b = SphereBasis(12)
    u = sphere_mode(b, 1, 0) + sphere_mode(b, 2, 1)
    dec = C.duhamel_reconstruct(u, 0.1, C.GradedMesh(32))
    assert dec.residual_doubled < 1e-2
    assert dec.residual_doubled < dec.residual
    norms = dec.norms()
    assert norms["W2"] > 0 and norms["W3"] > 0


def test_single_mode_flux_is_zero():
    for k in [(1, 0), (3, 2), (0, 5)]:
        assert abs(C.flux(single_mode(G, k), 0.1)) < 1e-14


def test_zero_field_flux():
    assert C.flux(TorusField.zeros(G), 0.1) == 0.0


@pytest.mark.parametrize("s", [0.05, 0.2])
def test_flux_matches_integrated_by_parts(s):
    u = multi_mode(G, TRIAD)
    f = C.flux(u, s)
    f_ibp, parts = C.flux_ibp(u, s)
    assert abs(f - f_ibp) < 1e-3 * abs(f)
    assert parts[1] == 0 and parts[2] == 0


def test_flux_matches_integrated_by_parts_sphere():
    u = sphere_random(SphereBasis(10), gamma=3.0, seed=0, l_band=5)
    f = C.flux(u, 0.05)
    f_ibp, _ = C.flux_ibp(u, 0.05)
    assert abs(f - f_ibp) < 1e-3 * abs(f)


def test_flux_with_time_weights():
    u = multi_mode(G, TRIAD)
    f = C.flux(u, 0.1)
    assert C.flux([u, u], 0.1, [0.25, 0.5]) == pytest.approx(0.75 * f, rel=1e-12)


def test_transport_flux_vanishes():
    assert abs(C.transport_flux(multi_mode(G, TRIAD), 0.1)) < 1e-10
    assert abs(C.transport_flux(sphere_random(SphereBasis(10), seed=1), 0.1)) < 1e-10


def test_smooth_flux_decays_at_least_linearly():
    rep = C.flux_decay_fit(multi_mode(G, TRIAD), 1.0)
    assert rep.exponent >= 0.95
    assert rep.term_exponents["W1"] == pytest.approx(1.0, abs=0.1)
    assert len(rep.rows()) == len(rep.s)


def test_flux_fit_range_too_small():
    with pytest.raises(FitRangeTooSmall):
        C.flux_decay_fit(multi_mode(G, TRIAD), 0.5, schedule=HeatSchedule(0.1, 0.9, 0.05))
    with pytest.raises(FitRangeTooSmall):
        C.flux_decay_fit(single_mode(G, (1, 0)), 0.5)


def test_claimed_exponent_and_threshold():
    assert C.claimed_exponent(0.5) == pytest.approx(0.25)
    assert C.flux_threshold(2 / 3) == pytest.approx(0.4)
    assert C.flux_threshold(1 / 3) == -0.05
