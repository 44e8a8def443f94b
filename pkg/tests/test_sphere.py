import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hodgeflow import sphere as S
from hodgeflow.calculus import SphereCalculus
from hodgeflow.errors import RankMismatch
from hodgeflow.fields import sphere_mode, sphere_random
from hodgeflow.sphere import SphereBasis, SphereField

# int_{S^2} |grad Y_lm|^2 = l(l+1) for unit-normalized Y_lm (checked against
# scipy.special.sph_harm with 200x400 Gauss-Legendre/trapezoid quadrature)
GRAD_Y_SQ = {(1, 0): 2.0, (3, 2): 12.0}


def _random(basis, seed):
    u = sphere_random(basis, gamma=1.0, seed=seed)
    rng = np.random.default_rng(seed + 99)
    g = rng.standard_normal(basis.coeff_shape) + 1j * rng.standard_normal(basis.coeff_shape)
    w = SphereField.from_coeffs(basis, grad=g)
    # real, band-limited field with both blocks populated
    return S.vsh_analyze(basis, u.cartesian_values() + w.cartesian_values())


def test_quadrature_integrates_constants(basis8):
    assert basis8.integrate(np.ones(basis8.grid_shape)) == pytest.approx(4 * np.pi, rel=1e-14)


def test_phi10_l2_norm(basis8):
    u = sphere_mode(basis8, 1, 0)
    assert S.l2_norm(u) ** 2 == pytest.approx(GRAD_Y_SQ[(1, 0)], rel=1e-13)
    quad = basis8.integrate(np.sum(u.frame_values() ** 2, axis=0))
    assert quad == pytest.approx(GRAD_Y_SQ[(1, 0)], rel=1e-12)


def test_phi32_l2_norm(basis8):
    # the real field Phi + conj(Phi) carries twice the norm of one harmonic
    u = sphere_mode(basis8, 3, 2)
    assert S.l2_norm(u) ** 2 == pytest.approx(2 * GRAD_Y_SQ[(3, 2)], rel=1e-13)


@given(st.integers(0, 1000))
def test_vsh_roundtrip(seed):
    b = SphereBasis(6)
    u = _random(b, seed)
    back = S.vsh_analyze(b, u.cartesian_values())
    np.testing.assert_allclose(back.curl, u.curl, atol=1e-12)
    np.testing.assert_allclose(back.grad, u.grad, atol=1e-12)


def test_curl_modes_are_divergence_free(basis8):
    assert sphere_mode(basis8, 4, 1).is_divergence_free()
    assert not sphere_mode(basis8, 4, 1, kind="grad").is_divergence_free()


@pytest.mark.parametrize("l,m", [(1, 0), (3, 2)])
def test_hodge_laplacian_eigenvalue_and_weitzenbock(basis8, l, m):
    u = sphere_mode(basis8, l, m)
    lap = S.hodge_laplacian_sphere(u)
    np.testing.assert_allclose(lap.curl, -l * (l + 1) * u.curl, atol=1e-13)
    # rough Laplacian from grid covariant derivatives minus Ric = 1
    calc = SphereCalculus(basis8)
    U = calc.vector(u)
    rough = calc.divergence(calc.gradient(U, 1), 2)
    np.testing.assert_allclose(rough - U, lap.cartesian_values(), atol=1e-9)


def test_curvature_tensor_formula():
    for sign, s in (("+", 1.0), ("-", -1.0)):
        R = S.curvature_tensor(sign, 2)
        d = np.eye(2)
        for l, m, j, k in itertools.product(range(2), repeat=4):
            want = d[m, l] * d[j, k] - d[m, k] * d[j, l] + s * d[m, j] * d[l, k]
            assert R[l, m, j, k] == want


@pytest.mark.parametrize("sign", ["+", "-"])
def test_apply_curvature_matches_loops(sign):
    rng = np.random.default_rng(5)
    d = np.eye(2)
    s = 1.0 if sign == "+" else -1.0
    for _ in range(20):
        T2 = rng.standard_normal((2, 2, 3, 4))
        T3 = rng.standard_normal((2, 2, 2, 3, 4))
        Q = S.apply_curvature(sign, T2)
        V = S.apply_curvature(sign, T3)
        Qb = np.zeros_like(Q)
        Vb = np.zeros_like(V)
        for l, m, j, k in itertools.product(range(2), repeat=4):
            r = d[m, l] * d[j, k] - d[m, k] * d[j, l] + s * d[m, j] * d[l, k]
            Qb[l, m] += r * T2[j, k]
            Vb[l] += r * T3[m, j, k]
        np.testing.assert_allclose(Q, Qb, atol=1e-13)
        np.testing.assert_allclose(V, Vb, atol=1e-13)


def test_apply_curvature_rank_mismatch():
    with pytest.raises(RankMismatch):
        S.apply_curvature("+", np.zeros((2, 3, 4)))
    with pytest.raises(ValueError):
        S.curvature_tensor("x")


@pytest.mark.parametrize("l,m", [(1, 0), (2, 1), (3, 2)])
def test_covariant_gradient_integration_by_parts(basis8, l, m):
    # int |grad u|^2 = -<Delta_B u, u> = (l(l+1) - 1) ||u||^2 for an eigenfield
    u = sphere_mode(basis8, l, m)
    G = S.covariant_gradient_sphere(u)
    lhs = basis8.integrate(np.sum(G**2, axis=(0, 1)))
    assert lhs == pytest.approx((l * (l + 1) - 1) * S.l2_norm(u) ** 2, rel=1e-10)


@given(st.integers(0, 1000))
def test_laplacian_self_adjoint(seed):
    b = SphereBasis(6)
    u, w = _random(b, seed), _random(b, seed + 1)
    lhs = S.l2_inner(S.hodge_laplacian_sphere(u), w)
    rhs = S.l2_inner(u, S.hodge_laplacian_sphere(w))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    quad = b.integrate(np.sum(u.cartesian_values() * w.cartesian_values(), axis=0))
    assert quad == pytest.approx(S.l2_inner(u, w), rel=1e-10, abs=1e-10)


def test_lp_norm_p2_matches_l2(basis8):
    u = _random(basis8, 4)
    assert S.lp_norm_sphere(u, 2) == pytest.approx(S.l2_norm(u), rel=1e-10)
