import numpy as np
import pytest

from pfinsler import (
    SemiRiemannianMetric,
    WindField,
    curvature_shift_check,
    flag_curvature_fanning,
    flag_curvature_spray,
    fundamental_tensor,
    jacobi_curve,
    jacobi_endomorphism,
    make_flag,
    reverse_identity_residual,
    riemann_spray_curvature,
    semi_riemannian,
    zermelo_translate,
)
from pfinsler.curvature import _derive
from pfinsler.errors import DegenerateError

E2 = SemiRiemannianMetric.euclidean(2)


def flags(F, rng, count, box=0.5, dim=2):
    out = []
    while len(out) < count:
        x, v, w = rng.uniform(-box, box, dim), rng.normal(size=dim), rng.normal(size=dim)
        if F.in_domain(x, v):
            try:
                out.append(make_flag(F, x, v, w))
            except DegenerateError:
                pass
    return out


def test_flat_curvature(euclid2, rng):
    for fl in flags(euclid2, rng, 3):
        np.testing.assert_array_equal(riemann_spray_curvature(euclid2, fl.x, fl.v), 0.0)
        assert flag_curvature_spray(euclid2, fl) == 0.0
        assert abs(flag_curvature_fanning(euclid2, fl)) <= 1e-6


def test_sphere_riemann_curvature(sphere2, rng):
    """Constant curvature 1: R = F^2 I - v (g v)^T."""
    for fl in flags(sphere2, rng, 5, box=1.0):
        g = fundamental_tensor(sphere2, fl.x, fl.v)
        L = fl.v @ g @ fl.v
        R = riemann_spray_curvature(sphere2, fl.x, fl.v)
        np.testing.assert_allclose(R, L * np.eye(2) - np.outer(fl.v, g @ fl.v), atol=1e-8 * max(1, L))
        assert np.max(np.abs(R @ fl.v)) <= 1e-8 * max(1, L)


def test_sphere_flag_curvature(sphere2, rng):
    for fl in flags(sphere2, rng, 10, box=1.0):
        assert flag_curvature_spray(sphere2, fl) == pytest.approx(1.0, abs=1e-6)


def test_funk_flag_curvature(funk, rng):
    for fl in flags(funk, rng, 10):
        assert flag_curvature_spray(funk, fl) == pytest.approx(-0.25, abs=1e-4)


def test_jacobi_curve_invariants(sphere2, rng):
    for fl in flags(sphere2, rng, 3, box=1.0):
        s = _derive(jacobi_curve(sphere2, fl.x, fl.v))
        assert s.isotropy_defect() <= 1e-6
        assert s.symmetry_defect() <= 1e-5
        k = len(s.t) // 2
        # t = 0 frames are (0, eta_i): purely vertical
        np.testing.assert_allclose(s.frames[k][:2], 0.0, atol=1e-8)
        np.testing.assert_allclose(s.frames[k][2:], s.vertical0, atol=1e-8)
        # W(0) restricted to the vertical frame represents g_v
        g = fundamental_tensor(sphere2, fl.x, fl.v)
        eta = g @ fl.w
        d = np.linalg.lstsq(s.vertical0, eta, rcond=None)[0]
        W0 = s.wronskian[len(s.wronskian) // 2]
        assert abs(d @ W0 @ d) == pytest.approx(abs(fl.w @ g @ fl.w), rel=1e-5)


def test_jacobi_curve_flat_wronskian_constant(euclid2):
    s = _derive(jacobi_curve(euclid2, np.zeros(2), np.array([0.6, 0.8])))
    assert np.max(np.abs(s.wronskian - s.wronskian[0])) <= 1e-6
    assert np.max(np.abs(jacobi_endomorphism(s))) <= 1e-6


@pytest.mark.parametrize("name, expected", [("sphere2", 1.0), ("funk", -0.25)])
def test_jacobi_endomorphism_ratio(name, expected, request, rng):
    F = request.getfixturevalue(name)
    for fl in flags(F, rng, 2):
        v = fl.v / F.evaluate(fl.x, fl.v)
        assert flag_curvature_fanning(F, make_flag(F, fl.x, v, fl.w)) == pytest.approx(expected, abs=1e-3)


@pytest.mark.parametrize("name", ["sphere2", "funk"])
def test_fanning_agrees_with_spray(name, request, rng):
    F = request.getfixturevalue(name)
    for fl in flags(F, rng, 3):
        assert abs(flag_curvature_fanning(F, fl) - flag_curvature_spray(F, fl)) <= 1e-3


def test_fanning_scale_invariance(funk, rng):
    for fl in flags(funk, rng, 2):
        K1 = flag_curvature_fanning(funk, fl)
        K2 = flag_curvature_fanning(funk, make_flag(funk, fl.x, 2 * fl.v, fl.w))
        assert K2 == pytest.approx(K1, abs=1e-6)


def test_curvature_shift(euclid2, rng):
    W = WindField(["-x1", "-x2"], 2, sigma=1.0)
    Z = zermelo_translate(E2, W, 1)
    for fl in flags(Z, rng, 10):
        r, k_hat, k = curvature_shift_check(euclid2, Z, W, 1.0, fl.x, fl.v, fl.w)
        assert r <= 1e-4 and k == 0.0


def test_curvature_shift_wrong_sigma(euclid2, rng):
    W = WindField(["-x1", "-x2"], 2, sigma=1.0)
    Z = zermelo_translate(E2, W, 1)
    fl = flags(Z, rng, 1)[0]
    r, _, _ = curvature_shift_check(euclid2, Z, W, 2.0, fl.x, fl.v, fl.w)
    assert r == pytest.approx(0.75, abs=1e-4)


def test_sphere_killing_shift(sphere2, rng):
    W = WindField(["-0.3*x2", "0.3*x1"], 2, sigma=0.0)
    Z = zermelo_translate(SemiRiemannianMetric.sphere_stereographic(2), W, 1, sphere2.chart)
    for fl in flags(Z, rng, 5):
        r, k_hat, _ = curvature_shift_check(sphere2, Z, W, 0.0, fl.x, fl.v, fl.w)
        assert k_hat == pytest.approx(1.0, abs=1e-4) and r <= 1e-4


def test_curvature_shift_zero_wind(sphere2, rng):
    W = WindField(["0", "0"], 2)
    Z = zermelo_translate(SemiRiemannianMetric.sphere_stereographic(2), W, 1, sphere2.chart)
    for fl in flags(sphere2, rng, 3):
        r, _, _ = curvature_shift_check(sphere2, Z, W, 0.0, fl.x, fl.v, fl.w)
        assert r <= 1e-12


def test_reverse_identity(randers_half, funk, rng):
    for F in (randers_half, funk):
        for fl in flags(F, rng, 3):
            if F.in_domain(fl.x, -fl.v):
                assert reverse_identity_residual(F, fl.x, fl.v, fl.w) <= 1e-10


def test_fundamental_endomorphism_definition_and_wronskian(funk, rng):
    for fl in flags(funk, rng, 2):
        s = _derive(jacobi_curve(funk, fl.x, fl.v))
        assert s.definition_defect() <= 1e-8
        signs = {tuple(np.sign(np.linalg.eigvalsh(0.5 * (W + W.T)))) for W in s.wronskian}
        assert len(signs) == 1
        assert min(abs(np.linalg.det(W)) for W in s.wronskian) > 1e-8


def test_curvature_shift_fanning_route(euclid2, rng):
    W = WindField(["-x1", "-x2"], 2, sigma=1.0)
    Z = zermelo_translate(E2, W, 1)
    for fl in flags(Z, rng, 3):
        r, _, _ = curvature_shift_check(euclid2, Z, W, 1.0, fl.x, fl.v, fl.w, route="fanning")
        assert r <= 2e-3
