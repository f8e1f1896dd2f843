import numpy as np
import pytest

from pfinsler import (
    SemiRiemannianMetric,
    WindField,
    dual_norm,
    duality_residual,
    legendre,
    legendre_inverse,
    semi_riemannian,
    zermelo_translate,
)
from pfinsler.errors import DomainError

X0 = np.zeros(2)
E2 = SemiRiemannianMetric.euclidean(2)


def test_legendre_examples(euclid2, minkowski2, randers_half):
    np.testing.assert_allclose(legendre(euclid2, X0, [3, 4]).xi, [3, 4], atol=1e-15)
    np.testing.assert_allclose(legendre(minkowski2, X0, [2, 1]).xi, [2, -1], atol=1e-15)
    np.testing.assert_allclose(legendre(randers_half, X0, [1, 0]).xi, [2.25, 0], atol=1e-14)


def test_legendre_randers_against_fd(randers_half, rng):
    """xi = (1/2) dF^2/dv via an independent central difference of F^2."""
    h = 1e-6
    for v in rng.normal(size=(5, 2)):
        fd = [(randers_half.evaluate(X0, v + h * e) ** 2 - randers_half.evaluate(X0, v - h * e) ** 2) / (4 * h) for e in np.eye(2)]
        np.testing.assert_allclose(legendre(randers_half, X0, v).xi, fd, atol=1e-8)


def test_legendre_inverse_examples(euclid2, minkowski2, randers_half):
    np.testing.assert_allclose(legendre_inverse(euclid2, X0, [3, 4], [1, 0]), [3, 4], atol=1e-12)
    np.testing.assert_allclose(legendre_inverse(randers_half, X0, [2.25, 0], [0.9, 0.1]), [1, 0], atol=1e-10)
    np.testing.assert_allclose(legendre_inverse(minkowski2, X0, [2, -1], [1, 0.2]), [2, 1], atol=1e-10)


def test_legendre_inverse_bad_seed(kropina_dx1):
    with pytest.raises(DomainError):
        legendre_inverse(kropina_dx1, X0, [1, 0], [-1, 0])


def test_dual_norm_examples(euclid2, randers_half):
    assert dual_norm(euclid2, X0, [3, 4], [1, 0]) == pytest.approx(5.0, abs=1e-12)
    assert dual_norm(euclid2, X0, [6, 8], [1, 0]) == pytest.approx(10.0, abs=1e-12)
    assert dual_norm(randers_half, X0, [2.25, 0], [0.9, 0.1]) == pytest.approx(1.5, abs=1e-10)


def test_randers_dual_norm_closed_form(randers_half, rng):
    """Dual of |v| + b.v with |b|<1: ((b.xi) + sqrt((b.xi)^2 + (1-|b|^2)|xi|^2)) / (1-|b|^2)."""
    b = np.array([0.5, 0.0])
    s = 1 - b @ b
    for xi in rng.normal(size=(10, 2)):
        seed = legendre_inverse(randers_half, X0, xi, xi)
        oracle = (-(b @ xi) + np.sqrt((b @ xi) ** 2 + s * (xi @ xi))) / s
        assert randers_half.evaluate(X0, seed) == pytest.approx(oracle, rel=1e-10)


def test_duality_straight(euclid2, rng):
    W = WindField(["0.5", "0"], 2)
    Z = zermelo_translate(E2, W, 1)
    for xi in rng.normal(size=(10, 2)):
        seed = legendre_inverse(Z, X0, xi, xi)
        assert duality_residual(euclid2, Z, W, "straight", X0, xi, seed) <= 1e-8


def test_duality_trivial_wind(euclid2, rng):
    W = WindField(["0", "0"], 2)
    Z = zermelo_translate(E2, W, 1)
    for xi in rng.normal(size=(5, 2)):
        assert duality_residual(euclid2, Z, W, "straight", X0, xi, xi) <= 1e-14


def test_duality_reverse(euclid2):
    W = WindField(["2", "0"], 2)
    Z = zermelo_translate(E2, W, -1)
    xi = legendre(Z, X0, [1, 0]).xi
    assert duality_residual(euclid2, Z, W, "reverse", X0, xi, [1.02, 0.01]) <= 1e-8


def test_roundtrip(randers_half, kropina_dx1, rng):
    for F in (randers_half, kropina_dx1):
        n = 0
        while n < 10:
            v = rng.normal(size=2)
            if not F.in_domain(X0, v) or v[0] < 0.2 * np.linalg.norm(v):
                continue
            n += 1
            xi = legendre(F, X0, v).xi
            np.testing.assert_allclose(legendre_inverse(F, X0, xi, v * 1.05 + 0.01), v, rtol=1e-9, atol=1e-10)
