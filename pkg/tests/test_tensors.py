import numpy as np
import pytest

from pfinsler import (
    OneForm,
    SemiRiemannianMetric,
    WindField,
    angular_metric,
    cartan_tensor,
    custom,
    fundamental_tensor,
    kropina,
    matsumoto_tensor,
    mean_cartan_torsion,
    metric_index,
    randers,
    translation_character,
    zermelo_translate,
)
from pfinsler.errors import DegenerateError

X0 = np.zeros(2)
E2 = SemiRiemannianMetric.euclidean(2)
E3 = SemiRiemannianMetric.euclidean(3)


def randers_g_oracle(b, v):
    """Closed-form fundamental tensor of a Euclidean Randers norm |v| + b.v."""
    a = np.linalg.norm(v)
    F = a + b @ v
    l = v / a
    return (F / a) * (np.eye(len(v)) - np.outer(l, l)) + np.outer(l + b, l + b)


def samples(F, x, rng, count, dim, margin=0.05):
    """Domain vectors whose relative margin-neighbourhood also lies in the domain
    (tensor entries blow up like inverse powers of the distance to the cone)."""
    out = []
    while len(out) < count:
        v = rng.normal(size=dim)
        probes = [v + s * margin * np.linalg.norm(v) * e for e in np.eye(dim) for s in (1, -1)]
        if F.in_domain(x, v) and all(F.in_domain(x, p) for p in probes):
            out.append(v)
    return out


def test_fundamental_tensor_quadratic(euclid2, minkowski2, rng):
    for v in rng.normal(size=(5, 2)):
        np.testing.assert_array_equal(fundamental_tensor(euclid2, X0, v), np.eye(2))
    for v in ([2, 1], [3, -2.5], [1, 0]):
        np.testing.assert_allclose(fundamental_tensor(minkowski2, X0, v), np.diag([1.0, -1.0]), atol=1e-15)


def test_fundamental_tensor_randers(randers_half, rng):
    b = np.array([0.5, 0.0])
    np.testing.assert_allclose(fundamental_tensor(randers_half, X0, [1, 0]), randers_g_oracle(b, np.array([1.0, 0])), atol=1e-12)
    np.testing.assert_allclose(fundamental_tensor(randers_half, X0, [1, 0], mode="fd"), randers_g_oracle(b, np.array([1.0, 0])), atol=1e-6)
    for v in rng.normal(size=(10, 2)):
        np.testing.assert_allclose(fundamental_tensor(randers_half, X0, v), randers_g_oracle(b, v), atol=1e-12)


def test_cartan_and_torsion_vanish_for_quadratic(euclid3, rng):
    x = np.zeros(3)
    for v in rng.normal(size=(5, 3)):
        assert np.max(np.abs(cartan_tensor(euclid3, x, v))) == 0.0
        assert np.max(np.abs(mean_cartan_torsion(euclid3, x, v))) == 0.0
        assert np.max(np.abs(matsumoto_tensor(euclid3, x, v))) == 0.0


def test_cartan_tensor_vertical_and_scaling(randers_half, rng):
    for v in rng.normal(size=(5, 2)):
        C = cartan_tensor(randers_half, X0, v)
        assert np.max(np.abs(np.einsum("i,ijk->jk", v, C))) <= 1e-13
        np.testing.assert_allclose(cartan_tensor(randers_half, X0, 2 * v), C / 2, atol=1e-13)
        np.testing.assert_allclose(fundamental_tensor(randers_half, X0, 3 * v), fundamental_tensor(randers_half, X0, v), atol=1e-13)


def test_angular_metric_kills_flagpole(randers_half, rng):
    for v in rng.normal(size=(5, 2)):
        assert np.max(np.abs(angular_metric(randers_half, X0, v) @ v)) <= 1e-13


def test_matsumoto_vanishes_for_randers_and_kropina(rng):
    x = np.zeros(3)
    for F in (randers(E3, OneForm(["0.3", "0", "0"], 3), 1), kropina(E3, OneForm(["1", "0", "0"], 3))):
        for v in samples(F, x, rng, 20, 3):
            assert np.max(np.abs(matsumoto_tensor(F, x, v))) <= 1e-7


def test_matsumoto_nonzero_for_quartic(quartic3, rng):
    x = np.zeros(3)
    worst = 0.0
    for _ in range(20):
        v = np.ones(3) + 0.3 * rng.normal(size=3)
        M = matsumoto_tensor(quartic3, x, v)
        np.testing.assert_allclose(M, matsumoto_tensor(quartic3, x, v, mode="fd"), atol=1e-4)
        worst = max(worst, float(np.max(np.abs(M))))
    assert worst >= 1e-3


def test_metric_index():
    r = metric_index(np.eye(2))
    assert (r.index, r.parity) == (0, 1)
    r = metric_index(np.diag([1.0, -1.0]))
    assert (r.index, r.parity) == (1, -1)
    with pytest.raises(DegenerateError):
        metric_index(np.diag([1.0, 0.0]))


def test_reverse_translation_flips_index():
    Z = zermelo_translate(E2, WindField(["2", "0"], 2), -1)
    assert metric_index(fundamental_tensor(Z, X0, [1, 0])).index == 1
    Z1 = zermelo_translate(E2, WindField(["2", "0"], 2), 1)
    assert metric_index(fundamental_tensor(Z1, X0, [1, 0])).index == 0


@pytest.mark.parametrize("W, Z, expected", [((0.5, 0), 2 / 3, "straight"), ((2, 0), 1.0, "reverse"), ((2, 0), 1 / 3, "straight")])
def test_translation_character(euclid2, W, Z, expected):
    assert translation_character(euclid2, np.array(W, float), X0, np.array([1.0, 0]), Z) == expected
