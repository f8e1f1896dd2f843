import numpy as np
import pytest

from pfinsler import (
    Chart,
    OneForm,
    SemiRiemannianMetric,
    WindField,
    custom,
    kropina,
    randers,
    semi_riemannian,
    zermelo_translate,
)


@pytest.fixture
def euclid2():
    return semi_riemannian(SemiRiemannianMetric.euclidean(2))


@pytest.fixture
def euclid3():
    return semi_riemannian(SemiRiemannianMetric.euclidean(3))


@pytest.fixture
def minkowski2():
    return semi_riemannian(SemiRiemannianMetric.diagonal(["1", "-1"]))


@pytest.fixture
def randers_half():
    return randers(SemiRiemannianMetric.euclidean(2), OneForm(["0.5", "0"], 2), 1)


@pytest.fixture
def kropina_dx1():
    return kropina(SemiRiemannianMetric.euclidean(2), OneForm(["1", "0"], 2))


@pytest.fixture
def sphere2():
    return semi_riemannian(SemiRiemannianMetric.sphere_stereographic(2), Chart(2, [[-3, 3], [-3, 3]]))


@pytest.fixture
def disc_chart():
    return Chart(2, [[-1, 1], [-1, 1]], ["1 - x1^2 - x2^2"])


@pytest.fixture
def radial_wind():
    return WindField(["-x1", "-x2"], 2, sigma=1.0)


@pytest.fixture
def funk(disc_chart, radial_wind):
    return zermelo_translate(SemiRiemannianMetric.euclidean(2), radial_wind, 1, disc_chart)


@pytest.fixture
def quartic3():
    return custom("sqrt(v1^4 + v2^4 + v3^4)", 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
