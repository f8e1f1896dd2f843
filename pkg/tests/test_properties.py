import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from pfinsler import (
    EvalScope,
    OneForm,
    SemiRiemannianMetric,
    WindField,
    evaluate,
    legendre,
    legendre_inverse,
    matsumoto_tensor,
    parse,
    randers,
    spray,
    to_source,
    zermelo_translate,
)
from pfinsler.deriv import homogeneity_check
from pfinsler.errors import DomainError
from pfinsler.expr import compile_expr

SETTINGS = settings(max_examples=40, deadline=None)
coord = st.floats(-2, 2, allow_nan=False)
vec2 = st.tuples(coord, coord).map(np.array)
vec3 = st.tuples(coord, coord, coord).map(np.array)


def _expr(depth):
    leaf = st.one_of(st.sampled_from(["x1", "x2", "v1", "v2"]), st.integers(0, 9).map(str))
    if depth == 0:
        return leaf
    sub = _expr(depth - 1)
    return st.one_of(
        leaf,
        st.tuples(sub, st.sampled_from("+-*"), sub).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        sub.map(lambda s: f"-{s}"),
        st.tuples(sub, st.integers(0, 3)).map(lambda t: f"{t[0]}^{t[1]}"),
        sub.map(lambda s: f"sin({s})"),
    )


@SETTINGS
@given(_expr(3), vec2, vec2)
def test_expression_roundtrip_and_compiled_agree(text, x, v):
    ast = parse(text, 2)
    scope = EvalScope.from_vectors(x, v)
    a = evaluate(ast, scope)
    assert evaluate(parse(to_source(ast), 2), scope) == a
    b = compile_expr(ast, 2)(*x, *v)
    assert np.isclose(a, b, rtol=1e-12, atol=1e-12)


@SETTINGS
@given(vec2, st.floats(0, 0.9), st.floats(0, 2 * np.pi), st.floats(0.1, 10))
def test_randers_homogeneity(v, r, th, lam):
    assume(np.linalg.norm(v) > 1e-3)
    b = r * np.array([np.cos(th), np.sin(th)])
    F = randers(SemiRiemannianMetric.euclidean(2), OneForm([repr(float(c)) for c in b], 2), 1)
    x = np.zeros(2)
    assert np.isclose(F.evaluate(x, lam * v), lam * F.evaluate(x, v), rtol=1e-13)
    assert homogeneity_check(F.field, x, v, 2) <= 1e-9 * max(1.0, float(v @ v))


@SETTINGS
@given(vec2, st.floats(0, 3), st.floats(0, 2 * np.pi), st.sampled_from([1, -1]))
def test_zermelo_defining_identity(v, r, th, eps):
    assume(abs(r - 1) > 1e-3 and np.linalg.norm(v) > 1e-3)
    W = r * np.array([np.cos(th), np.sin(th)])
    Z = zermelo_translate(SemiRiemannianMetric.euclidean(2), WindField([repr(float(c)) for c in W], 2), eps)
    x = np.zeros(2)
    assume(Z.in_domain(x, v))
    z = Z.evaluate(x, v)
    assert z > 0
    assert abs(np.linalg.norm(v / z - W) - 1) <= 1e-10 * max(1.0, np.linalg.norm(v) / z)


@SETTINGS
@given(vec2, st.floats(0, 0.8), st.floats(0, 2 * np.pi))
def test_legendre_roundtrip(v, r, th):
    assume(np.linalg.norm(v) > 0.1)
    b = r * np.array([np.cos(th), np.sin(th)])
    F = randers(SemiRiemannianMetric.euclidean(2), OneForm([repr(float(c)) for c in b], 2), 1)
    x = np.zeros(2)
    xi = legendre(F, x, v).xi
    back = legendre_inverse(F, x, xi, v + 0.05 * np.linalg.norm(v))
    assert np.allclose(back, v, rtol=1e-8, atol=1e-9 * np.linalg.norm(v))


@SETTINGS
@given(vec3, st.floats(0, 0.8), st.floats(0, np.pi), st.floats(0, 2 * np.pi))
def test_randers_matsumoto_vanishes(v, r, th, ph):
    assume(np.linalg.norm(v) > 0.1)
    b = r * np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
    F = randers(SemiRiemannianMetric.euclidean(3), OneForm([repr(float(c)) for c in b], 3), 1)
    v = v / np.linalg.norm(v)
    M = matsumoto_tensor(F, np.zeros(3), v)
    assert np.max(np.abs(M)) <= 1e-7


@SETTINGS
@given(vec2, vec2, st.floats(0.2, 5))
def test_spray_two_homogeneous(x, v, lam):
    assume(np.linalg.norm(v) > 1e-2)
    F = randers(SemiRiemannianMetric.diagonal(["1 + x1^2", "1"]), OneForm(["0.2*x2", "0.1"], 2), 1)
    try:
        G1 = spray(F, x, v).G
        G2 = spray(F, x, lam * v).G
    except DomainError:
        assume(False)
    assert np.allclose(G2, lam**2 * G1, rtol=1e-10, atol=1e-10 * max(1.0, np.max(np.abs(G2))))
