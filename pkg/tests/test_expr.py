import numpy as np
import pytest

from pfinsler import EvalScope, Expression, evaluate, parse, to_source
from pfinsler.errors import DomainError, ExprSyntaxError, UnknownIdentifierError
from pfinsler.expr import BinOp, Neg, Pow, Var
from pfinsler.jets import jet_space, seed_variables


def test_precedence_sum_of_powers():
    ast = parse("v1^2 + v2^2", 2)
    assert isinstance(ast, BinOp) and ast.op == "+"
    assert isinstance(ast.left, Pow) and ast.left.exponent == 2
    assert isinstance(ast.right, Pow) and ast.right.base == Var("v2")


def test_unary_minus_binds_tighter_than_product():
    ast = parse("-x1*v1", 2)
    assert isinstance(ast, BinOp) and ast.op == "*"
    assert isinstance(ast.left, Neg)


def test_power_is_right_associative_and_binds_tightest():
    ast = parse("2^3^2", 1)
    assert evaluate(ast, EvalScope(1, {})) == 2**9
    assert evaluate(parse("-2^2", 1), EvalScope(1, {})) == -4


def test_unbalanced_parenthesis_position():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("sqrt(v1", 2)
    assert exc.value.position == 8


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError):
        parse("v5 + 1", 2)
    with pytest.raises(UnknownIdentifierError):
        parse("foo(v1)", 2)


def test_non_integer_exponent_rejected():
    with pytest.raises(ExprSyntaxError):
        parse("v1^2.5", 2)


def test_evaluate_real():
    assert evaluate(parse("v1^2+v2^2", 2), EvalScope.from_vectors([0, 0], [3, 4])) == 25


def test_evaluate_jet_first_order():
    sp = jet_space(1, 1)
    (d,) = seed_variables(sp, [3.0])
    val = evaluate(parse("v1^2+v2^2", 2), EvalScope.from_vectors([0, 0], [d, 4.0]))
    assert val.c[0] == pytest.approx(25.0)
    assert val.c[1] == pytest.approx(6.0)


def test_sqrt_negative_is_domain_error():
    with pytest.raises(DomainError):
        evaluate(parse("sqrt(v1)", 1), EvalScope.from_vectors([0], [-1.0]))


def test_division_by_zero_is_domain_error():
    with pytest.raises(DomainError):
        Expression("1/v1", 1)([0.0], [0.0])


@pytest.mark.parametrize(
    "text",
    ["v1^2 + v2^2", "-x1*v1", "sqrt(v1^4 + v2^4)", "exp(-x1)*cos(x2) - log(2 + x1^2)/3", "abs(v1) + (x1 - x2)^3", "1 - x1^2 - x2^2"],
)
def test_print_parse_roundtrip(text):
    a = parse(text, 2)
    assert parse(to_source(a), 2) == a


@pytest.mark.parametrize(
    "text",
    ["sqrt(v1^4 + v2^4)", "(v1^2 + v2^2)/(1 + x1^2 + x2^2)^2", "exp(x1)*v1^2 + sin(x2)*v1*v2 + v2^2"],
)
def test_jets_match_central_differences(text):
    e = Expression(text, 2)
    x, v = np.array([0.3, -0.2]), np.array([0.7, 0.4])
    sp = jet_space(4, 1)
    jx = seed_variables(sp, list(np.concatenate([x, v])))
    val = e(jx[:2], jx[2:])
    h = 1e-4
    for k in range(4):
        p = np.concatenate([x, v])
        up, dn = p.copy(), p.copy()
        up[k] += h
        dn[k] -= h
        fd = (e(up[:2], up[2:]) - e(dn[:2], dn[2:])) / (2 * h)
        grad = val.partial(tuple(int(i == k) for i in range(4)))
        assert abs(grad - fd) <= 1e-6 * max(1.0, abs(grad))


def test_batch_evaluation_of_constant_broadcasts():
    out = Expression("0.5", 2)([np.zeros(3), np.zeros(3)], [np.ones(3), np.ones(3)])
    assert np.shape(out) == (3,)
