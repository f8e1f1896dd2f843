"""Legendre map ``v -> g_v(v, .)``, its seeded Newton inverse, the dual norm and
the duality relations between a metric and its translations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .deriv import field_jet
from .errors import ConvergenceError, DomainError
from .metrics import MetricInstance, WindField, reverse
from .tensors import dense_partials

MAX_ITER = 50
MAX_HALVINGS = 30
RTOL = 1e-12


@dataclass(frozen=True)
class CotangentSample:
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, float))
        object.__setattr__(self, "xi", np.asarray(self.xi, float))
        if not np.any(self.xi):
            raise ValueError("covector must be nonzero")


def _map_and_jacobian(F: MetricInstance, x, v):
    jet = field_jet(F.field, x, v, 2, "v")
    n = F.dimension
    return 0.5 * dense_partials(jet, 1, 0, n), 0.5 * dense_partials(jet, 2, 0, n)


def legendre(F: MetricInstance, x, v) -> CotangentSample:
    """``xi_j = g_v(v, e_j) = (1/2) dL/dv^j``."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    if not F.in_domain(x, v):
        raise DomainError(f"vector outside the domain: x={x.tolist()}, v={v.tolist()}")
    return CotangentSample(x, _map_and_jacobian(F, x, v)[0])


def legendre_inverse(F: MetricInstance, x, xi, seed) -> np.ndarray:
    """Newton solve of ``g_v(v, .) = xi`` from ``seed`` (Jacobian ``g_v``), halving
    steps that leave the domain or fail to reduce the residual."""
    x = np.asarray(x, float)
    xi = np.asarray(xi, float)
    v = np.asarray(seed, float)
    if not F.in_domain(x, v):
        raise DomainError(f"seed outside the domain: x={x.tolist()}, v={v.tolist()}")
    scale = float(np.max(np.abs(xi)))
    m, g = _map_and_jacobian(F, x, v)
    res = m - xi
    for _ in range(MAX_ITER):
        err = float(np.max(np.abs(res)))
        if err <= RTOL * scale:
            return v
        step = np.linalg.solve(g, res)
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = v - lam * step
            if F.in_domain(x, trial):
                m_t, g_t = _map_and_jacobian(F, x, trial)
                if np.max(np.abs(m_t - xi)) < err:
                    break
            lam *= 0.5
        else:
            raise ConvergenceError(f"Legendre inverse: no acceptable step from v={v.tolist()}")
        v, g, res = trial, g_t, m_t - xi
    if float(np.max(np.abs(res))) <= RTOL * scale:
        return v
    raise ConvergenceError(f"Legendre inverse did not converge in {MAX_ITER} iterations (xi={xi.tolist()})")


def dual_norm(F: MetricInstance, x, xi, seed) -> float:
    """``F*(xi) = F(L^{-1}(xi))`` on the branch of ``seed``."""
    v = legendre_inverse(F, x, xi, seed)
    return F.evaluate(x, v)


def _wind_at(W, x) -> np.ndarray:
    return np.asarray(W(list(x)) if isinstance(W, WindField) else W, float)


def duality_residual(
    F: MetricInstance,
    F_hat: MetricInstance,
    W,
    character: str,
    x,
    xi,
    seed_hat,
    seed=None,
) -> float:
    """Residual of ``F^*_hat = F* + xi(W)`` (straight) or ``= -F~* + xi(W)`` (reverse)."""
    lhs, rhs = duality_sides(F, F_hat, W, character, x, xi, seed_hat, seed)
    return abs(lhs - rhs)


def duality_sides(F: MetricInstance, F_hat: MetricInstance, W, character: str, x, xi, seed_hat, seed=None):
    """Both sides of the duality relation: ``F^*_hat(xi)`` and the right-hand side.

    ``seed_hat`` seeds the inverse for ``F_hat``.  The seed for ``F`` (resp. the
    reverse metric) defaults to the vector corresponding to it: ``u = v/F_hat(v) - W``
    for straight translations, ``-u`` for reverse ones, scaled so its Legendre
    image has the size of ``xi``.
    """
    x = np.asarray(x, float)
    xi = np.asarray(xi, float)
    w = _wind_at(W, x)
    v_hat = legendre_inverse(F_hat, x, xi, seed_hat)
    lhs = F_hat.evaluate(x, v_hat)
    if character == "straight":
        base, sign = F, 1.0
    elif character == "reverse":
        base, sign = reverse(F), -1.0
    else:
        raise ValueError("character must be 'straight' or 'reverse'")
    if seed is None:
        u = v_hat / lhs - w
        seed = u if sign > 0 else -u
        # Legendre map is 1-homogeneous: rescale towards the target covector
        ls = legendre(base, x, seed).xi
        ratio = np.dot(xi, ls) / np.dot(ls, ls)
        if ratio > 0:
            seed = seed * ratio
    rhs = sign * dual_norm(base, x, xi, seed) + float(np.dot(xi, w))
    return lhs, rhs
