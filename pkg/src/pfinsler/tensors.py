"""Fiber tensors of a metric at a tangent sample: fundamental tensor, Cartan
tensor, mean torsion, angular metric, Matsumoto tensor, index and the
straight/reverse character of a translation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .deriv import field_jet, partial_tensor
from .errors import DegenerateError, DomainError
from .jets import Jet
from .metrics import MetricInstance, WindField

EIG_TOL = 1e-10
CHARACTER_TOL = 1e-10


@dataclass(frozen=True)
class SignatureReport:
    index: int
    eigenvalues: np.ndarray
    parity: int  # +1 for even index, -1 for odd


def metric_index(g) -> SignatureReport:
    """Index (number of negative eigenvalues) of a symmetric matrix."""
    g = np.asarray(g, float)
    eig = np.linalg.eigvalsh(0.5 * (g + g.T))
    if np.min(np.abs(eig)) < EIG_TOL:
        raise DegenerateError(f"numerically degenerate matrix, eigenvalues {eig.tolist()}")
    mu = int(np.sum(eig < 0))
    return SignatureReport(mu, eig, 1 if mu % 2 == 0 else -1)


def dense_partials(jet: Jet, order: int, offset: int, n: int) -> np.ndarray:
    """All order-``order`` partials of ``jet`` in variables ``offset..offset+n-1``
    as a dense symmetric array (trailing batch axes kept)."""
    sp = jet.space
    out = np.empty((n,) * order + jet.batch_shape)
    for idx in itertools.product(range(n), repeat=order):
        e = [0] * sp.nvars
        for i in idx:
            e[offset + i] += 1
        k = sp.index[tuple(e)]
        out[idx] = jet.c[k] * sp.factorial[k]
    return out


def _symmetrize(t: np.ndarray) -> np.ndarray:
    perms = list(itertools.permutations(range(t.ndim)))
    return sum(np.transpose(t, p) for p in perms) / len(perms)


def fiber_derivatives(F: MetricInstance, x, v, order: int = 3, mode: str = "exact") -> list[np.ndarray]:
    """``[L, d_v L, d_v^2 L, ..., d_v^order L]`` at ``(x, v)``."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    if not F.in_domain(x, v):
        raise DomainError(f"vector outside the domain: x={x.tolist()}, v={v.tolist()}")
    n = F.dimension
    if mode == "exact":
        jet = field_jet(F.field, x, v, order, "v")
        return [np.asarray(jet.value)] + [dense_partials(jet, k, 0, n) for k in range(1, order + 1)]
    out = [np.asarray(F.L(list(x), list(v)), float)]
    for k in range(1, order + 1):
        out.append(_symmetrize(partial_tensor(F.field, x, v, 0, k, mode="fd").entries))
    return out


def _checked(g: np.ndarray) -> np.ndarray:
    g = 0.5 * (g + g.T)
    metric_index(g)
    return g


def fundamental_tensor(F: MetricInstance, x, v, mode: str = "exact") -> np.ndarray:
    """``g_v = (1/2) d_v^2 F^2``."""
    return _checked(0.5 * fiber_derivatives(F, x, v, 2, mode)[2])


def cartan_tensor(F: MetricInstance, x, v, mode: str = "exact") -> np.ndarray:
    """``C_v = (1/4) d_v^3 F^2``."""
    d = fiber_derivatives(F, x, v, 3, mode)
    _checked(0.5 * d[2])
    return 0.25 * d[3]


def _parts(F, x, v, mode):
    L, dL, d2, d3 = fiber_derivatives(F, x, v, 3, mode)
    g = _checked(0.5 * d2)
    return float(L), 0.5 * dL, g, 0.25 * d3


def _torsion(g, C):
    return np.einsum("ij,kij->k", np.linalg.inv(g), C)


def _angular(L, gv, g):
    return g - np.outer(gv, gv) / L


def mean_cartan_torsion(F: MetricInstance, x, v, mode: str = "exact") -> np.ndarray:
    """``I_k = g^{ij} C_{kij}``."""
    _, _, g, C = _parts(F, x, v, mode)
    return _torsion(g, C)


def angular_metric(F: MetricInstance, x, v, mode: str = "exact") -> np.ndarray:
    """``h_v = g_v - g_v(v,.) g_v(v,.) / F^2``."""
    L, gv, g, _ = _parts(F, x, v, mode)
    return _angular(L, gv, g)


def matsumoto_tensor(F: MetricInstance, x, v, mode: str = "exact") -> np.ndarray:
    """``M_v = C_v - eps/(n+1) (I h + h I + ...)`` with ``eps`` the parity of the index."""
    L, gv, g, C = _parts(F, x, v, mode)
    n = F.dimension
    eps = metric_index(g).parity
    I = _torsion(g, C)
    h = _angular(L, gv, g)
    S = np.einsum("i,jk->ijk", I, h) + np.einsum("j,ik->ijk", I, h) + np.einsum("k,ij->ijk", I, h)
    return C - eps / (n + 1) * S


def translation_character(F: MetricInstance, W, x, v, Z: float) -> str:
    """``straight`` when ``g_u(u, v) > 0`` at ``u = v/Z - W``, ``reverse`` when negative."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    w = np.asarray(W(list(x)) if isinstance(W, WindField) else W, float)
    u = v / Z - w
    if not F.in_domain(x, u):
        raise DomainError(f"u = v/Z - W = {u.tolist()} is outside the domain")
    jet = field_jet(F.field, x, u, 1, "v")
    guv = 0.5 * float(np.dot(dense_partials(jet, 1, 0, F.dimension), v))
    if abs(guv) < CHARACTER_TOL:
        raise DegenerateError(f"transversality fails: g_u(u, v) = {guv:.3g}")
    return "straight" if guv > 0 else "reverse"
