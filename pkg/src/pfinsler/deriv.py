"""Mixed partial derivatives of scalar fields on the tangent bundle.

Two independent routes:

* ``mode="exact"``: forward-mode jets (truncated Taylor arithmetic) over the
  seeded chart variables, exact to rounding.
* ``mode="fd"``: central finite differences on a product stencil, evaluated in
  one vectorised call.  Orders >= 3 get one Richardson level.  This route is
  the oracle for the first and must stay free of jets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, StencilError
from .jets import Jet, jet_space, seed_variables

# second-order accurate central stencils: derivative order -> (offsets, weights)
_CENTRAL = {
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}

# base step per total derivative order; balances O(h^2) (O(h^4) with
# Richardson) truncation against eps/h^k rounding
FD_STEPS = {1: 1e-4, 2: 1e-4, 3: 5e-3, 4: 1.5e-2}
FD_MARGIN = {1: 1000.0, 2: 1000.0, 3: 50.0, 4: 30.0}
FD_MAX_SHRINK = 20


@dataclass(frozen=True)
class ScalarField:
    """A function ``f(x, v)`` on (a conic subset of) the tangent bundle.

    ``fn`` must accept coordinate sequences whose entries are floats, numpy
    arrays (a batch of points) or jets.  ``domain`` takes real coordinates of
    shape ``(n,)`` or ``(n, N)`` and returns a boolean (array).
    """

    fn: Callable
    domain: Callable
    dimension: int

    def __call__(self, x, v):
        return self.fn(x, v)


@dataclass
class PartialTensor:
    """Dense array of ``d^{order_x}_x d^{order_v}_v f`` at ``(x, v)``.

    Axes ``0..order_x-1`` index x-slots, the remaining ``order_v`` axes v-slots.
    """

    order_x: int
    order_v: int
    entries: np.ndarray
    x: np.ndarray
    v: np.ndarray
    mode: str


def _slot_exponent(n: int, xs: tuple[int, ...], vs: tuple[int, ...]) -> tuple[int, ...]:
    e = [0] * (2 * n)
    for i in xs:
        e[i] += 1
    for j in vs:
        e[n + j] += 1
    return tuple(e)


def _check_domain(field: ScalarField, x, v):
    if not bool(np.all(field.domain(np.asarray(x, float), np.asarray(v, float)))):
        raise DomainError(f"point outside the domain: x={list(x)}, v={list(v)}")


def field_jet(field: ScalarField, x, v, order: int, wrt: str = "xv") -> Jet:
    """Jet of ``field`` at ``(x, v)`` in the variables named by ``wrt``.

    Variable order is x-block then v-block (each block only if seeded).
    ``x``/``v`` may be ``(n,)`` or ``(n, N)`` arrays; the latter yields a batch.
    """
    n = field.dimension
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    nv = n * (("x" in wrt) + ("v" in wrt))
    space = jet_space(nv, order)
    seeds = seed_variables(space, list(x if "x" in wrt else []) + list(v if "v" in wrt else []))
    xs = seeds[:n] if "x" in wrt else list(x)
    vs = seeds[-n:] if "v" in wrt else list(v)
    out = field.fn(xs, vs)
    if not isinstance(out, Jet):
        out = Jet.constant(space, out)
    return out


def partial_tensor(
    field: ScalarField,
    x,
    v,
    order_x: int,
    order_v: int,
    mode: str = "exact",
    step: float | None = None,
) -> PartialTensor:
    """Mixed partials of total order ``order_x + order_v <= 4``."""
    order = order_x + order_v
    if order > 4 or order_x < 0 or order_v < 0:
        raise ValueError("orders must be non-negative with order_x + order_v <= 4")
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    n = field.dimension
    _check_domain(field, x, v)
    slots = list(itertools.product(range(n), repeat=order_x)), list(itertools.product(range(n), repeat=order_v))
    shape = (n,) * order
    if mode == "exact":
        wrt = ("x" if order_x else "") + ("v" if order_v else "")
        jet = field_jet(field, x, v, order, wrt or "v")
        entries = np.empty(shape)
        for xs in slots[0]:
            for vs in slots[1]:
                e = _slot_exponent(n, xs, vs)
                if "x" not in wrt:
                    e = e[n:]
                elif "v" not in wrt:
                    e = e[:n]
                entries[xs + vs] = jet.partial(e)
        return PartialTensor(order_x, order_v, entries, x, v, mode)
    if mode != "fd":
        raise ValueError(f"unknown mode {mode!r}")

    if order == 0:
        return PartialTensor(0, 0, np.asarray(field.fn(x, v), float), x, v, mode)
    scale = max(1.0, float(np.linalg.norm(x)), float(np.linalg.norm(v)))
    h = _fit_step(field, x, v, (step or FD_STEPS[order]) * scale, FD_MARGIN[order])
    exps = {}
    for xs in slots[0]:
        for vs in slots[1]:
            exps.setdefault(_slot_exponent(n, xs, vs), []).append(xs + vs)
    values = fd_partials(field, x, v, list(exps), h, richardson=order >= 3)
    entries = np.empty(shape)
    for e, val in zip(exps, values):
        for idx in exps[e]:
            entries[idx] = val
    return PartialTensor(order_x, order_v, entries, x, v, mode)


def _fit_step(field: ScalarField, x, v, h: float, margin: float) -> np.ndarray:
    """Per-coordinate steps: each starts at ``h`` and is halved (at most
    ``FD_MAX_SHRINK`` times) until probes at ``+-margin * step`` along that
    coordinate stay in the domain, keeping stencils clear of the boundary."""
    n = field.dimension
    base = np.concatenate([x, v])
    steps = np.full(2 * n, float(h))
    for i in range(2 * n):
        for _ in range(FD_MAX_SHRINK):
            pts = np.repeat(base[:, None], 2, axis=1)
            pts[i] += margin * steps[i] * np.array([1.0, -1.0])
            if np.all(np.asarray(field.domain(pts[:n], pts[n:]), bool)):
                break
            steps[i] *= 0.5
    return steps


def _stencil(exponent: tuple[int, ...], h):
    """Product stencil: offsets (rows, last axis fastest) and the 1-D weight
    vector of each differentiated coordinate; ``h`` holds one step per coordinate."""
    h = np.broadcast_to(np.asarray(h, float), (len(exponent),))
    axes = [(i, m) for i, m in enumerate(exponent) if m]
    pts = []
    for combo in itertools.product(*[range(len(_CENTRAL[m][0])) for _, m in axes]):
        off = np.zeros(len(exponent))
        for (i, m), k in zip(axes, combo):
            off[i] = _CENTRAL[m][0][k] * h[i]
        pts.append(off)
    weights = [np.asarray(_CENTRAL[m][1]) / h[i] ** m for i, m in axes]
    return np.array(pts), weights


def _contract(vals: np.ndarray, weights) -> float:
    """Apply 1-D difference weights axis by axis, first (x) coordinates
    innermost, so a field independent of a coordinate differences to exactly 0."""
    grid = vals.reshape([len(w) for w in weights])
    for w in weights:
        grid = np.sum(w.reshape((-1,) + (1,) * (grid.ndim - 1)) * grid, axis=0)
    return float(grid)


def fd_partials(field: ScalarField, x, v, exponents, h, richardson: bool = False) -> np.ndarray:
    """Central-difference values of ``d^e f`` for each exponent ``e`` over (x, v);
    ``h`` is a scalar step or one step per coordinate."""
    n = field.dimension
    base = np.concatenate([x, v])
    steps = (h, np.asarray(h) / 2) if richardson else (h,)
    blocks = []
    for hh in steps:
        for e in exponents:
            blocks.append(_stencil(e, hh))
    offsets = np.concatenate([b[0] for b in blocks])
    pts = base[:, None] + offsets.T
    xs, vs = pts[:n], pts[n:]
    ok = np.asarray(field.domain(xs, vs), bool)
    if not ok.all():
        bad = int(np.argmin(ok))
        raise StencilError(
            f"finite-difference stencil leaves the domain at x={xs[:, bad].tolist()}, v={vs[:, bad].tolist()}",
            point=(xs[:, bad], vs[:, bad]),
        )
    vals = np.asarray(field.fn(list(xs), list(vs)), float)
    out = []
    pos = 0
    for offs, weights in blocks:
        k = len(offs)
        out.append(_contract(vals[pos : pos + k], weights))
        pos += k
    out = np.array(out)
    if richardson:
        m = len(exponents)
        out = (4.0 * out[m:] - out[:m]) / 3.0
    return out


def homogeneity_check(field: ScalarField, x, v, degree: int, lambdas=(0.5, 2.0, 7.0)) -> float:
    """Max relative residual of ``f(x, l v) = l^degree f(x, v)`` over ``lambdas``."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    _check_domain(field, x, v)
    f0 = float(field.fn(x, v))
    worst = 0.0
    for lam in lambdas:
        _check_domain(field, x, lam * v)
        ref = lam**degree * f0
        worst = max(worst, abs(float(field.fn(x, lam * v)) - ref) / abs(ref))
    return worst
