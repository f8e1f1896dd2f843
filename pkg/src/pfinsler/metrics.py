"""Conic pseudo-Finsler metrics and their Zermelo translations.

Every metric is a :class:`MetricInstance`: the squared norm ``L = F^2`` as a
generic callable plus an explicit conic domain predicate.  ``L`` accepts
coordinate sequences of floats, numpy arrays (batches) or jets, so the same
object feeds evaluation, the derivative engine and the integrators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .deriv import ScalarField
from .errors import DegenerateError, DomainError, NoRootError
from .expr import Expression
from .jets import Jet, constant_part, jet_space, seed_variables, sqrt

BOUNDARY_TOL = 1e-12
SWITCH_TOL = 1e-8
TRANSVERSAL_TOL = 1e-10
EDGE_BISECTIONS = 60

__all__ = [
    "Chart",
    "MetricInstance",
    "NavigationData",
    "SemiRiemannianMetric",
    "TangentSample",
    "WindField",
    "OneForm",
    "as_randers_kropina",
    "custom",
    "kropina",
    "navigation_data",
    "randers",
    "reverse",
    "semi_riemannian",
    "translate_numeric",
    "zermelo_translate",
]


def _xfunc(obj, n: int) -> Callable:
    if isinstance(obj, str):
        return Expression(obj, n, "x")
    if isinstance(obj, (int, float)):
        value = float(obj)
        return lambda x: value + np.zeros(np.shape(x[0])) if not isinstance(x[0], Jet) else value
    if callable(obj):
        return obj
    raise TypeError(f"cannot build a coordinate function from {obj!r}")


def _norm(v) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(v, float) ** 2, axis=0))


@dataclass(frozen=True)
class TangentSample:
    """A chart point with a tangent vector; ``scale`` seeds translation branches."""

    x: np.ndarray
    v: np.ndarray
    scale: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, float))
        object.__setattr__(self, "v", np.asarray(self.v, float))


class Chart:
    """Open box, optionally cut down by ``predicate(x) > 0`` expressions."""

    def __init__(self, dimension: int, box=None, predicates: Sequence[str] = ()):
        self.dimension = dimension
        self.box = None if box is None else np.asarray(box, float)
        self.predicates = [Expression(p, dimension, "x") for p in predicates]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        ok = np.ones(x.shape[1:], bool)
        if self.box is not None:
            lo = self.box[:, 0].reshape((-1,) + (1,) * (x.ndim - 1))
            hi = self.box[:, 1].reshape((-1,) + (1,) * (x.ndim - 1))
            ok &= np.all((x > lo) & (x < hi), axis=0)
        for p in self.predicates:
            ok &= np.asarray(p(list(x))) > 0
        return ok


class WindField:
    """Vector field ``W(x)`` given componentwise; ``sigma`` is the claimed
    homothety constant, if any."""

    def __init__(self, components, dimension: int | None = None, sigma: float | None = None):
        n = dimension or len(components)
        if len(components) != n:
            raise ValueError("one component per coordinate is required")
        self.dimension = n
        self.source = list(components)
        self.components = [_xfunc(c, n) for c in components]
        self.sigma = sigma

    def __call__(self, x) -> list:
        return [c(x) for c in self.components]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.source!r})"


class OneForm(WindField):
    """Covector field ``beta(x)`` given by its components."""


class SemiRiemannianMetric:
    """Symmetric, nondegenerate coefficient matrix ``g_ij(x)``."""

    def __init__(self, coefficients, dimension: int | None = None):
        n = dimension or len(coefficients)
        if len(coefficients) != n or any(len(row) != n for row in coefficients):
            raise ValueError("coefficient matrix must be n x n")
        self.dimension = n
        self.source = [list(row) for row in coefficients]
        self.coefficients = [[_xfunc(c, n) for c in row] for row in coefficients]

    @classmethod
    def euclidean(cls, n: int) -> "SemiRiemannianMetric":
        return cls.diagonal(["1"] * n)

    @classmethod
    def diagonal(cls, entries) -> "SemiRiemannianMetric":
        n = len(entries)
        return cls([[entries[i] if i == j else "0" for j in range(n)] for i in range(n)])

    @classmethod
    def sphere_stereographic(cls, n: int, radius: float = 1.0) -> "SemiRiemannianMetric":
        r2 = "+".join(f"x{i}^2" for i in range(1, n + 1))
        c = f"{4 * radius**2!r}/(1+({r2})/{radius**2!r})^2"
        return cls.diagonal([c] * n)

    def matrix(self, x) -> list:
        return [[c(x) for c in row] for row in self.coefficients]

    def quad(self, x, u, w=None):
        return linalg.quad(self.matrix(x), u, u if w is None else w)

    def check(self, x) -> None:
        m = np.array([[float(np.asarray(c)) for c in row] for row in self.matrix(list(np.asarray(x, float)))])
        if not np.allclose(m, m.T, rtol=0, atol=1e-12):
            raise DegenerateError(f"metric is not symmetric at x={list(x)}")
        if abs(np.linalg.det(m)) < 1e-10:
            raise DegenerateError(f"metric is degenerate at x={list(x)}")

    def __repr__(self) -> str:
        return f"SemiRiemannianMetric({self.source!r})"


@dataclass(frozen=True, eq=False)
class MetricInstance:
    """Evaluable conic pseudo-Finsler metric.

    ``L(x, v)`` returns ``F(x, v)^2`` on generic coordinates; ``domain(x, v)``
    takes real arrays of shape ``(n,)`` or ``(n, N)`` and returns booleans.
    """

    dimension: int
    L: Callable
    domain: Callable
    kind: str
    chart: Chart | None = None
    params: dict = field(default_factory=dict)

    def _mask(self, x, v) -> np.ndarray:
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        ok = np.asarray(self.domain(x, v), bool) & (_norm(v) > 0)
        if self.chart is not None:
            ok &= self.chart(x)
        return ok

    def in_domain(self, x, v) -> bool | np.ndarray:
        ok = self._mask(x, v)
        return bool(ok) if ok.ndim == 0 else ok

    @property
    def field(self) -> ScalarField:
        return ScalarField(self.L, self._mask, self.dimension)

    def F(self, x, v):
        """Generic norm ``sqrt(L)`` without domain checks."""
        return sqrt(self.L(x, v))

    def evaluate(self, x, v) -> float | np.ndarray:
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        ok = self._mask(x, v)
        if not np.all(ok):
            raise DomainError(f"vector outside the domain of the {self.kind} metric: x={x.tolist()}, v={v.tolist()}")
        out = np.sqrt(np.asarray(self.L(list(x), list(v)), float))
        return float(out) if out.ndim == 0 else out

    def __repr__(self) -> str:
        return f"MetricInstance(kind={self.kind!r}, n={self.dimension})"


# -- constructors ------------------------------------------------------------------------


def semi_riemannian(g: SemiRiemannianMetric, chart: Chart | None = None) -> MetricInstance:
    """``F = sqrt(g(v, v))`` on ``{g(v, v) > 0}``."""

    def L(x, v):
        return g.quad(x, v, v)

    def domain(x, v):
        return np.asarray(g.quad(list(x), list(v), list(v))) > BOUNDARY_TOL * _norm(v) ** 2

    return MetricInstance(g.dimension, L, domain, "semi-riemannian", chart, {"g": g})


def custom(L_expr: str, dimension: int, domain_exprs: Sequence[str] = (), chart: Chart | None = None) -> MetricInstance:
    """Metric from an explicit ``F^2`` expression; domain is ``expr > 0`` for each
    of ``domain_exprs`` (together with ``F^2 > 0``)."""
    Lx = Expression(L_expr, dimension)
    conds = [Expression(d, dimension) for d in domain_exprs]

    def L(x, v):
        return Lx(x, v)

    def domain(x, v):
        ok = np.ones(np.shape(x)[1:], bool)
        for c in conds:
            ok &= np.asarray(c(list(x), list(v))) > BOUNDARY_TOL
        if not ok.any():
            return ok
        vals = np.full(ok.shape, -1.0)
        if ok.ndim == 0:
            vals = np.asarray(Lx(list(x), list(v)), float)
        else:
            vals[ok] = Lx(list(np.asarray(x)[:, ok]), list(np.asarray(v)[:, ok]))
        return ok & (vals > BOUNDARY_TOL * _norm(v) ** 2)

    return MetricInstance(dimension, L, domain, "custom", chart, {"expression": L_expr, "domain": list(domain_exprs)})


def _h_dual_norm(h: SemiRiemannianMetric, beta: OneForm, x):
    hinv = linalg.inv(h.matrix(x))
    b = beta(x)
    B = linalg.matvec(hinv, b)
    return B, linalg.dot(b, B)


def randers(
    h: SemiRiemannianMetric,
    beta: OneForm,
    epsilon: int = 1,
    chart: Chart | None = None,
    check_points=(),
) -> MetricInstance:
    """Pseudo-Randers ``epsilon sqrt(h(v,v)) + beta(v)``."""
    if epsilon not in (1, -1):
        raise ValueError("epsilon must be +1 or -1")
    for x in check_points:
        _, hBB = _h_dual_norm(h, beta, list(np.asarray(x, float)))
        if abs(float(hBB) - 1.0) < 1e-10:
            raise DegenerateError(f"pseudo-Randers metric degenerate (h(B,B)=1) at x={list(x)}")

    def L(x, v):
        s = epsilon * sqrt(h.quad(x, v, v)) + linalg.dot(beta(x), v)
        return s * s

    def domain(x, v):
        x, v = list(x), list(v)
        hv = np.asarray(h.quad(x, v, v))
        nv = _norm(v)
        ok = hv > BOUNDARY_TOL * nv**2
        s = epsilon * np.sqrt(np.where(ok, hv, 0.0)) + np.asarray(linalg.dot(beta(x), v))
        return ok & (s > BOUNDARY_TOL * nv)

    return MetricInstance(h.dimension, L, domain, "randers", chart, {"h": h, "beta": beta, "epsilon": epsilon})


def kropina(h: SemiRiemannianMetric, beta: OneForm, chart: Chart | None = None, check_points=()) -> MetricInstance:
    """Pseudo-Kropina ``h(v,v) / beta(v)``."""
    for x in check_points:
        _, hBB = _h_dual_norm(h, beta, list(np.asarray(x, float)))
        if abs(float(hBB)) < 1e-10:
            raise DegenerateError(f"pseudo-Kropina metric degenerate (h(B,B)=0) at x={list(x)}")

    def L(x, v):
        k = h.quad(x, v, v) / linalg.dot(beta(x), v)
        return k * k

    def domain(x, v):
        x, v = list(x), list(v)
        prod = np.asarray(h.quad(x, v, v)) * np.asarray(linalg.dot(beta(x), v))
        return prod > BOUNDARY_TOL * _norm(v) ** 3

    return MetricInstance(h.dimension, L, domain, "kropina", chart, {"h": h, "beta": beta})


def _where(mask, a, b):
    """Elementwise select on generic values (mask over the batch axes)."""
    if isinstance(a, Jet) or isinstance(b, Jet):
        ca = a.c if isinstance(a, Jet) else None
        cb = b.c if isinstance(b, Jet) else None
        space = (a if isinstance(a, Jet) else b).space
        if ca is None:
            ca = Jet.constant(space, a).c
        if cb is None:
            cb = Jet.constant(space, b).c
        return Jet(space, np.where(np.asarray(mask)[None, ...], ca, cb))
    return np.where(mask, a, b)


def _zermelo_parts(g: SemiRiemannianMetric, W: WindField, x, v):
    Wx = W(x)
    m = g.matrix(x)
    gvv = linalg.quad(m, v, v)
    gvW = linalg.quad(m, v, Wx)
    gWW = linalg.quad(m, Wx, Wx)
    return gvv, gvW, gWW, gvW * gvW + gvv * (1.0 - gWW)


def zermelo_translate(
    g: SemiRiemannianMetric, W: WindField, epsilon: int, chart: Chart | None = None
) -> MetricInstance:
    """Closed-form translation ``Z_epsilon`` of ``sqrt(g)`` by the wind ``W``."""
    if epsilon not in (1, -1):
        raise ValueError("epsilon must be +1 or -1")

    def Z(x, v):
        gvv, gvW, gWW, hvv = _zermelo_parts(g, W, x, v)
        root = sqrt(hvv)
        far = np.abs(np.asarray(constant_part(gWW)) - 1.0) > SWITCH_TOL
        if np.all(far):
            return (gvW - epsilon * root) / (gWW - 1.0)
        den = gvW + epsilon * root
        bad = (~far) & (np.abs(np.asarray(constant_part(den))) < SWITCH_TOL)
        if np.any(bad):
            raise DegenerateError("both closed forms of the Zermelo metric are ill-conditioned here")
        if not np.any(far):
            return gvv / den
        safe_den = _where(far, 1.0, den)
        safe_w = _where(far, gWW, 2.0)
        return _where(far, (gvW - epsilon * root) / (safe_w - 1.0), gvv / safe_den)

    def L(x, v):
        z = Z(x, v)
        return z * z

    def domain(x, v):
        x, v = list(np.asarray(x, float)), list(np.asarray(v, float))
        gvv, gvW, gWW, hvv = (np.asarray(a) for a in _zermelo_parts(g, W, x, v))
        nv = _norm(v)
        s1, s2 = BOUNDARY_TOL * nv, BOUNDARY_TOL * nv**2
        c = epsilon * (1.0 - gWW)
        pos_h = hvv > s2
        case1 = (epsilon * gvv > s2) | ((epsilon * gvW < -s1) & pos_h)
        case2 = (epsilon * gvv > s2) & (epsilon * gvW > s1) & pos_h
        case3 = (gvv * gvW > BOUNDARY_TOL * nv**3) & (epsilon * gvW > s1)
        ok = np.where(c > SWITCH_TOL, case1, np.where(c < -SWITCH_TOL, case2, case3))
        return ok & pos_h

    params = {"g": g, "wind": W, "epsilon": epsilon}
    return MetricInstance(g.dimension, L, domain, "zermelo-closed-form", chart, params)


def reverse(F: MetricInstance) -> MetricInstance:
    """``F~(x, v) = F(x, -v)`` on ``-A``."""

    def L(x, v):
        return F.L(x, [-a for a in v])

    def domain(x, v):
        return F.domain(x, -np.asarray(v, float))

    return MetricInstance(F.dimension, L, domain, "reverse", F.chart, {"base": F})


# -- numerical translation ------------------------------------------------------------------


class _NumericTranslation:
    """Solves ``F(x, v/s - W(x)) = 1`` for ``s = Z(v)`` on one branch.

    The branch is fixed by the character (sign of ``g_u(u, v)``, straight or
    reverse) of the root found from the seed, and among roots of that character
    the one whose scale ``r |v|`` (``r = 1/s``) is nearest the seed's wins.
    """

    GRID = np.logspace(-4, 4, 321)

    def __init__(self, base: MetricInstance, W: WindField, seed: TangentSample):
        self.base = base
        self.W = W
        self.n = base.dimension
        x, v = seed.x[:, None], seed.v[:, None]
        nv = float(np.linalg.norm(seed.v))
        (cands,) = self._candidates(x, v)
        if not cands:
            raise NoRootError(f"navigation equation has no root at the seed x={seed.x.tolist()}, v={seed.v.tolist()}")
        target = np.log(np.sqrt(cands[0][0] * cands[0][1]) * nv) if seed.scale is None else np.log(nv / seed.scale)
        lo, hi, ch = min(cands, key=lambda c: abs(np.log(np.sqrt(c[0] * c[1]) * nv) - target))
        self.character = ch
        r, slope = self._refine(x, v, np.array([lo]), np.array([hi]))
        # F(u) + g_u(u, W) = r g_u(u, v) = r phi'(r) / 2 on the indicatrix
        if abs(r[0] * slope[0]) / 2 < TRANSVERSAL_TOL:
            raise NoRootError("navigation root at the seed is not transversal")
        self.log_scale = float(np.log(r[0] * nv))

    # phi(r) = L(x, r v - W(x)) - 1, NaN outside the base domain
    def _phi(self, x, v, r):
        Wx = np.array(self.W(list(x)), float).reshape(x.shape)
        u = r[None, :] * v - Wx
        ok = self.base._mask(x, u)
        out = np.full(r.shape, np.nan)
        if ok.any():
            out[ok] = np.asarray(self.base.L(list(x[:, ok]), list(u[:, ok])), float) - 1.0
        return out

    def _candidates(self, x, v):
        """Sign-change brackets per point: lists of (r_lo, r_hi, sign of slope).

        Cells with one end outside the base domain are shrunk onto the domain
        edge first, so roots squeezed against it are not missed."""
        N = x.shape[1]
        nv = _norm(v)
        R = len(self.GRID)
        r = (self.GRID[None, :] / nv[:, None]).ravel()
        phi = self._phi(np.repeat(x, R, axis=1), np.repeat(v, R, axis=1), r).reshape(N, R)
        r = r.reshape(N, R)
        fin = np.isfinite(phi)
        ek, ei = np.nonzero(fin[:, :-1] ^ fin[:, 1:])
        if len(ek):
            inside = np.where(fin[ek, ei], r[ek, ei], r[ek, ei + 1])
            outside = np.where(fin[ek, ei], r[ek, ei + 1], r[ek, ei])
            for _ in range(EDGE_BISECTIONS):
                mid = 0.5 * (inside + outside)
                ok = np.isfinite(self._phi(x[:, ek], v[:, ek], mid))
                inside = np.where(ok, mid, inside)
                outside = np.where(ok, outside, mid)
            p_edge = self._phi(x[:, ek], v[:, ek], inside)
        out = []
        for k in range(N):
            p = phi[k]
            with np.errstate(invalid="ignore"):
                idx = np.nonzero(fin[k, :-1] & fin[k, 1:] & (p[:-1] != 0) & (p[:-1] * p[1:] <= 0))[0]
            out.append([(r[k, i], r[k, i + 1], 1 if p[i + 1] > p[i] else -1) for i in idx])
        for j in range(len(ek)):
            k, i = ek[j], ei[j]
            if fin[k, i]:
                a, b, pa, pb = r[k, i], inside[j], phi[k, i], p_edge[j]
            else:
                a, b, pa, pb = inside[j], r[k, i + 1], p_edge[j], phi[k, i + 1]
            if pa != 0 and pa * pb <= 0:
                out[k].append((a, b, 1 if pb > pa else -1))
        for c in out:
            c.sort()
        return out

    def solve(self, x, v, strict: bool = True):
        """Roots ``s`` and slopes ``dphi/dr`` for a batch ``x, v`` of shape (n, N)."""
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        N = x.shape[1]
        nv = _norm(v)
        cands = self._candidates(x, v)
        lo = np.full(N, np.nan)
        hi = np.full(N, np.nan)
        found = np.zeros(N, bool)
        for k, cs in enumerate(cands):
            cs = [c for c in cs if c[2] == self.character]
            if not cs:
                continue
            best = min(cs, key=lambda c: abs(np.log(np.sqrt(c[0] * c[1]) * nv[k]) - self.log_scale))
            lo[k], hi[k] = best[0], best[1]
            found[k] = True
        if strict and not found.all():
            k = int(np.argmin(found))
            raise NoRootError(f"no root on the seed branch at x={x[:, k].tolist()}, v={v[:, k].tolist()}")
        r = np.full(N, np.nan)
        slope = np.full(N, np.nan)
        if found.any():
            rr, ss = self._refine(x[:, found], v[:, found], lo[found], hi[found])
            r[found] = rr
            slope[found] = ss
        return 1.0 / r, slope, found

    def _refine(self, x, v, lo, hi):
        # bisection on phi; the sign of phi at lo is -character
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if np.all((mid <= lo) | (mid >= hi)):
                break
            pm = self._phi(x, v, mid)
            if np.isnan(pm).any():
                raise NoRootError("navigation equation left the base domain inside a bracket")
            below = np.sign(pm) == -self.character
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        r = 0.5 * (lo + hi)
        # exact slope through a one-variable jet
        sp = jet_space(1, 1)
        (rj,) = seed_variables(sp, [r])
        Wx = self.W(list(x))
        u = [rj * v[i] - Wx[i] for i in range(self.n)]
        slope = self.base.L(list(x), u).c[1]
        return r, np.asarray(slope, float)

    # generic evaluation -------------------------------------------------------------
    def Z(self, x, v):
        jet = next((a for a in list(x) + list(v) if isinstance(a, Jet)), None)
        xr = np.array([np.asarray(constant_part(a), float) for a in x])
        vr = np.array([np.asarray(constant_part(a), float) for a in v])
        batch = vr.shape[1:]
        s, slope, _ = self.solve(xr.reshape(self.n, -1), vr.reshape(self.n, -1))
        s = s.reshape(batch)
        slope = slope.reshape(batch)
        if jet is None:
            return float(s) if s.ndim == 0 else s
        # chord Newton in jet arithmetic; each sweep gains one order
        dphi_ds = -slope / s**2
        sj = Jet.constant(jet.space, s)
        Wx = self.W(x)
        for _ in range(jet.space.order + 1):
            u = [v[i] / sj - Wx[i] for i in range(self.n)]
            sj = sj - (self.base.L(x, u) - 1.0) / dphi_ds
        return sj

    def L(self, x, v):
        z = self.Z(x, v)
        return z * z

    def domain(self, x, v):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        shape = x.shape[1:]
        xb = x.reshape(self.n, -1)
        vb = v.reshape(self.n, -1)
        ok = _norm(vb) > 0
        if not ok.any():
            return ok.reshape(shape)
        s, slope, found = self.solve(xb[:, ok], vb[:, ok], strict=False)
        res = np.zeros(xb.shape[1], bool)
        with np.errstate(invalid="ignore"):
            res[ok] = found & (np.abs(np.nan_to_num(slope / s)) / 2 >= TRANSVERSAL_TOL)
        return res.reshape(shape)


def translate_numeric(F: MetricInstance, W: WindField, branch_seed: TangentSample) -> MetricInstance:
    """Translation of an arbitrary metric by ``W``, on the branch picked by the seed."""
    tr = _NumericTranslation(F, W, branch_seed)
    params = {"base": F, "wind": W, "character": tr.character, "solver": tr}
    return MetricInstance(F.dimension, tr.L, tr.domain, "translated-numeric", F.chart, params)


# -- navigation data ----------------------------------------------------------------------------


@dataclass(frozen=True)
class NavigationData:
    """Semi-Riemannian ``g`` and wind ``W`` whose ``branch`` translation is the metric."""

    g: SemiRiemannianMetric
    wind: WindField
    branch: int

    def __iter__(self):
        return iter((self.g, self.wind))


def navigation_data(metric: MetricInstance, x_ref=None, v_ref=None) -> NavigationData:
    """Zermelo data of a pseudo-Randers or pseudo-Kropina metric.

    ``x_ref`` (and for Kropina ``v_ref``) fix the branch sign, which is
    constant on connected domains.
    """
    n = metric.dimension
    x_ref = list(np.zeros(n) if x_ref is None else np.asarray(x_ref, float))
    if metric.kind == "zermelo-closed-form":
        metric = as_randers_kropina(metric, x_ref)
    h: SemiRiemannianMetric = metric.params.get("h")
    beta: OneForm = metric.params.get("beta")
    if metric.kind == "randers":
        eps = metric.params["epsilon"]

        def delta(x):
            return 1.0 - _h_dual_norm(h, beta, x)[1]

        def g_entry(i, j):
            def f(x):
                b = beta(x)
                return delta(x) * (h.matrix(x)[i][j] - b[i] * b[j])

            return f

        def w_comp(i):
            def f(x):
                B, hBB = _h_dual_norm(h, beta, x)
                return -B[i] / (1.0 - hBB)

            return f

        d0 = float(delta(x_ref))
        if abs(d0) < 1e-10:
            raise DegenerateError(f"pseudo-Randers metric degenerate (h(B,B)=1) at x={x_ref}")
        g = SemiRiemannianMetric([[g_entry(i, j) for j in range(n)] for i in range(n)], n)
        W = WindField([w_comp(i) for i in range(n)], n)
        return NavigationData(g, W, 1 if eps * d0 > 0 else -1)
    if metric.kind == "kropina":

        def g_entry(i, j):
            def f(x):
                return 4.0 * h.matrix(x)[i][j] / _h_dual_norm(h, beta, x)[1]

            return f

        def w_comp(i):
            def f(x):
                return 0.5 * _h_dual_norm(h, beta, x)[0][i]

            return f

        hBB = float(_h_dual_norm(h, beta, x_ref)[1])
        if abs(hBB) < 1e-10:
            raise DegenerateError(f"pseudo-Kropina metric degenerate (h(B,B)=0) at x={x_ref}")
        hvv = 1.0 if v_ref is None else float(h.quad(x_ref, list(v_ref), list(v_ref)))
        g = SemiRiemannianMetric([[g_entry(i, j) for j in range(n)] for i in range(n)], n)
        W = WindField([w_comp(i) for i in range(n)], n)
        return NavigationData(g, W, 1 if hBB * hvv > 0 else -1)
    raise ValueError(f"navigation data needs a Randers, Kropina or Zermelo metric, got {metric.kind!r}")


def as_randers_kropina(metric: MetricInstance, x_ref=None) -> MetricInstance:
    """Rewrite a closed-form Zermelo metric as pseudo-Randers (``g(W,W) != 1``
    at ``x_ref``) or pseudo-Kropina (``g(W,W) = 1``)."""
    if metric.kind != "zermelo-closed-form":
        raise ValueError("only closed-form Zermelo metrics can be rewritten")
    g, W, eps = metric.params["g"], metric.params["wind"], metric.params["epsilon"]
    n = metric.dimension
    x_ref = list(np.zeros(n) if x_ref is None else np.asarray(x_ref, float))

    def gW(x):
        return linalg.matvec(g.matrix(x), W(x))

    alpha0 = 1.0 - float(g.quad(x_ref, W(x_ref), W(x_ref)))
    if abs(alpha0) > SWITCH_TOL:

        def h_entry(i, j):
            def f(x):
                a = 1.0 - g.quad(x, W(x), W(x))
                w = gW(x)
                return w[i] * w[j] / (a * a) + g.matrix(x)[i][j] / a

            return f

        def b_comp(i):
            def f(x):
                return -gW(x)[i] / (1.0 - g.quad(x, W(x), W(x)))

            return f

        h = SemiRiemannianMetric([[h_entry(i, j) for j in range(n)] for i in range(n)], n)
        beta = OneForm([b_comp(i) for i in range(n)], n)
        return randers(h, beta, eps * (1 if alpha0 > 0 else -1), metric.chart)

    def b2(i):
        return lambda x: 2.0 * gW(x)[i]

    return kropina(g, OneForm([b2(i) for i in range(n)], n), metric.chart)
