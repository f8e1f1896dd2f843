"""Geodesic spray, geodesics, co-geodesic flow, wind flows and the geodesic
correspondence between a metric and its translation by a homothetic wind.

All integrators are fixed-step RK4 over batches: states are ``(d, B)`` arrays,
so perturbed copies of a trajectory (for finite-difference linearizations)
advance together in one vectorised pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .deriv import field_jet
from .errors import ChartExitError, DegenerateError, DomainError
from .jets import Jet, jet_space, seed_variables
from .legendre import legendre_inverse
from .metrics import MetricInstance, WindField
from .tensors import dense_partials

DEFAULT_STEP = 1e-3
FD_FLOW_STEP = 1e-5


# -- spray ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SprayCoefficients:
    """``G^i(x, v)``; derivative arrays are filled when requested."""

    x: np.ndarray
    v: np.ndarray
    G: np.ndarray
    dG_dv: np.ndarray | None = None  # [i, j] = dG^i/dv^j
    dG_dx: np.ndarray | None = None  # [i, j] = dG^i/dx^j
    d2G_dv2: np.ndarray | None = None  # [i, j, k]
    d2G_dxdv: np.ndarray | None = None  # [i, j, k] = d^2 G^i / dx^j dv^k


def spray_values(F: MetricInstance, x, v) -> np.ndarray:
    """``G`` at a batch of points ``x, v`` of shape ``(n,)`` or ``(n, B)``."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    n = F.dimension
    jet = field_jet(F.field, x, v, 2, "xv")
    dLx = dense_partials(jet, 1, 0, n)
    d2 = dense_partials(jet, 2, 0, 2 * n)
    Lvx = d2[n:, :n]
    g = 0.5 * d2[n:, n:]
    rhs = np.einsum("lk...,k...->l...", Lvx, v) - dLx
    if x.ndim == 1:
        return 0.25 * np.linalg.solve(g, rhs)
    gb = np.moveaxis(g, -1, 0)
    if np.any(np.abs(np.linalg.det(gb)) < 1e-14):
        raise DegenerateError("degenerate fundamental tensor in the spray")
    return 0.25 * np.linalg.solve(gb, rhs.T[..., None])[..., 0].T


def spray_jet(F: MetricInstance, x, v, order: int = 2) -> list[Jet]:
    """Jets of ``G^i`` in the 2n variables ``(x, v)`` up to ``order``; needs
    derivatives of ``F^2`` up to ``order + 2``."""
    n = F.dimension
    if order + 2 > 4:
        raise ValueError("spray jets are limited to order 2")
    L = field_jet(F.field, x, v, order + 2, "xv")
    space = jet_space(2 * n, order)
    vs = seed_variables(space, list(np.asarray(x, float)) + list(np.asarray(v, float)))[n:]
    Lx = [L.diff(k).truncate(order) for k in range(n)]
    Lv = [L.diff(n + k) for k in range(n)]
    g = [[0.5 * Lv[a].diff(n + b) for b in range(n)] for a in range(n)]
    rhs = []
    for a in range(n):
        row = Lv[a].diff(0) * vs[0]
        for k in range(1, n):
            row = row + Lv[a].diff(k) * vs[k]
        rhs.append(row - Lx[a])
    ginv = linalg.inv(g)
    return [0.25 * linalg.dot(ginv[i], rhs) for i in range(n)]


def spray(F: MetricInstance, x, v, derivatives: bool = False) -> SprayCoefficients:
    """Spray coefficients; the geodesic equation is ``x'' = -2 G(x, x')``."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    if not F.in_domain(x, v):
        raise DomainError(f"vector outside the domain: x={x.tolist()}, v={v.tolist()}")
    n = F.dimension
    if not derivatives:
        return SprayCoefficients(x, v, spray_values(F, x, v))
    G = spray_jet(F, x, v, 2)
    d1 = np.array([dense_partials(Gi, 1, 0, 2 * n) for Gi in G])
    d2 = np.array([dense_partials(Gi, 2, 0, 2 * n) for Gi in G])
    return SprayCoefficients(
        x,
        v,
        np.array([Gi.value for Gi in G]),
        dG_dv=d1[:, n:],
        dG_dx=d1[:, :n],
        d2G_dv2=d2[:, n:, n:],
        d2G_dxdv=d2[:, :n, n:],
    )


# -- integration ----------------------------------------------------------------------


@dataclass
class Trajectory:
    """Uniform-grid solution.  ``states`` has shape ``(K, d)`` (or ``(K, d, B)``
    for a batch); ``status`` is ``"ok"`` or the reason integration stopped early."""

    t: np.ndarray
    states: np.ndarray
    kind: str
    dimension: int
    conserved: np.ndarray | None = None
    linearization: np.ndarray | None = None
    status: str = "ok"
    extra: dict = field(default_factory=dict)

    @property
    def x(self) -> np.ndarray:
        return self.states[:, : self.dimension]

    @property
    def p(self) -> np.ndarray:
        """Fiber part: velocity (tangent kind) or covector (cotangent kind)."""
        return self.states[:, self.dimension :]

    def drift(self) -> float:
        c = self.conserved
        return float(np.max(np.abs(c - c[0]) / np.abs(c[0])))

    def at(self, t) -> np.ndarray:
        """Position at parameter ``t`` by cubic Hermite interpolation (tangent kind)."""
        if self.kind != "tangent":
            raise ValueError("interpolation needs velocities")
        t = np.atleast_1d(np.asarray(t, float))
        h = self.t[1] - self.t[0]
        if np.any(t < self.t[0] - 1e-12) or np.any(t > self.t[-1] + 1e-12):
            raise ValueError(f"parameter outside the integrated range [{self.t[0]}, {self.t[-1]}]")
        k = np.clip(np.floor((t - self.t[0]) / h).astype(int), 0, len(self.t) - 2)
        s = (t - self.t[k]) / h
        x0, x1 = self.x[k], self.x[k + 1]
        v0, v1 = self.p[k] * h, self.p[k + 1] * h
        s = s.reshape((-1,) + (1,) * (x0.ndim - 1))
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * x0 + h10 * v0 + h01 * x1 + h11 * v1


def _rk4(rhs, y0: np.ndarray, h, nsteps: int, check=None):
    """Fixed-step RK4; ``h`` may be a per-column array.  Returns ``(ys, status)``
    with ``ys`` truncated at the last accepted state."""
    ys = [y0]
    y = y0
    for _ in range(nsteps):
        try:
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
        except (DomainError, DegenerateError) as exc:
            return np.array(ys), f"step rejected: {exc}"
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if check is not None:
            reason = check(y)
            if reason:
                return np.array(ys), reason
        ys.append(y)
    return np.array(ys), "ok"


def _nsteps(T: float, step: float) -> tuple[int, float]:
    n = max(1, int(math.ceil(abs(T) / step - 1e-9)))
    return n, T / n


def _phase_check(F: MetricInstance, n: int):
    def check(y):
        x, v = y[:n], y[n:]
        if F.chart is not None and not np.all(F.chart(x)):
            return "left the chart"
        if not np.all(F.in_domain(x, v)):
            return "left the domain"
        return None

    return check


def integrate_geodesics(F: MetricInstance, x0, v0, T: float, step: float = DEFAULT_STEP):
    """Batch of geodesics from ``(n, B)`` initial data; returns ``(t, ys, status)``."""
    n = F.dimension
    y0 = np.concatenate([np.asarray(x0, float), np.asarray(v0, float)])

    def rhs(y):
        return np.concatenate([y[n:], -2.0 * spray_values(F, y[:n], y[n:])])

    N, h = _nsteps(T, step)
    ys, status = _rk4(rhs, y0, h, N, _phase_check(F, n))
    return h * np.arange(len(ys)), ys, status


def geodesic(F: MetricInstance, x0, v0, T: float, step: float = DEFAULT_STEP, strict: bool = False) -> Trajectory:
    """RK4 solution of ``x' = v, v' = -2G(x, v)``; the log holds ``F(x, v)``."""
    x0 = np.asarray(x0, float)
    v0 = np.asarray(v0, float)
    if not F.in_domain(x0, v0):
        raise DomainError(f"initial vector outside the domain: x={x0.tolist()}, v={v0.tolist()}")
    n = F.dimension
    t, ys, status = integrate_geodesics(F, x0[:, None], v0[:, None], T, step)
    ys = ys[..., 0]
    if strict and status != "ok":
        raise ChartExitError(f"geodesic stopped at t={t[-1]:.6g}: {status}")
    Fs = np.sqrt(np.asarray(F.L(list(ys[:, :n].T), list(ys[:, n:].T)), float))
    return Trajectory(t, ys, "tangent", n, conserved=Fs, status=status)


def _legendre_batch(F: MetricInstance, x, v) -> np.ndarray:
    jet = field_jet(F.field, x, v, 1, "v")
    return 0.5 * dense_partials(jet, 1, 0, F.dimension)


def darboux(n: int) -> np.ndarray:
    """``omega((a, b), (c, d)) = <c, b> - <a, d>`` as the matrix ``[[0, -I], [I, 0]]``."""
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


def symplectic_defect(D: np.ndarray) -> float:
    n = D.shape[0] // 2
    w = darboux(n)
    return float(np.max(np.abs(D.T @ w @ D - w)))


def cogeodesic_flow(
    F: MetricInstance,
    x0,
    xi0,
    T: float,
    step: float = DEFAULT_STEP,
    with_linearization: bool = False,
    seed=None,
    fd_step: float = FD_FLOW_STEP,
    fd_xi_step: float | None = None,
) -> Trajectory:
    """Co-geodesic flow through the Legendre map of the geodesic flow.

    The log holds ``H = F*^2 / 2``.  With ``with_linearization``, ``D psi_t`` is
    taken by central differences of the flow map over the ``2n`` phase directions
    with one Richardson level, all perturbed trajectories integrated in one batch.
    ``fd_xi_step`` (default ``fd_step``) is the step along the covector directions.
    """
    x0 = np.asarray(x0, float)
    xi0 = np.asarray(xi0, float)
    n = F.dimension
    v0 = legendre_inverse(F, x0, xi0, xi0 if seed is None else seed)
    starts_x = [x0]
    starts_v = [v0]
    if with_linearization:
        hxi = fd_step if fd_xi_step is None else fd_xi_step
        for scale in (1.0, 0.5):
            for a in range(2 * n):
                for sgn in (1.0, -1.0):
                    dx = np.zeros(n)
                    dxi = np.zeros(n)
                    if a < n:
                        dx[a] = sgn * scale * fd_step
                    else:
                        dxi[a - n] = sgn * scale * hxi
                    starts_x.append(x0 + dx)
                    starts_v.append(legendre_inverse(F, x0 + dx, xi0 + dxi, v0))
    X0 = np.array(starts_x).T
    V0 = np.array(starts_v).T
    t, ys, status = integrate_geodesics(F, X0, V0, T, step)
    K, _, B = ys.shape
    xs = ys[:, :n, :]
    vs = ys[:, n:, :]
    flat_x = xs.transpose(1, 0, 2).reshape(n, K * B)
    flat_v = vs.transpose(1, 0, 2).reshape(n, K * B)
    xis = _legendre_batch(F, flat_x, flat_v).reshape(n, K, B).transpose(1, 0, 2)
    H = 0.5 * np.asarray(F.L(list(flat_x[:, ::B]), list(flat_v[:, ::B])), float)
    states = np.concatenate([xs[:, :, 0], xis[:, :, 0]], axis=1)
    lin = None
    if with_linearization:
        phase = np.concatenate([xs, xis], axis=1)
        m = 4 * n
        coarse, fine = phase[:, :, 1 : 1 + m], phase[:, :, 1 + m :]
        h = np.repeat([fd_step, hxi], n)
        d1 = (coarse[:, :, 0::2] - coarse[:, :, 1::2]) / (2 * h)
        d2 = (fine[:, :, 0::2] - fine[:, :, 1::2]) / h
        lin = (4.0 * d2 - d1) / 3.0  # one Richardson level
    traj = Trajectory(t, states, "cotangent", n, conserved=H, linearization=lin, status=status)
    traj.extra["velocity"] = vs[:, :, 0]
    return traj


# -- wind flow ------------------------------------------------------------------------------


def _wind_rhs(W: WindField):
    def rhs(y):
        return np.array(W(list(y)), float).reshape(y.shape)

    return rhs


def flow_points(W: WindField, X, t, step: float = DEFAULT_STEP, chart=None) -> np.ndarray:
    """``psi_t(X)`` for a batch ``X`` of shape ``(n, B)``; ``t`` scalar or ``(B,)``."""
    X = np.asarray(X, float)
    t = np.broadcast_to(np.asarray(t, float), X.shape[1:])
    tmax = float(np.max(np.abs(t))) if t.size else 0.0
    if tmax == 0.0:
        return X.copy()
    N, _ = _nsteps(tmax, step)
    h = t / N

    def check(y):
        if chart is not None and not np.all(chart(y)):
            return "left the chart"
        return None

    ys, status = _rk4(_wind_rhs(W), X, h, N, check)
    if status != "ok":
        raise ChartExitError(f"wind flow {status}")
    return ys[-1]


def wind_flow(W: WindField, x0, t: float, step: float = DEFAULT_STEP, with_differential: bool = False, chart=None):
    """``psi_t(x0)``; with ``with_differential`` also ``D psi_t`` by central differences."""
    x0 = np.asarray(x0, float)
    n = len(x0)
    if not with_differential:
        return flow_points(W, x0[:, None], t, step, chart)[:, 0]
    pts = [x0]
    for j in range(n):
        for sgn in (1.0, -1.0):
            e = np.zeros(n)
            e[j] = sgn * FD_FLOW_STEP
            pts.append(x0 + e)
    out = flow_points(W, np.array(pts).T, t, step, chart)
    D = (out[:, 1::2] - out[:, 2::2]) / (2 * FD_FLOW_STEP)
    return out[:, 0], D


# -- homothety ------------------------------------------------------------------------------


def homothety_rate(F: MetricInstance, W: WindField, x, v) -> float:
    """``-(d/dt) log F(D psi_t v)`` at ``t = 0``, exactly through one-variable jets."""
    sp = jet_space(1, 1)
    (s,) = seed_variables(sp, [0.0])
    Wx = W([x[i] + s * v[i] for i in range(len(x))])
    DWv = [w.c[1] if isinstance(w, Jet) else 0.0 for w in Wx]
    W0 = W(list(x))
    X = [x[i] + s * float(W0[i]) for i in range(len(x))]
    V = [v[i] + s * float(DWv[i]) for i in range(len(x))]
    Lj = F.L(X, V)
    return -float(Lj.c[1]) / (2.0 * float(Lj.c[0]))


def homothety_constant(F: MetricInstance, W: WindField, samples, times=(-0.2, -0.1, 0.1, 0.2), step: float = DEFAULT_STEP):
    """Estimate ``sigma`` with ``psi_t^* F = exp(-sigma t) F`` and its residual."""
    sig = []
    for x, v in samples:
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        if not F.in_domain(x, v):
            raise DomainError(f"sample outside the domain: x={x.tolist()}, v={v.tolist()}")
        sig.append(homothety_rate(F, W, x, v))
    sigma = float(np.mean(sig))
    resid = 0.0
    for x, v in samples:
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        F0 = F.evaluate(x, v)
        for t in times:
            y, D = wind_flow(W, x, t, step, with_differential=True, chart=F.chart)
            Ft = F.evaluate(y, D @ v)
            resid = max(resid, abs(math.exp(sigma * t) * Ft / F0 - 1.0))
    return sigma, resid


# -- correspondence ---------------------------------------------------------------------------


def reparametrization(sigma: float, t):
    """``f(t) = (exp(sigma t) - 1)/sigma``, or ``t`` for ``sigma = 0``."""
    t = np.asarray(t, float)
    if sigma == 0:
        return t
    return np.expm1(sigma * t) / sigma


def corresponding_geodesic(gamma: Trajectory, W: WindField, sigma: float, t, step: float = DEFAULT_STEP, chart=None):
    """``psi_t^W(gamma(f(t)))`` for scalar or array ``t``; columns are points."""
    t = np.atleast_1d(np.asarray(t, float))
    pts = gamma.at(reparametrization(sigma, t))
    out = flow_points(W, pts.T, t, step, chart)
    return out


@dataclass
class CorrespondenceResult:
    t: np.ndarray
    integrated: np.ndarray  # (K, n)
    predicted: np.ndarray  # (K, n)
    mismatch: np.ndarray  # (K,)
    status: str

    @property
    def max_mismatch(self) -> float:
        return float(np.max(self.mismatch))


def correspondence(
    F: MetricInstance,
    F_hat: MetricInstance,
    W: WindField,
    sigma: float,
    x0,
    v_hat0,
    times=None,
    step: float = DEFAULT_STEP,
) -> CorrespondenceResult:
    """Compare the integrated ``F_hat``-geodesic with the prediction from the
    ``F``-geodesic whose initial velocity is ``v_hat0 - W(x0)`` (``v_hat0`` is
    first normalized to ``F_hat = 1``)."""
    x0 = np.asarray(x0, float)
    times = np.linspace(0.0, 0.5, 11) if times is None else np.asarray(times, float)
    v_hat0 = np.asarray(v_hat0, float)
    v_hat0 = v_hat0 / F_hat.evaluate(x0, v_hat0)
    T = float(np.max(times))
    hat = geodesic(F_hat, x0, v_hat0, T, step, strict=True)
    u0 = v_hat0 - np.asarray(W(list(x0)), float)
    fT = float(reparametrization(sigma, T))
    gamma = geodesic(F, x0, u0, fT, step, strict=True)
    integrated = hat.at(times)
    predicted = corresponding_geodesic(gamma, W, sigma, times, step, F.chart).T
    mism = np.linalg.norm(integrated - predicted, axis=1)
    return CorrespondenceResult(times, integrated, predicted, mism, "ok")


def step_halving_study(F, F_hat, W, sigma, x0, v_hat0, steps=(0.1, 0.05, 0.025, 0.0125), times=None, floor: float = 1e-10):
    """Max mismatch per step and whether each halving gains a factor >= 8
    (comparisons below ``floor`` are exempt)."""
    errs = [correspondence(F, F_hat, W, sigma, x0, v_hat0, times, h).max_mismatch for h in steps]
    ratios = [a / b if b > 0 else math.inf for a, b in zip(errs, errs[1:])]
    ok = all(r >= 8.0 or b < floor for r, b in zip(ratios, errs[1:]))
    return errs, ratios, ok
