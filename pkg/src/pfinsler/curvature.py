"""Flag curvature by two independent routes.

*Spray route*: the Riemann curvature ``R^i_k`` of the geodesic spray,
contracted with the flag.

*Fanning route*: the Jacobi curve of the co-geodesic flow.  A frame of the
vertical Legendrean subspace along the flow is pulled back to the tangent space
at ``xi``, reduced to the contact plane ``ker(alpha) & ker(dH)``, and
differentiated in time.  The Wronskian ``W(t)``, the fundamental endomorphism
``F(t)`` (``F a_i = 0``, ``F a_i' = a_i``) and ``K = F''(0)^2 / 4`` follow from
finite differences on a symmetric grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .deriv import field_jet
from .dynamics import FD_FLOW_STEP, cogeodesic_flow, darboux, spray
from .errors import ConvergenceError, DegenerateError, DomainError
from .legendre import legendre
from .metrics import MetricInstance, WindField, reverse
from .tensors import dense_partials, fundamental_tensor

FLAG_TOL = 1e-10
COND_MAX = 1e8


@dataclass(frozen=True)
class Flag:
    """Flagpole ``v`` and edge ``w`` with ``g_v(v, w) = 0``."""

    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    discriminant: float


def make_flag(F: MetricInstance, x, v, w) -> Flag:
    """Project ``w`` to ``g_v(v, w) = 0`` and check the plane is nondegenerate."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    w = np.asarray(w, float)
    g = fundamental_tensor(F, x, v)
    w = w - (v @ g @ w) / (v @ g @ v) * v
    d = float((v @ g @ v) * (w @ g @ w) - (v @ g @ w) ** 2)
    if abs(d) < FLAG_TOL * max(1.0, float(v @ v) * float(w @ w)):
        raise DegenerateError(f"flag is degenerate (discriminant {d:.3g}) at x={x.tolist()}, v={v.tolist()}")
    return Flag(x, v, w, d)


# -- spray route -------------------------------------------------------------------------


def riemann_spray_curvature(F: MetricInstance, x, v) -> np.ndarray:
    """``R^i_k = 2 G^i_{x^k} - v^j G^i_{x^j v^k} + 2 G^j G^i_{v^j v^k} - G^i_{v^j} G^j_{v^k}``."""
    s = spray(F, x, v, derivatives=True)
    v = np.asarray(v, float)
    return (
        2.0 * s.dG_dx
        - np.einsum("j,ijk->ik", v, s.d2G_dxdv)
        + 2.0 * np.einsum("j,ijk->ik", s.G, s.d2G_dv2)
        - s.dG_dv @ s.dG_dv
    )


def flag_curvature_spray(F: MetricInstance, flag: Flag) -> float:
    g = fundamental_tensor(F, flag.x, flag.v)
    R = riemann_spray_curvature(F, flag.x, flag.v)
    return float(flag.w @ g @ (R @ flag.w)) / flag.discriminant


# -- fanning route --------------------------------------------------------------------------


@dataclass
class FanningFrameSeries:
    """Frames of the Jacobi curve on the grid ``t = j delta, j = -k..k``.

    ``frames[j]`` holds ``a_1..a_{n-1}`` (columns, full phase coordinates);
    ``coords[j]`` the same in the orthonormal contact-plane basis ``basis``.
    Derived quantities live on the inner nodes ``j = -(k-2)..(k-2)``.
    """

    t: np.ndarray
    delta: float
    frames: np.ndarray
    coords: np.ndarray
    basis: np.ndarray
    omega: np.ndarray
    dropped: int
    x: np.ndarray
    v: np.ndarray
    xi: np.ndarray
    L: float
    vertical0: np.ndarray  # eta_i at t = 0, columns
    coords_dot: np.ndarray | None = None
    wronskian: np.ndarray | None = None
    endomorphism: np.ndarray | None = None

    @property
    def inner(self) -> slice:
        return slice(2, len(self.t) - 2)

    def isotropy_defect(self) -> float:
        w = self.omega
        return float(max(np.max(np.abs(a.T @ w @ a)) for a in self.frames))

    def symmetry_defect(self) -> float:
        return float(max(np.max(np.abs(W - W.T)) for W in self.wronskian))

    def definition_defect(self) -> float:
        """Max residual of ``F a = 0`` and ``F a' = a`` over the inner nodes."""
        A = self.coords[self.inner]
        out = 0.0
        for Fm, a, ad in zip(self.endomorphism, A, self.coords_dot):
            out = max(out, float(np.max(np.abs(Fm @ a))), float(np.max(np.abs(Fm @ ad - a))))
        return out


def _null_space(rows: np.ndarray) -> np.ndarray:
    _, s, vt = np.linalg.svd(rows)
    return vt[int(np.sum(s > 1e-12 * s[0])) :].T


def jacobi_curve(F: MetricInstance, x, v, delta: float = 1e-2, k: int = 4, step_fraction: int = 4) -> FanningFrameSeries:
    """Jacobi-curve frames around ``xi = L_F(v)``."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    n = F.dimension
    if not F.in_domain(x, v):
        raise DomainError(f"vector outside the domain: x={x.tolist()}, v={v.tolist()}")
    xi = legendre(F, x, v).xi
    step = delta / step_fraction
    # covector perturbations relative to F(v) keep the pipeline scale invariant
    hxi = FD_FLOW_STEP * F.evaluate(x, v)
    fwd = cogeodesic_flow(F, x, xi, k * delta, step, with_linearization=True, seed=v, fd_xi_step=hxi)
    bwd = cogeodesic_flow(F, x, xi, -k * delta, step, with_linearization=True, seed=v, fd_xi_step=hxi)
    if fwd.status != "ok" or bwd.status != "ok":
        raise ConvergenceError(f"co-geodesic flow stopped: {fwd.status}, {bwd.status}")
    idx = np.arange(0, k * step_fraction + 1, step_fraction)
    lin = np.concatenate([bwd.linearization[idx[:0:-1]], fwd.linearization[idx]])
    vel = np.concatenate([bwd.extra["velocity"][idx[:0:-1]], fwd.extra["velocity"][idx]])
    cov = np.concatenate([bwd.p[idx[:0:-1]], fwd.p[idx]])
    t = delta * np.arange(-k, k + 1)

    L0 = float(F.L(list(x), list(v)))
    drop = int(np.argmax(np.abs(v)))
    keep = [i for i in range(n) if i != drop]
    frames = []
    verticals = []
    for D, vt, xt in zip(lin, vel, cov):
        eta = np.eye(n)[:, keep] - np.outer(xt, vt[keep]) / L0
        verticals.append(eta)
        frames.append(np.linalg.solve(D, np.vstack([np.zeros((n, n - 1)), eta])))
    frames = np.array(frames)
    vert0 = verticals[k]

    # contact plane at xi and the projection along span{S, C}
    jet = field_jet(F.field, x, v, 1, "xv")
    dLx = dense_partials(jet, 1, 0, 2 * n)[:n]
    alpha = np.concatenate([xi, np.zeros(n)])
    dH = np.concatenate([-0.5 * dLx, v])
    S = np.concatenate([v, 0.5 * dLx])
    C = np.concatenate([np.zeros(n), xi])
    basis = _null_space(np.vstack([alpha, dH]))
    proj = frames - (np.einsum("d,jdi->ji", alpha, frames) / L0)[:, None, :] * S[None, :, None]
    proj = proj - (np.einsum("d,jdi->ji", dH, frames) / L0)[:, None, :] * C[None, :, None]
    coords = np.einsum("dc,jdi->jci", basis, proj)
    return FanningFrameSeries(t, delta, frames, coords, basis, darboux(n), drop, x, v, xi, L0, vert0)


def _derive(series: FanningFrameSeries) -> FanningFrameSeries:
    A = series.coords
    d = series.delta
    m = len(series.t)
    inner = range(2, m - 2)
    Adot = []
    for j in inner:
        d1 = (A[j + 1] - A[j - 1]) / (2 * d)
        d2 = (A[j + 2] - A[j - 2]) / (4 * d)
        Adot.append((4 * d1 - d2) / 3)
    Adot = np.array(Adot)
    # Wronskian on the full phase frames, same differencing
    P = series.frames
    om = series.omega
    Wr = []
    for jj, j in enumerate(inner):
        d1 = (P[j + 1] - P[j - 1]) / (2 * d)
        d2 = (P[j + 2] - P[j - 2]) / (4 * d)
        Pdot = (4 * d1 - d2) / 3
        Wr.append(Pdot.T @ om @ P[j])
    Fend = []
    for jj, j in enumerate(inner):
        M = np.hstack([A[j], Adot[jj]])
        if np.linalg.cond(M) > COND_MAX:
            raise ConvergenceError("Jacobi-curve frame is ill-conditioned")
        Fend.append(np.hstack([np.zeros_like(A[j]), A[j]]) @ np.linalg.inv(M))
    series.coords_dot = Adot
    series.wronskian = np.array(Wr)
    series.endomorphism = np.array(Fend)
    return series


def jacobi_endomorphism(series: FanningFrameSeries) -> np.ndarray:
    """``K(0) = F''(0)^2 / 4`` in the contact-plane basis."""
    if series.endomorphism is None:
        _derive(series)
    Fm = series.endomorphism
    c = len(Fm) // 2
    d = series.delta
    d1 = (Fm[c + 1] - 2 * Fm[c] + Fm[c - 1]) / d**2
    d2 = (Fm[c + 2] - 2 * Fm[c] + Fm[c - 2]) / (4 * d**2)
    Fdd = (4 * d1 - d2) / 3
    return 0.25 * Fdd @ Fdd


def _ratio(series: FanningFrameSeries, K: np.ndarray, eta: np.ndarray) -> float:
    A0 = series.coords[len(series.t) // 2]
    W0 = series.wronskian[len(series.wronskian) // 2]
    d = np.linalg.lstsq(series.vertical0, eta, rcond=None)[0]
    c = np.linalg.lstsq(A0, K @ (A0 @ d), rcond=None)[0]
    return float(c @ W0 @ d) / float(d @ W0 @ d)


def flag_curvature_fanning(F: MetricInstance, flag: Flag, delta: float = 1e-2, retries: int = 3) -> float:
    """``(1/F^2) W(0)(K a, a) / W(0)(a, a)`` with ``a = (0, g_v w)``.

    ``delta`` is an arc length: the parameter grid is ``delta / F(v)`` so the
    result does not depend on the scale of the flagpole.
    """
    g = fundamental_tensor(F, flag.x, flag.v)
    eta = g @ flag.w
    delta = delta / F.evaluate(flag.x, flag.v)
    err = None
    for _ in range(retries + 1):
        try:
            series = _derive(jacobi_curve(F, flag.x, flag.v, delta))
            K = jacobi_endomorphism(series)
            return _ratio(series, K, eta) / series.L
        except ConvergenceError as exc:
            err = exc
            delta /= 2
    raise ConvergenceError(f"fanning pipeline failed after {retries} grid refinements: {err}")


# -- translation shift ---------------------------------------------------------------------------


def shifted_flag(F: MetricInstance, F_hat: MetricInstance, W: WindField, x, u, w) -> tuple[Flag, Flag]:
    """The ``F_hat`` flag ``(u, w)`` and the corresponding ``F`` flag
    ``(u / F_hat(u) - W, w)``."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    hat = make_flag(F_hat, x, u, w)
    ut = u / F_hat.evaluate(x, u) - np.asarray(W(list(x)), float)
    return hat, make_flag(F, x, ut, hat.w)


def curvature_shift_check(
    F: MetricInstance,
    F_hat: MetricInstance,
    W: WindField,
    sigma: float,
    x,
    u,
    w,
    route: str = "spray",
) -> tuple[float, float, float]:
    """``|K_hat(u, P) - K(u/F_hat(u) - W, P~) + sigma^2/4|`` with both curvatures.

    ``route`` picks the method on the ``F_hat`` side; the ``F`` side always uses
    the spray route.
    """
    hat, base = shifted_flag(F, F_hat, W, x, u, w)
    if route == "spray":
        k_hat = flag_curvature_spray(F_hat, hat)
    elif route == "fanning":
        k_hat = flag_curvature_fanning(F_hat, hat)
    else:
        raise ValueError("route must be 'spray' or 'fanning'")
    k = flag_curvature_spray(F, base)
    return abs(k_hat - k + 0.25 * sigma**2), k_hat, k


def reverse_identity_residual(F: MetricInstance, x, v, w) -> float:
    """``|K_{reverse F}(v, P) - K_F(-v, P)|`` by the spray route."""
    Fr = reverse(F)
    a = flag_curvature_spray(Fr, make_flag(Fr, x, v, w))
    b = flag_curvature_spray(F, make_flag(F, x, -np.asarray(v, float), w))
    return abs(a - b)
