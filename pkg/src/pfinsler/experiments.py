"""Experiment runners.  Each takes a scenario, its parameter block and a seeded
generator and returns an :class:`ExperimentReport` with CSV-ready rows."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .curvature import (
    curvature_shift_check,
    flag_curvature_fanning,
    flag_curvature_spray,
    make_flag,
)
from .deriv import partial_tensor
from .dynamics import (
    DEFAULT_STEP,
    cogeodesic_flow,
    correspondence,
    homothety_constant,
    homothety_rate,
    step_halving_study,
    symplectic_defect,
)
from .errors import ConfigError, ConvergenceError, DegenerateError, DomainError, FinslerError, StencilError
from .legendre import duality_sides, legendre, legendre_inverse
from .metrics import as_randers_kropina, navigation_data, semi_riemannian, zermelo_translate
from .scenario import Scenario
from .tensors import fundamental_tensor, matsumoto_tensor, metric_index, translation_character

_RECOVERABLE = (DomainError, DegenerateError, ConvergenceError, StencilError)


@dataclass
class Check:
    label: str
    value: float
    tolerance: float
    op: str = "<="  # value <= tolerance passes, or value >= tolerance for ">="

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return self.value <= self.tolerance if self.op == "<=" else self.value >= self.tolerance

    def __str__(self) -> str:
        return f"{self.label}={self.value:.3e} {self.op} {self.tolerance:.1e}"


@dataclass
class ExperimentReport:
    name: str
    kind: str
    columns: list[str]
    rows: list[list]
    checks: list[Check] = field(default_factory=list)
    message: str = ""
    wall_time: float = 0.0
    tables: dict = field(default_factory=dict)  # extra CSVs: name -> (columns, rows)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def max_residual(self) -> float:
        return self.checks[0].value if self.checks else float("nan")

    @property
    def tolerance(self) -> float:
        return self.checks[0].tolerance if self.checks else float("nan")

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        detail = self.error or "; ".join(str(c) for c in self.checks)
        extra = f" ({self.message})" if self.message else ""
        return f"{self.name}: {status} {detail}{extra}"


@dataclass
class RunContext:
    step: float | None = None
    fd: bool = False


# -- sampling ----------------------------------------------------------------------------------


def _coords(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i + 1}" for i in range(n)]


def _clear_of_boundary(F, x, v, margin: float) -> bool:
    if margin <= 0:
        return True
    n = len(x)
    d = margin * float(np.linalg.norm(v)) * np.concatenate([np.eye(n), -np.eye(n)]).T
    X = np.repeat(x[:, None], 2 * n, axis=1)
    return bool(np.all(F.in_domain(X, v[:, None] + d)))


def sample_tangent(rng: np.random.Generator, sc: Scenario, F, count: int, accept: Callable | None = None, max_tries: int = 20000):
    """Rejection sampling of ``(x, v)`` with ``x`` in the sampling box and chart,
    ``v`` in the domain of ``F`` with the scenario's relative margin.  ``accept(x, v)`` may return a payload, or
    ``None``/raise a recoverable error to reject."""
    n = sc.dimension
    lo, hi = sc.x_box[:, 0], sc.x_box[:, 1]
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries:
            raise ConvergenceError(f"rejection sampling found only {len(out)} of {count} domain points")
        x = rng.uniform(lo, hi)
        d = rng.normal(size=n)
        v = d / np.linalg.norm(d) * rng.uniform(*sc.v_norm)
        if sc.chart is not None and not sc.chart(x):
            continue
        if not F.in_domain(x, v) or not _clear_of_boundary(F, x, v, sc.margin):
            continue
        if accept is None:
            out.append((x, v))
            continue
        try:
            r = accept(x, v)
        except _RECOVERABLE:
            continue
        if r is not None:
            out.append(r)
    return out


def _step(ctx: RunContext, p: dict) -> float:
    return ctx.step or p.get("step", DEFAULT_STEP)


def _sigma(sc: Scenario, p: dict) -> float:
    s = p.get("sigma", sc.sigma)
    if s is None:
        raise ConfigError("experiment needs a homothety constant: set wind.sigma or sigma")
    return float(s)


# -- experiments -------------------------------------------------------------------------------


def run_matsumoto(sc: Scenario, p: dict, rng, ctx: RunContext) -> ExperimentReport:
    F = sc.target(p)
    n = sc.dimension
    mode = "fd" if ctx.fd else "exact"
    tol = p.get("tolerance", 1e-7)
    message = ""
    if n < 3:
        message = "warning: the Matsumoto characterization needs dimension >= 3"
        warnings.warn(message, stacklevel=2)
    rows = []
    for k, (x, v) in enumerate(sample_tangent(rng, sc, F, p.get("samples", 20))):
        m = float(np.max(np.abs(matsumoto_tensor(F, x, v, mode))))
        rows.append([k, *x, *v, m])
    worst = max(r[-1] for r in rows)
    op = ">=" if p.get("mode", "vanish") == "nonzero" else "<="
    return ExperimentReport(
        "", "matsumoto", ["trial", *_coords("x", n), *_coords("v", n), "max_abs_M"], rows,
        [Check("max_abs_M", worst, tol, op)], message,
    )


def run_zermelo(sc: Scenario, p: dict, rng, ctx: RunContext) -> ExperimentReport:
    from .metrics import TangentSample, translate_numeric

    if sc.metric.kind != "semi-riemannian":
        raise ConfigError("the zermelo experiment needs a semi-Riemannian metric")
    n = sc.dimension
    tol = p.get("tolerance", 1e-9)
    id_tol = p.get("identity_tolerance", 1e-10)
    rows = []
    for branch in p.get("branches", [p.get("branch", 1)]):
        Zc = sc.translation(branch)
        pts = sample_tangent(rng, sc, Zc, p.get("samples", 50))
        seed = sc._seeds.get(str(branch))
        if seed is None:
            x, v = pts[0]
            seed = TangentSample(x, v, 1.05 * Zc.evaluate(x, v))
        Zn = translate_numeric(sc.metric, sc.wind, seed)
        X = np.array([q[0] for q in pts]).T
        V = np.array([q[1] for q in pts]).T
        zc = np.asarray(Zc.L(list(X), list(V)), float) ** 0.5
        s, _, found = Zn.params["solver"].solve(X, V, strict=False)
        W = np.array(sc.wind(list(X)), float).reshape(X.shape)
        U = V / np.where(found, s, 1.0) - W
        ident = np.abs(np.sqrt(np.asarray(sc.metric.L(list(X), list(U)), float)) - 1.0)
        for k in range(len(pts)):
            zn = s[k] if found[k] else float("nan")
            rel = abs(zn - zc[k]) / abs(zc[k]) if found[k] else float("inf")
            rows.append([len(rows), branch, *X[:, k], *V[:, k], zc[k], zn, rel, ident[k] if found[k] else float("inf")])
    rel = max(r[-2] for r in rows)
    idr = max(r[-1] for r in rows)
    cols = ["trial", "branch", *_coords("x", n), *_coords("v", n), "Z_closed", "Z_numeric", "rel_diff", "identity_residual"]
    return ExperimentReport("", "zermelo", cols, rows, [Check("max_rel_diff", rel, tol), Check("max_identity_residual", idr, id_tol)])


def _expected_index(nd, x, v, z: float) -> int:
    """Index predicted by the Zermelo data: that of ``g`` for straight vectors,
    ``n - ind(g) - 1`` for reverse ones."""
    n = len(x)
    mu_g = metric_index(np.array(nd.g.matrix(list(x)), float)).index
    character = translation_character(semi_riemannian(nd.g), nd.wind, x, v, z)
    return mu_g if character == "straight" else n - mu_g - 1


def run_dictionary(sc: Scenario, p: dict, rng, ctx: RunContext) -> ExperimentReport:
    n = sc.dimension
    tol = p.get("tolerance", 1e-9)
    F = sc.metric
    if F.kind in ("randers", "kropina"):
        targets = [(F.params.get("epsilon", 1), F)]
    elif F.kind == "zermelo-closed-form":
        targets = [(F.params["epsilon"], F)]
    elif F.kind == "semi-riemannian":
        targets = [(b, sc.translation(b)) for b in p.get("branches", [p.get("branch", 1)])]
    else:
        raise ConfigError("the dictionary experiment needs a Randers, Kropina, Zermelo or semi-Riemannian metric")
    rows = []
    mismatches = 0
    for branch, G in targets:
        for x, v in sample_tangent(rng, sc, G, p.get("samples", 20)):
            a = G.evaluate(x, v)
            if G.kind == "zermelo-closed-form":
                RK = as_randers_kropina(G, x)
                other = RK.evaluate(x, v)
            else:
                RK = G
                other = a
            nd = navigation_data(RK, x, v)
            Z = zermelo_translate(nd.g, nd.wind, nd.branch, G.chart)
            b = Z.evaluate(x, v)
            rel = max(abs(a - b), abs(a - other)) / abs(a)
            if G.kind == "zermelo-closed-form":
                w0 = np.array(G.params["wind"](list(x)), float)
                rel += float(np.max(np.abs(np.array(nd.wind(list(x)), float) - w0)))
            mu = metric_index(fundamental_tensor(G, x, v)).index
            exp_idx = _expected_index(nd, x, v, b)
            mismatches += mu != exp_idx
            if RK.kind == "randers":
                mu_h = metric_index(np.array(RK.params["h"].matrix(list(x)), float)).index
                mismatches += mu != (mu_h if RK.params["epsilon"] == 1 else n - 1 - mu_h)
            rows.append([len(rows), branch, *x, *v, a, b, rel, mu, exp_idx])
    worst = max(r[-3] for r in rows)
    cols = ["trial", "branch", *_coords("x", n), *_coords("v", n), "value", "roundtrip", "rel_diff", "index", "expected_index"]
    return ExperimentReport(
        "", "dictionary", cols, rows, [Check("max_rel_diff", worst, tol), Check("index_mismatches", float(mismatches), 0.0)]
    )


def run_duality(sc: Scenario, p: dict, rng, ctx: RunContext) -> ExperimentReport:
    n = sc.dimension
    branch = p.get("branch", 1)
    Fh = sc.translation(branch)
    F = sc.metric
    tol = p.get("tolerance", 1e-8)
    rows = []
    chars = set()
    for k, (x, v) in enumerate(sample_tangent(rng, sc, Fh, p.get("samples", 20))):
        xi = legendre(Fh, x, v).xi
        seed = v * (1.0 + 0.02 * rng.normal(size=n))
        if not Fh.in_domain(x, seed):
            seed = v
        character = translation_character(F, sc.wind, x, v, Fh.evaluate(x, v))
        chars.add(character)
        lhs, rhs = duality_sides(F, Fh, sc.wind, character, x, xi, seed)
        rows.append([k, *xi, lhs, rhs, abs(lhs - rhs)])
    worst = max(r[-1] for r in rows)
    return ExperimentReport(
        "", "duality", ["trial", *_coords("xi", n), "lhs", "rhs", "residual"], rows,
        [Check("max_residual", worst, tol)], "character: " + ",".join(sorted(chars)),
    )


def run_correspondence(sc: Scenario, p: dict, rng, ctx: RunContext) -> ExperimentReport:
    n = sc.dimension
    branch = p.get("branch", 1)
    Fh = sc.translation(branch)
    sigma = _sigma(sc, p)
    if "x0" in p and "v0" in p:
        x0, v0 = np.asarray(p["x0"], float), np.asarray(p["v0"], float)
    else:
        x0, v0 = sample_tangent(rng, sc, Fh, 1)[0]
    times = p.get("times")
    res = correspondence(sc.metric, Fh, sc.wind, sigma, x0, v0, times, _step(ctx, p))
    rows = [[t, *a, *b, m] for t, a, b, m in zip(res.t, res.integrated, res.predicted, res.mismatch)]
    cols = ["t", *_coords("x_integrated", n), *_coords("x_predicted", n), "mismatch"]
    rep = ExperimentReport("", "correspondence", cols, rows, [Check("max_mismatch", res.max_mismatch, p.get("tolerance", 1e-5))])
    if p.get("halving", False):
        steps = p.get("halving_steps", [0.1, 0.05, 0.025, 0.0125])
        errs, ratios, ok = step_halving_study(sc.metric, Fh, sc.wind, sigma, x0, v0, steps, times)
        rep.tables["halving"] = (
            ["step", "max_mismatch", "ratio"],
            [[h, e, r] for h, e, r in zip(steps, errs, [float("nan")] + ratios)],
        )
        relevant = [r for r, e in zip(ratios, errs[1:]) if e >= 1e-10]
        rep.checks.append(Check("min_halving_ratio", min(relevant) if relevant else float("inf"), 8.0, ">="))
    return rep


def _flag_sampler(F, rng, n):
    def accept(x, v):
        w = rng.normal(size=n)
        return make_flag(F, x, v, w)

    return accept


def run_curvature(sc: Scenario, p: dict, rng, ctx: RunContext) -> ExperimentReport:
    n = sc.dimension
    F = sc.target(p)
    route = p.get("route", "spray")
    expected = p.get("expected")
    tol = p.get("tolerance", 1e-4 if route == "spray" else 1e-3)
    rows = []
    worst_exp = 0.0
    flags = sample_tangent(rng, sc, F, p.get("samples", 10), _flag_sampler(F, rng, n))
    for k, fl in enumerate(flags):
        ks = flag_curvature_spray(F, fl)
        kf = flag_curvature_fanning(F, fl) if route == "both" else float("nan")
        ke = float("nan") if expected is None else float(expected)
        if route == "both":
            resid = abs(kf - ks)
            if expected is not None:
                worst_exp = max(worst_exp, abs(ks - ke))
        else:
            resid = abs(ks - ke) if expected is not None else 0.0
        rows.append([k, *fl.x, *fl.v, *fl.w, ks, kf, ke, resid])
    checks = [Check("max_residual", max(r[-1] for r in rows), tol)]
    if route == "both" and expected is not None:
        checks.append(Check("max_spray_vs_expected", worst_exp, tol))
    if route == "spray" and expected is None:
        raise ConfigError("spray-route curvature experiment needs an expected value")
    cols = ["trial", *_coords("x", n), *_coords("v", n), *_coords("w", n), "K_spray", "K_fanning", "K_expected", "residual"]
    return ExperimentReport("", "curvature", cols, rows, checks)


def run_curvature_shift(sc: Scenario, p: dict, rng, ctx: RunContext) -> ExperimentReport:
    n = sc.dimension
    branch = p.get("branch", 1)
    Fh = sc.translation(branch)
    sigma = _sigma(sc, p)
    route = p.get("route", "spray")
    rows = []

    def accept(x, u):
        w = rng.normal(size=n)
        return x, u, w, curvature_shift_check(sc.metric, Fh, sc.wind, sigma, x, u, w, route)

    for k, (x, u, w, (res, kh, kb)) in enumerate(sample_tangent(rng, sc, Fh, p.get("samples", 10), accept)):
        rows.append([k, *x, *u, *w, kh, kb, sigma, res])
    cols = ["trial", *_coords("x", n), *_coords("u", n), *_coords("w", n), "K_hat", "K_base", "sigma", "residual"]
    return ExperimentReport("", "curvature-shift", cols, rows, [Check("max_residual", max(r[-1] for r in rows), p.get("tolerance", 1e-4))])


def run_conservation(sc: Scenario, p: dict, rng, ctx: RunContext) -> ExperimentReport:
    n = sc.dimension
    F = sc.target(p)
    T = p.get("horizon", 1.0)
    step = _step(ctx, p)

    def accept(x, v):
        # unit-speed start; samples whose orbit leaves the chart are redrawn
        v = v / F.evaluate(x, v)
        xi = legendre(F, x, v).xi
        traj = cogeodesic_flow(F, x, xi, T, step, with_linearization=True, seed=v)
        if traj.status != "ok":
            return None
        # H from the cotangent states alone, inverting the Legendre map at sampled nodes
        vel = traj.extra["velocity"]
        nodes = np.linspace(0, len(traj.t) - 1, 11).astype(int)
        H = np.array([0.5 * F.evaluate(traj.x[j], legendre_inverse(F, traj.x[j], traj.p[j], vel[j])) ** 2 for j in nodes])
        h_drift = float(np.max(np.abs(H - H[0]) / H[0]))
        sym = max(symplectic_defect(D) for D in traj.linearization)
        f = np.sqrt(traj.conserved / traj.conserved[0])
        return [*x, *v, float(np.max(np.abs(f - 1.0))), h_drift, sym]

    rows = [[k, *r] for k, r in enumerate(sample_tangent(rng, sc, F, p.get("samples", 2), accept, max_tries=200))]
    cols = ["trial", *_coords("x", n), *_coords("v", n), "F_drift", "H_drift", "symplectic_defect"]
    checks = [
        Check("max_drift", max(max(r[-3], r[-2]) for r in rows), p.get("drift_tolerance", 1e-8)),
        Check("max_symplectic_defect", max(r[-1] for r in rows), p.get("symplectic_tolerance", 1e-4)),
    ]
    return ExperimentReport("", "conservation", cols, rows, checks)


DEFAULT_ORDERS = [[1, 0], [0, 1], [0, 2], [1, 1], [0, 3], [1, 2], [0, 4], [2, 2]]


def run_derivatives(sc: Scenario, p: dict, rng, ctx: RunContext) -> ExperimentReport:
    n = sc.dimension
    F = sc.target(p)
    orders = p.get("orders", DEFAULT_ORDERS)
    field_ = F.field

    def accept(x, v):
        e3 = e4 = 0.0
        for ox, ov in orders:
            a = partial_tensor(field_, x, v, ox, ov, "exact").entries
            b = partial_tensor(field_, x, v, ox, ov, "fd").entries
            err = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))
            if ox + ov <= 3:
                e3 = max(e3, err)
            else:
                e4 = max(e4, err)
        return x, v, e3, e4

    rows = []
    for k, (x, v, e3, e4) in enumerate(sample_tangent(rng, sc, F, p.get("samples", 100), accept)):
        rows.append([k, *x, *v, e3, e4])
    cols = ["trial", *_coords("x", n), *_coords("v", n), "max_err_order_le3", "max_err_order4"]
    checks = [
        Check("max_err_order_le3", max(r[-2] for r in rows), p.get("tolerance", 1e-5)),
        Check("max_err_order4", max(r[-1] for r in rows), p.get("order4_tolerance", 1e-3)),
    ]
    return ExperimentReport("", "derivatives", cols, rows, checks)


def run_homothety(sc: Scenario, p: dict, rng, ctx: RunContext) -> ExperimentReport:
    n = sc.dimension
    F = sc.metric
    claimed = _sigma(sc, p)
    pts = sample_tangent(rng, sc, F, p.get("samples", 5))
    sigma, resid = homothety_constant(F, sc.wind, pts, step=_step(ctx, p))
    rows = [[k, *x, *v, homothety_rate(F, sc.wind, x, v)] for k, (x, v) in enumerate(pts)]
    tol = p.get("tolerance", 1e-8)
    checks = [Check("sigma_error", abs(sigma - claimed), tol), Check("pullback_residual", resid, tol)]
    cols = ["trial", *_coords("x", n), *_coords("v", n), "sigma_sample"]
    return ExperimentReport("", "homothety", cols, rows, checks, f"sigma_hat={sigma:.12g}")


RUNNERS = {
    "matsumoto": run_matsumoto,
    "zermelo": run_zermelo,
    "dictionary": run_dictionary,
    "duality": run_duality,
    "correspondence": run_correspondence,
    "curvature": run_curvature,
    "curvature-shift": run_curvature_shift,
    "conservation": run_conservation,
    "derivatives": run_derivatives,
    "homothety": run_homothety,
}


def run_experiment(sc: Scenario, index: int, ctx: RunContext | None = None, seed: int | None = None) -> ExperimentReport:
    """Run experiment ``index`` of ``sc``; failures are recorded, not raised
    (configuration errors excepted)."""
    ctx = ctx or RunContext()
    p = sc.experiments[index]
    name = p.get("name", p["type"])
    rng = np.random.default_rng([sc.seed if seed is None else seed, index])
    t0 = time.perf_counter()
    try:
        rep = RUNNERS[p["type"]](sc, p, rng, ctx)
    except ConfigError:
        raise
    except (FinslerError, ValueError, np.linalg.LinAlgError) as exc:
        rep = ExperimentReport(name, p["type"], [], [], error=f"error: {exc}")
    rep.name = name
    rep.wall_time = time.perf_counter() - t0
    return rep


def run_all(sc: Scenario, ctx: RunContext | None = None, seed: int | None = None) -> list[ExperimentReport]:
    return [run_experiment(sc, i, ctx, seed) for i in range(len(sc.experiments))]
