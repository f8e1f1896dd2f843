"""Acceptance criteria 1-10 on the built-in scenario catalog.

Each criterion reruns the relevant catalog experiments and compares the reported
quantities with tolerances pinned here (not the ones stored in the catalog
files).  One pass/fail line per criterion, with its wall time, is printed at the
end of the pytest run, or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import pytest

from pfinsler.experiments import run_experiment
from pfinsler.scenario import catalog_names, load

RESULTS: list[str] = []


@dataclass(frozen=True)
class Bound:
    label: str
    op: str
    limit: float

    def holds(self, value: float) -> bool:
        if not math.isfinite(value):
            return False
        return value <= self.limit if self.op == "<=" else value >= self.limit


def _by_type(kind: str) -> list[tuple[str, str]]:
    out = []
    for name in catalog_names():
        for p in load(name).experiments:
            if p["type"] == kind:
                out.append((name, p.get("name", kind)))
    return out


def _run(scenario: str, experiment: str):
    sc = load(scenario)
    idx = [p.get("name", p["type"]) for p in sc.experiments].index(experiment)
    return run_experiment(sc, idx)


def evaluate_criterion(number, title, targets, bounds, runtime_limit, min_rows=0):
    t0 = time.perf_counter()
    failures = []
    worst = {b.label: None for b in bounds}
    for scenario, experiment in targets:
        rep = _run(scenario, experiment)
        if rep.error:
            failures.append(f"{scenario}/{experiment}: {rep.error}")
            continue
        if len(rep.rows) < min_rows:
            failures.append(f"{scenario}/{experiment}: {len(rep.rows)} samples < {min_rows}")
        values = {c.label: c.value for c in rep.checks}
        for b in bounds:
            if b.label not in values:
                failures.append(f"{scenario}/{experiment}: no {b.label}")
                continue
            v = values[b.label]
            w = worst[b.label]
            worst[b.label] = v if w is None else (max(w, v) if b.op == "<=" else min(w, v))
            if not b.holds(v):
                failures.append(f"{scenario}/{experiment}: {b.label}={v:.3g} not {b.op} {b.limit:g}")
    elapsed = time.perf_counter() - t0
    if elapsed > runtime_limit:
        failures.append(f"runtime {elapsed:.1f} s exceeds {runtime_limit:g} s")
    shown = ", ".join(f"{k}={v:.3g} ({b.op} {b.limit:g})" for (k, v), b in zip(worst.items(), bounds) if v is not None)
    status = "PASS" if not failures else "FAIL"
    line = f"[{status}] criterion {number:2d} {title}: {shown}; {elapsed:.2f} s (limit {runtime_limit:g} s)"
    if failures:
        line += " | " + "; ".join(failures)
    RESULTS.append(line)
    return not failures, line


CRITERIA = [
    (
        1,
        "Matsumoto tensor vanishes for Randers and Kropina",
        [("randers-r3", "matsumoto"), ("kropina-r3", "matsumoto")],
        [Bound("max_abs_M", "<=", 1e-7)],
        5.0,
        20,
    ),
    (2, "Matsumoto tensor nonzero for the quartic norm", [("quartic-r3", "matsumoto")], [Bound("max_abs_M", ">=", 1e-3)], 5.0, 20),
    (
        3,
        "closed-form Zermelo vs numerical translation",
        [("euclid-mild-wind", "zermelo"), ("euclid-strong-wind", "zermelo")],
        [Bound("max_rel_diff", "<=", 1e-9), Bound("max_identity_residual", "<=", 1e-10)],
        5.0,
        50,
    ),
    (
        4,
        "Randers/Kropina navigation dictionary",
        [("randers-r3", "dictionary"), ("kropina-r3", "dictionary"), ("minkowski-wind", "dictionary")],
        [Bound("max_rel_diff", "<=", 1e-9), Bound("index_mismatches", "<=", 0)],
        5.0,
        0,
    ),
    (
        5,
        "Legendre duality of translations",
        [("euclid-mild-wind", "duality_straight"), ("euclid-strong-wind", "duality_straight"), ("euclid-strong-wind", "duality_reverse")],
        [Bound("max_residual", "<=", 1e-8)],
        5.0,
        20,
    ),
    (
        6,
        "geodesic correspondence under homothetic wind",
        [("funk-disc", "correspondence"), ("sphere-katok", "correspondence")],
        [Bound("max_mismatch", "<=", 1e-5), Bound("min_halving_ratio", ">=", 8.0)],
        30.0,
        0,
    ),
    (
        7,
        "flag curvature shift by -sigma^2/4",
        [("funk-disc", "curvature"), ("sphere-katok", "curvature")],
        [Bound("max_residual", "<=", 1e-4)],
        60.0,
        10,
    ),
    (
        8,
        "fanning vs spray flag curvature",
        [("euclid-mild-wind", "curvature_metric"), ("sphere-katok", "curvature_metric"), ("funk-disc", "curvature_fanning")],
        [Bound("max_residual", "<=", 1e-3)],
        120.0,
        10,
    ),
    (
        9,
        "conservation and symplecticity",
        _by_type("conservation"),
        [Bound("max_drift", "<=", 1e-8), Bound("max_symplectic_defect", "<=", 1e-4)],
        30.0,
        0,
    ),
    (
        10,
        "jet vs finite-difference derivative tensors",
        _by_type("derivatives"),
        [Bound("max_err_order_le3", "<=", 1e-5), Bound("max_err_order4", "<=", 1e-3)],
        30.0,
        100,
    ),
]


def test_every_catalog_metric_is_covered():
    for kind in ("conservation", "derivatives"):
        assert {s for s, _ in _by_type(kind)} == set(catalog_names())


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_acceptance(criterion):
    ok, line = evaluate_criterion(*criterion)
    assert ok, line


if __name__ == "__main__":
    for c in CRITERIA:
        print(evaluate_criterion(*c)[1], flush=True)
