"""JSON scenario files: schema, validation with line-anchored diagnostics, and
construction of the metric, wind and translations they describe."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .errors import ConfigError, ExprSyntaxError
from .expr import parse
from .metrics import (
    Chart,
    MetricInstance,
    OneForm,
    SemiRiemannianMetric,
    TangentSample,
    WindField,
    custom,
    kropina,
    randers,
    reverse,
    semi_riemannian,
    translate_numeric,
    zermelo_translate,
)

EXPERIMENT_TYPES = (
    "matsumoto",
    "zermelo",
    "dictionary",
    "duality",
    "correspondence",
    "curvature",
    "curvature-shift",
    "conservation",
    "derivatives",
    "homothety",
)

# sampled vectors must stay in the domain after moving by this fraction of |v|
# along any coordinate axis
DEFAULT_MARGIN = 0.05

_number_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_expr = {"type": ["string", "number"]}
_expr_list = {"type": "array", "items": _expr, "minItems": 1}
_g_form = {
    "oneOf": [
        {"enum": ["euclidean", "sphere"]},
        {"type": "object", "properties": {"diagonal": _expr_list}, "required": ["diagonal"], "additionalProperties": False},
        {"type": "array", "items": _expr_list, "minItems": 1},
    ]
}
_sample = {
    "type": "object",
    "properties": {
        "x": {"type": "array", "items": {"type": "number"}},
        "v": {"type": "array", "items": {"type": "number"}},
        "scale": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["x", "v"],
    "additionalProperties": False,
}
_positive = {"type": "number", "exclusiveMinimum": 0}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["name", "dimension", "metric", "experiments"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "dimension": {"type": "integer", "minimum": 2, "maximum": 4},
        "seed": {"type": "integer", "minimum": 0},
        "chart": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"box": _number_matrix, "predicates": {"type": "array", "items": {"type": "string"}}},
        },
        "metric": {"$ref": "#/definitions/metric"},
        "wind": {
            "type": "object",
            "required": ["components"],
            "additionalProperties": False,
            "properties": {"components": _expr_list, "sigma": {"type": ["number", "null"]}},
        },
        "translation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"seeds": {"type": "object", "patternProperties": {"^-?1$": _sample}, "additionalProperties": False}},
        },
        "sampling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "x_box": _number_matrix,
                "v_norm": {"type": "array", "items": _positive, "minItems": 2, "maxItems": 2},
                "margin": {"type": "number", "minimum": 0, "maximum": 0.5},
            },
        },
        "experiments": {"type": "array", "minItems": 1, "items": {"$ref": "#/definitions/experiment"}},
    },
    "definitions": {
        "metric": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["semi-riemannian", "randers", "kropina", "zermelo", "custom", "reverse", "translated-numeric"]},
                "g": _g_form,
                "h": _g_form,
                "beta": _expr_list,
                "epsilon": {"enum": [1, -1]},
                "F2": {"type": "string"},
                "domain": {"type": "array", "items": {"type": "string"}},
                "base": {"$ref": "#/definitions/metric"},
                "seed": _sample,
            },
            "additionalProperties": False,
            "allOf": [
                {"if": {"properties": {"kind": {"const": "semi-riemannian"}}}, "then": {"required": ["g"]}},
                {"if": {"properties": {"kind": {"const": "zermelo"}}}, "then": {"required": ["g", "epsilon"]}},
                {"if": {"properties": {"kind": {"const": "randers"}}}, "then": {"required": ["h", "beta"]}},
                {"if": {"properties": {"kind": {"const": "kropina"}}}, "then": {"required": ["h", "beta"]}},
                {"if": {"properties": {"kind": {"const": "custom"}}}, "then": {"required": ["F2"]}},
                {"if": {"properties": {"kind": {"const": "reverse"}}}, "then": {"required": ["base"]}},
                {"if": {"properties": {"kind": {"const": "translated-numeric"}}}, "then": {"required": ["base", "seed"]}},
            ],
        },
        "experiment": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": list(EXPERIMENT_TYPES)},
                "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                "samples": {"type": "integer", "minimum": 1},
                "tolerance": _positive,
                "identity_tolerance": _positive,
                "drift_tolerance": _positive,
                "symplectic_tolerance": _positive,
                "order4_tolerance": _positive,
                "target": {"enum": ["metric", "translation"]},
                "branch": {"enum": [1, -1]},
                "branches": {"type": "array", "items": {"enum": [1, -1]}, "minItems": 1},
                "mode": {"enum": ["vanish", "nonzero"]},
                "route": {"enum": ["spray", "both"]},
                "expected": {"type": "number"},
                "sigma": {"type": "number"},
                "x0": {"type": "array", "items": {"type": "number"}},
                "v0": {"type": "array", "items": {"type": "number"}},
                "horizon": _positive,
                "step": _positive,
                "times": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "halving": {"type": "boolean"},
                "halving_steps": {"type": "array", "items": _positive, "minItems": 2},
                "orders": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
                },
            },
            "additionalProperties": False,
        },
    },
}


@dataclass
class Scenario:
    """Validated scenario with its constructed objects."""

    name: str
    dimension: int
    seed: int
    chart: Chart | None
    metric: MetricInstance
    wind: WindField | None
    sigma: float | None
    x_box: np.ndarray
    v_norm: tuple[float, float]
    margin: float
    experiments: list[dict]
    raw: dict
    _translations: dict = field(default_factory=dict, repr=False)
    _seeds: dict = field(default_factory=dict, repr=False)

    def translation(self, branch: int) -> MetricInstance:
        """Translation of the metric by the wind on ``branch`` (closed form when
        the metric is semi-Riemannian, numerical otherwise)."""
        if self.wind is None:
            raise ConfigError("scenario has no wind field")
        if branch not in self._translations:
            F = self.metric
            if F.kind == "semi-riemannian":
                T = zermelo_translate(F.params["g"], self.wind, branch, self.chart)
            else:
                seed = self._seeds.get(str(branch))
                if seed is None:
                    raise ConfigError(f"translation branch {branch} needs a seed under translation.seeds")
                T = translate_numeric(F, self.wind, seed)
            self._translations[branch] = T
        return self._translations[branch]

    def target(self, params: dict) -> MetricInstance:
        if params.get("target", "metric") == "translation":
            return self.translation(params.get("branch", 1))
        return self.metric


# -- validation ------------------------------------------------------------------------------


def _line_of(text: str, needle: str) -> int | None:
    pos = text.find(needle)
    return None if pos < 0 else text.count("\n", 0, pos) + 1


def _anchor(text: str, path, value=None) -> str:
    """Best-effort ``line N`` for a JSON path: the offending value, else its key."""
    line = None
    if isinstance(value, str):
        line = _line_of(text, json.dumps(value))
    if line is None:
        for part in reversed(list(path)):
            if isinstance(part, str):
                line = _line_of(text, json.dumps(part))
                if line:
                    break
    return f"line {line or 1}"


def _path(path) -> str:
    return "/".join(str(p) for p in path) or "<root>"


def _expressions(cfg: dict):
    """Yield (path, text, kinds) for every expression in the config."""

    def g_exprs(path, g):
        if isinstance(g, dict):
            for i, e in enumerate(g["diagonal"]):
                yield path + ["diagonal", i], e, "x"
        elif isinstance(g, list):
            for i, row in enumerate(g):
                for j, e in enumerate(row):
                    yield path + [i, j], e, "x"

    def metric_exprs(path, m):
        for key in ("g", "h"):
            if key in m:
                yield from g_exprs(path + [key], m[key])
        for i, e in enumerate(m.get("beta", [])):
            yield path + ["beta", i], e, "x"
        if "F2" in m:
            yield path + ["F2"], m["F2"], "xv"
        for i, e in enumerate(m.get("domain", [])):
            yield path + ["domain", i], e, "xv"
        if "base" in m:
            yield from metric_exprs(path + ["base"], m["base"])

    yield from metric_exprs(["metric"], cfg["metric"])
    for i, e in enumerate(cfg.get("wind", {}).get("components", [])):
        yield ["wind", "components", i], e, "x"
    for i, e in enumerate(cfg.get("chart", {}).get("predicates", [])):
        yield ["chart", "predicates", i], e, "x"


def _semantic_errors(cfg: dict, text: str) -> list[str]:
    n = cfg["dimension"]
    errs = []
    for path, e, kinds in _expressions(cfg):
        if isinstance(e, (int, float)):
            continue
        try:
            parse(e, n, kinds)
        except ExprSyntaxError as exc:
            errs.append(f"{_anchor(text, path, e)}: {_path(path)}: {exc}")

    def need_len(path, seq, length, what):
        if seq is not None and len(seq) != length:
            errs.append(f"{_anchor(text, path)}: {_path(path)}: expected {length} {what}, got {len(seq)}")

    def check_metric(path, m):
        for key in ("g", "h"):
            g = m.get(key)
            if isinstance(g, list):
                need_len(path + [key], g, n, "rows")
                for i, row in enumerate(g):
                    need_len(path + [key, i], row, n, "entries")
            elif isinstance(g, dict):
                need_len(path + [key, "diagonal"], g["diagonal"], n, "entries")
        need_len(path + ["beta"], m.get("beta"), n, "components")
        if "seed" in m:
            need_len(path + ["seed", "x"], m["seed"]["x"], n, "coordinates")
            need_len(path + ["seed", "v"], m["seed"]["v"], n, "components")
        if "base" in m:
            check_metric(path + ["base"], m["base"])

    check_metric(["metric"], cfg["metric"])
    if "wind" in cfg:
        need_len(["wind", "components"], cfg["wind"]["components"], n, "components")
    box = cfg.get("chart", {}).get("box")
    need_len(["chart", "box"], box, n, "intervals")
    need_len(["sampling", "x_box"], cfg.get("sampling", {}).get("x_box"), n, "intervals")
    for key, b in (("chart", box), ("sampling", cfg.get("sampling", {}).get("x_box"))):
        for i, iv in enumerate(b or []):
            if len(iv) != 2 or not iv[0] < iv[1]:
                errs.append(f"{_anchor(text, [key])}: {key}: interval {i} must be [lo, hi] with lo < hi")
    uses_wind = cfg["metric"]["kind"] in ("zermelo", "translated-numeric") or any(
        e.get("target") == "translation" or e["type"] in ("zermelo", "duality", "correspondence", "curvature-shift", "homothety")
        for e in cfg["experiments"]
    )
    if uses_wind and "wind" not in cfg:
        errs.append("line 1: <root>: a wind field is required by the metric or experiments")
    names = set()
    for i, e in enumerate(cfg["experiments"]):
        name = e.get("name", e["type"])
        if name in names:
            errs.append(f"{_anchor(text, ['experiments', i, 'name'], name)}: experiments/{i}: duplicate experiment name {name!r}")
        names.add(name)
        for key in ("x0", "v0"):
            need_len(["experiments", i, key], e.get(key), n, "components")
        for o in e.get("orders", []):
            if sum(o) < 1 or sum(o) > 4:
                errs.append(f"{_anchor(text, ['orders'])}: experiments/{i}/orders: total order must be 1..4")
    return errs


def validate_text(text: str) -> tuple[dict | None, list[str]]:
    """Parse and check a scenario; returns ``(config, diagnostics)``."""
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        return None, [f"line {exc.lineno}: invalid JSON: {exc.msg} (column {exc.colno})"]
    validator = jsonschema.Draft7Validator(SCHEMA)
    errs = []
    for err in sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.path))):
        errs.append(f"{_anchor(text, err.path, err.instance)}: {_path(err.path)}: {err.message}")
    if errs:
        return None, errs
    errs = _semantic_errors(cfg, text)
    return (None, errs) if errs else (cfg, [])


def load_text(text: str) -> Scenario:
    cfg, errs = validate_text(text)
    if errs:
        raise ConfigError("\n".join(errs))
    try:
        return build(cfg)
    except ConfigError:
        raise
    except Exception as exc:  # construction failures are configuration errors
        raise ConfigError(f"line 1: cannot build scenario: {exc}") from exc


def catalog_names() -> list[str]:
    files = resources.files("pfinsler").joinpath("catalog").iterdir()
    return sorted(Path(f.name).stem for f in files if f.name.endswith(".json"))


def catalog_text(name: str) -> str:
    path = resources.files("pfinsler").joinpath("catalog", f"{name}.json")
    if not path.is_file():
        raise ConfigError(f"no catalog scenario named {name!r}")
    return path.read_text(encoding="utf-8")


def load(source: str | Path) -> Scenario:
    """Load a scenario from a path, or a catalog name when no such file exists."""
    p = Path(source)
    if p.is_file():
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {p}: {exc}") from exc
    elif re.fullmatch(r"[A-Za-z0-9_-]+", str(source)) and str(source) in catalog_names():
        text = catalog_text(str(source))
    else:
        raise ConfigError(f"cannot read {source}: no such file")
    return load_text(text)


# -- construction ------------------------------------------------------------------------------


def _g(form, n: int) -> SemiRiemannianMetric:
    if form == "euclidean":
        return SemiRiemannianMetric.euclidean(n)
    if form == "sphere":
        return SemiRiemannianMetric.sphere_stereographic(n)
    if isinstance(form, dict):
        return SemiRiemannianMetric.diagonal([str(e) for e in form["diagonal"]])
    return SemiRiemannianMetric([[str(e) for e in row] for row in form], n)


def _seed(s: dict) -> TangentSample:
    return TangentSample(s["x"], s["v"], s.get("scale"))


def _metric(m: dict, n: int, chart, wind) -> MetricInstance:
    kind = m["kind"]
    if kind == "semi-riemannian":
        return semi_riemannian(_g(m["g"], n), chart)
    if kind == "randers":
        return randers(_g(m["h"], n), OneForm([str(b) for b in m["beta"]], n), m.get("epsilon", 1), chart)
    if kind == "kropina":
        return kropina(_g(m["h"], n), OneForm([str(b) for b in m["beta"]], n), chart)
    if kind == "zermelo":
        return zermelo_translate(_g(m["g"], n), wind, m["epsilon"], chart)
    if kind == "custom":
        return custom(m["F2"], n, m.get("domain", []), chart)
    if kind == "reverse":
        return reverse(_metric(m["base"], n, chart, wind))
    return translate_numeric(_metric(m["base"], n, chart, wind), wind, _seed(m["seed"]))


def build(cfg: dict) -> Scenario:
    n = cfg["dimension"]
    ch = cfg.get("chart")
    chart = Chart(n, ch.get("box"), ch.get("predicates", ())) if ch else None
    wind = None
    sigma = None
    if "wind" in cfg:
        sigma = cfg["wind"].get("sigma")
        wind = WindField([str(c) for c in cfg["wind"]["components"]], n, sigma)
    metric = _metric(cfg["metric"], n, chart, wind)
    samp = cfg.get("sampling", {})
    if "x_box" in samp:
        x_box = np.asarray(samp["x_box"], float)
    elif chart is not None and chart.box is not None:
        x_box = chart.box
    else:
        x_box = np.tile([-1.0, 1.0], (n, 1))
    v_norm = tuple(samp.get("v_norm", (0.5, 2.0)))
    margin = float(samp.get("margin", DEFAULT_MARGIN))
    seeds = {k: _seed(v) for k, v in cfg.get("translation", {}).get("seeds", {}).items()}
    return Scenario(
        cfg["name"],
        n,
        int(cfg.get("seed", 0)),
        chart,
        metric,
        wind,
        sigma,
        x_box,
        v_norm,
        margin,
        cfg["experiments"],
        cfg,
        _seeds=seeds,
    )
