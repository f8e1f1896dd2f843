"""Command line entry point: ``validate`` and ``run`` scenario files."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .experiments import ExperimentReport, RunContext, run_experiment
from .scenario import catalog_names, load, validate_text

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], columns: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(c) for c in r])


def _header(scenario: str, seed: int, experiment: str, stamp: str) -> list[str]:
    return [f"pfinsler {_version()}", f"scenario: {scenario}", f"seed: {seed}", f"experiment: {experiment}", f"generated: {stamp}"]


def _read(source: str) -> str:
    p = Path(source)
    if p.is_file():
        return p.read_text(encoding="utf-8")
    if source in catalog_names():
        from .scenario import catalog_text

        return catalog_text(source)
    raise OSError(f"cannot read {source}: no such file")


def cmd_validate(args) -> int:
    try:
        text = _read(args.config)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _, errs = validate_text(text)
    if not errs:
        try:
            load(args.config)
        except ConfigError as exc:
            errs = [str(exc)]
    if errs:
        for e in errs:
            print(f"{args.config}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print("OK")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        sc = load(args.config)
    except (ConfigError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = sc.seed if args.seed is None else args.seed
    ctx = RunContext(step=args.step, fd=args.fd)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    reports: list[ExperimentReport] = []
    for i in range(len(sc.experiments)):
        try:
            rep = run_experiment(sc, i, ctx, seed)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        reports.append(rep)
        write_csv(out / f"{rep.name}.csv", _header(sc.name, seed, rep.name, stamp), rep.columns or ["error"], rep.rows or ([[rep.error]] if rep.error else []))
        for key, (cols, rows) in rep.tables.items():
            write_csv(out / f"{rep.name}_{key}.csv", _header(sc.name, seed, f"{rep.name}_{key}", stamp), cols, rows)
        if rep.message.startswith("warning"):
            print(rep.message, file=sys.stderr)
        print(f"{rep.summary()} [{rep.wall_time:.2f} s]")
    write_csv(
        out / "summary.csv",
        _header(sc.name, seed, "summary", stamp),
        ["experiment", "type", "status", "check", "value", "tolerance"],
        [
            [r.name, r.kind, "pass" if c.passed else "fail", c.label, c.value, f"{c.op} {c.tolerance!r}"]
            for r in reports
            for c in (r.checks or [])
        ]
        + [[r.name, r.kind, "fail", "error", r.error, ""] for r in reports if r.error],
    )
    ok = all(r.passed for r in reports)
    print(f"{sc.name}: {'all experiments passed' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_catalog(args) -> int:
    for name in catalog_names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pfinsler", description="Numerical experiments on conic pseudo-Finsler metrics and wind translations.")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="check a scenario file (or catalog name)")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    r = sub.add_parser("run", help="run all experiments of a scenario and write CSV reports")
    r.add_argument("config")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--step", type=float, default=None, help="override the integrator step")
    r.add_argument("--fd", action="store_true", help="use finite differences instead of jets where selectable")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("catalog", help="list built-in scenarios")
    c.set_defaults(func=cmd_catalog)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
