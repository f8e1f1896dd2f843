import csv
import json
import re

import pytest

from pfinsler.cli import main
from pfinsler.scenario import catalog_names

EUCLID_CONTRACTION = {
    "name": "euclid-contraction",
    "dimension": 2,
    "seed": 7,
    "metric": {"kind": "semi-riemannian", "g": "euclidean"},
    "wind": {"components": ["-x1", "-x2"], "sigma": 1},
    "sampling": {"x_box": [[-0.5, 0.5], [-0.5, 0.5]], "v_norm": [0.5, 2.0]},
    "experiments": [{"type": "correspondence", "branch": 1}],
}


def write(tmp_path, data, name="scenario.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


def read_body(path):
    return [line for line in path.read_text().splitlines() if not line.startswith("#")]


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", write(tmp_path, EUCLID_CONTRACTION)]) == 0
    assert capsys.readouterr().out.strip() == "OK"


def test_validate_catalog():
    for name in catalog_names():
        assert main(["validate", name]) == 0


def test_validate_unknown_variable(tmp_path, capsys):
    bad = dict(EUCLID_CONTRACTION, wind={"components": ["-x1", "v5"], "sigma": 1})
    assert main(["validate", write(tmp_path, bad)]) == 2
    assert "v5" in capsys.readouterr().err


def test_validate_missing_metric(tmp_path):
    bad = {k: v for k, v in EUCLID_CONTRACTION.items() if k != "metric"}
    assert main(["validate", write(tmp_path, bad)]) == 2


def test_malformed_json(tmp_path):
    assert main(["validate", write(tmp_path, "{not json")]) == 2
    assert main(["run", write(tmp_path, "{not json"), "--out", str(tmp_path / "o")]) == 2


def test_bad_arguments():
    assert main(["run"]) == 2
    assert main(["frobnicate"]) == 2


def test_run_matsumoto_randers(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "randers-r3", "--out", str(out)]) == 0
    assert (out / "matsumoto.csv").exists()
    rows = list(csv.DictReader(read_body(out / "summary.csv")))
    m = [r for r in rows if r["experiment"] == "matsumoto"]
    assert m and all(r["status"] == "pass" for r in m)
    assert float(m[0]["value"]) <= 1e-7
    assert "all experiments passed" in capsys.readouterr().out


def test_run_correspondence(tmp_path):
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, EUCLID_CONTRACTION), "--out", str(out)]) == 0
    rows = list(csv.DictReader(read_body(out / "correspondence.csv")))
    assert max(float(r["mismatch"]) for r in rows) <= 1e-5


def test_wrong_sigma_fails(tmp_path):
    sc = dict(EUCLID_CONTRACTION, experiments=[{"type": "curvature-shift", "branch": 1, "sigma": 2, "samples": 3}])
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, sc), "--out", str(out)]) == 1
    rows = list(csv.DictReader(read_body(out / "curvature-shift.csv")))
    for r in rows:
        assert float(r["residual"]) == pytest.approx(0.75, abs=1e-4)
    summary = list(csv.DictReader(read_body(out / "summary.csv")))
    assert any(r["status"] == "fail" for r in summary)


def test_seed_determinism(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    path = write(tmp_path, EUCLID_CONTRACTION)
    assert main(["run", path, "--out", str(a)]) == 0
    assert main(["run", path, "--out", str(b)]) == 0
    assert main(["run", path, "--out", str(c), "--seed", "8"]) == 0
    assert read_body(a / "correspondence.csv") == read_body(b / "correspondence.csv")
    assert read_body(a / "correspondence.csv") != read_body(c / "correspondence.csv")


def test_csv_header(tmp_path):
    out = tmp_path / "out"
    main(["run", write(tmp_path, EUCLID_CONTRACTION), "--out", str(out)])
    head = [l for l in (out / "correspondence.csv").read_text().splitlines() if l.startswith("#")]
    assert any("euclid-contraction" in l for l in head)
    assert any(re.search(r"seed\D*7", l) for l in head)


def test_matsumoto_warns_in_dimension_two(tmp_path, capsys):
    sc = {
        "name": "randers-r2",
        "dimension": 2,
        "seed": 1,
        "metric": {"kind": "randers", "h": "euclidean", "beta": [0.3, 0], "epsilon": 1},
        "sampling": {"x_box": [[-1, 1], [-1, 1]], "v_norm": [0.5, 2.0]},
        "experiments": [{"type": "matsumoto", "samples": 3}],
    }
    with pytest.warns(UserWarning, match="dimension"):
        main(["run", write(tmp_path, sc), "--out", str(tmp_path / "out")])
    assert "warning" in capsys.readouterr().err.lower()


def test_catalog_listing(capsys):
    assert main(["catalog"]) == 0
    assert len(capsys.readouterr().out.split()) == 8
